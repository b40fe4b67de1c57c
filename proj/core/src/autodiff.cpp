#include "sketchpersp/autodiff.hpp"

#include <cassert>

namespace sketchpersp::ad {

namespace {
thread_local Tape* g_active = nullptr;
}

int Tape::leaf() { return push(-1, 0.0); }

int Tape::push(int a, double da, int b, double db) {
  nodes_.push_back(Node{da, db, a, b});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::backward(int root) {
  adjoints_.assign(nodes_.size(), 0.0);
  if (root < 0) return;
  adjoints_[static_cast<std::size_t>(root)] = 1.0;
  for (auto k = static_cast<std::size_t>(root) + 1; k-- > 0;) {
    const double adj = adjoints_[k];
    if (adj == 0.0) continue;
    const Node& n = nodes_[k];
    if (n.a >= 0) adjoints_[static_cast<std::size_t>(n.a)] += adj * n.a_partial;
    if (n.b >= 0) adjoints_[static_cast<std::size_t>(n.b)] += adj * n.b_partial;
  }
}

void Tape::clear() {
  nodes_.clear();
  adjoints_.clear();
}

Tape* active_tape() { return g_active; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

Var Var::variable(double v) {
  assert(g_active);
  return Var(v, g_active->leaf());
}

Var unary(const Var& a, double value, double partial) {
  if (a.is_constant()) return Var(value);
  return Var(value, g_active->push(a.id_, partial));
}

Var operator-(const Var& a) { return unary(a, -a.value_, -1.0); }

Var operator+(const Var& a, const Var& b) {
  const double v = a.value_ + b.value_;
  if (a.is_constant()) return unary(b, v, 1.0);
  if (b.is_constant()) return unary(a, v, 1.0);
  return Var(v, g_active->push(a.id_, 1.0, b.id_, 1.0));
}

Var operator-(const Var& a, const Var& b) {
  const double v = a.value_ - b.value_;
  if (a.is_constant()) return unary(b, v, -1.0);
  if (b.is_constant()) return unary(a, v, 1.0);
  return Var(v, g_active->push(a.id_, 1.0, b.id_, -1.0));
}

Var operator*(const Var& a, const Var& b) {
  const double v = a.value_ * b.value_;
  if (a.is_constant()) return b.is_constant() ? Var(v) : unary(b, v, a.value_);
  if (b.is_constant()) return unary(a, v, b.value_);
  return Var(v, g_active->push(a.id_, b.value_, b.id_, a.value_));
}

Var operator/(const Var& a, const Var& b) {
  const double v = a.value_ / b.value_;
  if (b.is_constant()) return unary(a, v, 1.0 / b.value_);
  const double db = -v / b.value_;
  if (a.is_constant()) return unary(b, v, db);
  return Var(v, g_active->push(a.id_, 1.0 / b.value_, b.id_, db));
}

Var& Var::operator+=(const Var& o) { return *this = *this + o; }
Var& Var::operator-=(const Var& o) { return *this = *this - o; }
Var& Var::operator*=(const Var& o) { return *this = *this * o; }
Var& Var::operator/=(const Var& o) { return *this = *this / o; }

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary(a, e, e);
}

Var log(const Var& a) { return unary(a, std::log(a.value()), 1.0 / a.value()); }

Var abs(const Var& a) {
  const double v = a.value();
  return unary(a, std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
}

Var safe_sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return unary(a, s, s > 0.0 ? 0.5 / s : 0.0);
}

Var square(const Var& a) { return unary(a, a.value() * a.value(), 2.0 * a.value()); }

}  // namespace sketchpersp::ad
