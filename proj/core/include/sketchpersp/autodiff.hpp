#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace sketchpersp::ad {

/// Wengert list of scalar operations with at most two inputs each.
class Tape {
 public:
  struct Node {
    double a_partial;
    double b_partial;
    int a;
    int b;
  };

  int leaf();
  int push(int a, double da, int b = -1, double db = 0.0);

  /// Reverse sweep from `root`; adjoints of every node become available.
  void backward(int root);
  double adjoint(int id) const { return adjoints_[static_cast<std::size_t>(id)]; }

  std::size_t size() const { return nodes_.size(); }
  void clear();
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  std::vector<Node> nodes_;
  std::vector<double> adjoints_;
};

/// The tape new Var operations are recorded on (per thread).
Tape* active_tape();

/// Makes `tape` the active tape for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Scalar that records itself on the active tape. Constants (id < 0) are
/// not recorded.
class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static Var variable(double v);

  double value() const { return value_; }
  int id() const { return id_; }
  bool is_constant() const { return id_ < 0; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

  friend Var operator-(const Var& a);
  friend Var operator+(const Var& a, const Var& b);
  friend Var operator-(const Var& a, const Var& b);
  friend Var operator*(const Var& a, const Var& b);
  friend Var operator/(const Var& a, const Var& b);

  friend Var unary(const Var& a, double value, double partial);

 private:
  Var(double v, int id) : value_(v), id_(id) {}

  double value_ = 0.0;
  int id_ = -1;
};

Var unary(const Var& a, double value, double partial);

Var exp(const Var& a);
Var log(const Var& a);
/// |a| with derivative 0 at a == 0.
Var abs(const Var& a);
/// sqrt with derivative 0 at a == 0.
Var safe_sqrt(const Var& a);
Var square(const Var& a);

inline double value(const Var& v) { return v.value(); }

// Plain-double overloads so loss code can be written once for both types.
inline double value(double v) { return v; }
inline double exp(double a) { return std::exp(a); }
inline double log(double a) { return std::log(a); }
inline double abs(double a) { return std::abs(a); }
inline double safe_sqrt(double a) { return std::sqrt(a); }
inline double square(double a) { return a * a; }

}  // namespace sketchpersp::ad
