#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>

#include <Eigen/Dense>

namespace covkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Negative log-likelihood f(theta) = -l(theta), the only view of the model
/// the numerical routines get.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;
  virtual double operator()(const Vector& theta) const = 0;

  /// True if operator() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
};

/// Wraps any callable double(const Vector&).
class FunctionObjective final : public Objective {
 public:
  using Fn = std::function<double(const Vector&)>;

  FunctionObjective(std::size_t n, Fn fn, bool concurrent = true)
      : n_(n), fn_(std::move(fn)), concurrent_(concurrent) {}

  std::size_t dimension() const override { return n_; }
  double operator()(const Vector& theta) const override { return fn_(theta); }
  bool concurrent_safe() const override { return concurrent_; }

 private:
  std::size_t n_;
  Fn fn_;
  bool concurrent_;
};

/// Counts every call forwarded to the wrapped objective.
class CountingObjective final : public Objective {
 public:
  explicit CountingObjective(const Objective& inner) : inner_(inner) {}

  std::size_t dimension() const override { return inner_.dimension(); }
  double operator()(const Vector& theta) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_(theta);
  }
  bool concurrent_safe() const override { return inner_.concurrent_safe(); }

  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  const Objective& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace covkit
