#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <memory>
#include <vector>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/solvers.hpp"

namespace hinfsearch::detail {

/// Wraps oracles so every call is counted, including calls made from
/// worker threads.
struct CountedOracles {
  std::shared_ptr<std::atomic<long>> calls = std::make_shared<std::atomic<long>>(0);
  CostOracle cost;
  GradientOracle gradient;

  explicit CountedOracles(const Oracles& o) {
    auto c = calls;
    if (o.cost) {
      cost = [c, f = o.cost](const MatrixXd& K) {
        c->fetch_add(1, std::memory_order_relaxed);
        return f(K);
      };
    }
    if (o.gradient) {
      gradient = [c, g = o.gradient](const MatrixXd& K) {
        c->fetch_add(1, std::memory_order_relaxed);
        return g(K);
      };
    }
  }
  long count() const { return calls->load(); }
};

class TraceRecorder {
 public:
  TraceRecorder(const RunOptions& run, const CountedOracles& counted)
      : run_(run), calls_(counted.calls), start_(std::chrono::steady_clock::now()) {}

  void add(int n, double J, double Fnorm, double delta, double eps, double t,
           const MatrixXd& K) {
    IterationRecord r;
    r.n = n;
    r.J = J;
    r.Fnorm = Fnorm;
    r.delta = delta;
    r.eps = eps;
    r.t = t;
    r.oracle_calls = calls_->load();
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                start_)
                      .count();
    if (run_.record_policies) r.K = K;
    trace.records.push_back(std::move(r));
  }

  bool reached_target(double J) const {
    return run_.j_target.has_value() && J <= *run_.j_target;
  }

  IterationTrace trace;

 private:
  RunOptions run_;
  std::shared_ptr<std::atomic<long>> calls_;
  std::chrono::steady_clock::time_point start_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// J(K), or +inf when K is not stabilizing.
inline double cost_or_inf(const Plant& plant, const CostOracle& cost,
                          const MatrixXd& K) {
  if (!is_stabilizing(plant, K)) return kInf;
  try {
    return cost(K);
  } catch (const InstabilityError&) {
    return kInf;
  }
}

/// Runs fn(i) for i in [0, n), optionally on OpenMP threads; the first
/// exception (by index) is rethrown on the caller's thread.
template <class Fn>
void parallel_for(long n, bool parallel, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hinfsearch::detail
