#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hinfsearch/solvers.hpp"

namespace hinfsearch {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::converged: return "converged";
    case TraceStatus::stationary_target: return "stationary_target";
    case TraceStatus::iteration_cap: return "iteration_cap";
    case TraceStatus::infeasible_abort: return "infeasible_abort";
  }
  return "unknown";
}

int IterationTrace::accepted_steps() const {
  int k = 0;
  for (const auto& r : records) {
    if (r.t > 0.0) ++k;
  }
  return k;
}

void IterationTrace::write_csv(std::ostream& os, bool zero_time) const {
  os << "n,J,Fnorm,delta,eps,t,oracle_calls,elapsed_s\n";
  for (const auto& r : records) {
    os << r.n << ',' << fmt(r.J) << ',' << fmt(r.Fnorm) << ',' << fmt(r.delta)
       << ',' << fmt(r.eps) << ',' << fmt(r.t) << ',' << r.oracle_calls << ','
       << fmt(zero_time ? 0.0 : r.elapsed_s) << '\n';
  }
  for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
  os << "# status=" << to_string(status) << '\n';
}

Oracles exact_oracles(const Plant& plant, GradientKind kind,
                      const GradientOptions& opts) {
  return {make_cost_oracle(plant, opts.grid),
          make_gradient_oracle(plant, kind, opts)};
}

void validate(const GoldsteinConfig& cfg, Eigen::Index dim) {
  require(cfg.c > 0.0 && cfg.c < 1.0, "goldstein: c must lie in (0,1)");
  require(cfg.delta > 0.0, "goldstein: delta must be > 0");
  require(cfg.delta0_hat > 0.0, "goldstein: delta0_hat must be > 0");
  require(cfg.m >= dim + 1, "goldstein: m must be >= nx*nu + 1");
  require(cfg.max_iters >= 0, "goldstein: max_iters must be >= 0");
  require(cfg.tol_F >= 0.0, "goldstein: tol_F must be >= 0");
}

void validate(const GsConfig& cfg, Eigen::Index dim) {
  require(cfg.delta0 > 0.0, "gs: delta0 must be > 0");
  require(cfg.eps0 >= 0.0, "gs: eps0 must be >= 0");
  require(cfg.mu_delta > 0.0 && cfg.mu_delta <= 1.0, "gs: mu_delta in (0,1]");
  require(cfg.mu_eps > 0.0 && cfg.mu_eps <= 1.0, "gs: mu_eps in (0,1]");
  require(cfg.m >= dim + 1, "gs: m must be >= nx*nu + 1");
  require(cfg.beta > 0.0 && cfg.beta < 1.0, "gs: beta in (0,1)");
  require(cfg.theta > 0.0 && cfg.theta < 1.0, "gs: theta in (0,1)");
  require(cfg.max_iters >= 0, "gs: max_iters must be >= 0");
}

void validate(const NsConfig& cfg, Eigen::Index dim) {
  require(cfg.delta0 > 0.0, "ns: delta0 must be > 0");
  require(cfg.eps0 >= 0.0, "ns: eps0 must be >= 0");
  require(cfg.mu_delta > 0.0 && cfg.mu_delta <= 1.0, "ns: mu_delta in (0,1]");
  require(cfg.mu_eps > 0.0 && cfg.mu_eps <= 1.0, "ns: mu_eps in (0,1]");
  require(cfg.m >= dim + 1, "ns: m must be >= nx*nu + 1");
  require(cfg.beta > 0.0 && cfg.beta < 1.0, "ns: beta in (0,1)");
  require(cfg.t_floor > 0.0 && cfg.t_floor < 1.0, "ns: t_floor in (0,1)");
  require(cfg.kappa > 0.0 && cfg.kappa < 1.0, "ns: kappa in (0,1)");
  require(cfg.alpha0 > 0.0 && cfg.alpha0 < 1.0, "ns: alpha0 in (0,1)");
  require(cfg.max_iters >= 0, "ns: max_iters must be >= 0");
}

void validate(const IngdConfig& cfg) {
  require(cfg.delta > 0.0, "ingd: delta must be > 0");
  require(cfg.eps > 0.0, "ingd: eps must be > 0");
  require(cfg.max_iters >= 0, "ingd: max_iters must be >= 0");
  require(cfg.max_inner >= 1, "ingd: max_inner must be >= 1");
  require(cfg.anneal_factor > 0.0 && cfg.anneal_factor < 1.0,
          "ingd: anneal_factor in (0,1)");
}

}  // namespace hinfsearch
