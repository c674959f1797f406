// Acceptance run: one PASS/FAIL line per criterion, details on the same line.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hinfsearch/errors.hpp"
#include "hinfsearch/modelfree.hpp"
#include "hinfsearch/problem_io.hpp"
#include "hinfsearch/solvers.hpp"
#include "test_util.hpp"

using namespace hinfsearch;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kJ13 = 7.3475;
constexpr double kJD1 = 43.26;
// Table C.1 gives NS parameters for the 3x1 case only. K0 of (D.1) sits
// close to the stability boundary, so the mollifier is tuned down there.
constexpr double kD1Alpha0 = 0.01;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Run {
  std::string label;
  const Plant* plant = nullptr;
  SolveResult result;
  double seconds = 0.0;
  bool descent = true;  // J column must be nonincreasing
};

std::vector<Run> g_runs;  // every solver run, checked by criterion 8

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Run timed(const std::string& label, const Plant& plant, bool descent,
          const std::function<SolveResult()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r{label, &plant, fn(), 0.0, descent};
  r.seconds = seconds_since(t0);
  return r;
}

RunOptions run_options(std::uint64_t seed, std::optional<double> target) {
  RunOptions o;
  o.seed = seed;
  o.record_policies = true;
  o.j_target = target;
  return o;
}

int solver_iterations(const SolveResult& r) {
  return static_cast<int>(r.trace.records.size()) - 1;
}

std::string describe(const Run& r, double J_star) {
  const double J = r.result.trace.records.back().J;
  return r.label + " rel_err=" + num((J - J_star) / J_star) +
         " iters=" + std::to_string(solver_iterations(r.result)) + " " +
         num(r.seconds, 3) + "s status=" + to_string(r.result.trace.status);
}

bool reached(const Run& r, double J_star, double rel, int max_iters,
             double max_s) {
  const double J = r.result.trace.records.back().J;
  return (J - J_star) / J_star <= rel &&
         solver_iterations(r.result) <= max_iters && r.seconds <= max_s;
}

const Problem& ex13() {
  static const Problem p = testutil::example13();
  return p;
}

const Problem& exD1() {
  static const Problem p = testutil::exampleD1();
  return p;
}

Verdict criterion1() {
  const Plant& plant = ex13().plant;
  const Policy K0{*ex13().K0};
  const auto opts = run_options(1, kJ13 * 1.01);
  GsConfig gs;
  gs.max_iters = 2000;
  NsConfig ns;
  ns.max_iters = 2000;
  IngdConfig ingd;
  ingd.anneal = true;
  ingd.max_iters = 2000;
  std::vector<Run> runs;
  runs.push_back(timed("gs", plant, true, [&] {
    return solve_gs(plant, K0, gs, exact_oracles(plant), opts);
  }));
  runs.push_back(timed("ns", plant, true, [&] {
    return solve_ns(plant, K0, ns, make_cost_oracle(plant, solver_grid()), opts);
  }));
  runs.push_back(timed("ingd", plant, true, [&] {
    return solve_ingd(plant, K0, ingd, exact_oracles(plant), opts);
  }));
  Verdict v{true, ""};
  for (const auto& r : runs) {
    v.pass = v.pass && reached(r, kJ13, 1e-2, 2000, 60.0);
    v.detail += describe(r, kJ13) + "; ";
    g_runs.push_back(r);
  }
  return v;
}

Verdict criterion2() {
  const Plant& plant = exD1().plant;
  const Policy K0{*exD1().K0};
  const auto opts = run_options(1, kJD1 * 1.02);
  GsConfig gs;
  gs.m = 9;
  gs.max_iters = 5000;
  NsConfig ns;
  ns.m = 9;
  ns.max_iters = 5000;
  ns.alpha0 = kD1Alpha0;
  std::vector<Run> runs;
  runs.push_back(timed("gs", plant, true, [&] {
    return solve_gs(plant, K0, gs, exact_oracles(plant), opts);
  }));
  runs.push_back(timed("ns", plant, true, [&] {
    return solve_ns(plant, K0, ns, make_cost_oracle(plant, solver_grid()), opts);
  }));
  Verdict v{true, ""};
  for (const auto& r : runs) {
    v.pass = v.pass && reached(r, kJD1, 2e-2, 5000, 300.0);
    v.detail += describe(r, kJD1) + "; ";
    g_runs.push_back(r);
  }
  return v;
}

Verdict criterion3() {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const Plant p(I, I, I, I);
  MatrixXd K(2, 2), Kp(2, 2);
  K << 0.7, -3.4, 0.2, 1.0;
  Kp << 0.0, -1.3, 0.6, 1.2;
  const double mid = hinf_cost(p, 0.5 * (K + Kp));
  const double avg = 0.5 * (hinf_cost(p, K) + hinf_cost(p, Kp));
  return {std::abs(mid - 35.99) <= 0.01 && std::abs(avg - 13.3) <= 0.1 && mid > avg,
          "J(K'')=" + num(mid, 6) + " mean=" + num(avg, 6)};
}

Verdict criterion4() {
  const double r13 = spectral_radius(ex13().plant.A() - ex13().plant.B() * *ex13().K0);
  const double rD1 = spectral_radius(exD1().plant.A() - exD1().plant.B() * *exD1().K0);
  return {std::abs(r13 - 0.5756) <= 1e-4 && std::abs(rD1 - 0.9567) <= 1e-4,
          "rho13=" + num(r13, 6) + " rhoD1=" + num(rD1, 6)};
}

Verdict criterion5() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> rho_d(0.2, 0.95);
  const double tol = 1e-8;
  double worst = 0.0;
  int bad = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 3;
    const ClosedLoop cl = testutil::random_stable_loop(n, rho_d(rng), rng);
    // Realize the loop as a plant with B = I, K = 0, Q = C'C, R = I.
    const MatrixXd I = MatrixXd::Identity(n, n);
    const Plant plant(cl.A_cl, I, cl.C_cl.transpose() * cl.C_cl, I);
    const Policy K{MatrixXd::Zero(n, n)};
    const double grid = hinf_norm_grid(cl).value;
    const double bis = hinf_norm_bisect(plant, K, tol).value;
    const double diff = std::abs(grid - bis);
    worst = std::max(worst, diff);
    if (diff > 1e-6 + tol) ++bad;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s <= 30.0,
          "max|grid-bisection|=" + num(worst, 3) + " failures=" +
              std::to_string(bad) + " " + num(s, 3) + "s"};
}

Verdict criterion6() {
  const Plant& plant = ex13().plant;
  const CostOracle cost = make_cost_oracle(plant);
  std::mt19937_64 rng(6);
  int points = 0, kinks = 0;
  double worst_fd = 0.0;
  while (points < 100) {
    const MatrixXd K = *ex13().K0 + testutil::uniform(1, 3, -0.5, 0.5, rng);
    if (!is_stabilizing(plant, K)) continue;
    MatrixXd g;
    try {
      g = grad_analytic(plant, K);
    } catch (const NondifferentiableError&) {
      ++kinks;
      continue;
    }
    const MatrixXd fd = grad_fd(cost, K, 1e-6);
    worst_fd = std::max(worst_fd, (g - fd).norm() / g.norm());
    ++points;
  }
  const MatrixXd g0 = grad_analytic(plant, *ex13().K0);
  const MatrixXd chi = gupal_chi(cost, *ex13().K0, 1e-4, MatrixXd::Zero(1, 3));
  const double gupal = (chi - g0).norm() / g0.norm();
  return {worst_fd <= 1e-5 && gupal <= 1e-3,
          "max fd rel err=" + num(worst_fd, 3) + " over 100 points (" +
              std::to_string(kinks) + " kinks redrawn), gupal rel err=" +
              num(gupal, 3)};
}

// ||G lambda|| minimized over the simplex lattice of step h. Small bundles
// are enumerated exactly; larger ones start from the best point of a coarse
// lattice and descend by pairwise transfers on the fine lattice.
double simplex_grid_norm(const MatrixXd& G, double h) {
  const int m = static_cast<int>(G.cols());
  const int steps = static_cast<int>(std::lround(1.0 / h));
  auto value = [&](const std::vector<int>& c) {
    VectorXd lam(m);
    for (int i = 0; i < m; ++i) lam(i) = c[i] * h;
    return (G * lam).norm();
  };
  if (m == 1) return G.col(0).norm();
  if (m <= 3) {
    double best = INFINITY;
    std::vector<int> c(m, 0);
    for (int a = 0; a <= steps; ++a) {
      if (m == 2) {
        c = {a, steps - a};
        best = std::min(best, value(c));
        continue;
      }
      for (int b = 0; a + b <= steps; ++b) {
        c = {a, b, steps - a - b};
        best = std::min(best, value(c));
      }
    }
    return best;
  }
  const int coarse = 20, scale = steps / coarse;
  std::vector<int> best_c;
  double best = INFINITY;
  std::vector<int> c(m, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == m - 1) {
      c[i] = left;
      std::vector<int> fine(m);
      for (int k = 0; k < m; ++k) fine[k] = c[k] * scale;
      const double v = value(fine);
      if (v < best) {
        best = v;
        best_c = fine;
      }
      return;
    }
    for (int a = 0; a <= left; ++a) {
      c[i] = a;
      rec(i + 1, left - a);
    }
  };
  rec(0, coarse);
  for (bool moved = true; moved;) {
    moved = false;
    for (int amount = steps; amount >= 1; amount /= 2) {
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          if (a == b || best_c[a] < amount) continue;
          best_c[a] -= amount;
          best_c[b] += amount;
          const double v = value(best_c);
          if (v < best - 1e-15) {
            best = v;
            moved = true;
          } else {
            best_c[a] += amount;
            best_c[b] -= amount;
          }
        }
      }
    }
  }
  return best;
}

Verdict criterion7() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> md(1, 6), dd(1, 4);
  double worst_gap = 0.0, worst_cert = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = md(rng), d = dd(rng);
    std::vector<MatrixXd> g;
    MatrixXd G(d, m);
    const VectorXd shift = testutil::uniform(d, 1, -1, 1, rng) * (trial % 2);
    for (int i = 0; i < m; ++i) {
      G.col(i) = testutil::uniform(d, 1, -1, 1, rng) + shift;
      g.push_back(G.col(i));
    }
    const auto r = min_norm_point(g);
    worst_gap = std::max(worst_gap, std::abs(r.F.norm() - simplex_grid_norm(G, 1e-3)));
    const double ff = r.F.squaredNorm();
    for (const auto& gi : g) {
      worst_cert = std::max(worst_cert, ff - gi.cwiseProduct(r.F).sum());
    }
  }
  return {worst_gap <= 1e-3 && worst_cert <= 1e-9,
          "max ||F|| gap to lattice optimum=" + num(worst_gap, 3) +
              " max certificate violation=" + num(std::max(worst_cert, 0.0), 3)};
}

Verdict criterion8() {
  // Eight random instances of the 3x1 recipe, GS and NS, plus Goldstein on
  // example (13); all earlier runs are included.
  static std::vector<Plant> plants;
  plants.reserve(8);
  std::vector<Policy> starts;
  for (std::uint64_t seed = 0; plants.size() < 8 && seed < 100; ++seed) {
    try {
      auto g = gen_random_problem(3, 1, seed);
      plants.push_back(g.plant);
      starts.push_back(g.K0);
    } catch (const std::exception&) {
    }
  }
  for (std::size_t i = 0; i < plants.size(); ++i) {
    GsConfig gs;
    gs.max_iters = 300;
    NsConfig ns;
    ns.max_iters = 300;
    const Plant& p = plants[i];
    g_runs.push_back(timed("gs-rand" + std::to_string(i), p, true, [&] {
      return solve_gs(p, starts[i], gs, exact_oracles(p), run_options(i, std::nullopt));
    }));
    g_runs.push_back(timed("ns-rand" + std::to_string(i), p, true, [&] {
      return solve_ns(p, starts[i], ns, make_cost_oracle(p, solver_grid()),
                      run_options(i, std::nullopt));
    }));
  }
  GoldsteinConfig gold;
  gold.max_iters = 300;
  const Plant& p13 = ex13().plant;
  g_runs.push_back(timed("goldstein", p13, true, [&] {
    return solve_goldstein(p13, Policy{*ex13().K0}, gold, exact_oracles(p13),
                           run_options(1, std::nullopt));
  }));

  long iterates = 0;
  int unstable = 0, increases = 0;
  std::string where;
  for (const auto& r : g_runs) {
    const auto& rec = r.result.trace.records;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      ++iterates;
      if (!rec[i].K || !is_stabilizing(*r.plant, *rec[i].K)) {
        ++unstable;
        where += " " + r.label + "@" + std::to_string(i);
      }
      if (r.descent && i > 0 && rec[i].J > rec[i - 1].J) {
        ++increases;
        where += " " + r.label + "^" + std::to_string(i);
      }
    }
  }
  const auto& gold_rec = g_runs.back().result.trace.records;
  return {unstable == 0 && increases == 0 && plants.size() == 8,
          std::to_string(g_runs.size()) + " traces, " + std::to_string(iterates) +
              " iterates, unstable=" + std::to_string(unstable) +
              " increases=" + std::to_string(increases) + where +
              "; goldstein rel_err=" + num((gold_rec.back().J - kJ13) / kJ13)};
}

Verdict criterion9() {
  const Plant& plant = ex13().plant;
  const Policy K0{*ex13().K0};
  std::vector<double> rel;
  std::string detail;
  for (int N : {100, 50, 20, 10}) {
    NsConfig ns;
    ns.max_iters = 300;
    EstimatorConfig est;
    est.horizon = N;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = solve_ns_modelfree(plant, K0, ns, est, run_options(1, std::nullopt));
    const double J = hinf_cost(plant, r.policy.K);
    rel.push_back((J - kJ13) / kJ13);
    detail += "N=" + std::to_string(N) + " rel_err=" + num(rel.back()) + " (" +
              num(seconds_since(t0), 3) + "s) ";
  }
  int inversions = 0;
  for (std::size_t i = 1; i < rel.size(); ++i) {
    if (rel[i] < rel[i - 1]) ++inversions;
  }

  std::mt19937_64 rng(9);
  int above = 0, non_monotone = 0;
  for (int i = 0; i < 30; ++i) {
    const ClosedLoop cl = testutil::random_stable_loop(2 + i % 3, 0.3 + 0.02 * i, rng);
    const double exact = hinf_norm_grid(cl).value;
    double prev = 0.0;
    for (int N : {10, 20, 50, 100}) {
      EstimatorConfig cfg;
      cfg.horizon = N;
      cfg.power_iters = 500;
      cfg.rel_tol = 1e-12;
      const double est = power_iteration_norm(cl, cfg);
      if (est > exact + 1e-9) ++above;
      if (est < prev) ++non_monotone;
      prev = est;
    }
  }
  detail += "inversions=" + std::to_string(inversions) +
            " estimator: above_exact=" + std::to_string(above) +
            " non_monotone=" + std::to_string(non_monotone);
  return {rel[0] <= 5e-2 && inversions <= 1 && above == 0 && non_monotone == 0,
          detail};
}

Verdict criterion10() {
  const Plant& plant = ex13().plant;
  IngdConfig cfg;
  cfg.delta = 0.01;
  cfg.eps = 1e-8;
  cfg.max_iters = 100;
  const auto r = solve_ingd(plant, Policy{*ex13().K0}, cfg, exact_oracles(plant),
                            run_options(1, std::nullopt));
  g_runs.push_back({"ingd-const", &plant, r, 0.0, true});
  const auto& rec = r.trace.records;
  const double Fn = rec.size() >= 2 ? rec[rec.size() - 2].Fnorm : NAN;
  const int steps = r.trace.accepted_steps();
  const double rel = (rec.back().J - kJ13) / kJ13;
  return {r.trace.status == TraceStatus::stationary_target && Fn <= 1e-8 &&
              steps <= 100 && rel > 1e-2,
          "status=" + to_string(r.trace.status) + " ||F||=" + num(Fn, 3) +
              " outer steps=" + std::to_string(steps) + " rel_err=" + num(rel)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, allowed;
  app.add_option("--only", only, "run these criteria (8 also needs 1 and 2)");
  app.add_option("--allow-fail", allowed,
                 "criteria whose FAIL does not change the exit status");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  const std::set<int> skip_unless(only.begin(), only.end());
  const std::set<int> ok_to_fail(allowed.begin(), allowed.end());
  int unexpected = 0;
  for (int i = 0; i < static_cast<int>(criteria.size()); ++i) {
    const int id = i + 1;
    if (!skip_unless.empty() && !skip_unless.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  "
              << v.detail << std::endl;
    if (!v.pass && !ok_to_fail.count(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
