// Command-line front end: solve, eval, certify, estimate, gen, bench, plot.
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hinfsearch/errors.hpp"
#include "hinfsearch/experiment.hpp"

using namespace hinfsearch;

namespace {

int threads_from_env() {
  const char* s = std::getenv("HINFSEARCH_THREADS");
  if (!s || !*s) return 0;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) {
    throw std::invalid_argument(std::string("HINFSEARCH_THREADS must be a positive integer, got '") +
                                s + "'");
  }
  return static_cast<int>(v);
}

// "a,b,c;d,e,f" (rows separated by ';') into an nu x nx matrix.
MatrixXd parse_gain(const std::string& text, const Plant& plant) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> r;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(std::move(r));
  }
  if (static_cast<int>(rows.size()) != plant.nu()) {
    throw ParseError("--K: expected " + std::to_string(plant.nu()) + " rows");
  }
  MatrixXd K(plant.nu(), plant.nx());
  for (int i = 0; i < plant.nu(); ++i) {
    if (static_cast<int>(rows[i].size()) != plant.nx()) {
      throw ParseError("--K: row " + std::to_string(i) + " needs " +
                       std::to_string(plant.nx()) + " entries");
    }
    for (int j = 0; j < plant.nx(); ++j) K(i, j) = rows[i][j];
  }
  return K;
}

MatrixXd gain_or_k0(const Problem& p, const std::string& text) {
  if (!text.empty()) return parse_gain(text, p.plant);
  if (!p.K0) throw ParseError("problem has no K0; pass --K");
  return *p.K0;
}

struct Common {
  std::string problem, algo, config, out;
  std::uint64_t seed = 0;
  double jstar = 0.0;
  double target = 0.0;
  int nx = 0, nu = 0;
  int max_iters = 0;
  bool zero_time = false;
};

ExperimentConfig build_config(const Common& c, const CLI::App& app) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  if (!c.problem.empty()) {
    cfg.problem_path = c.problem;
    cfg.generator.reset();
  }
  if (app.count("--gen-nx")) {
    cfg.problem_path.reset();
    cfg.generator = GeneratorSpec{c.nx, c.nu, c.seed};
  }
  if (app.count("--algo")) cfg.algo = algorithm_from_string(c.algo);
  if (app.count("--seed")) cfg.seed = c.seed;
  if (app.count("--out")) cfg.out_dir = c.out;
  if (app.count("--jstar")) cfg.J_star = c.jstar;
  if (app.count("--target-rel-err")) cfg.target_rel_err = c.target;
  if (app.count("--zero-time")) cfg.zero_time = true;
  if (app.count("--max-iters")) {
    cfg.goldstein.max_iters = cfg.gs.max_iters = cfg.ns.max_iters =
        cfg.ingd.max_iters = c.max_iters;
  }
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--problem", c.problem, "problem JSON file");
  app->add_option("--algo", c.algo,
                  "goldstein | gs | ns | ingd | ns-modelfree");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--config", c.config, "JSON config overriding defaults");
  app->add_option("--jstar", c.jstar, "known optimal value");
  app->add_option("--target-rel-err", c.target,
                  "stop once (J - J*)/J* falls to this value");
  app->add_option("--max-iters", c.max_iters, "iteration cap for the solver");
  app->add_option("--gen-nx", c.nx, "generate a random instance with nx states");
  app->add_option("--gen-nu", c.nu, "inputs of the generated instance")
      ->default_val(1);
  app->add_flag("--zero-time", c.zero_time,
                "write 0 in elapsed_s so traces compare byte-equal");
}

void print_outcome(const ExperimentOutcome& out) {
  std::cout << summary_to_json(out).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct policy search for H-infinity state feedback"};
  app.require_subcommand(1);

  Common solve_opts;
  auto* solve = app.add_subcommand("solve", "run one solver and write trace.csv, summary.json, config.json");
  add_common(solve, solve_opts);

  std::string problem, gain;
  double tol = 1e-8;
  int horizon = 100;
  auto* eval = app.add_subcommand("eval", "grid and bisection H-infinity norm at K");
  eval->add_option("--problem", problem, "problem JSON file")->required();
  eval->add_option("--K", gain, "gain, rows separated by ';' (default: K0)");
  eval->add_option("--tol", tol, "bisection tolerance");

  auto* certify = app.add_subcommand("certify", "bisection value with a Riccati/LMI certificate");
  certify->add_option("--problem", problem, "problem JSON file")->required();
  certify->add_option("--K", gain, "gain, rows separated by ';' (default: K0)");
  certify->add_option("--tol", tol, "bisection tolerance");

  auto* estimate = app.add_subcommand("estimate", "power-iteration estimate from simulated rollouts");
  estimate->add_option("--problem", problem, "problem JSON file")->required();
  estimate->add_option("--K", gain, "gain, rows separated by ';' (default: K0)");
  estimate->add_option("--horizon,-N", horizon, "window length N");

  int gnx = 3, gnu = 1;
  std::uint64_t gseed = 0;
  std::string gout;
  auto* gen = app.add_subcommand("gen", "random instance with a stabilizing K0");
  gen->add_option("--nx", gnx, "states");
  gen->add_option("--nu", gnu, "inputs");
  gen->add_option("--seed", gseed, "random seed");
  gen->add_option("--out", gout, "output file (default: stdout)");

  Common bench_opts;
  int count = 8;
  auto* bench = app.add_subcommand("bench", "independent seeds as parallel workers");
  add_common(bench, bench_opts);
  bench->add_option("--count", count, "number of seeds, starting at --seed");

  std::string trace_path, plot_out;
  double plot_jstar = 0.0;
  auto* plot = app.add_subcommand("plot", "trace.csv to gnuplot columns 'n J rel_err'");
  plot->add_option("--trace", trace_path, "trace CSV")->required();
  plot->add_option("--jstar", plot_jstar, "known optimal value");
  plot->add_option("--out", plot_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const int threads = threads_from_env();
    if (threads > 0) omp_set_num_threads(threads);

    if (*solve) {
      ExperimentConfig cfg = build_config(solve_opts, *solve);
      const auto out = run_experiment(cfg);
      print_outcome(out);
      return out.exit_code;
    }
    if (*eval) {
      const Problem p = load_problem(problem);
      print(std::cout, cmd_eval(p.plant, gain_or_k0(p, gain), tol));
      return 0;
    }
    if (*certify) {
      const Problem p = load_problem(problem);
      const auto r = cmd_certify(p.plant, gain_or_k0(p, gain), tol);
      print(std::cout, r);
      return r.certificate.feasible && r.lmi_residual <= 1e-8 ? 0 : 1;
    }
    if (*estimate) {
      const Problem p = load_problem(problem);
      print(std::cout, cmd_estimate(p.plant, gain_or_k0(p, gain), horizon));
      return 0;
    }
    if (*gen) {
      const auto g = gen_random_problem(gnx, gnu, gseed);
      Problem p{g.plant, g.K0.K, std::nullopt};
      if (gout.empty()) {
        std::cout << problem_to_json(p).dump(2) << '\n';
      } else {
        save_problem(p, gout);
      }
      std::cerr << "K0 found after " << g.attempts << " draws at scale "
                << g.scale << '\n';
      return 0;
    }
    if (*bench) {
      ExperimentConfig cfg = build_config(bench_opts, *bench);
      if (cfg.out_dir.empty()) throw std::invalid_argument("bench needs --out");
      const auto entries = run_batch(cfg, cfg.seed, count, threads);
      int failures = 0;
      std::cout << "seed,status,final_J,rel_err,iterations,oracle_calls,wall_s\n";
      for (const auto& e : entries) {
        if (!e.outcome) {
          ++failures;
          std::cout << e.seed << ",error,,,,," << '\n';
          std::cerr << "seed " << e.seed << ": " << e.error << '\n';
          continue;
        }
        const auto& o = *e.outcome;
        if (o.exit_code != 0) ++failures;
        std::cout << e.seed << ',' << to_string(o.result.trace.status) << ','
                  << o.final_J << ','
                  << (o.rel_err ? std::to_string(*o.rel_err) : std::string())
                  << ',' << o.iterations << ',' << o.oracle_calls << ','
                  << o.wall_s << '\n';
      }
      return failures == 0 ? 0 : 1;
    }
    if (*plot) {
      std::ifstream in(trace_path);
      if (!in) throw ParseError("cannot open " + trace_path);
      std::optional<double> js;
      if (plot->count("--jstar")) js = plot_jstar;
      if (plot_out.empty()) {
        trace_to_gnuplot(in, std::cout, js);
      } else {
        std::ofstream out(plot_out);
        trace_to_gnuplot(in, out, js);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
