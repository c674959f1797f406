#include "hinfsearch/problem_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "hinfsearch/errors.hpp"

namespace hinfsearch {

using nlohmann::json;

MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("field '" + field + "' must be a nonempty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) {
    throw ParseError("field '" + field + "' row 0 must be a nonempty array");
  }
  const std::size_t cols = j[0].size();
  MatrixXd M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      std::ostringstream os;
      os << "field '" << field << "' is ragged: row " << r << " has "
         << (j[r].is_array() ? j[r].size() : 0) << " entries, expected "
         << cols;
      throw ParseError(os.str());
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        std::ostringstream os;
        os << "field '" << field << "' entry (" << r << "," << c
           << ") is not a number";
        throw ParseError(os.str());
      }
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Problem problem_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("problem file must be a JSON object");
  auto field = [&](const char* name) {
    if (!j.contains(name)) {
      throw ParseError(std::string("missing field '") + name + "'");
    }
    return matrix_from_json(j.at(name), name);
  };
  MatrixXd A = field("A"), B = field("B"), Q = field("Q"), R = field("R");
  std::optional<Plant> plant;
  try {
    plant.emplace(std::move(A), std::move(B), std::move(Q), std::move(R));
  } catch (const DimensionError& e) {
    throw ParseError(std::string("invalid plant: ") + e.what());
  }
  Problem p{*plant, std::nullopt, std::nullopt};
  if (j.contains("K0")) {
    MatrixXd K0 = matrix_from_json(j.at("K0"), "K0");
    if (K0.rows() != p.plant.nu() || K0.cols() != p.plant.nx()) {
      throw ParseError("field 'K0' must be nu x nx");
    }
    p.K0 = std::move(K0);
  }
  if (j.contains("J_star")) {
    if (!j.at("J_star").is_number()) {
      throw ParseError("field 'J_star' must be a number");
    }
    p.J_star = j.at("J_star").get<double>();
  }
  return p;
}

json problem_to_json(const Problem& p) {
  json j;
  j["A"] = matrix_to_json(p.plant.A());
  j["B"] = matrix_to_json(p.plant.B());
  j["Q"] = matrix_to_json(p.plant.Q());
  j["R"] = matrix_to_json(p.plant.R());
  if (p.K0) j["K0"] = matrix_to_json(*p.K0);
  if (p.J_star) j["J_star"] = *p.J_star;
  return j;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("problem file '" + path + "': " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const Problem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write problem file '" + path + "'");
  out << problem_to_json(p).dump(2) << '\n';
}

GeneratedProblem gen_random_problem(int nx, int nu, std::uint64_t seed,
                                    int attempts_per_scale,
                                    int max_scale_doublings) {
  if (nx < 1 || nu < 1) {
    throw std::invalid_argument("gen_random_problem: nx, nu must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  MatrixXd A = MatrixXd::Identity(nx, nx);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) += u01(rng);
  MatrixXd B(nx, nu);
  for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = u01(rng);
  const MatrixXd Q = (1.0 + uniform(0.0, 0.1)) * MatrixXd::Identity(nx, nx);
  MatrixXd R(nu, nu);
  if (nu == 1) {
    R(0, 0) = uniform(1.0, 1.5);
  } else {
    R = (1.0 + uniform(0.0, 0.5)) * MatrixXd::Identity(nu, nu);
  }

  GeneratedProblem g{Plant(A, B, Q, R), Policy{}, 0, 1.0};
  double scale = 1.0;
  for (int s = 0; s <= max_scale_doublings; ++s, scale *= 2.0) {
    for (int k = 0; k < attempts_per_scale; ++k) {
      MatrixXd K(nu, nx);
      for (Eigen::Index i = 0; i < K.size(); ++i) K(i) = scale * u01(rng);
      ++g.attempts;
      if (is_stabilizing(g.plant, K)) {
        g.K0.K = std::move(K);
        g.scale = scale;
        return g;
      }
    }
  }
  throw std::runtime_error(
      "gen_random_problem: no stabilizing K0 found; try another seed");
}

}  // namespace hinfsearch
