#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "hinfsearch/lti.hpp"

namespace hinfsearch {

/// Problem file: a JSON object with row-major nested arrays "A", "B", "Q",
/// "R", optional "K0" (nu x nx) and optional number "J_star".
struct Problem {
  Plant plant;
  std::optional<MatrixXd> K0;
  std::optional<double> J_star;
};

/// Throws ParseError naming the field for missing, ragged or non-numeric
/// arrays, and for shape errors.
MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field);
nlohmann::json matrix_to_json(const MatrixXd& M);

Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& p);

Problem load_problem(const std::string& path);
void save_problem(const Problem& p, const std::string& path);

struct GeneratedProblem {
  Plant plant;
  Policy K0;
  int attempts = 0;    // total K0 draws
  double scale = 1.0;  // scale of the accepted draw
};

/// Random instance: A = I + U[0,1], B ~ U[0,1], Q = (1+z)I with z ~ U[0,0.1],
/// R ~ U[1,1.5] when nu = 1 and (1+v)I with v ~ U[0,0.5] otherwise. K0 has
/// entries U[0,1] scaled by 1, 2, 4, ...; the first stabilizing draw wins.
GeneratedProblem gen_random_problem(int nx, int nu, std::uint64_t seed,
                                    int attempts_per_scale = 10000,
                                    int max_scale_doublings = 16);

}  // namespace hinfsearch
