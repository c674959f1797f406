#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/hinf_oracle.hpp"

namespace hinfsearch {
namespace {

using cd = std::complex<double>;

// Reusable workspace for repeated gain evaluations on one closed loop. With
// A_cl = U T U^H (complex Schur), sigma(C (zI - A)^-1) = sigma(C U (zI - T)^-1),
// so each frequency costs one triangular inverse.
class GainEvaluator {
 public:
  explicit GainEvaluator(const ClosedLoop& cl)
      : n_(cl.nx()), X_(n_, n_), H_(n_, n_), G_(n_, n_), es_(n_) {
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(cl.A_cl.cast<cd>());
    T_ = schur.matrixT();
    CU_ = cl.C_cl.cast<cd>() * schur.matrixU();
    X_.setZero();
  }

  double operator()(double omega) {
    const cd z = std::polar(1.0, omega);
    // Column j of (zI - T)^-1 by back substitution.
    for (Eigen::Index j = 0; j < n_; ++j) {
      X_(j, j) = 1.0 / (z - T_(j, j));
      for (Eigen::Index i = j - 1; i >= 0; --i) {
        cd s = 0.0;
        for (Eigen::Index k = i + 1; k <= j; ++k) s += T_(i, k) * X_(k, j);
        X_(i, j) = s / (z - T_(i, i));
      }
    }
    H_.noalias() = CU_ * X_.triangularView<Eigen::Upper>();
    G_.noalias() = H_.adjoint() * H_;
    es_.compute(G_, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es_.eigenvalues()(n_ - 1)));
  }

 private:
  Eigen::Index n_;
  Eigen::MatrixXcd T_, CU_, X_, H_, G_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_;
};

void require_stable(const ClosedLoop& cl) {
  const double rho = spectral_radius(cl.A_cl);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "policy not stabilizing: rho=" << rho;
    throw InstabilityError(os.str(), rho);
  }
}

// Golden-section maximization of f on [lo, hi].
template <class F>
FrequencyPeak golden_max(F& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a >= tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? FrequencyPeak{c, fc} : FrequencyPeak{d, fd};
}

}  // namespace

GridOptions solver_grid() {
  GridOptions g;
  g.coarse_points = 64;
  return g;
}

std::string to_string(NormMethod m) {
  return m == NormMethod::grid_refine ? "grid_refine" : "bisection";
}

double frequency_gain(const ClosedLoop& cl, double omega) {
  GainEvaluator g(cl);
  return g(omega);
}

namespace kernels {

void frequency_sweep_serial(const ClosedLoop& cl,
                            std::span<const double> omegas,
                            std::span<double> gains) {
  if (omegas.size() != gains.size()) {
    throw DimensionError("frequency_sweep: size mismatch");
  }
  GainEvaluator g(cl);
  for (std::size_t i = 0; i < omegas.size(); ++i) gains[i] = g(omegas[i]);
}

void frequency_sweep_omp(const ClosedLoop& cl, std::span<const double> omegas,
                         std::span<double> gains) {
  if (omegas.size() != gains.size()) {
    throw DimensionError("frequency_sweep: size mismatch");
  }
  const auto n = static_cast<long>(omegas.size());
#pragma omp parallel if (n >= 256)
  {
    GainEvaluator g(cl);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) gains[i] = g(omegas[i]);
  }
}

}  // namespace kernels

std::vector<FrequencyPeak> frequency_peaks(const ClosedLoop& cl,
                                           const GridOptions& opts) {
  if (opts.coarse_points < 3) {
    throw std::invalid_argument("frequency_peaks: need >= 3 grid points");
  }
  if (!(opts.refine_tol > 0.0)) {
    throw std::invalid_argument("frequency_peaks: refine_tol must be > 0");
  }
  require_stable(cl);

  std::vector<double> omegas(opts.coarse_points);
  const double step = std::numbers::pi / (opts.coarse_points - 1);
  for (int i = 0; i < opts.coarse_points; ++i) omegas[i] = i * step;
  omegas.back() = std::numbers::pi;
  if (opts.pole_points) {
    // Lightly damped poles give peaks of width ~ 1 - |lambda| near their
    // angle, which a coarse uniform grid can step over.
    const Eigen::VectorXcd poles = cl.A_cl.eigenvalues();
    for (const cd& p : poles) {
      const double theta = std::abs(std::arg(p));
      const double width = std::max(1.0 - std::abs(p), 1e-6);
      for (double off : {-width, -0.5 * width, 0.0, 0.5 * width, width}) {
        omegas.push_back(std::clamp(theta + off, 0.0, std::numbers::pi));
      }
    }
    std::sort(omegas.begin(), omegas.end());
    omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());
  }
  const int n = static_cast<int>(omegas.size());
  std::vector<double> gains(n);
  if (opts.parallel) {
    kernels::frequency_sweep_omp(cl, omegas, gains);
  } else {
    kernels::frequency_sweep_serial(cl, omegas, gains);
  }

  // g is even about 0 and pi, so the mirrored neighbour stands in at the ends.
  auto at = [&](int i) {
    if (i < 0) return gains[1];
    if (i >= n) return gains[n - 2];
    return gains[i];
  };
  const int best =
      static_cast<int>(std::max_element(gains.begin(), gains.end()) -
                       gains.begin());
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i) {
    if ((at(i) > at(i - 1) && at(i) >= at(i + 1)) || i == best) {
      candidates.push_back(i);
    }
  }

  GainEvaluator g(cl);
  std::vector<FrequencyPeak> peaks;
  for (int i : candidates) {
    const double lo = i > 0 ? omegas[i - 1] : 0.0;
    const double hi = i + 1 < n ? omegas[i + 1] : std::numbers::pi;
    FrequencyPeak p = golden_max(g, lo, hi, opts.refine_tol);
    if (gains[i] > p.value) p = {omegas[i], gains[i]};
    peaks.push_back(p);
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const auto& a, const auto& b) { return a.value > b.value; });
  // Brackets that converged onto the same maximizer count once.
  std::vector<FrequencyPeak> unique;
  for (const auto& p : peaks) {
    bool dup = false;
    for (const auto& q : unique) {
      if (std::abs(p.omega - q.omega) < 10 * opts.refine_tol) dup = true;
    }
    if (!dup) unique.push_back(p);
  }
  return unique;
}

NormResult hinf_norm_grid(const ClosedLoop& cl, const GridOptions& opts) {
  if (opts.coarse_points < 64) {
    throw std::invalid_argument("hinf_norm_grid: coarse_points must be >= 64");
  }
  const auto peaks = frequency_peaks(cl, opts);
  NormResult r;
  r.value = peaks.front().value;
  r.peak_frequency = peaks.front().omega;
  r.method = NormMethod::grid_refine;
  r.tolerance = opts.refine_tol;
  r.grid_size = opts.coarse_points;
  return r;
}

NormResult hinf_norm_grid(const ClosedLoop& cl, int coarse_points,
                          double refine_tol) {
  GridOptions opts;
  opts.coarse_points = coarse_points;
  opts.refine_tol = refine_tol;
  return hinf_norm_grid(cl, opts);
}

double hinf_cost(const Plant& plant, const MatrixXd& K,
                 const GridOptions& opts) {
  return hinf_norm_grid(assemble_closed_loop(plant, K), opts).value;
}

CostOracle make_cost_oracle(const Plant& plant, const GridOptions& opts) {
  return [plant, opts](const MatrixXd& K) { return hinf_cost(plant, K, opts); };
}

}  // namespace hinfsearch
