#pragma once
// Couplings of probability distributions used as building blocks:
// maximal rejection coupling, maximal reflection coupling for equal-covariance
// Gaussians, common-random-number (CRN) couplings, monotone (inverse-CDF)
// couplings, and the total-variation distance of equal-covariance Gaussians.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "cgibbs/rng.hpp"
#include "cgibbs/special.hpp"

namespace cgibbs {

struct CoupleDraw {
  Eigen::VectorXd x, y;
  bool met = false;
};

struct CoupleDraw1 {
  double x = 0, y = 0;
  bool met = false;
};

// ||p - q||_TV for N(xi, LL^T) vs N(nu, LL^T): erf(||L^{-1}(xi-nu)|| / sqrt(8))
double tv_gaussian_same_cov(const Eigen::MatrixXd& chol_lower,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& nu);
double tv_gaussian_same_sd(double xi, double nu, double sd);

// Maximal coupling by rejection: X ~ p accepted as Y when W p(X) <= q(X),
// otherwise resample Y* ~ q until W* q(Y*) > p(Y*). Expected draws: 2.
// trials_out (optional) counts total proposal draws (X plus the Y* retries).
template <class SampP, class LogP, class SampQ, class LogQ>
CoupleDraw max_rejection_coupling(SampP&& rp, LogP&& logp, SampQ&& rq, LogQ&& logq,
                                  Rng& rng, long max_trials = 1000000,
                                  long* trials_out = nullptr) {
  CoupleDraw out;
  out.x = rp(rng);
  long trials = 1;
  const double lw = std::log(rng.runif());
  if (lw + logp(out.x) <= logq(out.x)) {
    out.y = out.x;
    out.met = true;
  } else {
    for (;;) {
      if (trials >= max_trials)
        throw std::runtime_error("max_rejection_coupling: proposal failsafe exceeded "
                                 "(density mismatch?)");
      Eigen::VectorXd ystar = rq(rng);
      ++trials;
      const double lws = std::log(rng.runif());
      if (lws + logq(ystar) > logp(ystar)) {
        out.y = std::move(ystar);
        out.met = false;
        break;
      }
    }
  }
  if (trials_out) *trials_out = trials;
  return out;
}

// scalar variant
template <class SampP, class LogP, class SampQ, class LogQ>
CoupleDraw1 max_rejection_coupling_1d(SampP&& rp, LogP&& logp, SampQ&& rq, LogQ&& logq,
                                      Rng& rng, long max_trials = 1000000,
                                      long* trials_out = nullptr) {
  CoupleDraw1 out;
  out.x = rp(rng);
  long trials = 1;
  const double lw = std::log(rng.runif());
  if (lw + logp(out.x) <= logq(out.x)) {
    out.y = out.x;
    out.met = true;
  } else {
    for (;;) {
      if (trials >= max_trials)
        throw std::runtime_error("max_rejection_coupling: proposal failsafe exceeded "
                                 "(density mismatch?)");
      const double ystar = rq(rng);
      ++trials;
      const double lws = std::log(rng.runif());
      if (lws + logq(ystar) > logp(ystar)) {
        out.y = ystar;
        out.met = false;
        break;
      }
    }
  }
  if (trials_out) *trials_out = trials;
  return out;
}

// convenience: maximal rejection coupling of two scalar Gaussians
CoupleDraw1 max_rejection_gaussians_1d(double mx, double sx, double my, double sy, Rng& rng);
// ... and of two Gaussian vectors with diagonal covariances
CoupleDraw max_rejection_gaussians_diag(const Eigen::VectorXd& mx, const Eigen::VectorXd& sx,
                                        const Eigen::VectorXd& my, const Eigen::VectorXd& sy,
                                        Rng& rng);
// ... and of two gamma laws (shape/scale)
CoupleDraw1 max_rejection_gammas(double shape_x, double scale_x,
                                 double shape_y, double scale_y, Rng& rng);

// Maximal reflection coupling of N(xi, FF^T) vs N(nu, FF^T), F square invertible.
// Consumes exactly dim normals and one uniform. On meet, y is x bitwise.
CoupleDraw max_reflection_coupling(const Eigen::VectorXd& xi, const Eigen::VectorXd& nu,
                                   const Eigen::MatrixXd& factor, Rng& rng);
// diagonal-covariance fast path (sd per coordinate)
CoupleDraw max_reflection_coupling_diag(const Eigen::VectorXd& xi, const Eigen::VectorXd& nu,
                                        const Eigen::VectorXd& sd, Rng& rng);
CoupleDraw1 max_reflection_coupling_1d(double xi, double nu, double sd, Rng& rng);

// CRN coupling: X = xi + F Z, Y = nu + G Z with shared Z ~ N(0, I_m).
// E||X-Y||^2 = ||xi-nu||^2 + ||F-G||_F^2; W2-optimal for commuting covariances.
CoupleDraw crn_coupling(const Eigen::VectorXd& xi, const Eigen::MatrixXd& F,
                        const Eigen::VectorXd& nu, const Eigen::MatrixXd& G, Rng& rng);

// Monotone coupling through a shared uniform and two quantile functions.
CoupleDraw1 monotone_coupling(double u, const std::function<double(double)>& quantile_p,
                              const std::function<double(double)>& quantile_q);

// Meeting probabilities of one maximal reflection step for standardized mean
// gap z: jointly on the whole vector vs independently per coordinate.
struct MeetingProb { double joint; double product; };
MeetingProb meeting_prob_product(const Eigen::VectorXd& z);

} // namespace cgibbs
