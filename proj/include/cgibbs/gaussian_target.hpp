#pragma once
// Dense Gaussian target with a block structure, its blocked-Gibbs sweep, and
// the induced Gaussian autoregression x' = B x + b + noise. This is the
// analysis/bound engine; model samplers have their own streaming sweeps.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cgibbs/couplings.hpp"
#include "cgibbs/rng.hpp"

namespace cgibbs {

struct GaussianTarget {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Q; // precision, symmetric positive definite
  std::vector<int> block_sizes;
  std::vector<int> block_offsets; // filled by validate()

  int dim() const { return (int)mu.size(); }
  int num_blocks() const { return (int)block_sizes.size(); }
  void validate(); // throws on asymmetry / non-PD / bad block structure
};

// Update order: sequence of block indices (0-based), e.g. forward 0..K-1,
// forward-backward 0..K-1,K-2..0 (palindromic => reversible kernel).
struct UpdateSchedule {
  std::vector<int> order;
  static UpdateSchedule forward(int K);
  static UpdateSchedule forward_backward(int K);
  bool palindromic() const;
  void validate(int K) const;
};

// Full conditional of block k given the rest: N(mean, cov), cov = Q_kk^{-1};
// cov_chol is the lower Cholesky factor of the covariance (not the precision).
struct FullConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_chol;
};
FullConditional full_conditional(const GaussianTarget& t, int k, const Eigen::VectorXd& x);

// One-sweep autoregression: x' = B x + b + N(0, Sigma - B Sigma B^T).
// noise_factor: d x m factor assembled from the per-step conditional factors
//   (block lower-trapezoidal; m = total updated block size over the schedule).
// noise_factor_sq: square d x d factor of the dense noise covariance; lower
//   Cholesky when positive definite, otherwise a clipped eigen factor (small
//   negative eigenvalues clipped at relative -1e-10).
struct AutoRegression {
  Eigen::MatrixXd B;
  Eigen::VectorXd b;
  Eigen::MatrixXd noise_factor;
  Eigen::MatrixXd noise_factor_sq;
  Eigen::MatrixXd sigma;      // target covariance (dense)
  Eigen::MatrixXd sigma_chol; // lower Cholesky of sigma
  double rho = 0;             // spectral radius of B
  int noise_rank = 0;         // numerical rank of the noise covariance
};
AutoRegression bgs_autoregression(const GaussianTarget& t, const UpdateSchedule& s);

// 1 / (1 - rho(B)); throws when rho >= 1 (relaxation time diverges)
double relaxation_time(const AutoRegression& ar);

// Solve the block-triangular system (noise factor) z = B (x - y) for the
// forward schedule: z_k = L_k^{-1} sum_{j>k} A_kj (x_j - y_j); final block 0.
Eigen::VectorXd joint_reflection_z(const GaussianTarget& t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y);

// Coupled one-sweep kernels on the autoregression form.
enum class EngineDistance { euclidean, tv };

struct GaussKernel {
  const GaussianTarget* target = nullptr;
  UpdateSchedule schedule;
  AutoRegression ar;
  EngineDistance dist_kind = EngineDistance::euclidean;

  using State = Eigen::VectorXd;
  State single_step(const State& x, Rng& rng) const;
  std::pair<State, State> contractive_step(const State& x, const State& y, Rng& rng) const;
  // maximal: reflection coupling of the two one-step kernels
  struct MaxOut { State x, y; bool met; };
  MaxOut maximal_step(const State& x, const State& y, Rng& rng) const;
  double distance(const State& x, const State& y) const;
  static bool equal(const State& x, const State& y) { return x == y; }
};
GaussKernel make_gauss_kernel(const GaussianTarget& t, const UpdateSchedule& s,
                              EngineDistance dist = EngineDistance::euclidean);

// Explicit blocked-Gibbs sweep drawing each block conditional in schedule
// order, consuming one normal per updated coordinate (matches the composed
// factor representation when fed the same stream).
Eigen::VectorXd gibbs_sweep_explicit(const GaussianTarget& t, const UpdateSchedule& s,
                                     const Eigen::VectorXd& x, Rng& rng);

} // namespace cgibbs
