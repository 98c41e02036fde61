#include "cgibbs/gaussian_target.hpp"

#include <stdexcept>

namespace cgibbs {

void GaussianTarget::validate() {
  const int d = dim();
  if (Q.rows() != d || Q.cols() != d)
    throw std::invalid_argument("gaussian target: precision shape mismatch");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("gaussian target: precision not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gaussian target: precision not positive definite");
  if (block_sizes.empty()) throw std::invalid_argument("gaussian target: no blocks");
  block_offsets.assign(block_sizes.size(), 0);
  int acc = 0;
  for (size_t k = 0; k < block_sizes.size(); ++k) {
    if (block_sizes[k] <= 0) throw std::invalid_argument("gaussian target: nonpositive block");
    block_offsets[k] = acc;
    acc += block_sizes[k];
  }
  if (acc != d) throw std::invalid_argument("gaussian target: blocks do not partition dimension");
}

UpdateSchedule UpdateSchedule::forward(int K) {
  UpdateSchedule s;
  for (int k = 0; k < K; ++k) s.order.push_back(k);
  return s;
}

UpdateSchedule UpdateSchedule::forward_backward(int K) {
  UpdateSchedule s;
  for (int k = 0; k < K; ++k) s.order.push_back(k);
  for (int k = K - 2; k >= 0; --k) s.order.push_back(k);
  return s;
}

bool UpdateSchedule::palindromic() const {
  std::vector<int> r(order.rbegin(), order.rend());
  return r == order;
}

void UpdateSchedule::validate(int K) const {
  if (order.empty()) throw std::invalid_argument("schedule: empty");
  std::vector<char> seen(K, 0);
  for (int k : order) {
    if (k < 0 || k >= K) throw std::invalid_argument("schedule: block index out of range");
    seen[k] = 1;
  }
  for (int k = 0; k < K; ++k)
    if (!seen[k])
      throw std::invalid_argument("schedule: block " + std::to_string(k) + " never updated");
}

namespace {
Eigen::MatrixXd chol_of_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt_prec, int n) {
  // lower Cholesky of Q_kk^{-1}
  Eigen::MatrixXd cov = llt_prec.solve(Eigen::MatrixXd::Identity(n, n));
  cov = 0.5 * (cov + cov.transpose().eval());
  Eigen::LLT<Eigen::MatrixXd> llt_cov(cov);
  if (llt_cov.info() != Eigen::Success)
    throw std::runtime_error("degenerate covariance");
  return llt_cov.matrixL();
}
} // namespace

FullConditional full_conditional(const GaussianTarget& t, int k, const Eigen::VectorXd& x) {
  if (k < 0 || k >= t.num_blocks()) throw std::invalid_argument("full_conditional: bad block");
  const int off = t.block_offsets[k], n = t.block_sizes[k];
  const Eigen::MatrixXd Qkk = t.Q.block(off, off, n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(Qkk);
  if (llt.info() != Eigen::Success) throw std::runtime_error("degenerate covariance");
  Eigen::VectorXd cross = t.Q.middleRows(off, n) * x - Qkk * x.segment(off, n);
  Eigen::VectorXd rhs = t.Q.middleRows(off, n) * t.mu - cross;
  FullConditional fc;
  fc.mean = llt.solve(rhs);
  fc.cov_chol = chol_of_inverse(llt, n);
  return fc;
}

AutoRegression bgs_autoregression(const GaussianTarget& t, const UpdateSchedule& s) {
  const int d = t.dim(), K = t.num_blocks();
  s.validate(K);
  int m = 0;
  for (int k : s.order) m += t.block_sizes[k];

  // per-block pieces: A_k (block row of the update map), a_k, L_k
  std::vector<Eigen::MatrixXd> Arow(K), Lcov(K);
  std::vector<Eigen::VectorXd> avec(K);
  for (int k = 0; k < K; ++k) {
    const int off = t.block_offsets[k], n = t.block_sizes[k];
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(t.Q.block(off, off, n, n)));
    if (llt.info() != Eigen::Success) throw std::runtime_error("degenerate covariance");
    Eigen::MatrixXd R = llt.solve(Eigen::MatrixXd(t.Q.middleRows(off, n))); // Q_kk^{-1} Q_k:
    Arow[k] = -R;
    Arow[k].block(0, off, n, n).setZero(); // A has zero diagonal blocks
    avec[k] = R * t.mu;
    Lcov[k] = chol_of_inverse(llt, n);
  }

  // run the sweep on the affine representation x = M x0 + C z + c
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, m);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  int pos = 0;
  for (int k : s.order) {
    const int off = t.block_offsets[k], n = t.block_sizes[k];
    M.middleRows(off, n) = Arow[k] * M;
    C.middleRows(off, n) = Arow[k] * C;
    C.block(off, pos, n, n) += Lcov[k];
    c.segment(off, n) = Arow[k] * c + avec[k];
    pos += n;
  }

  AutoRegression ar;
  ar.B = M;
  ar.b = c;
  ar.noise_factor = C;

  Eigen::LLT<Eigen::MatrixXd> lltQ(t.Q);
  ar.sigma = lltQ.solve(Eigen::MatrixXd::Identity(d, d));
  ar.sigma = 0.5 * (ar.sigma + ar.sigma.transpose().eval());
  Eigen::LLT<Eigen::MatrixXd> lltS(ar.sigma);
  if (lltS.info() != Eigen::Success) throw std::runtime_error("degenerate covariance");
  ar.sigma_chol = lltS.matrixL();

  Eigen::MatrixXd ncov = ar.sigma - ar.B * ar.sigma * ar.B.transpose();
  ncov = 0.5 * (ncov + ncov.transpose().eval());
  // prefer a Cholesky factor (triangular solves; transforms exactly under
  // lower-triangular changes of basis); fall back to a clipped eigen factor
  Eigen::LLT<Eigen::MatrixXd> lltN(ncov);
  if (lltN.info() == Eigen::Success) {
    ar.noise_factor_sq = lltN.matrixL();
    ar.noise_rank = d;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ncov);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    Eigen::VectorXd lam = es.eigenvalues();
    ar.noise_rank = 0;
    for (int i = 0; i < d; ++i) {
      if (lam[i] < -1e-10 * std::max(lmax, 1.0))
        throw std::runtime_error("bgs_autoregression: noise covariance significantly indefinite");
      lam[i] = std::max(lam[i], 0.0);
      if (lam[i] > 1e-12 * lmax) ++ar.noise_rank;
    }
    ar.noise_factor_sq = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  }

  Eigen::EigenSolver<Eigen::MatrixXd> eb(ar.B, /*computeEigenvectors=*/false);
  ar.rho = eb.eigenvalues().cwiseAbs().maxCoeff();
  return ar;
}

double relaxation_time(const AutoRegression& ar) {
  if (ar.rho >= 1.0 - 1e-12)
    throw std::runtime_error("relaxation_time: spectral radius at or above one");
  return 1.0 / (1.0 - ar.rho);
}

Eigen::VectorXd joint_reflection_z(const GaussianTarget& t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) {
  const int d = t.dim(), K = t.num_blocks();
  if (x.size() != d || y.size() != d)
    throw std::invalid_argument("joint_reflection_z: state size mismatch");
  Eigen::VectorXd diff = x - y;
  Eigen::VectorXd z(d);
  for (int k = 0; k < K; ++k) {
    const int off = t.block_offsets[k], n = t.block_sizes[k];
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(t.Q.block(off, off, n, n)));
    if (llt.info() != Eigen::Success) throw std::runtime_error("degenerate covariance");
    // w_k = sum_{j>k} A_kj diff_j = -Q_kk^{-1} sum_{j>k} Q_kj diff_j
    const int tail_off = off + n, tail_n = d - tail_off;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    if (tail_n > 0)
      w = -llt.solve(Eigen::VectorXd(t.Q.block(off, tail_off, n, tail_n) * diff.tail(tail_n)));
    // z_k = L_k^{-1} w_k with L_k the conditional-covariance factor
    Eigen::MatrixXd L = chol_of_inverse(llt, n);
    z.segment(off, n) = L.triangularView<Eigen::Lower>().solve(w);
  }
  return z;
}

GaussKernel make_gauss_kernel(const GaussianTarget& t, const UpdateSchedule& s,
                              EngineDistance dist) {
  GaussKernel k;
  k.target = &t;
  k.schedule = s;
  k.ar = bgs_autoregression(t, s);
  k.dist_kind = dist;
  return k;
}

GaussKernel::State GaussKernel::single_step(const State& x, Rng& rng) const {
  const int d = (int)x.size();
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.rnorm();
  return ar.B * x + ar.b + ar.noise_factor_sq * z;
}

std::pair<GaussKernel::State, GaussKernel::State>
GaussKernel::contractive_step(const State& x, const State& y, Rng& rng) const {
  const int d = (int)x.size();
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.rnorm();
  Eigen::VectorXd noise = ar.noise_factor_sq * z;
  return {ar.B * x + ar.b + noise, ar.B * y + ar.b + noise};
}

GaussKernel::MaxOut GaussKernel::maximal_step(const State& x, const State& y, Rng& rng) const {
  if (ar.noise_rank != (int)x.size())
    throw std::runtime_error("maximal_step: noise covariance rank-deficient");
  auto d = max_reflection_coupling(ar.B * x + ar.b, ar.B * y + ar.b, ar.noise_factor_sq, rng);
  return {std::move(d.x), std::move(d.y), d.met};
}

double GaussKernel::distance(const State& x, const State& y) const {
  if (dist_kind == EngineDistance::euclidean) return (x - y).norm();
  // TV of the next-step kernels
  if (ar.noise_rank != (int)x.size())
    throw std::runtime_error("distance: noise covariance rank-deficient");
  Eigen::VectorXd diff = ar.B * (x - y);
  Eigen::VectorXd z =
      ar.noise_factor_sq.isLowerTriangular()
          ? Eigen::VectorXd(ar.noise_factor_sq.triangularView<Eigen::Lower>().solve(diff))
          : Eigen::VectorXd(Eigen::PartialPivLU<Eigen::MatrixXd>(ar.noise_factor_sq).solve(diff));
  return std::erf(z.norm() / std::sqrt(8.0));
}

Eigen::VectorXd gibbs_sweep_explicit(const GaussianTarget& t, const UpdateSchedule& s,
                                     const Eigen::VectorXd& x, Rng& rng) {
  s.validate(t.num_blocks());
  Eigen::VectorXd cur = x;
  for (int k : s.order) {
    const int off = t.block_offsets[k], n = t.block_sizes[k];
    FullConditional fc = full_conditional(t, k, cur);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.rnorm();
    cur.segment(off, n) = fc.mean + fc.cov_chol * z;
  }
  return cur;
}

} // namespace cgibbs
