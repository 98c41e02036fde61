#include "cgibbs/crem.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cgibbs/couplings.hpp"

namespace cgibbs {

int CrossedDesign::pair_index(int k, int l) const {
  if (k > l) std::swap(k, l);
  return k * K - k * (k + 1) / 2 + (l - k - 1);
}

void CrossedDesign::build_caches() {
  counts.assign(K, {});
  counts_d.assign(K, {});
  counts_safe.assign(K, {});
  level_sums.assign(K, {});
  for (int k = 0; k < K; ++k) {
    counts[k].assign(sizes[k], 0);
    level_sums[k] = Eigen::VectorXd::Zero(sizes[k]);
    for (long n = 0; n < N; ++n) {
      counts[k][levels[k][n]] += 1;
      level_sums[k][levels[k][n]] += y[n];
    }
    counts_d[k] = Eigen::VectorXd(sizes[k]);
    counts_safe[k] = Eigen::VectorXd(sizes[k]);
    for (long i = 0; i < sizes[k]; ++i) {
      counts_d[k][i] = double(counts[k][i]);
      counts_safe[k][i] = double(std::max<long>(counts[k][i], 1));
    }
  }
  pair_counts.assign(K * (K - 1) / 2, {});
  for (int k = 0; k < K; ++k)
    for (int l = k + 1; l < K; ++l) {
      auto& pc = pair_counts[pair_index(k, l)];
      for (long n = 0; n < N; ++n) {
        const uint64_t key = (uint64_t(uint32_t(levels[k][n])) << 32) | uint32_t(levels[l][n]);
        pc[key] += 1;
      }
    }
}

void CrossedDesign::validate() const {
  if (K < 1) throw std::invalid_argument("design: need at least one factor");
  if (N < 1) throw std::invalid_argument("design: need at least one observation");
  if ((int)sizes.size() != K || (int)levels.size() != K || y.size() != N)
    throw std::invalid_argument("design: inconsistent field sizes");
  for (int k = 0; k < K; ++k) {
    if (sizes[k] < 1) throw std::invalid_argument("design: factor with no levels");
    if ((long)levels[k].size() != N) throw std::invalid_argument("design: level column length");
    for (long n = 0; n < N; ++n)
      if (levels[k][n] < 0 || levels[k][n] >= sizes[k])
        throw std::invalid_argument("design: level index out of range");
  }
  if ((int)counts.size() != K || (int)level_sums.size() != K ||
      (int)pair_counts.size() != K * (K - 1) / 2)
    throw std::invalid_argument("design: caches not built");
  for (int k = 0; k < K; ++k) {
    long tot = 0;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(sizes[k]);
    for (long n = 0; n < N; ++n) sums[levels[k][n]] += y[n];
    for (long i = 0; i < sizes[k]; ++i) {
      tot += counts[k][i];
      if (std::fabs(sums[i] - level_sums[k][i]) > 1e-10 * (1 + std::fabs(sums[i])))
        throw std::invalid_argument("design: level sum cache mismatch");
    }
    if (tot != N) throw std::invalid_argument("design: level counts do not sum to N");
    for (int l = k + 1; l < K; ++l) {
      std::vector<long> row(sizes[k], 0);
      for (const auto& [key, c] : pair_counts[pair_index(k, l)]) row[key >> 32] += c;
      for (long i = 0; i < sizes[k]; ++i)
        if (row[i] != counts[k][i])
          throw std::invalid_argument("design: pair-count row sums mismatch");
    }
  }
}

long CremState::dim(bool with_tau) const {
  long d = 1;
  for (const auto& v : a) d += v.size();
  return d + (with_tau ? tau.size() : 0);
}

Eigen::VectorXd CremState::to_vector(bool with_tau) const {
  Eigen::VectorXd v(dim(with_tau));
  v[0] = mu;
  long off = 1;
  for (const auto& blk : a) {
    v.segment(off, blk.size()) = blk;
    off += blk.size();
  }
  if (with_tau) v.segment(off, tau.size()) = tau;
  return v;
}

CremState CremState::from_vector(const Eigen::VectorXd& v, const CrossedDesign& d, bool with_tau,
                                 const Eigen::VectorXd& tau_fixed) {
  CremState s;
  s.mu = v[0];
  long off = 1;
  s.a.resize(d.K);
  for (int k = 0; k < d.K; ++k) {
    s.a[k] = v.segment(off, d.sizes[k]);
    off += d.sizes[k];
  }
  if (with_tau) {
    s.tau = v.segment(off, d.K + 1);
  } else {
    s.tau = tau_fixed;
  }
  return s;
}

bool CremState::operator==(const CremState& o) const {
  if (mu != o.mu || tau != o.tau || a.size() != o.a.size()) return false;
  for (size_t k = 0; k < a.size(); ++k)
    if (a[k] != o.a[k]) return false;
  return true;
}

namespace {

void check_tau(const Eigen::VectorXd& tau, int K) {
  if (tau.size() != K + 1) throw std::invalid_argument("crem: tau must have K + 1 entries");
  for (long j = 0; j < tau.size(); ++j)
    if (!(tau[j] > 0)) throw std::invalid_argument("crem: precisions must be strictly positive");
}

// cross_i^{(k)} = sum over observations at level i of factor k of the other
// factors' effects; accumulated in ascending observation order
void cross_terms(const CremState& s, const CrossedDesign& d, int k, Eigen::VectorXd& cross) {
  cross.setZero(d.sizes[k]);
  for (long n = 0; n < d.N; ++n) {
    double other = 0;
    for (int l = 0; l < d.K; ++l)
      if (l != k) other += s.a[l][d.levels[l][n]];
    cross[d.levels[k][n]] += other;
  }
}

struct Cond1 {
  double mean, sd;
};

// per-thread reusable buffers so the hot sweep loops allocate only when a
// block size actually changes
struct Scratch {
  Eigen::VectorXd cross, cross_y, mean, sd, mx, sx, my, sy;
  Eigen::ArrayXd t1;
};
Scratch& scratch() {
  static thread_local Scratch sc;
  return sc;
}

// collapsed mu-draw at factor k: a^{(k)} integrated out, weights
// s_i = n_i tau0 / (tau_k + n_i tau0), precision tau_k * sum_i s_i; empty
// levels have s_i = 0 and contribute nothing (counts_safe guards the 0/0)
Cond1 mu_cond_collapsed(const CremState& s, const CrossedDesign& d, int k,
                        const Eigen::VectorXd& cross) {
  const double tau0 = s.tau[0], tauk = s.tau[k + 1];
  const auto& nc = d.counts_d[k];
  Eigen::ArrayXd& si = scratch().t1;
  si = nc.array() * tau0 / (tauk + nc.array() * tau0);
  const double den = si.sum();
  const double num =
      (si * (d.level_sums[k].array() - cross.array()) / d.counts_safe[k].array()).sum();
  return {num / den, 1.0 / std::sqrt(tauk * den)};
}

Cond1 mu_cond_vanilla(const CremState& s, const CrossedDesign& d) {
  // sum of residuals y_n - sum_k a_{i_k[n]} via the per-level caches of any
  // one factor plus the cross-terms of the others; use factor 0
  double resid = d.y.sum();
  for (int l = 0; l < d.K; ++l) resid -= s.a[l].dot(d.counts_d[l]);
  return {resid / double(d.N), 1.0 / std::sqrt(double(d.N) * s.tau[0])};
}

// a^{(k)} | mu, a^{(-k)}, tau: independent across levels with precision
// n_i tau0 + tau_k; unobserved levels reduce to the N(0, 1/tau_k) prior
void a_block_cond(const CremState& s, const CrossedDesign& d, int k, const Eigen::VectorXd& cross,
                  Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
  const double tau0 = s.tau[0], tauk = s.tau[k + 1];
  const auto& nc = d.counts_d[k].array();
  Eigen::ArrayXd& prec = scratch().t1;
  prec = tau0 * nc + tauk;
  mean = (tau0 * (d.level_sums[k].array() - nc * s.mu - cross.array()) / prec).matrix();
  sd = prec.rsqrt().matrix();
}

double tau_shape(long count, TauShape c) {
  return c == TauShape::paper ? (double(count) - 1.0) / 2.0 : (double(count) + 1.0) / 2.0;
}

} // namespace

double crem_tau_scale(const CremState& s, const CrossedDesign& d, int j) {
  double ss = 0;
  if (j >= 1) {
    ss = s.a[j - 1].squaredNorm();
  } else {
    for (long n = 0; n < d.N; ++n) {
      double eff = 0;
      for (int l = 0; l < d.K; ++l) eff += s.a[l][d.levels[l][n]];
      const double r = d.y[n] - s.mu - eff;
      ss += r * r;
    }
  }
  if (ss == 0) throw std::runtime_error("crem: degenerate scale draw (sum of squares is zero)");
  return 2.0 / ss;
}

void crem_sweep(CremState& s, const CrossedDesign& d, const CremOpts& o, Rng& rng) {
  check_tau(s.tau, d.K);
  Scratch& sc = scratch();
  Eigen::VectorXd& cross = sc.cross;
  Eigen::VectorXd& mean = sc.mean;
  Eigen::VectorXd& sd = sc.sd;
  auto draw_block = [&](int k) {
    a_block_cond(s, d, k, cross, mean, sd);
    for (long i = 0; i < d.sizes[k]; ++i) s.a[k][i] = mean[i] + sd[i] * rng.rnorm();
  };
  if (o.kind == SweepKind::collapsed) {
    for (int k = 0; k < d.K; ++k) {
      cross_terms(s, d, k, cross);
      const Cond1 mc = mu_cond_collapsed(s, d, k, cross);
      s.mu = mc.mean + mc.sd * rng.rnorm();
      draw_block(k);
      if (o.tau_mode == TauMode::sample)
        s.tau[k + 1] = rng.rgamma(tau_shape(d.sizes[k], o.tau_shape), crem_tau_scale(s, d, k + 1));
    }
  } else {
    const Cond1 mc = mu_cond_vanilla(s, d);
    s.mu = mc.mean + mc.sd * rng.rnorm();
    for (int k = 0; k < d.K; ++k) {
      cross_terms(s, d, k, cross);
      draw_block(k);
    }
    if (o.tau_mode == TauMode::sample)
      for (int k = 0; k < d.K; ++k)
        s.tau[k + 1] = rng.rgamma(tau_shape(d.sizes[k], o.tau_shape), crem_tau_scale(s, d, k + 1));
  }
  if (o.tau_mode == TauMode::sample)
    s.tau[0] = rng.rgamma(tau_shape(d.N, o.tau_shape), crem_tau_scale(s, d, 0));
}

namespace {

void couple_mu(CremState& x, CremState& yst, const Cond1& cx, const Cond1& cy, CoupleMode mode,
               Rng& rng) {
  if (mode == CoupleMode::contractive) {
    const double z = rng.rnorm();
    x.mu = cx.mean + cx.sd * z;
    yst.mu = cy.mean + cy.sd * z;
  } else if (cx.sd == cy.sd) {
    auto dr = max_reflection_coupling_1d(cx.mean, cy.mean, cx.sd, rng);
    x.mu = dr.x;
    yst.mu = dr.y;
  } else {
    auto dr = max_rejection_gaussians_1d(cx.mean, cx.sd, cy.mean, cy.sd, rng);
    x.mu = dr.x;
    yst.mu = dr.y;
  }
}

void couple_a_block(CremState& x, CremState& yst, const CrossedDesign& d, int k,
                    const Eigen::VectorXd& cross_x, const Eigen::VectorXd& cross_y,
                    CoupleMode mode, Rng& rng) {
  const long Ik = d.sizes[k];
  Scratch& sc = scratch();
  Eigen::VectorXd &mx = sc.mx, &sx = sc.sx, &my = sc.my, &sy = sc.sy;
  a_block_cond(x, d, k, cross_x, mx, sx);
  a_block_cond(yst, d, k, cross_y, my, sy);
  if (mode == CoupleMode::contractive) {
    for (long i = 0; i < Ik; ++i) {
      const double z = rng.rnorm();
      x.a[k][i] = mx[i] + sx[i] * z;
      yst.a[k][i] = my[i] + sy[i] * z;
    }
  } else if (sx == sy) {
    auto dr = max_reflection_coupling_diag(mx, my, sx, rng);
    x.a[k] = dr.x;
    yst.a[k] = dr.y;
  } else {
    auto dr = max_rejection_gaussians_diag(mx, sx, my, sy, rng);
    x.a[k] = dr.x;
    yst.a[k] = dr.y;
  }
}

void couple_tau(double& tx, double& ty, double shape, double scale_x, double scale_y,
                CoupleMode mode, Rng& rng) {
  if (mode == CoupleMode::contractive) {
    const double g = rng.rgamma(shape); // shared standard draw = CRN on the gamma stream
    tx = scale_x * g;
    ty = scale_y * g;
  } else {
    auto dr = max_rejection_gammas(shape, scale_x, shape, scale_y, rng);
    tx = dr.x;
    ty = dr.y;
  }
}

} // namespace

bool crem_coupled_sweep(CremState& x, CremState& yst, const CrossedDesign& d, const CremOpts& o,
                        CoupleMode mode, Rng& rng) {
  check_tau(x.tau, d.K);
  check_tau(yst.tau, d.K);
  Scratch& sc = scratch();
  Eigen::VectorXd& cross_x = sc.cross;
  Eigen::VectorXd& cross_y = sc.cross_y;
  if (o.kind == SweepKind::collapsed) {
    for (int k = 0; k < d.K; ++k) {
      cross_terms(x, d, k, cross_x);
      cross_terms(yst, d, k, cross_y);
      couple_mu(x, yst, mu_cond_collapsed(x, d, k, cross_x), mu_cond_collapsed(yst, d, k, cross_y),
                mode, rng);
      couple_a_block(x, yst, d, k, cross_x, cross_y, mode, rng);
      if (o.tau_mode == TauMode::sample)
        couple_tau(x.tau[k + 1], yst.tau[k + 1], tau_shape(d.sizes[k], o.tau_shape),
                   crem_tau_scale(x, d, k + 1), crem_tau_scale(yst, d, k + 1), mode, rng);
    }
  } else {
    couple_mu(x, yst, mu_cond_vanilla(x, d), mu_cond_vanilla(yst, d), mode, rng);
    for (int k = 0; k < d.K; ++k) {
      cross_terms(x, d, k, cross_x);
      cross_terms(yst, d, k, cross_y);
      couple_a_block(x, yst, d, k, cross_x, cross_y, mode, rng);
    }
    if (o.tau_mode == TauMode::sample)
      for (int k = 0; k < d.K; ++k)
        couple_tau(x.tau[k + 1], yst.tau[k + 1], tau_shape(d.sizes[k], o.tau_shape),
                   crem_tau_scale(x, d, k + 1), crem_tau_scale(yst, d, k + 1), mode, rng);
  }
  if (o.tau_mode == TauMode::sample)
    couple_tau(x.tau[0], yst.tau[0], tau_shape(d.N, o.tau_shape), crem_tau_scale(x, d, 0),
               crem_tau_scale(yst, d, 0), mode, rng);
  return x == yst;
}

namespace {

// joint precision of (mu, a) for fixed tau, with the flat mu prior entering as
// a zero prior-precision entry; b is the matching natural parameter tau0 Z'y
void assemble_joint(const CrossedDesign& d, const Eigen::VectorXd& tau, Eigen::MatrixXd& Q,
                    Eigen::VectorXd& b, std::vector<long>& offsets) {
  check_tau(tau, d.K);
  long D = 1;
  offsets.assign(d.K, 0);
  for (int k = 0; k < d.K; ++k) {
    offsets[k] = D;
    D += d.sizes[k];
  }
  if (D > 5000) throw std::invalid_argument("crem posterior: dimension cap (5000) exceeded");
  const double tau0 = tau[0];
  Q = Eigen::MatrixXd::Zero(D, D);
  b = Eigen::VectorXd::Zero(D);
  Q(0, 0) = tau0 * double(d.N);
  b[0] = tau0 * d.y.sum();
  for (int k = 0; k < d.K; ++k) {
    for (long i = 0; i < d.sizes[k]; ++i) {
      const long r = offsets[k] + i;
      Q(r, r) = tau0 * double(d.counts[k][i]) + tau[k + 1];
      Q(r, 0) = Q(0, r) = tau0 * double(d.counts[k][i]);
      b[r] = tau0 * d.level_sums[k][i];
    }
    for (int l = k + 1; l < d.K; ++l)
      for (const auto& [key, c] : d.pair_counts[d.pair_index(k, l)]) {
        const long r = offsets[k] + long(key >> 32);
        const long s = offsets[l] + long(key & 0xffffffffu);
        Q(r, s) = Q(s, r) = tau0 * double(c);
      }
  }
}

} // namespace

CremPosterior exact_posterior(const CrossedDesign& d, const Eigen::VectorXd& tau) {
  if (d.N < 1)
    throw std::invalid_argument("crem posterior: flat direction (no observations for mu)");
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  std::vector<long> offsets;
  assemble_joint(d, tau, Q, b, offsets);
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("crem posterior: precision not positive definite");
  CremPosterior p;
  p.mean = llt.solve(b);
  p.cov = llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  p.cov = 0.5 * (p.cov + p.cov.transpose().eval());
  return p;
}

GaussianTarget crem_bound_target_collapsed(const CrossedDesign& d, const Eigen::VectorXd& tau) {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  std::vector<long> offsets;
  assemble_joint(d, tau, Q, b, offsets);
  const long D = Q.rows();
  // marginalize mu: Schur complement of the (0,0) entry
  Eigen::MatrixXd Qa = Q.block(1, 1, D - 1, D - 1) -
                       Q.block(1, 0, D - 1, 1) * Q.block(0, 1, 1, D - 1) / Q(0, 0);
  GaussianTarget t;
  t.Q = 0.5 * (Qa + Qa.transpose().eval());
  Eigen::VectorXd mean = Eigen::LLT<Eigen::MatrixXd>(Q).solve(b);
  t.mu = mean.tail(D - 1);
  t.block_sizes.assign(d.sizes.begin(), d.sizes.end());
  t.validate();
  return t;
}

GaussianTarget crem_bound_target_vanilla(const CrossedDesign& d, const Eigen::VectorXd& tau) {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  std::vector<long> offsets;
  assemble_joint(d, tau, Q, b, offsets);
  GaussianTarget t;
  t.Q = std::move(Q);
  t.mu = Eigen::LLT<Eigen::MatrixXd>(t.Q).solve(b);
  t.block_sizes.assign(1, 1);
  for (long s : d.sizes) t.block_sizes.push_back((int)s);
  t.validate();
  return t;
}

CrossedDesign simulate_regime(int regime, int K, long I, const Eigen::VectorXd& tau, Rng& rng) {
  if (regime != 1 && regime != 2) throw std::invalid_argument("simulate_regime: regime is 1 or 2");
  if (K < 1 || I < 2) throw std::invalid_argument("simulate_regime: need K >= 1, I >= 2");
  check_tau(tau, K);
  double p = regime == 1 ? 0.1 : 10.0 / std::pow(double(I), double(K - 1));
  p = std::min(p, 1.0);
  double cells = std::pow(double(I), double(K));
  if (cells > 9e15) throw std::invalid_argument("simulate_regime: cell space too large");
  const long M = (long)std::llround(cells);

  for (int attempt = 0; attempt < 100; ++attempt) {
    // true effects first, then the inclusion process, then responses
    std::vector<Eigen::VectorXd> eff(K);
    for (int k = 0; k < K; ++k) {
      eff[k] = Eigen::VectorXd(I);
      const double sd = 1.0 / std::sqrt(tau[k + 1]);
      for (long i = 0; i < I; ++i) eff[k][i] = sd * rng.rnorm();
    }
    // geometric skips through the lexicographic cell order (~ E[N] uniforms)
    std::vector<long> included;
    if (p >= 1.0) {
      included.resize(M);
      for (long c = 0; c < M; ++c) included[c] = c;
    } else {
      const double lq = std::log1p(-p);
      long c = -1;
      while (true) {
        const double u = rng.runif();
        const double skip = std::floor(std::log(u) / lq);
        if (skip > double(M)) break;
        c += 1 + (long)skip;
        if (c >= M) break;
        included.push_back(c);
      }
    }
    if (included.empty()) continue;

    CrossedDesign d;
    d.N = (long)included.size();
    d.K = K;
    d.sizes.assign(K, I);
    d.levels.assign(K, std::vector<int32_t>(d.N));
    d.y = Eigen::VectorXd(d.N);
    const double noise_sd = 1.0 / std::sqrt(tau[0]);
    for (long n = 0; n < d.N; ++n) {
      long code = included[n];
      double mean = 0;
      for (int k = K - 1; k >= 0; --k) {
        const long lev = code % I;
        code /= I;
        d.levels[k][n] = (int32_t)lev;
        mean += eff[k][lev];
      }
      d.y[n] = mean + noise_sd * rng.rnorm();
    }
    d.build_caches();
    d.validate();
    return d;
  }
  throw std::runtime_error("simulate_regime: no observations after 100 attempts");
}

CrossedDesign read_crem_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.size() < 2 || cols[0] != "y")
    throw std::runtime_error(path + ": header must be y,f1,..,fK");
  const int K = (int)cols.size() - 1;
  for (int k = 0; k < K; ++k)
    if (cols[k + 1] != "f" + std::to_string(k + 1))
      throw std::runtime_error(path + ": header must be y,f1,..,fK");

  std::vector<double> ys;
  std::vector<std::vector<int32_t>> levels(K);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if ((int)toks.size() != K + 1)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(K + 1) + " fields");
    try {
      size_t pos = 0;
      const double yv = std::stod(toks[0], &pos);
      if (pos != toks[0].size()) throw std::invalid_argument("trailing");
      ys.push_back(yv);
      for (int k = 0; k < K; ++k) {
        const long lev = std::stol(toks[k + 1], &pos);
        if (pos != toks[k + 1].size()) throw std::invalid_argument("trailing");
        if (lev < 1) throw std::invalid_argument("level codes are 1-based");
        levels[k].push_back((int32_t)(lev - 1));
      }
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  CrossedDesign d;
  d.N = (long)ys.size();
  d.K = K;
  d.levels = std::move(levels);
  d.sizes.assign(K, 0);
  for (int k = 0; k < K; ++k)
    for (int32_t v : d.levels[k]) d.sizes[k] = std::max<long>(d.sizes[k], v + 1);
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), (long)ys.size());
  d.build_caches();
  d.validate();
  return d;
}

void write_crem_csv(const CrossedDesign& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "y";
  for (int k = 0; k < d.K; ++k) out << ",f" << (k + 1);
  out << "\n";
  char buf[40];
  for (long n = 0; n < d.N; ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g", d.y[n]);
    out << buf;
    for (int k = 0; k < d.K; ++k) out << "," << (d.levels[k][n] + 1);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

CremState crem_init(const CrossedDesign& d, const Eigen::VectorXd& tau_fixed, TauMode mode,
                    Rng& rng) {
  CremState s;
  s.mu = rng.rnorm();
  s.a.resize(d.K);
  for (int k = 0; k < d.K; ++k) {
    s.a[k] = Eigen::VectorXd(d.sizes[k]);
    for (long i = 0; i < d.sizes[k]; ++i) s.a[k][i] = rng.rnorm();
  }
  if (mode == TauMode::fixed) {
    check_tau(tau_fixed, d.K);
    s.tau = tau_fixed;
  } else {
    s.tau = Eigen::VectorXd(d.K + 1);
    for (long j = 0; j <= d.K; ++j) s.tau[j] = rng.rgamma(2.0, 0.5);
  }
  return s;
}

} // namespace cgibbs
