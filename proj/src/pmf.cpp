#include "cgibbs/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cgibbs/couplings.hpp"
#include "cgibbs/special.hpp"

namespace cgibbs {

void PmfData::build_caches() {
  auto build = [this](LevelIndex& ix, const std::vector<int32_t>& lev, long size) {
    ix.offset.assign(size + 1, 0);
    for (long n = 0; n < N; ++n) ix.offset[lev[n] + 1] += 1;
    for (long r = 0; r < size; ++r) ix.offset[r + 1] += ix.offset[r];
    ix.obs.resize(N);
    std::vector<long> cursor(ix.offset.begin(), ix.offset.end() - 1);
    for (long n = 0; n < N; ++n) ix.obs[cursor[lev[n]]++] = n;
  };
  build(by_row, i, I1);
  build(by_col, j, I2);
}

void PmfData::validate() const {
  if (I1 < 1 || I2 < 1) throw std::invalid_argument("pmf data: need I1, I2 >= 1");
  if (d < 1) throw std::invalid_argument("pmf data: need d >= 1");
  if (N < 0 || (long)i.size() != N || (long)j.size() != N || y.size() != N)
    throw std::invalid_argument("pmf data: triple arrays disagree with N");
  for (long n = 0; n < N; ++n) {
    if (i[n] < 0 || i[n] >= I1 || j[n] < 0 || j[n] >= I2)
      throw std::invalid_argument("pmf data: index out of range");
    if (!std::isfinite(y[n])) throw std::invalid_argument("pmf data: non-finite response");
  }
  for (double h : {a, b, c, d_scale})
    if (!(h > 0) || !std::isfinite(h))
      throw std::invalid_argument("pmf data: hyperparameters must be positive finite");
  if ((long)by_row.offset.size() != I1 + 1 || (long)by_col.offset.size() != I2 + 1 ||
      (long)by_row.obs.size() != N || (long)by_col.obs.size() != N)
    throw std::invalid_argument("pmf data: caches not built");
}

Eigen::VectorXd PmfState::to_vector(bool with_rho, bool with_tau0) const {
  Eigen::VectorXd out(u.size() + v.size() + (with_rho ? 1 : 0) + (with_tau0 ? 1 : 0));
  long at = 0;
  out.segment(at, u.size()) = Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
  at += u.size();
  out.segment(at, v.size()) = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  at += v.size();
  if (with_rho) out[at++] = rho;
  if (with_tau0) out[at++] = tau0;
  return out;
}

bool PmfState::operator==(const PmfState& o) const {
  return rho == o.rho && tau0 == o.tau0 && u.rows() == o.u.rows() && v.rows() == o.v.rows() &&
         u.cols() == o.u.cols() && u == o.u && v == o.v;
}

namespace {

void check_state(const PmfState& s, const PmfData& data) {
  if (s.u.rows() != data.I1 || s.v.rows() != data.I2 || s.u.cols() != data.d ||
      s.v.cols() != data.d)
    throw std::invalid_argument("pmf state: factor dimensions disagree with the data");
  if (!(s.rho > 0) || !std::isfinite(s.rho) || !(s.tau0 > 0) || !std::isfinite(s.tau0))
    throw std::invalid_argument("pmf state: rho and tau0 must be positive finite");
}

// d = 1 conditional for every row of one side given the partner factor w:
// precision q = 1 + tau0 rho^2 sum w^2, mean = tau0 rho sum w y / q over the
// row's observations (empty rows fall back to the N(0, 1) prior)
void side_cond_1d(const Eigen::MatrixXd& w, const LevelIndex& ix,
                  const std::vector<int32_t>& partner, const PmfData& data, double rho,
                  double tau0, Eigen::VectorXd& m, Eigen::VectorXd& sd) {
  const long R = (long)ix.offset.size() - 1;
  m.resize(R);
  sd.resize(R);
  const double c2 = tau0 * rho * rho, c1 = tau0 * rho;
  for (long r = 0; r < R; ++r) {
    double sw2 = 0, swy = 0;
    for (long t = ix.offset[r]; t < ix.offset[r + 1]; ++t) {
      const long n = ix.obs[t];
      const double wv = w(partner[n], 0);
      sw2 += wv * wv;
      swy += wv * data.y[n];
    }
    const double q = 1.0 + c2 * sw2;
    m[r] = c1 * swy / q;
    sd[r] = 1.0 / std::sqrt(q);
  }
}

// one side's block draw: every row from N(mu_r, Q_r^{-1}) with
// Q_r = 1_d + tau0 rho^2 sum ww', mu_r = Q_r^{-1} tau0 rho sum w y
void draw_rows(Eigen::MatrixXd& f, const Eigen::MatrixXd& w, const LevelIndex& ix,
               const std::vector<int32_t>& partner, const PmfData& data, double rho,
               double tau0, Rng& rng) {
  const long R = f.rows();
  if (data.d == 1) {
    Eigen::VectorXd m, sd;
    side_cond_1d(w, ix, partner, data, rho, tau0, m, sd);
    for (long r = 0; r < R; ++r) f(r, 0) = m[r] + sd[r] * rng.rnorm();
    return;
  }
  const int d = data.d;
  Eigen::MatrixXd Q(d, d);
  Eigen::VectorXd rhs(d), z(d);
  const double c2 = tau0 * rho * rho, c1 = tau0 * rho;
  for (long r = 0; r < R; ++r) {
    Q.setIdentity();
    rhs.setZero();
    for (long t = ix.offset[r]; t < ix.offset[r + 1]; ++t) {
      const long n = ix.obs[t];
      const auto wv = w.row(partner[n]).transpose();
      Q.noalias() += c2 * wv * wv.transpose();
      rhs.noalias() += c1 * data.y[n] * wv;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("pmf sweep: row precision not positive definite");
    for (int t = 0; t < d; ++t) z[t] = rng.rnorm();
    f.row(r) = (llt.solve(rhs) + llt.matrixU().solve(z)).transpose();
  }
}

// scale draw through the centered effects ubar = rho u: the conditional of
// rho^{-2} given ubar is Gamma(a + d rows / 2, rate 1/b + ||ubar||_F^2 / 2)
// and decouples from the data
double rho_shape(const PmfData& data, long rows) {
  return data.a + 0.5 * double(data.d) * double(rows);
}
double rho_scale(const PmfData& data, double rho, const Eigen::MatrixXd& f) {
  return 1.0 / (1.0 / data.b + 0.5 * rho * rho * f.squaredNorm());
}

double resid_sumsq(const PmfState& s, const PmfData& data) {
  double ss = 0;
  for (long n = 0; n < data.N; ++n) {
    const double r = data.y[n] - s.rho * s.u.row(data.i[n]).dot(s.v.row(data.j[n]));
    ss += r * r;
  }
  return ss;
}

double tau0_shape(const PmfData& data) { return data.c + 0.5 * double(data.N); }
double tau0_scale(const PmfState& s, const PmfData& data) {
  return 1.0 / (1.0 / data.d_scale + 0.5 * resid_sumsq(s, data));
}

// vanilla scale conditional under the flat positive prior: with w_n = u'v per
// observation, rho | rest ~ N(sum w y / sum w^2, 1/(tau0 sum w^2)) on (0, inf)
struct TgCond {
  double mean, sd;
};
TgCond rho_tg_cond(const PmfState& s, const PmfData& data) {
  double sw2 = 0, swy = 0;
  for (long n = 0; n < data.N; ++n) {
    const double w = s.u.row(data.i[n]).dot(s.v.row(data.j[n]));
    sw2 += w * w;
    swy += w * data.y[n];
  }
  if (sw2 == 0) throw std::runtime_error("degenerate scale conditional");
  return {swy / sw2, 1.0 / std::sqrt(s.tau0 * sw2)};
}

} // namespace

void local_centering_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng) {
  check_state(s, data);
  if (o.rho_mode == RhoMode::sample)
    s.rho = 1.0 / std::sqrt(rng.rgamma(rho_shape(data, data.I1), rho_scale(data, s.rho, s.u)));
  draw_rows(s.u, s.v, data.by_row, data.j, data, s.rho, s.tau0, rng);
  if (o.rho_mode == RhoMode::sample)
    s.rho = 1.0 / std::sqrt(rng.rgamma(rho_shape(data, data.I2), rho_scale(data, s.rho, s.v)));
  draw_rows(s.v, s.u, data.by_col, data.i, data, s.rho, s.tau0, rng);
  if (o.tau0_mode == Tau0Mode::sample) s.tau0 = rng.rgamma(tau0_shape(data), tau0_scale(s, data));
}

void vanilla_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng) {
  check_state(s, data);
  draw_rows(s.u, s.v, data.by_row, data.j, data, s.rho, s.tau0, rng);
  draw_rows(s.v, s.u, data.by_col, data.i, data, s.rho, s.tau0, rng);
  if (o.rho_mode == RhoMode::sample) {
    const TgCond c = rho_tg_cond(s, data);
    s.rho = trunc_norm_inverse_cdf(c.mean, c.sd, 0.0, rng.runif());
  }
  if (o.tau0_mode == Tau0Mode::sample) s.tau0 = rng.rgamma(tau0_shape(data), tau0_scale(s, data));
}

void pmf_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng) {
  if (o.sampler == PmfSampler::local_centering)
    local_centering_sweep(s, data, o, rng);
  else
    vanilla_sweep(s, data, o, rng);
}

namespace {

// one side's rows as a single coupled block draw (d = 1): shared normals in
// contractive mode, blockwise maximal reflection/rejection otherwise
void couple_side(PmfState& x, PmfState& yst, bool u_side, const PmfData& data, CoupleMode mode,
                 Rng& rng) {
  const LevelIndex& ix = u_side ? data.by_row : data.by_col;
  const std::vector<int32_t>& partner = u_side ? data.j : data.i;
  Eigen::MatrixXd& fx = u_side ? x.u : x.v;
  Eigen::MatrixXd& fy = u_side ? yst.u : yst.v;
  const Eigen::MatrixXd& wx = u_side ? x.v : x.u;
  const Eigen::MatrixXd& wy = u_side ? yst.v : yst.u;
  Eigen::VectorXd mx, sx, my, sy;
  side_cond_1d(wx, ix, partner, data, x.rho, x.tau0, mx, sx);
  side_cond_1d(wy, ix, partner, data, yst.rho, yst.tau0, my, sy);
  const long R = fx.rows();
  if (mode == CoupleMode::contractive) {
    for (long r = 0; r < R; ++r) {
      const double z = rng.rnorm();
      fx(r, 0) = mx[r] + sx[r] * z;
      fy(r, 0) = my[r] + sy[r] * z;
    }
  } else if (sx == sy) {
    auto dr = max_reflection_coupling_diag(mx, my, sx, rng);
    fx.col(0) = dr.x;
    fy.col(0) = dr.y;
  } else {
    auto dr = max_rejection_gaussians_diag(mx, sx, my, sy, rng);
    fx.col(0) = dr.x;
    fy.col(0) = dr.y;
  }
}

// equal-shape gamma pair for the rho^{-2} and tau0 draws: a shared standard
// draw in contractive mode (CRN on the gamma stream), maximal rejection else
void couple_gamma(double& gx, double& gy, double shape, double scale_x, double scale_y,
                  CoupleMode mode, Rng& rng) {
  if (mode == CoupleMode::contractive) {
    const double g = rng.rgamma(shape);
    gx = scale_x * g;
    gy = scale_y * g;
  } else {
    auto dr = max_rejection_gammas(shape, scale_x, shape, scale_y, rng);
    gx = dr.x;
    gy = dr.y;
  }
}

void couple_rho_centered(PmfState& x, PmfState& yst, const PmfData& data, bool u_side,
                         CoupleMode mode, Rng& rng) {
  const long rows = u_side ? data.I1 : data.I2;
  const double sh = rho_shape(data, rows);
  double gx, gy;
  couple_gamma(gx, gy, sh, rho_scale(data, x.rho, u_side ? x.u : x.v),
               rho_scale(data, yst.rho, u_side ? yst.u : yst.v), mode, rng);
  x.rho = 1.0 / std::sqrt(gx);
  yst.rho = 1.0 / std::sqrt(gy);
}

void couple_rho_tg(PmfState& x, PmfState& yst, const PmfData& data, CoupleMode mode, Rng& rng) {
  const TgCond cx = rho_tg_cond(x, data);
  const TgCond cy = rho_tg_cond(yst, data);
  if (mode == CoupleMode::contractive) {
    const double u = rng.runif();
    x.rho = trunc_norm_inverse_cdf(cx.mean, cx.sd, 0.0, u);
    yst.rho = trunc_norm_inverse_cdf(cy.mean, cy.sd, 0.0, u);
  } else {
    auto dr = max_rejection_coupling_1d(
        [&](Rng& g) { return trunc_norm_inverse_cdf(cx.mean, cx.sd, 0.0, g.runif()); },
        [&](double t) { return trunc_norm_logpdf(cx.mean, cx.sd, 0.0, t); },
        [&](Rng& g) { return trunc_norm_inverse_cdf(cy.mean, cy.sd, 0.0, g.runif()); },
        [&](double t) { return trunc_norm_logpdf(cy.mean, cy.sd, 0.0, t); }, rng);
    x.rho = dr.x;
    yst.rho = dr.y;
  }
}

void couple_tau0(PmfState& x, PmfState& yst, const PmfData& data, CoupleMode mode, Rng& rng) {
  couple_gamma(x.tau0, yst.tau0, tau0_shape(data), tau0_scale(x, data), tau0_scale(yst, data),
               mode, rng);
}

} // namespace

bool coupled_pmf_sweep(PmfState& x, PmfState& yst, const PmfData& data, const PmfOpts& o,
                       CoupleMode mode, Rng& rng) {
  if (data.d != 1)
    throw std::invalid_argument("coupled_pmf_sweep: d = 1 only (for d > 1 the factors are "
                                "identified only up to rotation, so chains cannot meet)");
  check_state(x, data);
  check_state(yst, data);
  if (o.sampler == PmfSampler::local_centering) {
    if (o.rho_mode == RhoMode::sample) couple_rho_centered(x, yst, data, true, mode, rng);
    couple_side(x, yst, true, data, mode, rng);
    if (o.rho_mode == RhoMode::sample) couple_rho_centered(x, yst, data, false, mode, rng);
    couple_side(x, yst, false, data, mode, rng);
  } else {
    couple_side(x, yst, true, data, mode, rng);
    couple_side(x, yst, false, data, mode, rng);
    if (o.rho_mode == RhoMode::sample) couple_rho_tg(x, yst, data, mode, rng);
  }
  if (o.tau0_mode == Tau0Mode::sample) couple_tau0(x, yst, data, mode, rng);
  return x == yst;
}

Eigen::VectorXd pmf_ref_direction(const PmfData& data) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(data.I2).normalized();
  Eigen::VectorXd z(data.I1);
  for (int pass = 0; pass < 8; ++pass) {
    z.setZero();
    for (long n = 0; n < data.N; ++n) z[data.i[n]] += data.y[n] * w[data.j[n]];
    w.setZero();
    for (long n = 0; n < data.N; ++n) w[data.j[n]] += data.y[n] * z[data.i[n]];
    const double nrm = w.norm();
    if (!(nrm > 0) || !std::isfinite(nrm)) return Eigen::VectorXd::Zero(data.I2);
    w /= nrm;
  }
  return w;
}

PmfState pmf_init(const PmfData& data, double rho_fixed, double tau0_fixed, const PmfOpts& o,
                  Rng& rng) {
  PmfState s;
  s.u = Eigen::MatrixXd(data.I1, data.d);
  for (long r = 0; r < data.I1; ++r)
    for (int t = 0; t < data.d; ++t) s.u(r, t) = rng.rnorm();
  s.v = Eigen::MatrixXd(data.I2, data.d);
  for (long r = 0; r < data.I2; ++r)
    for (int t = 0; t < data.d; ++t) s.v(r, t) = rng.rnorm();
  if (data.d == 1 && s.v.col(0).dot(pmf_ref_direction(data)) < 0) {
    s.u = -s.u;
    s.v = -s.v;
  }
  if (o.rho_mode == RhoMode::fixed) {
    if (!(rho_fixed > 0) || !std::isfinite(rho_fixed))
      throw std::invalid_argument("pmf_init: fixed rho must be positive finite");
    s.rho = rho_fixed;
  } else {
    s.rho = 1.0 / std::sqrt(rng.rgamma(2.0, 0.5));
  }
  if (o.tau0_mode == Tau0Mode::fixed) {
    if (!(tau0_fixed > 0) || !std::isfinite(tau0_fixed))
      throw std::invalid_argument("pmf_init: fixed tau0 must be positive finite");
    s.tau0 = tau0_fixed;
  } else {
    s.tau0 = rng.rgamma(2.0, 0.5);
  }
  return s;
}

PmfState pmf_warm_init(const PmfData& data, double rho_fixed, double tau0_fixed, const PmfOpts& o,
                       int warm, Rng& rng) {
  if (warm < 0) throw std::invalid_argument("pmf_warm_init: warm must be >= 0");
  // a raw draw occasionally falls into a sticky "null" configuration (factors
  // near noise, tau0 dragged low) whose dwell time dwarfs any fixed warm
  // length; redraw until the factors align with the reference direction.
  // r >= 0.3 separates mode-typical states (r ~ 0.5-0.7) from the null
  // configuration (r ~ I^{-1/2}) at the sizes the experiments use.
  constexpr double align_min = 0.3;
  const Eigen::VectorXd ref = data.d == 1 ? pmf_ref_direction(data) : Eigen::VectorXd();
  const bool check_align = data.d == 1 && ref.norm() > 0;
  PmfState s;
  for (int attempt = 0; attempt < 50; ++attempt) {
    s = pmf_init(data, rho_fixed, tau0_fixed, o, rng);
    for (int t = 0; t < warm; ++t) pmf_sweep(s, data, o, rng);
    if (!check_align) break;
    const double r = std::fabs(s.v.col(0).dot(ref)) / s.v.col(0).norm();
    if (r >= align_min) break;
  }
  if (data.d == 1 && check_align && s.v.col(0).dot(ref) < 0) {
    s.u = -s.u;
    s.v = -s.v;
  }
  return s;
}

PmfData pmf_simulate(int regime, long I1, long I2, int d, double rho_true, double tau0_true,
                     Rng& rng) {
  if (regime != 1 && regime != 2) throw std::invalid_argument("pmf_simulate: regime is 1 or 2");
  if (I1 < 2 || I2 < 2 || d < 1) throw std::invalid_argument("pmf_simulate: need I1, I2 >= 2, d >= 1");
  if (!(rho_true > 0) || !(tau0_true > 0))
    throw std::invalid_argument("pmf_simulate: need positive rho, tau0");
  double p = regime == 1 ? 0.1 : 10.0 / std::sqrt(double(I1) * double(I2));
  p = std::min(p, 1.0);
  const double cells = double(I1) * double(I2);
  if (cells > 9e15) throw std::invalid_argument("pmf_simulate: cell space too large");
  const long M = I1 * I2;

  for (int attempt = 0; attempt < 100; ++attempt) {
    // true factors first, then the inclusion process, then responses
    Eigen::MatrixXd ut(I1, d), vt(I2, d);
    for (long r = 0; r < I1; ++r)
      for (int t = 0; t < d; ++t) ut(r, t) = rng.rnorm();
    for (long r = 0; r < I2; ++r)
      for (int t = 0; t < d; ++t) vt(r, t) = rng.rnorm();
    // geometric skips through the row-major cell order (~ E[N] uniforms)
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

    PmfData data;
    data.I1 = I1;
    data.I2 = I2;
    data.d = d;
    data.N = (long)included.size();
    data.i.resize(data.N);
    data.j.resize(data.N);
    data.y = Eigen::VectorXd(data.N);
    const double noise_sd = 1.0 / std::sqrt(tau0_true);
    for (long n = 0; n < data.N; ++n) {
      const long cell = included[n];
      data.i[n] = (int32_t)(cell / I2);
      data.j[n] = (int32_t)(cell % I2);
      const double mean = rho_true * ut.row(data.i[n]).dot(vt.row(data.j[n]));
      data.y[n] = mean + noise_sd * rng.rnorm();
    }
    data.build_caches();
    data.validate();
    return data;
  }
  throw std::runtime_error("pmf_simulate: no observations after 100 attempts");
}

PmfData read_pmf_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "i,j,y") throw std::runtime_error(path + ": header must be i,j,y");

  std::vector<int32_t> is, js;
  std::vector<double> ys;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if (toks.size() != 3)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      size_t pos = 0;
      const long iv = std::stol(toks[0], &pos);
      if (pos != toks[0].size()) throw std::invalid_argument("trailing");
      const long jv = std::stol(toks[1], &pos);
      if (pos != toks[1].size()) throw std::invalid_argument("trailing");
      if (iv < 1 || jv < 1) throw std::invalid_argument("indices are 1-based");
      const double yv = std::stod(toks[2], &pos);
      if (pos != toks[2].size()) throw std::invalid_argument("trailing");
      is.push_back((int32_t)(iv - 1));
      js.push_back((int32_t)(jv - 1));
      ys.push_back(yv);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  PmfData data;
  data.N = (long)ys.size();
  data.i = std::move(is);
  data.j = std::move(js);
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), (long)ys.size());
  for (long n = 0; n < data.N; ++n) {
    data.I1 = std::max<long>(data.I1, data.i[n] + 1);
    data.I2 = std::max<long>(data.I2, data.j[n] + 1);
  }
  data.build_caches();
  data.validate();
  return data;
}

void write_pmf_csv(const PmfData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "i,j,y\n";
  char buf[40];
  for (long n = 0; n < data.N; ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[n]);
    out << (data.i[n] + 1) << "," << (data.j[n] + 1) << "," << buf << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace cgibbs
