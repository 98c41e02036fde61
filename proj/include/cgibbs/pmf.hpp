#pragma once
// Probabilistic matrix factorization at latent dimension d:
//   y_n ~ N(rho * u_{i[n]}' v_{j[n]}, 1/tau0),
//   u_i, v_j ~ N(0, 1_d),  rho^{-2} ~ Gamma(a, b),  tau0 ~ Gamma(c, d_scale)
// (shape/scale convention; the conditional rate adds 1/b resp. 1/d_scale).
// Two Gibbs samplers: the local-centering scheme, whose rho-draw conditions
// on the scaled effects ubar = rho u (resp. vbar = rho v) and is conjugate,
// and the vanilla scheme, whose rho-draw under the flat positive prior
// p(rho) proportional to 1 is a truncated Gaussian. Coupled versions follow
// the contractive/maximal two-step pattern of the other model modules.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cgibbs/glmm.hpp" // LevelIndex
#include "cgibbs/rng.hpp"

namespace cgibbs {

struct PmfData {
  long I1 = 0, I2 = 0; // rows (users) and columns (items)
  int d = 1;           // latent dimension
  long N = 0;
  std::vector<int32_t> i, j; // 0-based endpoints per observation
  Eigen::VectorXd y;
  // hyperparameters: rho^{-2} ~ Gamma(a, b), tau0 ~ Gamma(c, d_scale)
  double a = 1.0, b = 1.0;
  double c = 1.0, d_scale = 1.0;

  // caches (build_caches): per-row and per-column observation lists
  LevelIndex by_row, by_col;

  void build_caches();
  void validate() const; // throws on inconsistent sizes/indices/hypers
};

struct PmfState {
  Eigen::MatrixXd u; // I1 x d
  Eigen::MatrixXd v; // I2 x d
  double rho = 1.0;
  double tau0 = 1.0;

  // [vec(u), vec(v)] plus rho / tau0 when the corresponding mode samples them
  Eigen::VectorXd to_vector(bool with_rho, bool with_tau0) const;
  bool operator==(const PmfState& o) const;
};

enum class PmfSampler { local_centering, vanilla };
// fixed modes skip the corresponding draw (test hooks; experiments sample both)
enum class RhoMode { fixed, sample };
enum class Tau0Mode { fixed, sample };

struct PmfOpts {
  PmfSampler sampler = PmfSampler::local_centering;
  RhoMode rho_mode = RhoMode::sample;
  Tau0Mode tau0_mode = Tau0Mode::sample;
};

// One iteration of the local-centering scheme:
//   rho^{-2} ~ Gamma(a + d I1/2, rate 1/b + rho^2 ||u||^2/2)   [from ubar]
//   u_i ~ N(mu_i, Q_i^{-1}),  Q_i = 1_d + tau0 rho^2 sum vv',
//                             mu_i = Q_i^{-1} tau0 rho sum v y
//   ... then the symmetric column pass, then
//   tau0 ~ Gamma(c + N/2, rate 1/d_scale + sum residual^2 / 2).
void local_centering_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng);

// One iteration of the vanilla scheme: u rows, v rows (same conditionals,
// rho fixed), rho ~ TG(sum w y / sum w^2, 1/(tau0 sum w^2); 0, inf) with
// w_n = u' v per observation, then tau0 as above.
void vanilla_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng);

void pmf_sweep(PmfState& s, const PmfData& data, const PmfOpts& o, Rng& rng);

// coupled version: CRN everything in contractive mode; in maximal mode the
// Gaussian rows use maximal reflection (equal conditional scale) or maximal
// rejection, and the gamma/TG scalars use maximal rejection. Returns true
// when the states are identical afterwards.
bool coupled_pmf_sweep(PmfState& x, PmfState& yst, const PmfData& data, const PmfOpts& o,
                       CoupleMode mode, Rng& rng);

// deterministic reference direction (a few power-iteration passes over the
// ratings), used to pick one representative of the d = 1 sign class
// (u, v) <-> (-u, -v) at initialization; zero vector when the ratings carry
// no signal
Eigen::VectorXd pmf_ref_direction(const PmfData& data);

// overdispersed start: u, v iid N(0, 1); sampled rho as Gamma(2, 1/2)^{-1/2},
// sampled tau0 from Gamma(2, 1/2); fixed modes keep the given values. At
// d = 1 the posterior has mirrored modes (u, v) <-> (-u, -v) and chains
// started in opposite sign classes essentially never meet, so the draw is
// canonicalized: (u, v) flips jointly to make <v, ref direction> >= 0.
PmfState pmf_init(const PmfData& data, double rho_fixed, double tau0_fixed, const PmfOpts& o,
                  Rng& rng);

// initial distribution for the coupled experiments: a pmf_init draw pushed
// through `warm` solo sweeps of the chosen sampler and sign-canonicalized
// again. The sign class of a raw draw is only weakly tilted and the first
// sweeps can still flip it, leaving two independently started chains in
// mirrored modes (from which they essentially never meet); warming first
// makes the canonicalization decide the class reliably. Any initial law is
// valid for the unbiased estimators.
PmfState pmf_warm_init(const PmfData& data, double rho_fixed, double tau0_fixed, const PmfOpts& o,
                       int warm, Rng& rng);

// Regime 1: each cell of the I1 x I2 grid observed once with probability 0.1;
// Regime 2: probability 10 / sqrt(I1 I2) (10/I for square grids). Effects are
// iid standard normal, responses from the model at the given truth.
PmfData pmf_simulate(int regime, long I1, long I2, int d, double rho_true, double tau0_true,
                     Rng& rng);

// CSV: header "i,j,y", 1-based indices
PmfData read_pmf_csv(const std::string& path);
void write_pmf_csv(const PmfData& data, const std::string& path);

// runner-compatible kernel wrapper
struct PmfKernel {
  const PmfData* data = nullptr;
  PmfOpts opts;

  using State = PmfState;
  State single_step(const State& x, Rng& rng) const {
    State s = x;
    pmf_sweep(s, *data, opts, rng);
    return s;
  }
  std::pair<State, State> contractive_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    coupled_pmf_sweep(sx, sy, *data, opts, CoupleMode::contractive, rng);
    return {std::move(sx), std::move(sy)};
  }
  struct MaxOut {
    State x, y;
    bool met;
  };
  MaxOut maximal_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    bool met = coupled_pmf_sweep(sx, sy, *data, opts, CoupleMode::maximal, rng);
    return {std::move(sx), std::move(sy), met};
  }
  double distance(const State& x, const State& y) const {
    const bool wr = opts.rho_mode == RhoMode::sample;
    const bool wt = opts.tau0_mode == Tau0Mode::sample;
    return (x.to_vector(wr, wt) - y.to_vector(wr, wt)).norm();
  }
  static bool equal(const State& x, const State& y) { return x == y; }
};

} // namespace cgibbs
