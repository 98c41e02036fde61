#pragma once
// Gaussian crossed random effects model:
//   y_n = mu + sum_k a^{(k)}_{i_k[n]} + e_n,  e_n ~ N(0, 1/tau0),
//   a^{(k)}_i ~ N(0, 1/tau_k), flat prior on mu, p(tau) ∝ prod tau^{-1/2}.
// Sparse design representation with O(N + sum_k I_k) collapsed and vanilla
// Gibbs sweeps, their coupled versions, a dense exact-posterior oracle for
// fixed precisions, design simulators, and CSV ingestion/export.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgibbs/gaussian_target.hpp"
#include "cgibbs/rng.hpp"

namespace cgibbs {

struct CrossedDesign {
  long N = 0;
  int K = 0;
  std::vector<long> sizes;                  // I_k
  std::vector<std::vector<int32_t>> levels; // levels[k][n] in 0..I_k-1
  Eigen::VectorXd y;

  // caches (build_caches)
  std::vector<std::vector<long>> counts;     // n_i^{(k)}
  std::vector<Eigen::VectorXd> counts_d;     // n_i^{(k)} as doubles (vector arithmetic)
  std::vector<Eigen::VectorXd> counts_safe;  // max(n_i, 1) guard for empty-level ratios
  std::vector<Eigen::VectorXd> level_sums;   // sum of y over level i of factor k
  // pair counts n_{ij}^{(k,l)} for k < l, keyed (i << 32) | j
  std::vector<std::unordered_map<uint64_t, long>> pair_counts;
  int pair_index(int k, int l) const; // position of (k, l), k < l

  void build_caches();
  void validate() const; // throws on inconsistent sizes/levels/caches
};

struct CremState {
  double mu = 0;
  std::vector<Eigen::VectorXd> a; // a[k] has length I_k
  Eigen::VectorXd tau;            // tau[0] = noise precision, tau[1..K] = effect precisions

  long dim(bool with_tau) const;
  Eigen::VectorXd to_vector(bool with_tau) const;
  static CremState from_vector(const Eigen::VectorXd& v, const CrossedDesign& d, bool with_tau,
                               const Eigen::VectorXd& tau_fixed);
  bool operator==(const CremState& o) const;
};

enum class SweepKind { collapsed, vanilla };
enum class TauMode { fixed, sample };
// shape of the tau_k draw: 'paper' uses (I_k - 1)/2 ((N - 1)/2 for tau0);
// 'conjugate' uses (I_k + 1)/2 ((N + 1)/2), which is what p(tau) ∝ tau^{-1/2}
// conjugacy gives. Scale is 2 / sum-of-squares in both.
enum class TauShape { paper, conjugate };

struct CremOpts {
  SweepKind kind = SweepKind::collapsed;
  TauMode tau_mode = TauMode::fixed;
  TauShape tau_shape = TauShape::paper;
};

// one full Gibbs iteration, collapsed (per factor: mu | a^{(-k)}, then a^{(k)},
// then tau_k; finally tau0) or vanilla (mu, then each a^{(k)}, then taus)
void crem_sweep(CremState& s, const CrossedDesign& d, const CremOpts& o, Rng& rng);

// scale parameter of the gamma draw for tau_j (shape/scale convention):
// j = 0 -> 2 / residual sum of squares, j >= 1 -> 2 / ||a^{(j)}||^2;
// throws "degenerate scale draw" when the sum of squares vanishes
double crem_tau_scale(const CremState& s, const CrossedDesign& d, int j);

enum class CoupleMode { contractive, maximal };
// coupled version of the same sweep: CRN per block in contractive mode;
// maximal reflection (equal conditional sds) or maximal rejection (unequal
// sds, and all tau draws) in maximal mode. Returns true when the states are
// identical afterwards.
bool crem_coupled_sweep(CremState& x, CremState& yst, const CrossedDesign& d, const CremOpts& o,
                        CoupleMode mode, Rng& rng);

// dense posterior of (mu, a) for fixed tau; dimension 1 + sum I_k capped at 5000
struct CremPosterior {
  Eigen::VectorXd mean; // [mu, a^{(1)}, ..., a^{(K)}]
  Eigen::MatrixXd cov;
};
CremPosterior exact_posterior(const CrossedDesign& d, const Eigen::VectorXd& tau);

// Gaussian analysis targets for the bound engine (fixed tau):
// collapsed chain observed on a = (a^{(1)}, ..., a^{(K)}) with mu marginalized
// out (blocks = factors, forward schedule matches the sweep); vanilla chain on
// (mu, a) with mu as the leading block.
GaussianTarget crem_bound_target_collapsed(const CrossedDesign& d, const Eigen::VectorXd& tau);
GaussianTarget crem_bound_target_vanilla(const CrossedDesign& d, const Eigen::VectorXd& tau);

// Regime 1: every cell of {1..I}^K observed once with probability 0.1.
// Regime 2: inclusion probability 10 / I^{K-1} (sparser for K >= 2 as I grows).
// Responses are generated from the model at mu = 0 with the given precisions.
CrossedDesign simulate_regime(int regime, int K, long I, const Eigen::VectorXd& tau, Rng& rng);

// CSV: header "y,f1,..,fK", 1-based integer level codes
CrossedDesign read_crem_csv(const std::string& path);
void write_crem_csv(const CrossedDesign& d, const std::string& path);

// runner-compatible kernel wrapper
struct CremKernel {
  const CrossedDesign* design = nullptr;
  CremOpts opts;

  using State = CremState;
  State single_step(const State& x, Rng& rng) const {
    State s = x;
    crem_sweep(s, *design, opts, rng);
    return s;
  }
  std::pair<State, State> contractive_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    crem_coupled_sweep(sx, sy, *design, opts, CoupleMode::contractive, rng);
    return {std::move(sx), std::move(sy)};
  }
  struct MaxOut {
    State x, y;
    bool met;
  };
  MaxOut maximal_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    bool met = crem_coupled_sweep(sx, sy, *design, opts, CoupleMode::maximal, rng);
    return {std::move(sx), std::move(sy), met};
  }
  double distance(const State& x, const State& y) const {
    const bool with_tau = opts.tau_mode == TauMode::sample;
    return (x.to_vector(with_tau) - y.to_vector(with_tau)).norm();
  }
  static bool equal(const State& x, const State& y) { return x == y; }
};

// default initial law: mu, a-components i.i.d. N(0, 1); sampled taus from the
// Gamma(2, 1/2) reference so every draw is strictly positive
CremState crem_init(const CrossedDesign& d, const Eigen::VectorXd& tau_fixed, TauMode mode,
                    Rng& rng);

} // namespace cgibbs
