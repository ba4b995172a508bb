#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvknit/common.hpp"
#include "cvknit/fock.hpp"
#include "cvknit/gauss.hpp"
#include "cvknit/parallel.hpp"

namespace cvknit {

// ---------------------------------------------------------------------------
// StateSpec: symbolic description of a preparable state. Every variant
// materializes to a normalized DensityMatrix at a given per-mode cutoff.
// ---------------------------------------------------------------------------

struct StateSpec;

struct FockSpec {
    int n = 0;
};
struct CoherentSpec {
    cxd alpha{0.0, 0.0};
};
struct DisplacedSqueezedSpec {
    cxd alpha{0.0, 0.0};
    cxd zeta{0.0, 0.0};
};
struct CatSpec {
    cxd alpha{0.0, 0.0};
    cxd beta{0.0, 0.0};
    double theta = 0.0;
};
struct GaussianSuperpositionSpec {
    SuperpositionSpec spec;
};
// Phase-averaged coherent ring of radius sqrt(epsilon): the diagonal Poisson
// mixture. min_photon = 1 drops the vacuum term and renormalizes.
struct PoissonRingSpec {
    double epsilon = 0.0;
    int min_photon = 0;
};
struct ProductSpec {
    std::vector<StateSpec> factors;
};
// Explicit single-mode density matrix (carries photon-bunching outputs).
struct DenseSpec {
    Eigen::MatrixXcd mat;
};

struct StateSpec {
    std::variant<FockSpec, CoherentSpec, DisplacedSqueezedSpec, CatSpec,
                 GaussianSuperpositionSpec, PoissonRingSpec, ProductSpec, DenseSpec>
        v;
};

int modes_of(const StateSpec& spec);
int default_cutoff_of(const StateSpec& spec, double tail_tol = kTailTol);
DensityMatrix materialize(const StateSpec& spec, int per_mode_cutoff,
                          double tail_tol = kTailTol);
// Normalized state vector when the variant is pure; nullopt for mixtures.
std::optional<MultiModeVector> materialize_pure(const StateSpec& spec, int per_mode_cutoff,
                                                double tail_tol = kTailTol);

// ---------------------------------------------------------------------------
// Qpd: signed ensemble {(q_x, rho_x)} with overhead gamma_bar = sum |q_x|.
// ---------------------------------------------------------------------------

struct QpdTerm {
    double weight = 0.0;
    StateSpec state;
};

struct TargetDescriptor {
    std::string description;
    std::optional<StateSpec> reference;
};

struct Qpd {
    std::vector<QpdTerm> terms;
    double gamma_bar = 0.0;
    TargetDescriptor target;
    std::optional<double> epsilon_promise;
    int modes = 1;
    double pruned_weight = 0.0;  // |q| mass removed by the prune rule

    double recompute_gamma() const;
    double weight_sum() const;
};

// --- builders -----------------------------------------------------------------

// Theorem-4 style decomposition of a normalized superposition of Gaussian
// products; gamma_bar = (sum |c_x|)^2.
Qpd build_g2(const SuperpositionSpec& spec, double norm_tol = 1e-8);

struct C2GridConfig {
    double radial_step = 0.35;
    int angular_points = 0;   // 0 = auto from the radius
    double radius = 0.0;      // 0 = auto from the tail bound
    double tail_tol = 1e-6;   // neglected fraction of (1/pi) int |<alpha|psi>|
    double radius_cap = 12.0;
    int eval_cutoff = 0;      // cutoff for <alpha|psi>; 0 = target default
};

// Theorem-3 style decomposition over cat states by discretizing the double
// phase-space integral on a polar midpoint grid.
Qpd build_c2(const StateSpec& target, const C2GridConfig& grid = {},
             Exec exec = default_exec());

// Single-photon epsilon-QPD: Poisson ring minus weighted vacuum.
Qpd build_single_photon_eps(double eps);

// Photon bunching map B_k: Fourier interferometer, then vacuum post-selection
// on the k-1 auxiliary modes. Returns the unnormalized kept-mode state.
DensityMatrix photon_bunching_map(const DensityMatrix& rho_kmodes, int k);

double fock_k_epsilon_bound(int k, double delta);
double fock_k_success_lower_bound(int k, double delta);

struct FockKBuild {
    Qpd qpd;
    double success_weight = 0.0;  // Tr B_k(psi_delta^{(x)k})
    double epsilon_bound = 0.0;   // eps_k(delta)
    int intermediate_cutoff = 0;
};

// Approximate k-photon QPD via bunching of k single-photon epsilon-QPDs.
// per_mode_cutoff = 0 picks the documented default max(4, k+2).
FockKBuild build_fock_k(int k, double delta, int per_mode_cutoff = 0);

// Two-mode Bell-like cat QPD with overhead 3 / (1 + cos(theta) e^{-4|alpha|^2}).
Qpd build_bell_cat(cxd alpha, double theta);

double bell_cat_gamma(cxd alpha, double theta);

struct GkpParams {
    enum class Mode { General, RandomWalk } mode = Mode::RandomWalk;
    std::vector<double> coeffs;  // General mode; nonnegative
    int steps = 1;               // RandomWalk: L
    double r = 1.0;
    int mu = 0;                  // General mode peak parity
};

struct GkpBuild {
    Qpd qpd;
    double norm_constant = 0.0;   // exact N from pairwise overlaps
    double gamma_exact = 0.0;     // (sum c)^2 / N
    double gamma_approx = 0.0;    // RandomWalk: 4^L / binom(2L, L)
};

GkpBuild build_gkp(const GkpParams& params);

// --- reconstruction and validation ---------------------------------------------

DensityMatrix reconstruct(const Qpd& qpd, int per_mode_cutoff,
                          Exec exec = default_exec(), double tail_tol = kTailTol);

struct ValidationReport {
    double trace_distance = 0.0;  // || reconstruction - target ||_1
    double weight_sum = 0.0;
    double gamma_bar = 0.0;
    bool epsilon_promise_satisfied = true;
    double pruned_weight = 0.0;
    int cutoff = 0;
};

ValidationReport validate(const Qpd& qpd, const DensityMatrix& target, int per_mode_cutoff,
                          Exec exec = default_exec());

double binomial(int n, int k);

}  // namespace cvknit
