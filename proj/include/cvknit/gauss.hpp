#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cvknit/common.hpp"
#include "cvknit/fock.hpp"

namespace cvknit {

// ---------------------------------------------------------------------------
// Exact Gaussian-state analytics. Conventions:
//   - covariance Lambda_ij = <{R_i - <R_i>, R_j - <R_j>}> (no 1/2), vacuum = I
//   - quadrature ordering (Q1, P1, Q2, P2, ...), Omega = direct sum [[0,1],[-1,0]]
//   - pure Gaussian state |alpha, zeta> = D(alpha) S(zeta) |0> with the
//     fock-core squeeze convention (S(r) squeezes Q-variance by e^{-2r})
// ---------------------------------------------------------------------------

struct GaussianPureSpec {
    cxd alpha{0.0, 0.0};
    cxd zeta{0.0, 0.0};
};

// One term of a superposition: coefficient times a product of per-mode pure
// Gaussian states. Single-mode superpositions have modes.size() == 1.
struct GaussTerm {
    cxd coeff{0.0, 0.0};
    std::vector<GaussianPureSpec> modes;
};

struct SuperpositionSpec {
    std::vector<GaussTerm> terms;

    int mode_count() const;
};

struct SymplecticMatrix {
    Eigen::MatrixXd m;

    int modes() const { return static_cast<int>(m.rows()) / 2; }
    // max |S Omega S^T - Omega|
    double symplectic_defect() const;
};

struct CovarianceMatrix {
    Eigen::MatrixXd m;

    int modes() const { return static_cast<int>(m.rows()) / 2; }
    double symmetry_defect() const;
    // min eigenvalue of Lambda + i Omega (PSD within tolerance for physical states)
    double uncertainty_defect() const;
};

Eigen::MatrixXd symplectic_form(int modes);

// <g1|g2> for displaced-squeezed states, closed form; phase matches the
// fock-core D(alpha)S(zeta)|0> numerics.
cxd gaussian_overlap(const GaussianPureSpec& g1, const GaussianPureSpec& g2);
cxd gaussian_overlap(const std::vector<GaussianPureSpec>& g1,
                     const std::vector<GaussianPureSpec>& g2);

// <psi|psi> of a superposition from pairwise overlaps.
double superposition_norm2(const SuperpositionSpec& spec);
SuperpositionSpec normalized(const SuperpositionSpec& spec);

// Materialization through fock-core (products handled mode by mode).
FockVector materialize_gaussian(const GaussianPureSpec& g, int cutoff,
                                double tail_tol = kTailTol);
MultiModeVector materialize_superposition(const SuperpositionSpec& spec, int cutoff,
                                          double tail_tol = kTailTol);

// --- covariance / symplectic algebra ---------------------------------------

CovarianceMatrix two_mode_squeezed_cov(double r);

struct SymplecticBuild {
    enum class Kind { BalancedPair, SingleModeSqueeze, DirectSum } kind;
    int modes = 2;          // BalancedPair: total modes; pair acts on (mode_a, mode_b)
    int mode_a = 0;
    int mode_b = 1;
    double r = 0.0;         // SingleModeSqueeze
    int mode = 0;
    std::vector<SymplecticMatrix> parts;  // DirectSum
};

SymplecticMatrix make_symplectic(const SymplecticBuild& build);
SymplecticMatrix symplectic_direct_sum(const std::vector<SymplecticMatrix>& parts);

CovarianceMatrix apply_symplectic(const SymplecticMatrix& s, const CovarianceMatrix& lambda);

// Reduced covariance of the Mb output modes after feeding Ma thermal modes
// (cosh 2r * I) and Mb vacuum modes through U_S: closed block formula
// cosh(2r) S_ba S_ba^T + S_bb S_bb^T.
CovarianceMatrix reduced_cov_after(const SymplecticMatrix& s, double r, int ma, int mb);

double purity_from_cov(const CovarianceMatrix& lambda);
double sep_lb_from_cov(const CovarianceMatrix& lambda_a);

// --- Schmidt machinery -------------------------------------------------------

// Singular values of the amplitude tensor reshaped across the bipartition
// (first modes_a modes | rest), sorted descending.
Eigen::VectorXd schmidt_coeffs(const MultiModeVector& psi, int modes_a);
double sep_overhead_schmidt(const Eigen::VectorXd& s);

// --- no-go scan ----------------------------------------------------------------

struct NogoRow {
    double r;
    double bound;
};

struct NogoReport {
    std::vector<NogoRow> rows;
    bool r_independent = false;      // local S: constant bound
    bool strictly_increasing = false;
    bool exceeded_threshold = false; // bound crossed the divergence threshold
    double threshold = 1e3;
};

NogoReport nogo_scan(const SymplecticMatrix& s, const std::vector<double>& r_grid,
                     int ma, int mb, double threshold = 1e3);

}  // namespace cvknit
