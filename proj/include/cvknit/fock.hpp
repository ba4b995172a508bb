#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cvknit/common.hpp"
#include "cvknit/parallel.hpp"

namespace cvknit {

// ---------------------------------------------------------------------------
// Truncated Fock-space kernel. Basis {|0>, ..., |D-1>} per mode; multi-mode
// indices are row-major with mode 0 as the most significant digit, i.e.
// idx = n_0 * D^(M-1) + ... + n_{M-1}.
// ---------------------------------------------------------------------------

struct FockVector {
    Eigen::VectorXcd amps;
    double tail_mass = 0.0;  // 1 - sum |a_n|^2 lost to truncation, when known

    int cutoff() const { return static_cast<int>(amps.size()); }
    double norm() const { return amps.norm(); }
};

struct MultiModeVector {
    Eigen::VectorXcd amps;
    int modes = 1;
    int per_mode_cutoff = 0;
    double tail_mass = 0.0;

    Eigen::Index dim() const { return amps.size(); }
};

struct DensityMatrix {
    Eigen::MatrixXcd mat;
    int modes = 1;
    int per_mode_cutoff = 0;

    Eigen::Index dim() const { return mat.rows(); }
    double trace_real() const { return mat.trace().real(); }
    // Hermiticity defect max|A - A^dag| and minimum eigenvalue checks.
    double hermiticity_defect() const;
    double min_eigenvalue() const;
};

enum class ModeMatrixTag { Ladder, Number, Displacement, Squeeze, Custom };

struct ModeMatrix {
    Eigen::MatrixXcd mat;
    ModeMatrixTag tag = ModeMatrixTag::Custom;

    int cutoff() const { return static_cast<int>(mat.rows()); }
};

// Photon-number-conserving multi-mode unitary, stored block-by-block in total
// photon number. Exactly unitary at any per-mode cutoff.
struct MultiModeUnitary {
    struct Block {
        std::vector<Eigen::Index> basis;  // flat indices of this total-N sector
        Eigen::MatrixXcd u;
    };
    int modes = 1;
    int per_mode_cutoff = 0;
    std::vector<Block> blocks;

    Eigen::Index dim() const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    // U rho U^dag computed block pair by block pair.
    Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& rho) const;
    Eigen::MatrixXcd to_dense() const;
};

struct InterferometerSpec {
    enum class Kind { BalancedPair, Fourier } kind = Kind::Fourier;
    int mode_a = 0;  // BalancedPair only
    int mode_b = 1;
};

// --- state constructors ----------------------------------------------------

FockVector fock_state(int n, int cutoff);
FockVector coherent_state(cxd alpha, int cutoff, double tail_tol = kTailTol);
FockVector displaced_squeezed_state(cxd alpha, cxd zeta, int cutoff,
                                    double tail_tol = kTailTol);
FockVector cat_state(cxd alpha, cxd beta, double theta, int cutoff,
                     double tail_tol = kTailTol);

// Analytic cat normalization N(alpha, beta, theta) = 2 + 2 Re(e^{i theta}
// <alpha|beta>') with <alpha|beta>' the coherent overlap.
double cat_norm_constant(cxd alpha, cxd beta, double theta);

// Spec'd cutoff floor and the auto-growing version that guarantees the tail
// tolerance (the floor alone under-resolves moderate squeezing).
int cutoff_heuristic(cxd alpha, cxd zeta);
int auto_cutoff(cxd alpha, cxd zeta, double tail_tol = kTailTol);

// --- operators ---------------------------------------------------------------

ModeMatrix ladder_matrix(int cutoff);                       // annihilation
ModeMatrix number_matrix(int cutoff);
ModeMatrix displacement_matrix(cxd alpha, int cutoff, double unitary_tol = kTailTol);
ModeMatrix squeeze_matrix(cxd zeta, int cutoff, double unitary_tol = kTailTol);

MultiModeUnitary interferometer_unitary(int modes, const InterferometerSpec& spec,
                                        int per_mode_cutoff);

// --- pairings, traces, tensors ----------------------------------------------

cxd overlap(const FockVector& u, const FockVector& v);
cxd overlap(const MultiModeVector& u, const MultiModeVector& v);
cxd expectation(const ModeMatrix& op, const DensityMatrix& rho);
double trace_norm(const DensityMatrix& a, double herm_tol = kHermTol);

DensityMatrix pure_density(const FockVector& psi);
DensityMatrix pure_density(const MultiModeVector& psi);

MultiModeVector tensor(const std::vector<FockVector>& parts);
DensityMatrix tensor_product(const std::vector<DensityMatrix>& parts);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Two-mode squeezed state U_B(|zeta=r> (x) |zeta=-r>) at per-mode cutoff D,
// built with an internal guard so the kept amplitudes are accurate.
MultiModeVector two_mode_squeezed_state(double r, int per_mode_cutoff);

// --- Wigner function ----------------------------------------------------------

double wigner_at(const DensityMatrix& rho, double q, double p);

// Minimum over a polar grid r <= r_max (n_r radii x n_phi angles, origin
// included) and a midpoint-rule normalization integral over [-L, L]^2.
double wigner_min_polar(const DensityMatrix& rho, double r_max, int n_r, int n_phi,
                        Exec exec = default_exec());
double wigner_integral(const DensityMatrix& rho, double half_width, int points_per_axis,
                       Exec exec = default_exec());

}  // namespace cvknit
