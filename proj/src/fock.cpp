#include "cvknit/fock.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cvknit {

namespace {

Exec g_default_exec = Exec::Parallel;

// exp(A) for anti-Hermitian A, via the Hermitian eigendecomposition of
// H = -iA. Exactly unitary up to roundoff.
Eigen::MatrixXcd exp_antihermitian(const Eigen::MatrixXcd& a) {
    const Eigen::MatrixXcd h = cxd(0.0, -1.0) * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
        throw NumericError("eigendecomposition failed in matrix exponential");
    const Eigen::VectorXd lam = es.eigenvalues();
    Eigen::VectorXcd phases(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        phases[i] = std::polar(1.0, lam[i]);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd ladder_dense(int cutoff) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

int guard_cutoff(int cutoff, double param_mag) {
    return cutoff + static_cast<int>(std::ceil(8.0 * param_mag * param_mag)) + 16;
}

Eigen::MatrixXcd displacement_guarded(cxd alpha, int guard) {
    const Eigen::MatrixXcd a = ladder_dense(guard);
    return exp_antihermitian(alpha * a.adjoint() - std::conj(alpha) * a);
}

// Squeeze convention: S(zeta) = exp[(zeta*/2) a^2 - (zeta/2) a^dag^2], so that
// S(r)|0> with r > 0 squeezes the Q quadrature variance by e^{-2r}.
Eigen::MatrixXcd squeeze_guarded(cxd zeta, int guard) {
    const Eigen::MatrixXcd a = ladder_dense(guard);
    const Eigen::MatrixXcd a2 = a * a;
    return exp_antihermitian(0.5 * std::conj(zeta) * a2 - 0.5 * zeta * a2.adjoint());
}

// Unitarity defect of a cropped unitary, measured on the low-index block
// where truncation leakage must be negligible.
double low_block_defect(const Eigen::MatrixXcd& u) {
    const Eigen::Index d = u.rows();
    const Eigen::Index low = std::max<Eigen::Index>(1, d / 2);
    const Eigen::MatrixXcd g = u.adjoint() * u;
    double defect = 0.0;
    for (Eigen::Index j = 0; j < low; ++j)
        for (Eigen::Index k = 0; k < low; ++k) {
            const double target = (j == k) ? 1.0 : 0.0;
            defect = std::max(defect, std::abs(g(j, k) - target));
        }
    return defect;
}

void enumerate_block(int modes, int cutoff, int total, int mode, Eigen::Index prefix,
                     int remaining, std::vector<Eigen::Index>& out) {
    if (mode == modes - 1) {
        if (remaining < cutoff) out.push_back(prefix * cutoff + remaining);
        return;
    }
    const int hi = std::min(remaining, cutoff - 1);
    for (int n = 0; n <= hi; ++n)
        enumerate_block(modes, cutoff, total, mode + 1, prefix * cutoff + n, remaining - n, out);
}

std::vector<int> digits_of(Eigen::Index idx, int modes, int cutoff) {
    std::vector<int> d(modes);
    for (int m = modes - 1; m >= 0; --m) {
        d[m] = static_cast<int>(idx % cutoff);
        idx /= cutoff;
    }
    return d;
}

}  // namespace

Exec default_exec() { return g_default_exec; }
void set_default_exec(Exec e) { g_default_exec = e; }

double DensityMatrix::hermiticity_defect() const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (mat + mat.adjoint()));
    return es.eigenvalues().minCoeff();
}

// --- constructors -----------------------------------------------------------

FockVector fock_state(int n, int cutoff) {
    if (cutoff < 1) throw InputError("cutoff must be positive");
    if (n < 0 || n >= cutoff)
        throw InputError("fock_state: n = " + std::to_string(n) +
                         " outside basis of cutoff " + std::to_string(cutoff));
    FockVector v;
    v.amps = Eigen::VectorXcd::Zero(cutoff);
    v.amps[n] = 1.0;
    v.tail_mass = 0.0;
    return v;
}

FockVector coherent_state(cxd alpha, int cutoff, double tail_tol) {
    if (cutoff < 1) throw InputError("cutoff must be positive");
    FockVector v;
    v.amps = Eigen::VectorXcd::Zero(cutoff);
    // c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!), built iteratively.
    cxd c = std::exp(-0.5 * std::norm(alpha));
    v.amps[0] = c;
    for (int n = 1; n < cutoff; ++n) {
        c *= alpha / std::sqrt(static_cast<double>(n));
        v.amps[n] = c;
    }
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    if (v.tail_mass > tail_tol)
        throw TruncationError("coherent_state: tail mass " + std::to_string(v.tail_mass) +
                                  " above tolerance; suggested cutoff " +
                                  std::to_string(auto_cutoff(alpha, 0.0, tail_tol)),
                              auto_cutoff(alpha, 0.0, tail_tol));
    return v;
}

FockVector displaced_squeezed_state(cxd alpha, cxd zeta, int cutoff, double tail_tol) {
    if (cutoff < 1) throw InputError("cutoff must be positive");
    const double pmag = std::max(std::abs(alpha), std::abs(zeta));
    const int guard = guard_cutoff(cutoff, pmag);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(guard);
    psi[0] = 1.0;
    if (zeta != cxd(0.0)) psi = squeeze_guarded(zeta, guard) * psi;
    if (alpha != cxd(0.0)) psi = displacement_guarded(alpha, guard) * psi;
    FockVector v;
    v.amps = psi.head(cutoff);
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    if (v.tail_mass > tail_tol)
        throw TruncationError("displaced_squeezed_state: tail mass " +
                                  std::to_string(v.tail_mass) + " above tolerance",
                              auto_cutoff(alpha, zeta, tail_tol));
    return v;
}

double cat_norm_constant(cxd alpha, cxd beta, double theta) {
    const cxd coh = std::exp(std::conj(alpha) * beta - 0.5 * (std::norm(alpha) + std::norm(beta)));
    return 2.0 + 2.0 * (std::polar(1.0, theta) * coh).real();
}

FockVector cat_state(cxd alpha, cxd beta, double theta, int cutoff, double tail_tol) {
    const double norm_const = cat_norm_constant(alpha, beta, theta);
    if (norm_const < kDegeneracyFloor)
        throw DegeneracyError("cat_state: normalization constant " +
                              std::to_string(norm_const) + " below degeneracy floor");
    const FockVector a = coherent_state(alpha, cutoff, tail_tol);
    const FockVector b = coherent_state(beta, cutoff, tail_tol);
    FockVector v;
    v.amps = a.amps + std::polar(1.0, theta) * b.amps;
    const double truncated_norm = v.amps.norm();
    v.amps /= truncated_norm;
    v.tail_mass = std::max(0.0, 1.0 - truncated_norm * truncated_norm / norm_const);
    return v;
}

int cutoff_heuristic(cxd alpha, cxd zeta) {
    const double am = std::abs(alpha);
    const double zm = std::abs(zeta);
    const double base = am + 3.0 * zm * std::exp(zm);
    return static_cast<int>(std::ceil(base * base + 6.0 * (am + 1.0) + 10.0));
}

int auto_cutoff(cxd alpha, cxd zeta, double tail_tol) {
    int d = cutoff_heuristic(alpha, zeta);
    if (zeta == cxd(0.0)) {
        // Poisson tail, evaluated directly.
        const double lam = std::norm(alpha);
        auto tail_ok = [&](int cut) {
            double term = std::exp(-lam), cdf = term;
            for (int n = 1; n < cut; ++n) {
                term *= lam / n;
                cdf += term;
            }
            return 1.0 - cdf <= tail_tol;
        };
        while (!tail_ok(d)) d = d + d / 4 + 8;
        return d;
    }
    auto tail_ok = [&](int cut) {
        try {
            displaced_squeezed_state(alpha, zeta, cut, tail_tol);
            return true;
        } catch (const TruncationError&) {
            return false;
        }
    };
    while (!tail_ok(d)) d = d + d / 4 + 8;
    return d;
}

// --- operators ---------------------------------------------------------------

ModeMatrix ladder_matrix(int cutoff) {
    if (cutoff < 2) throw InputError("ladder_matrix: cutoff must be >= 2");
    return ModeMatrix{ladder_dense(cutoff), ModeMatrixTag::Ladder};
}

ModeMatrix number_matrix(int cutoff) {
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int k = 0; k < cutoff; ++k) n(k, k) = static_cast<double>(k);
    return ModeMatrix{std::move(n), ModeMatrixTag::Number};
}

ModeMatrix displacement_matrix(cxd alpha, int cutoff, double unitary_tol) {
    const int guard = guard_cutoff(cutoff, std::abs(alpha));
    Eigen::MatrixXcd u = displacement_guarded(alpha, guard).topLeftCorner(cutoff, cutoff);
    const double defect = low_block_defect(u);
    if (defect > unitary_tol)
        throw TruncationError("displacement_matrix: unitarity defect " +
                                  std::to_string(defect) + " on low block",
                              auto_cutoff(alpha, 0.0, unitary_tol));
    return ModeMatrix{std::move(u), ModeMatrixTag::Displacement};
}

ModeMatrix squeeze_matrix(cxd zeta, int cutoff, double unitary_tol) {
    const int guard = guard_cutoff(cutoff, std::abs(zeta));
    Eigen::MatrixXcd u = squeeze_guarded(zeta, guard).topLeftCorner(cutoff, cutoff);
    const double defect = low_block_defect(u);
    if (defect > unitary_tol)
        throw TruncationError("squeeze_matrix: unitarity defect " +
                                  std::to_string(defect) + " on low block",
                              auto_cutoff(0.0, zeta, unitary_tol));
    return ModeMatrix{std::move(u), ModeMatrixTag::Squeeze};
}

// --- multi-mode unitary -------------------------------------------------------

Eigen::Index MultiModeUnitary::dim() const {
    Eigen::Index d = 1;
    for (int m = 0; m < modes; ++m) d *= per_mode_cutoff;
    return d;
}

Eigen::VectorXcd MultiModeUnitary::apply(const Eigen::VectorXcd& v) const {
    if (v.size() != dim()) throw DimensionError("MultiModeUnitary::apply: dimension mismatch");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    for (const auto& blk : blocks) {
        const Eigen::Index n = static_cast<Eigen::Index>(blk.basis.size());
        Eigen::VectorXcd sub(n);
        for (Eigen::Index i = 0; i < n; ++i) sub[i] = v[blk.basis[i]];
        sub = blk.u * sub;
        for (Eigen::Index i = 0; i < n; ++i) out[blk.basis[i]] = sub[i];
    }
    return out;
}

Eigen::MatrixXcd MultiModeUnitary::conjugate(const Eigen::MatrixXcd& rho) const {
    if (rho.rows() != dim() || rho.cols() != dim())
        throw DimensionError("MultiModeUnitary::conjugate: dimension mismatch");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    for (const auto& bi : blocks) {
        const Eigen::Index ni = static_cast<Eigen::Index>(bi.basis.size());
        for (const auto& bj : blocks) {
            const Eigen::Index nj = static_cast<Eigen::Index>(bj.basis.size());
            Eigen::MatrixXcd sub(ni, nj);
            for (Eigen::Index i = 0; i < ni; ++i)
                for (Eigen::Index j = 0; j < nj; ++j) sub(i, j) = rho(bi.basis[i], bj.basis[j]);
            sub = bi.u * sub * bj.u.adjoint();
            for (Eigen::Index i = 0; i < ni; ++i)
                for (Eigen::Index j = 0; j < nj; ++j) out(bi.basis[i], bj.basis[j]) = sub(i, j);
        }
    }
    return out;
}

Eigen::MatrixXcd MultiModeUnitary::to_dense() const {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim(), dim());
    for (const auto& blk : blocks) {
        const Eigen::Index n = static_cast<Eigen::Index>(blk.basis.size());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) u(blk.basis[i], blk.basis[j]) = blk.u(i, j);
    }
    return u;
}

MultiModeUnitary interferometer_unitary(int modes, const InterferometerSpec& spec,
                                        int per_mode_cutoff) {
    if (modes < 1) throw InputError("interferometer_unitary: modes must be >= 1");
    if (per_mode_cutoff < 1) throw InputError("interferometer_unitary: cutoff must be >= 1");
    double dim = std::pow(static_cast<double>(per_mode_cutoff), modes);
    if (dim > (1 << 21))
        throw ResourceError("interferometer_unitary: total dimension exceeds budget");

    // k x k mode matrix U with F a^dag_n F^dag = sum_m U_{mn} a^dag_m.
    Eigen::MatrixXcd umode = Eigen::MatrixXcd::Identity(modes, modes);
    if (spec.kind == InterferometerSpec::Kind::BalancedPair) {
        const int i = spec.mode_a, j = spec.mode_b;
        if (i < 0 || j < 0 || i >= modes || j >= modes || i == j)
            throw InputError("interferometer_unitary: invalid balanced-pair modes");
        const double s = 1.0 / std::sqrt(2.0);
        umode(i, i) = s;
        umode(i, j) = -s;
        umode(j, i) = s;
        umode(j, j) = s;
    } else {
        const double s = 1.0 / std::sqrt(static_cast<double>(modes));
        for (int m = 0; m < modes; ++m)
            for (int n = 0; n < modes; ++n)
                umode(m, n) = s * std::polar(1.0, 2.0 * kPi * m * n / modes);
    }

    // Hermitian generator h with U = exp(i h) via the Schur form (U is
    // normal, so T is diagonal); phases principal-valued.
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(umode);
    if (schur.info() != Eigen::Success)
        throw NumericError("interferometer_unitary: Schur decomposition failed");
    Eigen::VectorXd phases(modes);
    for (int m = 0; m < modes; ++m)
        phases[m] = principal_angle(std::arg(schur.matrixT()(m, m)));
    const Eigen::MatrixXcd q = schur.matrixU();
    Eigen::MatrixXcd h = q * phases.asDiagonal().toDenseMatrix().cast<cxd>() * q.adjoint();
    h = 0.5 * (h + h.adjoint());

    MultiModeUnitary out;
    out.modes = modes;
    out.per_mode_cutoff = per_mode_cutoff;

    const int max_total = modes * (per_mode_cutoff - 1);
    for (int total = 0; total <= max_total; ++total) {
        MultiModeUnitary::Block blk;
        enumerate_block(modes, per_mode_cutoff, total, 0, 0, total, blk.basis);
        const Eigen::Index n = static_cast<Eigen::Index>(blk.basis.size());
        if (n == 0) continue;
        // Generator restricted to this sector: sum_{ij} h_ij a^dag_i a_j.
        Eigen::MatrixXcd hblk = Eigen::MatrixXcd::Zero(n, n);
        std::vector<std::vector<int>> digs(n);
        for (Eigen::Index r = 0; r < n; ++r)
            digs[r] = digits_of(blk.basis[r], modes, per_mode_cutoff);
        // Map flat index -> row within block for fast lookup.
        std::vector<Eigen::Index> row_of;
        row_of.assign(static_cast<std::size_t>(std::pow(per_mode_cutoff, modes)), -1);
        for (Eigen::Index r = 0; r < n; ++r) row_of[blk.basis[r]] = r;
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto& nd = digs[c];
            for (int j = 0; j < modes; ++j) {
                if (nd[j] == 0) continue;
                for (int i = 0; i < modes; ++i) {
                    if (h(i, j) == cxd(0.0)) continue;
                    if (i == j) {
                        hblk(c, c) += h(i, i) * static_cast<double>(nd[i]);
                        continue;
                    }
                    if (nd[i] + 1 >= per_mode_cutoff) continue;
                    Eigen::Index target = blk.basis[c];
                    // a^dag_i a_j moves one photon j -> i.
                    Eigen::Index stride_i = 1, stride_j = 1;
                    for (int m = modes - 1; m > i; --m) stride_i *= per_mode_cutoff;
                    for (int m = modes - 1; m > j; --m) stride_j *= per_mode_cutoff;
                    target += stride_i - stride_j;
                    const Eigen::Index r = row_of[target];
                    if (r < 0) continue;
                    hblk(r, c) += h(i, j) * std::sqrt(static_cast<double>((nd[i] + 1) * nd[j]));
                }
            }
        }
        blk.u = exp_antihermitian(cxd(0.0, 1.0) * hblk);
        out.blocks.push_back(std::move(blk));
    }
    return out;
}

// --- pairings ------------------------------------------------------------------

cxd overlap(const FockVector& u, const FockVector& v) {
    if (u.cutoff() != v.cutoff()) throw DimensionError("overlap: cutoff mismatch");
    return u.amps.dot(v.amps);  // Eigen dot conjugates the left argument
}

cxd overlap(const MultiModeVector& u, const MultiModeVector& v) {
    if (u.dim() != v.dim() || u.modes != v.modes)
        throw DimensionError("overlap: shape mismatch");
    return u.amps.dot(v.amps);
}

cxd expectation(const ModeMatrix& op, const DensityMatrix& rho) {
    if (op.mat.rows() != rho.dim()) throw DimensionError("expectation: dimension mismatch");
    return (op.mat * rho.mat).trace();
}

double trace_norm(const DensityMatrix& a, double herm_tol) {
    const double defect = a.hermiticity_defect();
    if (defect > herm_tol)
        throw NumericError("trace_norm: Hermiticity defect " + std::to_string(defect) +
                           " above tolerance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (a.mat + a.mat.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

DensityMatrix pure_density(const FockVector& psi) {
    DensityMatrix rho;
    rho.mat = psi.amps * psi.amps.adjoint();
    rho.modes = 1;
    rho.per_mode_cutoff = psi.cutoff();
    return rho;
}

DensityMatrix pure_density(const MultiModeVector& psi) {
    DensityMatrix rho;
    rho.mat = psi.amps * psi.amps.adjoint();
    rho.modes = psi.modes;
    rho.per_mode_cutoff = psi.per_mode_cutoff;
    return rho;
}

MultiModeVector tensor(const std::vector<FockVector>& parts) {
    if (parts.empty()) throw InputError("tensor: no factors");
    const int cutoff = parts.front().cutoff();
    MultiModeVector out;
    out.amps = Eigen::VectorXcd::Ones(1);
    double kept = 1.0;
    for (const auto& p : parts) {
        if (p.cutoff() != cutoff) throw DimensionError("tensor: inconsistent cutoffs");
        Eigen::VectorXcd next(out.amps.size() * cutoff);
        for (Eigen::Index i = 0; i < out.amps.size(); ++i)
            next.segment(i * cutoff, cutoff) = out.amps[i] * p.amps;
        out.amps.swap(next);
        kept *= 1.0 - p.tail_mass;
    }
    out.modes = static_cast<int>(parts.size());
    out.per_mode_cutoff = cutoff;
    out.tail_mass = std::max(0.0, 1.0 - kept);
    return out;
}

DensityMatrix tensor_product(const std::vector<DensityMatrix>& parts) {
    if (parts.empty()) throw InputError("tensor_product: no factors");
    const int cutoff = parts.front().per_mode_cutoff;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Ones(1, 1);
    int modes = 0;
    for (const auto& p : parts) {
        if (p.per_mode_cutoff != cutoff) throw DimensionError("tensor_product: inconsistent cutoffs");
        const Eigen::Index da = acc.rows(), db = p.dim();
        Eigen::MatrixXcd next(da * db, da * db);
        for (Eigen::Index i = 0; i < da; ++i)
            for (Eigen::Index j = 0; j < da; ++j)
                next.block(i * db, j * db, db, db) = acc(i, j) * p.mat;
        acc.swap(next);
        modes += p.modes;
    }
    DensityMatrix out;
    out.mat = std::move(acc);
    out.modes = modes;
    out.per_mode_cutoff = cutoff;
    return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
    if (keep.empty()) throw InputError("partial_trace: keep set is empty");
    for (int k : keep)
        if (k < 0 || k >= rho.modes) throw InputError("partial_trace: mode index out of range");
    const int d = rho.per_mode_cutoff;
    const int m = rho.modes;
    std::vector<bool> kept(m, false);
    for (int k : keep) kept[k] = true;
    const int mk = static_cast<int>(keep.size());

    Eigen::Index dim_keep = 1;
    for (int i = 0; i < mk; ++i) dim_keep *= d;
    DensityMatrix out;
    out.mat = Eigen::MatrixXcd::Zero(dim_keep, dim_keep);
    out.modes = mk;
    out.per_mode_cutoff = d;

    // Walk every (row, col) pair of the input; digits on traced modes must
    // match. Fine at desk scale.
    const Eigen::Index dim = rho.dim();
    std::vector<int> rd, cd;
    for (Eigen::Index r = 0; r < dim; ++r) {
        rd = digits_of(r, m, d);
        for (Eigen::Index c = 0; c < dim; ++c) {
            cd = digits_of(c, m, d);
            bool match = true;
            for (int mm = 0; mm < m && match; ++mm)
                if (!kept[mm] && rd[mm] != cd[mm]) match = false;
            if (!match) continue;
            Eigen::Index ro = 0, co = 0;
            // keep order follows the caller-provided index list
            for (int kk = 0; kk < mk; ++kk) {
                ro = ro * d + rd[keep[kk]];
                co = co * d + cd[keep[kk]];
            }
            out.mat(ro, co) += rho.mat(r, c);
        }
    }
    return out;
}

MultiModeVector two_mode_squeezed_state(double r, int per_mode_cutoff) {
    // Guard so every total-photon sector feeding the kept indices is complete.
    const int guard = 2 * per_mode_cutoff +
                      static_cast<int>(std::ceil(8.0 * r * r)) + 16;
    const FockVector sp = displaced_squeezed_state(0.0, r, guard, 1.0);
    const FockVector sm = displaced_squeezed_state(0.0, -r, guard, 1.0);
    MultiModeVector prod = tensor({sp, sm});
    const MultiModeUnitary ub = interferometer_unitary(
        2, InterferometerSpec{InterferometerSpec::Kind::BalancedPair, 0, 1}, guard);
    const Eigen::VectorXcd full = ub.apply(prod.amps);
    MultiModeVector out;
    out.modes = 2;
    out.per_mode_cutoff = per_mode_cutoff;
    out.amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(per_mode_cutoff) * per_mode_cutoff);
    for (int i = 0; i < per_mode_cutoff; ++i)
        for (int j = 0; j < per_mode_cutoff; ++j)
            out.amps[static_cast<Eigen::Index>(i) * per_mode_cutoff + j] =
                full[static_cast<Eigen::Index>(i) * guard + j];
    out.tail_mass = std::max(0.0, 1.0 - out.amps.squaredNorm());
    return out;
}

// --- Wigner --------------------------------------------------------------------

// Fock-basis kernel: with alpha = (q + ip)/sqrt(2), s = q^2 + p^2,
//   W(q,p) = (1/pi) e^{-s} [ sum_n (-1)^n rho_nn L_n(2s)
//            + 2 sum_{d>0} sum_n (-1)^n Re(rho_{n+d,n} (2 alpha)^d) t_{n,d} L_n^d(2s) ]
// with t_{n,d} = sqrt(n!/(n+d)!).
double wigner_at(const DensityMatrix& rho, double q, double p) {
    const Eigen::Index dim = rho.dim();
    const double s = q * q + p * p;
    const double x = 2.0 * s;
    const cxd two_alpha = cxd(q, p) * std::sqrt(2.0);

    double acc = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) {
        // diagonal d = 0 handled with the same loop, weight 1 instead of 2
        cxd pw = 1.0;
        double tfac = 1.0;
        if (d > 0) {
            for (Eigen::Index j = 1; j <= d; ++j) {
                pw *= two_alpha;
                tfac /= std::sqrt(static_cast<double>(j));
            }
        }
        // Laguerre recurrence L_n^{(d)}(x)
        double lprev = 0.0, lcur = 1.0;
        double diag_sum = 0.0;
        double sign = 1.0;
        double t = tfac;  // sqrt(n!/(n+d)!) at n = 0 equals 1/sqrt(d!)
        for (Eigen::Index n = 0; n + d < dim; ++n) {
            const cxd rho_el = rho.mat(n + d, n);
            const double re = (d == 0) ? rho_el.real() : 2.0 * (rho_el * pw).real();
            diag_sum += sign * re * t * lcur;
            // advance Laguerre: (n+1) L_{n+1} = (2n+1+d-x) L_n - (n+d) L_{n-1}
            const double lnext =
                ((2.0 * n + 1.0 + d - x) * lcur - (n + d) * lprev) / (n + 1.0);
            lprev = lcur;
            lcur = lnext;
            sign = -sign;
            t *= std::sqrt((n + 1.0) / (n + 1.0 + d));
        }
        acc += diag_sum;
    }
    return acc * std::exp(-s) / kPi;
}

double wigner_min_polar(const DensityMatrix& rho, double r_max, int n_r, int n_phi, Exec exec) {
    struct Partial {
        double min_val;
    };
    const std::size_t n_items = static_cast<std::size_t>(n_r) * n_phi;
    Partial init{wigner_at(rho, 0.0, 0.0)};  // origin always sampled
    auto per_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        Partial p{std::numeric_limits<double>::infinity()};
        for (std::size_t it = begin; it < end; ++it) {
            const int ir = static_cast<int>(it / n_phi);
            const int ip = static_cast<int>(it % n_phi);
            const double rr = r_max * (ir + 0.5) / n_r;
            const double phi = 2.0 * kPi * ip / n_phi;
            p.min_val = std::min(p.min_val, wigner_at(rho, rr * std::cos(phi), rr * std::sin(phi)));
        }
        return p;
    };
    auto merge = [](Partial a, Partial b) { return Partial{std::min(a.min_val, b.min_val)}; };
    Partial out = chunked_reduce(n_items, std::size_t{512}, exec,
                                 Partial{std::numeric_limits<double>::infinity()}, per_chunk,
                                 merge);
    return std::min(init.min_val, out.min_val);
}

double wigner_integral(const DensityMatrix& rho, double half_width, int points_per_axis, Exec exec) {
    const double h = 2.0 * half_width / points_per_axis;
    const std::size_t n_items = static_cast<std::size_t>(points_per_axis);
    auto per_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t iq = begin; iq < end; ++iq) {
            const double q = -half_width + h * (iq + 0.5);
            double row = 0.0;
            for (int ip = 0; ip < points_per_axis; ++ip) {
                const double p = -half_width + h * (ip + 0.5);
                row += wigner_at(rho, q, p);
            }
            sum += row;
        }
        return sum;
    };
    auto merge = [](double a, double b) { return a + b; };
    const double total = chunked_reduce(n_items, std::size_t{8}, exec, 0.0, per_chunk, merge);
    return total * h * h;
}

}  // namespace cvknit
