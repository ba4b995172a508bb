#include "cvknit/gauss.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace cvknit {

namespace {

// Bargmann form of |alpha, zeta>: c * exp(b a^dag + (A/2) a^dag^2)|0> with
//   A = -e^{i phi} tanh r   (phi = arg zeta, r = |zeta|)
//   b = alpha - A alpha*
//   c = e^{-|alpha|^2/2 + (A/2) alpha*^2} / sqrt(cosh r)
struct Bargmann {
    cxd a;
    cxd b;
    cxd c;
};

Bargmann bargmann_of(const GaussianPureSpec& g) {
    const double r = std::abs(g.zeta);
    const cxd phase = (r == 0.0) ? cxd(1.0, 0.0) : g.zeta / r;
    Bargmann bg;
    bg.a = -phase * std::tanh(r);
    bg.b = g.alpha - bg.a * std::conj(g.alpha);
    bg.c = std::exp(-0.5 * std::norm(g.alpha) + 0.5 * bg.a * std::conj(g.alpha) * std::conj(g.alpha)) /
           std::sqrt(std::cosh(r));
    return bg;
}

}  // namespace

int SuperpositionSpec::mode_count() const {
    if (terms.empty()) throw InputError("SuperpositionSpec: no terms");
    const int m = static_cast<int>(terms.front().modes.size());
    for (const auto& t : terms)
        if (static_cast<int>(t.modes.size()) != m)
            throw DimensionError("SuperpositionSpec: inconsistent mode counts");
    return m;
}

Eigen::MatrixXd symplectic_form(int modes) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
    for (int m = 0; m < modes; ++m) {
        omega(2 * m, 2 * m + 1) = 1.0;
        omega(2 * m + 1, 2 * m) = -1.0;
    }
    return omega;
}

double SymplecticMatrix::symplectic_defect() const {
    const Eigen::MatrixXd omega = symplectic_form(modes());
    return (m * omega * m.transpose() - omega).cwiseAbs().maxCoeff();
}

double CovarianceMatrix::symmetry_defect() const {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double CovarianceMatrix::uncertainty_defect() const {
    Eigen::MatrixXcd h = m.cast<cxd>() + cxd(0.0, 1.0) * symplectic_form(modes()).cast<cxd>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
    return es.eigenvalues().minCoeff();
}

cxd gaussian_overlap(const GaussianPureSpec& g1, const GaussianPureSpec& g2) {
    const Bargmann p = bargmann_of(g1);
    const Bargmann q = bargmann_of(g2);
    // <0| exp(b1* a + (A1*/2) a^2) exp(b2 a^dag + (A2/2) a^dag^2) |0>
    //   = (1 - A1* A2)^{-1/2} exp[(b1* b2 + (A2 b1*^2 + A1* b2^2)/2) / (1 - A1* A2)]
    const cxd a1c = std::conj(p.a);
    const cxd b1c = std::conj(p.b);
    const cxd denom = 1.0 - a1c * q.a;
    const cxd expo = (b1c * q.b + 0.5 * (q.a * b1c * b1c + a1c * q.b * q.b)) / denom;
    // |A| < 1 for both, so Re(denom) > 0 and the principal root is the
    // continuous branch.
    return std::conj(p.c) * q.c * std::exp(expo) / std::sqrt(denom);
}

cxd gaussian_overlap(const std::vector<GaussianPureSpec>& g1,
                     const std::vector<GaussianPureSpec>& g2) {
    if (g1.size() != g2.size()) throw DimensionError("gaussian_overlap: mode count mismatch");
    cxd out(1.0, 0.0);
    for (std::size_t m = 0; m < g1.size(); ++m) out *= gaussian_overlap(g1[m], g2[m]);
    return out;
}

double superposition_norm2(const SuperpositionSpec& spec) {
    spec.mode_count();
    cxd acc(0.0, 0.0);
    for (const auto& ti : spec.terms)
        for (const auto& tj : spec.terms)
            acc += std::conj(ti.coeff) * tj.coeff * gaussian_overlap(ti.modes, tj.modes);
    return acc.real();
}

SuperpositionSpec normalized(const SuperpositionSpec& spec) {
    const double n2 = superposition_norm2(spec);
    if (n2 < kDegeneracyFloor)
        throw DegeneracyError("SuperpositionSpec: norm below degeneracy floor");
    SuperpositionSpec out = spec;
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& t : out.terms) t.coeff *= scale;
    return out;
}

FockVector materialize_gaussian(const GaussianPureSpec& g, int cutoff, double tail_tol) {
    return displaced_squeezed_state(g.alpha, g.zeta, cutoff, tail_tol);
}

MultiModeVector materialize_superposition(const SuperpositionSpec& spec, int cutoff,
                                          double tail_tol) {
    const int modes = spec.mode_count();
    MultiModeVector acc;
    acc.modes = modes;
    acc.per_mode_cutoff = cutoff;
    Eigen::Index dim = 1;
    for (int m = 0; m < modes; ++m) dim *= cutoff;
    acc.amps = Eigen::VectorXcd::Zero(dim);
    for (const auto& t : spec.terms) {
        std::vector<FockVector> factors;
        factors.reserve(t.modes.size());
        for (const auto& g : t.modes)
            factors.push_back(materialize_gaussian(g, cutoff, tail_tol));
        acc.amps += t.coeff * tensor(factors).amps;
    }
    acc.tail_mass = std::max(0.0, 1.0 - acc.amps.squaredNorm());
    return acc;
}

CovarianceMatrix two_mode_squeezed_cov(double r) {
    CovarianceMatrix out;
    out.m = Eigen::MatrixXd::Identity(4, 4) * std::cosh(2.0 * r);
    const double sh = std::sinh(2.0 * r);
    out.m(0, 2) = -sh;
    out.m(2, 0) = -sh;
    out.m(1, 3) = sh;
    out.m(3, 1) = sh;
    return out;
}

SymplecticMatrix make_symplectic(const SymplecticBuild& build) {
    switch (build.kind) {
        case SymplecticBuild::Kind::BalancedPair: {
            const int m = build.modes;
            if (build.mode_a < 0 || build.mode_b < 0 || build.mode_a >= m ||
                build.mode_b >= m || build.mode_a == build.mode_b)
                throw InputError("make_symplectic: invalid balanced-pair modes");
            Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * m, 2 * m);
            const double c = 1.0 / std::sqrt(2.0);
            const int a = build.mode_a, b = build.mode_b;
            for (int k = 0; k < 2; ++k) {
                s(2 * a + k, 2 * a + k) = c;
                s(2 * a + k, 2 * b + k) = -c;
                s(2 * b + k, 2 * a + k) = c;
                s(2 * b + k, 2 * b + k) = c;
            }
            return SymplecticMatrix{std::move(s)};
        }
        case SymplecticBuild::Kind::SingleModeSqueeze: {
            const int m = build.modes;
            if (build.mode < 0 || build.mode >= m)
                throw InputError("make_symplectic: invalid squeeze mode");
            Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * m, 2 * m);
            s(2 * build.mode, 2 * build.mode) = std::exp(-build.r);
            s(2 * build.mode + 1, 2 * build.mode + 1) = std::exp(build.r);
            return SymplecticMatrix{std::move(s)};
        }
        case SymplecticBuild::Kind::DirectSum:
            return symplectic_direct_sum(build.parts);
    }
    throw InputError("make_symplectic: unknown kind");
}

SymplecticMatrix symplectic_direct_sum(const std::vector<SymplecticMatrix>& parts) {
    if (parts.empty()) throw InputError("symplectic_direct_sum: no parts");
    int dim = 0;
    for (const auto& p : parts) dim += static_cast<int>(p.m.rows());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
    int at = 0;
    for (const auto& p : parts) {
        const int d = static_cast<int>(p.m.rows());
        s.block(at, at, d, d) = p.m;
        at += d;
    }
    return SymplecticMatrix{std::move(s)};
}

CovarianceMatrix apply_symplectic(const SymplecticMatrix& s, const CovarianceMatrix& lambda) {
    if (s.m.rows() != lambda.m.rows())
        throw DimensionError("apply_symplectic: dimension mismatch");
    return CovarianceMatrix{s.m * lambda.m * s.m.transpose()};
}

CovarianceMatrix reduced_cov_after(const SymplecticMatrix& s, double r, int ma, int mb) {
    if (s.m.rows() != 2 * (ma + mb))
        throw DimensionError("reduced_cov_after: S dimension does not match Ma + Mb");
    const int da = 2 * ma, db = 2 * mb;
    const Eigen::MatrixXd s_ba = s.m.block(da, 0, db, da);
    const Eigen::MatrixXd s_bb = s.m.block(da, da, db, db);
    return CovarianceMatrix{std::cosh(2.0 * r) * s_ba * s_ba.transpose() +
                            s_bb * s_bb.transpose()};
}

double purity_from_cov(const CovarianceMatrix& lambda) {
    const double det = lambda.m.determinant();
    if (det <= 0.0) throw NumericError("purity_from_cov: non-positive determinant");
    return 1.0 / std::sqrt(det);
}

double sep_lb_from_cov(const CovarianceMatrix& lambda_a) {
    const double det = lambda_a.m.determinant();
    if (det <= 0.0) throw NumericError("sep_lb_from_cov: non-positive determinant");
    return 2.0 * std::sqrt(det) - 1.0;
}

Eigen::VectorXd schmidt_coeffs(const MultiModeVector& psi, int modes_a) {
    if (modes_a <= 0 || modes_a >= psi.modes)
        throw InputError("schmidt_coeffs: bipartition must split the modes");
    Eigen::Index rows = 1, cols = 1;
    for (int m = 0; m < modes_a; ++m) rows *= psi.per_mode_cutoff;
    for (int m = modes_a; m < psi.modes; ++m) cols *= psi.per_mode_cutoff;
    // mode 0 is the most significant digit, so the flat vector reshapes
    // row-major into (a-block rows) x (b-block cols)
    Eigen::MatrixXcd amp(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) amp(i, j) = psi.amps[i * cols + j];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(amp);
    Eigen::VectorXd s = svd.singularValues();
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    return s;
}

double sep_overhead_schmidt(const Eigen::VectorXd& s) {
    const double total = s.sum();
    return 2.0 * total * total - 1.0;
}

NogoReport nogo_scan(const SymplecticMatrix& s, const std::vector<double>& r_grid,
                     int ma, int mb, double threshold) {
    NogoReport rep;
    rep.threshold = threshold;
    rep.rows.reserve(r_grid.size());
    for (double r : r_grid)
        rep.rows.push_back({r, sep_lb_from_cov(reduced_cov_after(s, r, ma, mb))});
    if (!rep.rows.empty()) {
        double lo = rep.rows.front().bound, hi = rep.rows.front().bound;
        bool increasing = true;
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            lo = std::min(lo, rep.rows[i].bound);
            hi = std::max(hi, rep.rows[i].bound);
            if (i > 0 && rep.rows[i].bound <= rep.rows[i - 1].bound) increasing = false;
        }
        rep.r_independent = (hi - lo) <= 1e-10 * std::max(1.0, std::abs(hi));
        rep.strictly_increasing = increasing && !rep.r_independent;
        rep.exceeded_threshold = hi > threshold;
    }
    return rep;
}

}  // namespace cvknit
