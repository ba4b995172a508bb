#include "cvknit/qpd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cvknit {

namespace {
FockVector materialize_pure_single(const StateSpec& spec, int cutoff, double tail_tol);
}  // namespace

std::optional<MultiModeVector> materialize_pure(const StateSpec& spec, int cutoff,
                                                double tail_tol) {
    if (std::holds_alternative<GaussianSuperpositionSpec>(spec.v)) {
        const auto& gs = std::get<GaussianSuperpositionSpec>(spec.v);
        MultiModeVector v = materialize_superposition(gs.spec, cutoff, tail_tol);
        const double n = v.amps.norm();
        if (n < kDegeneracyFloor)
            throw DegeneracyError("materialize: superposition norm below floor");
        v.amps /= n;
        return v;
    }
    if (std::holds_alternative<ProductSpec>(spec.v)) {
        const auto& pr = std::get<ProductSpec>(spec.v);
        // product of pure factors is pure; otherwise fall back to density path
        std::vector<FockVector> parts;
        for (const auto& f : pr.factors) {
            if (std::holds_alternative<PoissonRingSpec>(f.v) ||
                std::holds_alternative<DenseSpec>(f.v) ||
                std::holds_alternative<ProductSpec>(f.v) || modes_of(f) != 1)
                return std::nullopt;
            parts.push_back(materialize_pure_single(f, cutoff, tail_tol));
        }
        MultiModeVector v = tensor(parts);
        v.amps /= v.amps.norm();
        return v;
    }
    if (std::holds_alternative<PoissonRingSpec>(spec.v) ||
        std::holds_alternative<DenseSpec>(spec.v))
        return std::nullopt;
    FockVector f = materialize_pure_single(spec, cutoff, tail_tol);
    MultiModeVector v;
    v.amps = f.amps / f.amps.norm();
    v.modes = 1;
    v.per_mode_cutoff = cutoff;
    v.tail_mass = f.tail_mass;
    return v;
}

namespace {

FockVector materialize_pure_single(const StateSpec& spec, int cutoff, double tail_tol) {
    if (std::holds_alternative<FockSpec>(spec.v))
        return fock_state(std::get<FockSpec>(spec.v).n, cutoff);
    if (std::holds_alternative<CoherentSpec>(spec.v))
        return coherent_state(std::get<CoherentSpec>(spec.v).alpha, cutoff, tail_tol);
    if (std::holds_alternative<DisplacedSqueezedSpec>(spec.v)) {
        const auto& ds = std::get<DisplacedSqueezedSpec>(spec.v);
        return displaced_squeezed_state(ds.alpha, ds.zeta, cutoff, tail_tol);
    }
    if (std::holds_alternative<CatSpec>(spec.v)) {
        const auto& c = std::get<CatSpec>(spec.v);
        return cat_state(c.alpha, c.beta, c.theta, cutoff, tail_tol);
    }
    if (std::holds_alternative<GaussianSuperpositionSpec>(spec.v)) {
        const auto& gs = std::get<GaussianSuperpositionSpec>(spec.v);
        if (gs.spec.mode_count() != 1)
            throw DimensionError("materialize: multi-mode superposition is not single-mode");
        MultiModeVector v = materialize_superposition(gs.spec, cutoff, tail_tol);
        FockVector f;
        f.amps = v.amps;
        f.tail_mass = v.tail_mass;
        return f;
    }
    throw InputError("materialize: variant has no single-mode pure form");
}

Eigen::MatrixXcd poisson_ring_matrix(const PoissonRingSpec& ring, int cutoff) {
    if (ring.epsilon <= 0.0) throw InputError("PoissonRing: epsilon must be > 0");
    if (ring.min_photon != 0 && ring.min_photon != 1)
        throw InputError("PoissonRing: min_photon must be 0 or 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(cutoff);
    double term = std::exp(-ring.epsilon);
    for (int n = 0; n < cutoff; ++n) {
        if (n >= ring.min_photon) diag[n] = term;
        term *= ring.epsilon / (n + 1.0);
    }
    const double total = diag.sum();
    if (total < kDegeneracyFloor) throw NumericError("PoissonRing: vanishing support");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) m(n, n) = diag[n] / total;
    return m;
}

int fock_k_cutoff(int k, int requested) {
    const int floor_cut = std::max(4, k + 2);
    return requested <= 0 ? floor_cut : std::max(requested, floor_cut);
}

}  // namespace

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (int j = 1; j <= k; ++j) out *= static_cast<double>(n - k + j) / j;
    return out;
}

int modes_of(const StateSpec& spec) {
    if (std::holds_alternative<GaussianSuperpositionSpec>(spec.v))
        return std::get<GaussianSuperpositionSpec>(spec.v).spec.mode_count();
    if (std::holds_alternative<ProductSpec>(spec.v)) {
        int m = 0;
        for (const auto& f : std::get<ProductSpec>(spec.v).factors) m += modes_of(f);
        if (m == 0) throw InputError("Product: no factors");
        return m;
    }
    return 1;
}

int default_cutoff_of(const StateSpec& spec, double tail_tol) {
    struct Visitor {
        double tol;
        int operator()(const FockSpec& s) const { return s.n + 2; }
        int operator()(const CoherentSpec& s) const { return auto_cutoff(s.alpha, 0.0, tol); }
        int operator()(const DisplacedSqueezedSpec& s) const {
            return auto_cutoff(s.alpha, s.zeta, tol);
        }
        int operator()(const CatSpec& s) const {
            return std::max(auto_cutoff(s.alpha, 0.0, tol), auto_cutoff(s.beta, 0.0, tol));
        }
        int operator()(const GaussianSuperpositionSpec& s) const {
            int d = 2;
            for (const auto& t : s.spec.terms)
                for (const auto& g : t.modes)
                    d = std::max(d, auto_cutoff(g.alpha, g.zeta, tol));
            return d;
        }
        int operator()(const PoissonRingSpec& s) const {
            double term = std::exp(-s.epsilon), cdf = term;
            int n = 0;
            while (1.0 - cdf > tol && n < 4096) {
                ++n;
                term *= s.epsilon / n;
                cdf += term;
            }
            return std::max(4, n + 2);
        }
        int operator()(const ProductSpec& s) const {
            int d = 2;
            for (const auto& f : s.factors) d = std::max(d, default_cutoff_of(f, tol));
            return d;
        }
        int operator()(const DenseSpec& s) const { return static_cast<int>(s.mat.rows()); }
    };
    return std::visit(Visitor{tail_tol}, spec.v);
}

DensityMatrix materialize(const StateSpec& spec, int per_mode_cutoff, double tail_tol) {
    if (per_mode_cutoff < 1) throw InputError("materialize: cutoff must be positive");
    if (auto pure = materialize_pure(spec, per_mode_cutoff, tail_tol))
        return pure_density(*pure);
    if (std::holds_alternative<PoissonRingSpec>(spec.v)) {
        DensityMatrix rho;
        rho.mat = poisson_ring_matrix(std::get<PoissonRingSpec>(spec.v), per_mode_cutoff);
        rho.modes = 1;
        rho.per_mode_cutoff = per_mode_cutoff;
        return rho;
    }
    if (std::holds_alternative<DenseSpec>(spec.v)) {
        const auto& d = std::get<DenseSpec>(spec.v);
        const Eigen::Index dim = d.mat.rows();
        DensityMatrix rho;
        rho.modes = 1;
        rho.per_mode_cutoff = per_mode_cutoff;
        if (per_mode_cutoff == dim) {
            rho.mat = d.mat;
        } else if (per_mode_cutoff > dim) {
            rho.mat = Eigen::MatrixXcd::Zero(per_mode_cutoff, per_mode_cutoff);
            rho.mat.topLeftCorner(dim, dim) = d.mat;
        } else {
            throw TruncationError("materialize: dense state cannot be cropped", static_cast<int>(dim));
        }
        return rho;
    }
    if (std::holds_alternative<ProductSpec>(spec.v)) {
        std::vector<DensityMatrix> parts;
        for (const auto& f : std::get<ProductSpec>(spec.v).factors)
            parts.push_back(materialize(f, per_mode_cutoff, tail_tol));
        return tensor_product(parts);
    }
    throw InputError("materialize: unhandled variant");
}

double Qpd::recompute_gamma() const {
    double g = 0.0;
    for (const auto& t : terms) g += std::abs(t.weight);
    return g;
}

double Qpd::weight_sum() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.weight;
    return s;
}

// --- build_g2 -------------------------------------------------------------------

Qpd build_g2(const SuperpositionSpec& spec, double norm_tol) {
    const int modes = spec.mode_count();
    const double n2 = superposition_norm2(spec);
    if (std::abs(n2 - 1.0) > norm_tol)
        throw InputError("build_g2: superposition is not normalized (|<psi|psi>| = " +
                         std::to_string(n2) + ")");

    const std::size_t n = spec.terms.size();
    Qpd qpd;
    qpd.modes = modes;
    qpd.target.description = "g2 superposition (" + std::to_string(n) + " terms)";
    qpd.target.reference = StateSpec{GaussianSuperpositionSpec{spec}};

    auto gauss_state_spec = [modes](const std::vector<GaussianPureSpec>& g) {
        if (modes == 1)
            return StateSpec{DisplacedSqueezedSpec{g[0].alpha, g[0].zeta}};
        ProductSpec pr;
        for (const auto& gm : g)
            pr.factors.push_back(StateSpec{DisplacedSqueezedSpec{gm.alpha, gm.zeta}});
        return StateSpec{std::move(pr)};
    };

    double gamma_ref = 0.0;
    for (const auto& t : spec.terms) gamma_ref += std::abs(t.coeff);
    gamma_ref *= gamma_ref;

    for (std::size_t x = 0; x < n; ++x) {
        const double w = std::norm(spec.terms[x].coeff);
        if (w == 0.0) continue;
        qpd.terms.push_back({w, gauss_state_spec(spec.terms[x].modes)});
    }
    for (std::size_t x = 1; x < n; ++x) {
        for (std::size_t xp = 0; xp < x; ++xp) {
            const cxd cc = spec.terms[x].coeff * std::conj(spec.terms[xp].coeff);
            const double mag = std::abs(cc);
            if (mag == 0.0) continue;
            // Branch phase is the conjugate of arg(c_x c_x'^*) so that
            // N+ P+ - N- P- reproduces c_x c_x'^* |g_x><g_x'| + h.c. exactly.
            const cxd eta = std::conj(cc) / mag;
            const cxd ov = gaussian_overlap(spec.terms[x].modes, spec.terms[xp].modes);
            const double np = 2.0 + 2.0 * (eta * ov).real();
            const double nm = 2.0 - 2.0 * (eta * ov).real();
            for (int sign = 0; sign < 2; ++sign) {
                const double nconst = sign == 0 ? np : nm;
                const double weight = (sign == 0 ? 1.0 : -1.0) * mag * nconst / 2.0;
                if (nconst < kDegeneracyFloor) {
                    if (std::abs(weight) < kPruneRel * gamma_ref) {
                        qpd.pruned_weight += std::abs(weight);
                        continue;
                    }
                    throw DegeneracyError("build_g2: degenerate branch normalization");
                }
                SuperpositionSpec branch;
                const double scale = 1.0 / std::sqrt(nconst);
                branch.terms.push_back({scale, spec.terms[x].modes});
                branch.terms.push_back({(sign == 0 ? eta : -eta) * scale, spec.terms[xp].modes});
                qpd.terms.push_back({weight, StateSpec{GaussianSuperpositionSpec{std::move(branch)}}});
            }
        }
    }
    qpd.gamma_bar = qpd.recompute_gamma();
    return qpd;
}

// --- build_c2 -------------------------------------------------------------------

namespace {

struct C2Grid {
    std::vector<cxd> points;     // alpha values
    std::vector<double> weights; // rho * drho * dphi measure per point
    double radius = 0.0;
    int n_radial = 0;
    int n_angular = 0;
};

}  // namespace

Qpd build_c2(const StateSpec& target, const C2GridConfig& grid, Exec exec) {
    if (modes_of(target) != 1) throw InputError("build_c2: single-mode targets only");
    const int dpsi =
        grid.eval_cutoff > 0 ? grid.eval_cutoff : default_cutoff_of(target, kTailTol);
    auto pure = materialize_pure(target, dpsi, 1.0);
    if (!pure) throw InputError("build_c2: target must be a pure state");
    const Eigen::VectorXcd psi = pure->amps;

    // <alpha|psi> through the target's Fock support.
    auto f_of = [&](cxd alpha) {
        cxd c = std::exp(-0.5 * std::norm(alpha));
        cxd acc = std::conj(c) * psi[0];
        for (int nn = 1; nn < psi.size(); ++nn) {
            c *= alpha / std::sqrt(static_cast<double>(nn));
            acc += std::conj(c) * psi[nn];
        }
        return acc;
    };

    const double dr = grid.radial_step;
    // Radius from the tail of (1/pi) int |<alpha|psi>| d^2alpha, probed ring
    // by ring on the midpoint grid itself.
    const int probe_phi = 32;
    double radius = grid.radius;
    if (radius <= 0.0) {
        double acc = 0.0;
        int quiet = 0;
        int ir = 0;
        for (; ir * dr < grid.radius_cap; ++ir) {
            const double rho = dr * (ir + 0.5);
            double ring = 0.0;
            for (int ip = 0; ip < probe_phi; ++ip) {
                const double phi = 2.0 * kPi * ip / probe_phi;
                ring += std::abs(f_of(std::polar(rho, phi)));
            }
            ring *= rho * dr * (2.0 * kPi / probe_phi) / kPi;
            acc += ring;
            if (acc > 0.0 && ring < grid.tail_tol * acc)
                ++quiet;
            else
                quiet = 0;
            if (quiet >= 3) break;
        }
        radius = dr * (ir + 1);
        if (radius >= grid.radius_cap)
            throw TruncationError("build_c2: integrand tail not below tolerance within radius cap",
                                  0);
    }

    C2Grid g;
    g.radius = radius;
    g.n_radial = static_cast<int>(std::ceil(radius / dr));
    g.n_angular =
        grid.angular_points > 0
            ? grid.angular_points
            : std::max(32, static_cast<int>(
                               std::ceil(2.0 * kPi * radius / (1.5 * dr) / 8.0)) *
                               8);
    for (int ir = 0; ir < g.n_radial; ++ir) {
        const double rho = dr * (ir + 0.5);
        for (int ip = 0; ip < g.n_angular; ++ip) {
            const double phi = 2.0 * kPi * ip / g.n_angular;
            g.points.push_back(std::polar(rho, phi));
            g.weights.push_back(rho * dr * (2.0 * kPi / g.n_angular));
        }
    }

    const std::size_t npts = g.points.size();
    std::vector<cxd> f(npts);
    parallel_for(npts, exec, [&](std::size_t i) { f[i] = f_of(g.points[i]); });

    double gamma_integral = 0.0;  // (1/pi) sum w |f|
    for (std::size_t i = 0; i < npts; ++i) gamma_integral += g.weights[i] * std::abs(f[i]) / kPi;
    const double gamma_ref = gamma_integral * gamma_integral;

    Qpd qpd;
    qpd.modes = 1;
    qpd.target.description = "c2 cat decomposition";
    qpd.target.reference = target;
    qpd.terms.reserve(npts * (npts + 1));

    const double prune = kPruneRel * std::max(gamma_ref, 1e-300);
    for (std::size_t i = 0; i < npts; ++i) {
        const double mfi = std::abs(f[i]);
        if (mfi == 0.0) continue;
        for (std::size_t j = i; j < npts; ++j) {
            const cxd ff = f[i] * std::conj(f[j]);
            const double mag = std::abs(ff);
            if (mag == 0.0) continue;
            // ordered pairs (i,j) and (j,i) give the same projectors; merge.
            const double measure = (i == j ? 1.0 : 2.0) * g.weights[i] * g.weights[j] /
                                   (4.0 * kPi * kPi) * mag;
            const double phi = -std::arg(ff);  // conjugated branch phase
            const double np = cat_norm_constant(g.points[i], g.points[j], phi);
            const double nm = cat_norm_constant(g.points[i], g.points[j], phi + kPi);
            const double wp = measure * np;
            const double wm = -measure * nm;
            if (std::abs(wp) >= prune) {
                if (np < kDegeneracyFloor)
                    qpd.pruned_weight += std::abs(wp);
                else
                    qpd.terms.push_back({wp, StateSpec{CatSpec{g.points[i], g.points[j], phi}}});
            } else {
                qpd.pruned_weight += std::abs(wp);
            }
            if (std::abs(wm) >= prune) {
                if (nm < kDegeneracyFloor)
                    qpd.pruned_weight += std::abs(wm);
                else
                    qpd.terms.push_back(
                        {wm, StateSpec{CatSpec{g.points[i], g.points[j],
                                               principal_angle(phi + kPi)}}});
            } else {
                qpd.pruned_weight += std::abs(wm);
            }
        }
    }
    qpd.gamma_bar = qpd.recompute_gamma();
    qpd.target.description += " (radius " + std::to_string(g.radius) + ", " +
                              std::to_string(g.n_radial) + "x" + std::to_string(g.n_angular) +
                              " grid)";
    return qpd;
}

// --- single photon -----------------------------------------------------------

Qpd build_single_photon_eps(double eps) {
    if (eps <= 0.0) throw InputError("build_single_photon_eps: eps must be > 0");
    const double em1 = std::expm1(eps);        // e^eps - 1
    const double one_minus = -std::expm1(-eps);  // 1 - e^-eps
    Qpd qpd;
    qpd.modes = 1;
    qpd.target.description = "single-photon eps-QPD (eps = " + std::to_string(eps) + ")";
    qpd.target.reference = StateSpec{FockSpec{1}};
    qpd.terms.push_back({1.0 / one_minus, StateSpec{PoissonRingSpec{eps, 0}}});
    qpd.terms.push_back({-std::exp(-eps) / one_minus, StateSpec{FockSpec{0}}});
    qpd.gamma_bar = qpd.recompute_gamma();
    qpd.epsilon_promise = 2.0 * (em1 - eps) / em1;
    return qpd;
}

// --- photon bunching ----------------------------------------------------------

DensityMatrix photon_bunching_map(const DensityMatrix& rho_kmodes, int k) {
    if (rho_kmodes.modes != k) throw DimensionError("photon_bunching_map: mode count mismatch");
    const int d = rho_kmodes.per_mode_cutoff;
    if (k == 1) return rho_kmodes;
    const MultiModeUnitary f = interferometer_unitary(
        k, InterferometerSpec{InterferometerSpec::Kind::Fourier, 0, 1}, d);
    const Eigen::MatrixXcd rotated = f.conjugate(rho_kmodes.mat);
    Eigen::Index aux_stride = 1;
    for (int m = 1; m < k; ++m) aux_stride *= d;
    DensityMatrix out;
    out.modes = 1;
    out.per_mode_cutoff = d;
    out.mat = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m)
            out.mat(n, m) = rotated(static_cast<Eigen::Index>(n) * aux_stride,
                                    static_cast<Eigen::Index>(m) * aux_stride);
    return out;
}

double fock_k_epsilon_bound(int k, double delta) {
    double kfact = 1.0;
    for (int j = 2; j <= k; ++j) kfact *= j;
    const double num = 3.0 * std::pow(k * (-std::expm1(-delta)), k);
    const double den = 2.0 * kfact * std::pow(delta, k) * std::exp(-k * delta);
    return num / den * k * delta;
}

double fock_k_success_lower_bound(int k, double delta) {
    double kfact = 1.0;
    for (int j = 2; j <= k; ++j) kfact *= j;
    return std::pow(delta, k) * std::exp(-k * delta) /
           std::pow(-std::expm1(-delta), k) * kfact / std::pow(static_cast<double>(k), k);
}

FockKBuild build_fock_k(int k, double delta, int per_mode_cutoff) {
    if (k < 1) throw InputError("build_fock_k: k must be >= 1");
    if (delta <= 0.0) throw InputError("build_fock_k: delta must be > 0");
    const double eps_bound = fock_k_epsilon_bound(k, delta);
    if (eps_bound >= 1.0)
        throw NumericError("build_fock_k: error bound eps_k(delta) = " +
                           std::to_string(eps_bound) + " >= 1; decrease delta");

    FockKBuild out;
    out.epsilon_bound = eps_bound;
    if (k == 1) {
        out.qpd = build_single_photon_eps(delta);
        out.success_weight = 1.0;
        out.intermediate_cutoff = fock_k_cutoff(k, per_mode_cutoff);
        return out;
    }

    const int d = fock_k_cutoff(k, per_mode_cutoff);
    out.intermediate_cutoff = d;
    const double pos = 1.0 / -std::expm1(-delta);
    const double neg = -std::exp(-delta) * pos;

    const DensityMatrix ring = materialize(StateSpec{PoissonRingSpec{delta, 0}}, d, 1.0);
    const DensityMatrix vac = materialize(StateSpec{FockSpec{0}}, d, 1.0);

    struct Pushed {
        double weight;
        double trace;
        Eigen::MatrixXcd state;  // normalized kept-mode state
    };
    std::vector<Pushed> pushed;
    const int patterns = 1 << k;
    for (int mask = 0; mask < patterns; ++mask) {
        double w = 1.0;
        std::vector<DensityMatrix> factors;
        for (int m = 0; m < k; ++m) {
            const bool use_ring = (mask >> m) & 1;
            w *= use_ring ? pos : neg;
            factors.push_back(use_ring ? ring : vac);
        }
        DensityMatrix prod = tensor_product(factors);
        DensityMatrix kept = photon_bunching_map(prod, k);
        const double t = kept.trace_real();
        if (t < 1e-300) continue;
        pushed.push_back({w, t, kept.mat / t});
    }
    double success = 0.0;
    for (const auto& p : pushed) success += p.weight * p.trace;
    out.success_weight = success;
    if (std::abs(success) < kDegeneracyFloor)
        throw NumericError("build_fock_k: vanishing success weight");

    Qpd qpd;
    qpd.modes = 1;
    qpd.target.description = "fock-k bunching QPD (k = " + std::to_string(k) +
                             ", delta = " + std::to_string(delta) + ")";
    qpd.target.reference = StateSpec{FockSpec{k}};
    for (const auto& p : pushed)
        qpd.terms.push_back({p.weight * p.trace / success, StateSpec{DenseSpec{p.state}}});
    qpd.gamma_bar = qpd.recompute_gamma();
    qpd.epsilon_promise = eps_bound;
    out.qpd = std::move(qpd);
    return out;
}

// --- bell cat -------------------------------------------------------------------

double bell_cat_gamma(cxd alpha, double theta) {
    return 3.0 / (1.0 + std::cos(theta) * std::exp(-4.0 * std::norm(alpha)));
}

Qpd build_bell_cat(cxd alpha, double theta) {
    const double x = std::cos(theta) * std::exp(-4.0 * std::norm(alpha));
    const double z = 2.0 * (1.0 + x);
    if (z < kDegeneracyFloor)
        throw DegeneracyError("build_bell_cat: degenerate Bell-cat normalization");
    double nconst[4];
    for (int n = 0; n < 4; ++n) {
        nconst[n] = 2.0 + 2.0 * std::cos((theta + n * kPi) / 2.0) * std::exp(-2.0 * std::norm(alpha));
        if (nconst[n] < kDegeneracyFloor)
            throw DegeneracyError("build_bell_cat: degenerate cat branch n = " + std::to_string(n));
    }
    auto cat_n = [&](int n) {
        return StateSpec{CatSpec{alpha, -alpha, principal_angle((theta + n * kPi) / 2.0)}};
    };
    auto coh2 = [&](cxd a) {
        ProductSpec pr;
        pr.factors.push_back(StateSpec{CoherentSpec{a}});
        pr.factors.push_back(StateSpec{CoherentSpec{a}});
        return StateSpec{std::move(pr)};
    };
    auto cat_pair = [&](int n, int m) {
        ProductSpec pr;
        pr.factors.push_back(cat_n(n));
        pr.factors.push_back(cat_n(m));
        return StateSpec{std::move(pr)};
    };

    Qpd qpd;
    qpd.modes = 2;
    qpd.target.description = "bell-cat Phi(alpha, theta)";
    {
        SuperpositionSpec phi;
        const double scale = 1.0 / std::sqrt(z);
        phi.terms.push_back({scale, {GaussianPureSpec{alpha, 0.0}, GaussianPureSpec{alpha, 0.0}}});
        phi.terms.push_back({std::polar(1.0, theta) * scale,
                             {GaussianPureSpec{-alpha, 0.0}, GaussianPureSpec{-alpha, 0.0}}});
        qpd.target.reference = StateSpec{GaussianSuperpositionSpec{std::move(phi)}};
    }

    qpd.terms.push_back({1.0 / z, coh2(alpha)});
    qpd.terms.push_back({1.0 / z, coh2(-alpha)});
    // (sigma_0 (x) sigma_0 - sigma_1 (x) sigma_1) / 2 expanded over cat projectors
    // with sigma_n = (N_n/2) psi_n - (N_{n+2}/2) psi_{n+2}.
    for (int n = 0; n < 2; ++n) {
        const double outer_sign = (n == 0) ? 1.0 : -1.0;
        const double na = nconst[n], nb = nconst[n + 2];
        qpd.terms.push_back({outer_sign * na * na / (8.0 * z), cat_pair(n, n)});
        qpd.terms.push_back({-outer_sign * na * nb / (8.0 * z), cat_pair(n, n + 2)});
        qpd.terms.push_back({-outer_sign * na * nb / (8.0 * z), cat_pair(n + 2, n)});
        qpd.terms.push_back({outer_sign * nb * nb / (8.0 * z), cat_pair(n + 2, n + 2)});
    }
    qpd.gamma_bar = qpd.recompute_gamma();
    return qpd;
}

// --- GKP -------------------------------------------------------------------------

GkpBuild build_gkp(const GkpParams& params) {
    std::vector<double> coeffs;
    std::vector<int> indices;  // displacement index m in D(m sqrt(pi/2))
    if (params.mode == GkpParams::Mode::RandomWalk) {
        if (params.steps < 0) throw InputError("build_gkp: L must be >= 0");
        for (int n = 0; n <= params.steps; ++n) {
            coeffs.push_back(binomial(params.steps, n));
            indices.push_back(2 * n - params.steps);
        }
    } else {
        if (params.coeffs.empty()) throw InputError("build_gkp: empty coefficient list");
        if (params.mu != 0 && params.mu != 1) throw InputError("build_gkp: mu must be 0 or 1");
        for (std::size_t n = 0; n < params.coeffs.size(); ++n) {
            if (params.coeffs[n] < 0.0)
                throw InputError("build_gkp: coefficients must be nonnegative");
            if (params.coeffs[n] == 0.0) continue;
            coeffs.push_back(params.coeffs[n]);
            indices.push_back(2 * static_cast<int>(n) + params.mu);
        }
        if (coeffs.empty()) throw InputError("build_gkp: all coefficients vanish");
    }

    SuperpositionSpec spec;
    const double step = std::sqrt(kPi / 2.0);
    for (std::size_t n = 0; n < coeffs.size(); ++n)
        spec.terms.push_back({coeffs[n], {GaussianPureSpec{indices[n] * step, params.r}}});

    GkpBuild out;
    out.norm_constant = superposition_norm2(spec);
    if (out.norm_constant < kDegeneracyFloor)
        throw DegeneracyError("build_gkp: degenerate normalization");
    double csum = 0.0;
    for (double c : coeffs) csum += c;
    out.gamma_exact = csum * csum / out.norm_constant;
    if (params.mode == GkpParams::Mode::RandomWalk)
        out.gamma_approx =
            std::pow(4.0, params.steps) / binomial(2 * params.steps, params.steps);

    out.qpd = build_g2(normalized(spec));
    out.qpd.target.description =
        params.mode == GkpParams::Mode::RandomWalk
            ? "gkp random-walk approximant (L = " + std::to_string(params.steps) +
                  ", r = " + std::to_string(params.r) + ")"
            : "gkp approximant (" + std::to_string(coeffs.size()) +
                  " peaks, r = " + std::to_string(params.r) + ")";
    return out;
}

// --- reconstruct / validate -------------------------------------------------------

DensityMatrix reconstruct(const Qpd& qpd, int per_mode_cutoff, Exec exec, double tail_tol) {
    if (qpd.terms.empty()) throw InputError("reconstruct: empty QPD");
    Eigen::Index dim = 1;
    for (int m = 0; m < qpd.modes; ++m) dim *= per_mode_cutoff;

    // Chunk count adapts to the accumulator footprint (deterministic: it
    // depends only on the term count and dimension, never on worker count).
    const std::size_t bytes = static_cast<std::size_t>(dim) * dim * sizeof(cxd);
    const std::size_t budget = std::size_t{1} << 27;  // 128 MiB of partials
    std::size_t n_chunks = std::min<std::size_t>(qpd.terms.size(), 128);
    n_chunks = std::max<std::size_t>(
        1, std::min(n_chunks, std::max<std::size_t>(1, budget / std::max<std::size_t>(bytes, 1))));
    const std::size_t chunk = (qpd.terms.size() + n_chunks - 1) / n_chunks;

    using Acc = Eigen::MatrixXcd;
    auto per_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        Acc acc = Acc::Zero(dim, dim);
        for (std::size_t i = begin; i < end; ++i) {
            if (auto pure = materialize_pure(qpd.terms[i].state, per_mode_cutoff, tail_tol)) {
                // rank-1 update, no intermediate density matrix
                acc.noalias() += qpd.terms[i].weight * (pure->amps * pure->amps.adjoint());
            } else {
                const DensityMatrix rho =
                    materialize(qpd.terms[i].state, per_mode_cutoff, tail_tol);
                acc.noalias() += qpd.terms[i].weight * rho.mat;
            }
        }
        return acc;
    };
    auto merge = [](Acc a, Acc b) {
        a += b;
        return a;
    };
    Acc total = chunked_reduce(qpd.terms.size(), chunk, exec, Acc(Acc::Zero(dim, dim)),
                               per_chunk, merge);
    DensityMatrix out;
    out.mat = std::move(total);
    out.modes = qpd.modes;
    out.per_mode_cutoff = per_mode_cutoff;
    return out;
}

ValidationReport validate(const Qpd& qpd, const DensityMatrix& target, int per_mode_cutoff,
                          Exec exec) {
    const DensityMatrix recon = reconstruct(qpd, per_mode_cutoff, exec);
    if (recon.dim() != target.dim()) throw DimensionError("validate: dimension mismatch");
    DensityMatrix diff;
    diff.mat = recon.mat - target.mat;
    diff.modes = recon.modes;
    diff.per_mode_cutoff = per_mode_cutoff;
    ValidationReport rep;
    rep.trace_distance = trace_norm(diff, 1e-9);
    rep.weight_sum = qpd.weight_sum();
    rep.gamma_bar = qpd.recompute_gamma();
    rep.pruned_weight = qpd.pruned_weight;
    rep.cutoff = per_mode_cutoff;
    if (qpd.epsilon_promise)
        rep.epsilon_promise_satisfied =
            rep.trace_distance <= *qpd.epsilon_promise + 1e-9;
    return rep;
}

}  // namespace cvknit
