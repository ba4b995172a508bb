#include "cvknit/montecarlo.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>

namespace cvknit {

ModeMatrix build_observable(const ObservableSpec& spec, int dim) {
    if (std::holds_alternative<NumberObservable>(spec)) return number_matrix(dim);
    if (std::holds_alternative<QuadratureQObservable>(spec)) {
        const Eigen::MatrixXcd a = ladder_matrix(dim).mat;
        return ModeMatrix{(a + a.adjoint()) / std::sqrt(2.0), ModeMatrixTag::Custom};
    }
    if (std::holds_alternative<QuadraturePObservable>(spec)) {
        const Eigen::MatrixXcd a = ladder_matrix(dim).mat;
        return ModeMatrix{cxd(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0),
                          ModeMatrixTag::Custom};
    }
    if (std::holds_alternative<FockProjectorObservable>(spec)) {
        const int n = std::get<FockProjectorObservable>(spec).n;
        if (n < 0 || n >= dim) throw InputError("fock projector index outside cutoff");
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
        m(n, n) = 1.0;
        return ModeMatrix{std::move(m), ModeMatrixTag::Custom};
    }
    const auto& d = std::get<DenseObservable>(spec);
    if (d.mat.rows() != dim)
        throw DimensionError("dense observable dimension does not match cutoff");
    if ((d.mat - d.mat.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw InputError("dense observable is not Hermitian");
    return ModeMatrix{d.mat, ModeMatrixTag::Custom};
}

std::string observable_name(const ObservableSpec& spec) {
    if (std::holds_alternative<NumberObservable>(spec)) return "number";
    if (std::holds_alternative<QuadratureQObservable>(spec)) return "quadrature-Q";
    if (std::holds_alternative<QuadraturePObservable>(spec)) return "quadrature-P";
    if (std::holds_alternative<FockProjectorObservable>(spec))
        return "projector-on-fock(" +
               std::to_string(std::get<FockProjectorObservable>(spec).n) + ")";
    return "dense";
}

std::pair<std::size_t, int> draw_term(const Qpd& qpd, SplitMix64& rng) {
    if (qpd.terms.empty()) throw InputError("draw_term: empty QPD");
    const double gamma = qpd.recompute_gamma();
    if (gamma <= 0.0) throw InputError("draw_term: gamma_bar must be positive");
    const double u = rng.next_double() * gamma;
    double acc = 0.0;
    for (std::size_t i = 0; i < qpd.terms.size(); ++i) {
        acc += std::abs(qpd.terms[i].weight);
        if (u < acc) return {i, qpd.terms[i].weight >= 0.0 ? 1 : -1};
    }
    const std::size_t last = qpd.terms.size() - 1;
    return {last, qpd.terms[last].weight >= 0.0 ? 1 : -1};
}

EstimateReport estimate(const EstimationTask& task, Exec exec) {
    const Qpd& qpd = task.qpd;
    if (qpd.terms.empty()) throw InputError("estimate: empty QPD");
    if (task.shots < 1) throw InputError("estimate: shots must be >= 1");
    if (qpd.modes != 1)
        throw InputError("estimate: single-mode QPDs only (multi-mode observables not wired)");

    int cutoff = task.cutoff;
    if (cutoff <= 0) {
        cutoff = 2;
        for (const auto& t : qpd.terms) cutoff = std::max(cutoff, default_cutoff_of(t.state));
        if (qpd.target.reference) cutoff = std::max(cutoff, default_cutoff_of(*qpd.target.reference));
    }
    const ModeMatrix obs = build_observable(task.observable, cutoff);

    const std::size_t n_terms = qpd.terms.size();
    const double gamma = qpd.recompute_gamma();

    // cumulative |q| for draws
    std::vector<double> cumulative(n_terms);
    std::vector<int> signs(n_terms);
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_terms; ++i) {
            acc += std::abs(qpd.terms[i].weight);
            cumulative[i] = acc;
            signs[i] = qpd.terms[i].weight >= 0.0 ? 1 : -1;
        }
    }

    double bound = task.bound;
    Eigen::VectorXd eigvals;
    Eigen::MatrixXcd eigvecs;
    if (task.mode == EstimateMode::Projective || bound <= 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            0.5 * (obs.mat + obs.mat.adjoint()));
        eigvals = es.eigenvalues();
        eigvecs = es.eigenvectors();
        if (bound <= 0.0) bound = eigvals.cwiseAbs().maxCoeff();
    }

    // Per-term preparation: exact expectations, or eigenbasis outcome
    // distributions for projective sampling.
    std::vector<double> exact_y(n_terms, 0.0);
    std::vector<std::vector<double>> outcome_cdf;
    if (task.mode == EstimateMode::Projective) outcome_cdf.resize(n_terms);
    parallel_for(n_terms, exec, [&](std::size_t i) {
        const DensityMatrix rho = materialize(qpd.terms[i].state, cutoff);
        if (task.mode == EstimateMode::ExactExpectation) {
            if (auto pure = materialize_pure(qpd.terms[i].state, cutoff)) {
                exact_y[i] = (pure->amps.dot(obs.mat * pure->amps)).real();
            } else {
                exact_y[i] = expectation(obs, rho).real();
            }
        } else {
            std::vector<double> cdf(eigvals.size());
            double acc = 0.0;
            for (Eigen::Index e = 0; e < eigvals.size(); ++e) {
                const double p =
                    std::max(0.0, (eigvecs.col(e).dot(rho.mat * eigvecs.col(e))).real());
                acc += p;
                cdf[e] = acc;
            }
            for (auto& c : cdf) c /= acc;
            outcome_cdf[i] = std::move(cdf);
        }
    });

    // Chunked shot loop; the RNG stream of a chunk depends only on
    // (seed, chunk index), so serial and parallel runs agree bitwise.
    struct Partial {
        double sum = 0.0;
        double sumsq = 0.0;
    };
    const std::size_t shots = static_cast<std::size_t>(task.shots);
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, task.chunk_size));
    std::unique_ptr<std::atomic<std::int64_t>[]> hits(
        new std::atomic<std::int64_t>[n_terms]);
    for (std::size_t i = 0; i < n_terms; ++i) hits[i].store(0, std::memory_order_relaxed);

    auto per_chunk = [&](std::size_t c, std::size_t begin, std::size_t end) {
        SplitMix64 rng = chunk_rng(task.seed, c);
        Partial p;
        for (std::size_t s = begin; s < end; ++s) {
            const double u = rng.next_double() * gamma;
            const std::size_t idx = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                cumulative.begin());
            const std::size_t term = std::min(idx, n_terms - 1);
            hits[term].fetch_add(1, std::memory_order_relaxed);
            double y;
            if (task.mode == EstimateMode::ExactExpectation) {
                y = exact_y[term];
            } else {
                const double v = rng.next_double();
                const auto& cdf = outcome_cdf[term];
                const std::size_t e = static_cast<std::size_t>(
                    std::lower_bound(cdf.begin(), cdf.end(), v) - cdf.begin());
                y = eigvals[std::min<Eigen::Index>(static_cast<Eigen::Index>(e),
                                                   eigvals.size() - 1)];
            }
            const double sy = signs[term] * y;
            p.sum += sy;
            p.sumsq += sy * sy;
        }
        return p;
    };
    auto merge = [](Partial a, Partial b) {
        return Partial{a.sum + b.sum, a.sumsq + b.sumsq};
    };
    const Partial total = chunked_reduce(shots, chunk, exec, Partial{}, per_chunk, merge);

    const double n = static_cast<double>(shots);
    const double mean_raw = total.sum / n;
    double var_raw = 0.0;
    if (shots > 1) var_raw = std::max(0.0, (total.sumsq - n * mean_raw * mean_raw) / (n - 1.0));

    EstimateReport rep;
    rep.mean = gamma * mean_raw;
    rep.stderr_ = gamma * std::sqrt(var_raw / n);
    rep.shots = task.shots;
    rep.gamma_bar = gamma;
    rep.seed = task.seed;
    rep.hits.resize(n_terms);
    for (std::size_t i = 0; i < n_terms; ++i) rep.hits[i] = hits[i].load(std::memory_order_relaxed);
    rep.observable_bound = bound;
    rep.cutoff = cutoff;
    rep.mode = task.mode;
    return rep;
}

std::uint64_t shots_for_accuracy(double gamma_bar, double eps_stat, double delta, double bound) {
    if (gamma_bar <= 0.0 || eps_stat <= 0.0 || bound <= 0.0)
        throw InputError("shots_for_accuracy: arguments must be positive");
    if (delta <= 0.0 || delta >= 1.0)
        throw InputError("shots_for_accuracy: confidence delta must be in (0, 1)");
    const double n = 2.0 * gamma_bar * gamma_bar * bound * bound * std::log(2.0 / delta) /
                     (eps_stat * eps_stat);
    if (n > 9.0e18) throw NumericError("shots_for_accuracy: budget exceeds 2^63");
    return static_cast<std::uint64_t>(std::ceil(n));
}

}  // namespace cvknit
