#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvknit/fock.hpp"
#include "cvknit/parallel.hpp"
#include "cvknit/qpd.hpp"
#include "cvknit/rng.hpp"

namespace cvknit {

// Observable descriptions accepted by the estimator and the task files.
struct NumberObservable {};
struct QuadratureQObservable {};
struct QuadraturePObservable {};
struct FockProjectorObservable {
    int n = 0;
};
struct DenseObservable {
    Eigen::MatrixXcd mat;
};

using ObservableSpec = std::variant<NumberObservable, QuadratureQObservable,
                                    QuadraturePObservable, FockProjectorObservable,
                                    DenseObservable>;

ModeMatrix build_observable(const ObservableSpec& spec, int dim);
std::string observable_name(const ObservableSpec& spec);

enum class EstimateMode { ExactExpectation, Projective };

struct EstimationTask {
    Qpd qpd;
    ObservableSpec observable = NumberObservable{};
    double bound = 0.0;  // 0 = use the spectral norm of the truncated observable
    std::int64_t shots = 1;
    std::uint64_t seed = 0;
    EstimateMode mode = EstimateMode::ExactExpectation;
    int cutoff = 0;           // 0 = auto from the QPD terms
    int chunk_size = 4096;    // part of the reproducibility contract
};

struct EstimateReport {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t shots = 0;
    double gamma_bar = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> hits;  // per-term draw counts, sum == shots
    double observable_bound = 0.0;
    int cutoff = 0;
    EstimateMode mode = EstimateMode::ExactExpectation;
};

// Samples a term index with probability |q_x| / gamma_bar; second element is
// the sign q_x / |q_x|.
std::pair<std::size_t, int> draw_term(const Qpd& qpd, SplitMix64& rng);

EstimateReport estimate(const EstimationTask& task, Exec exec = default_exec());

// Hoeffding shot budget: smallest n with 2 exp(-n eps^2 / (2 gamma^2 B^2)) <= delta.
std::uint64_t shots_for_accuracy(double gamma_bar, double eps_stat, double delta, double bound);

}  // namespace cvknit
