#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xfhmm/common.hpp"

namespace xfhmm::hmm {

/// Ergodic HMM with one diagonal-covariance Gaussian per state.
///
/// prior is a probability simplex, every row of trans sums to one, and
/// means/vars hold one row per state (dimension D columns).
struct GaussianHmm {
    Eigen::VectorXd prior;
    Eigen::MatrixXd trans;
    Eigen::MatrixXd means;
    Eigen::MatrixXd vars;

    [[nodiscard]] int n_states() const { return static_cast<int>(prior.size()); }
    [[nodiscard]] int dim() const { return static_cast<int>(means.cols()); }

    /// Throws unless shapes agree, prior and rows of trans are simplices
    /// within `tol`, and all variances are positive and finite.
    void validate(double tol = 1e-9) const;

    /// T x N matrix of log N(o_t; mu_j, diag(vars_j)).
    [[nodiscard]] Eigen::MatrixXd log_emissions(const Eigen::MatrixXd& obs) const;

    void clamp_variances(double floor, double ceil);
};

/// Baum-Welch settings. Variances are clamped to [var_floor, var_ceil]
/// after initialization and after every M-step.
struct TrainConfig {
    int max_iterations = 20;
    double loglik_tolerance = 1e-4;
    int init_iterations = 3;
    double var_floor = 0.01;
    double var_ceil = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Off-diagonal transition probability of a freshly initialized model.
inline constexpr double kInitialSwitchProbability = 0.025;
inline constexpr int kRepresentativeSequences = 5;

/// Segmental initialization: the `n_representatives` longest sequences
/// (input order breaks ties) are cut into `n_states` equal contiguous parts;
/// state j takes the pooled moments of every representative's part j.
/// Transitions start at 0.025 between states, the prior uniform.
GaussianHmm init_from_segments(std::span<const ObservationSequence> sequences, int n_states,
                               const TrainConfig& config, int n_representatives = kRepresentativeSequences);

/// log P(O | model) by the forward recursion in log space.
double log_likelihood(const GaussianHmm& model, const Eigen::MatrixXd& obs);
inline double log_likelihood(const GaussianHmm& model, const ObservationSequence& seq) {
    return log_likelihood(model, seq.obs);
}

struct ViterbiResult {
    std::vector<int> path;
    double log_prob = 0.0;
};

/// Most likely state path. Ties go to the lower state index, both for the
/// final state and for every back-pointer.
ViterbiResult viterbi(const GaussianHmm& model, const Eigen::MatrixXd& obs);

struct TrainTrace {
    /// Total log-likelihood of the training set under each successive model;
    /// the last entry belongs to the returned model.
    std::vector<double> loglik;
    int iterations = 0;  // M-steps performed
    bool converged = false;
    int reinitialized_states = 0;
    std::vector<std::string> notes;
};

struct TrainResult {
    GaussianHmm model;
    TrainTrace trace;
};

/// Multi-sequence EM with diagonal covariance updates. Stops after
/// config.max_iterations M-steps or when the total log-likelihood improves
/// by less than config.loglik_tolerance. A state that receives no
/// responsibility gets its mean reset to a training vector drawn with
/// config.seed; the event is counted and noted in the trace.
TrainResult baum_welch(GaussianHmm model, std::span<const ObservationSequence> sequences, const TrainConfig& config,
                       int max_iterations = -1);

/// Full recipe: segmental init, init_iterations of smoothing on the
/// representatives, then Baum-Welch on every sequence.
TrainResult train(std::span<const ObservationSequence> sequences, int n_states, const TrainConfig& config);

/// Versioned JSON form; doubles round-trip exactly.
nlohmann::json to_json(const GaussianHmm& model);
GaussianHmm model_from_json(const nlohmann::json& j);

}  // namespace xfhmm::hmm
