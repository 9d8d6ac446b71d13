#include "xfhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace xfhmm::hmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

Eigen::MatrixXd log_of(const Eigen::MatrixXd& m) {
    return m.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
}

Eigen::VectorXd log_of(const Eigen::VectorXd& v) {
    return v.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

void check_dim(const GaussianHmm& model, const Eigen::MatrixXd& obs) {
    if (obs.rows() == 0) throw Error("observation sequence is empty");
    if (obs.cols() != model.dim()) {
        throw Error("observation dimension " + std::to_string(obs.cols()) + " does not match model dimension " +
                    std::to_string(model.dim()));
    }
}

// Forward and backward log-lattices for one sequence.
struct Lattice {
    Eigen::MatrixXd log_b;      // T x N
    Eigen::MatrixXd log_alpha;  // T x N
    Eigen::MatrixXd log_beta;   // T x N
    double loglik = 0.0;
};

void forward(const Eigen::VectorXd& log_pi, const Eigen::MatrixXd& log_a, Lattice& lat) {
    const auto t_len = lat.log_b.rows();
    const auto n = lat.log_b.cols();
    lat.log_alpha.resize(t_len, n);
    for (Eigen::Index j = 0; j < n; ++j) lat.log_alpha(0, j) = log_pi(j) + lat.log_b(0, j);
    for (Eigen::Index t = 1; t < t_len; ++t) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double acc = kNegInf;
            for (Eigen::Index i = 0; i < n; ++i) acc = lse2(acc, lat.log_alpha(t - 1, i) + log_a(i, j));
            lat.log_alpha(t, j) = acc + lat.log_b(t, j);
        }
    }
    double total = kNegInf;
    for (Eigen::Index j = 0; j < n; ++j) total = lse2(total, lat.log_alpha(t_len - 1, j));
    lat.loglik = total;
}

void backward(const Eigen::MatrixXd& log_a, Lattice& lat) {
    const auto t_len = lat.log_b.rows();
    const auto n = lat.log_b.cols();
    lat.log_beta.resize(t_len, n);
    lat.log_beta.row(t_len - 1).setZero();
    for (Eigen::Index t = t_len - 2; t >= 0; --t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double acc = kNegInf;
            for (Eigen::Index j = 0; j < n; ++j) {
                acc = lse2(acc, log_a(i, j) + lat.log_b(t + 1, j) + lat.log_beta(t + 1, j));
            }
            lat.log_beta(t, i) = acc;
        }
    }
}

}  // namespace

void GaussianHmm::validate(double tol) const {
    const auto n = prior.size();
    if (n < 1) throw Error("HMM needs at least one state");
    if (trans.rows() != n || trans.cols() != n) throw Error("transition matrix must be N x N");
    if (means.rows() != n || vars.rows() != n || means.cols() != vars.cols() || means.cols() < 1) {
        throw Error("means and variances must be N x D with D >= 1");
    }
    if ((prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > tol) throw Error("prior is not a probability simplex");
    for (Eigen::Index i = 0; i < n; ++i) {
        if ((trans.row(i).array() < 0.0).any() || std::abs(trans.row(i).sum() - 1.0) > tol) {
            throw Error("transition row " + std::to_string(i) + " is not a probability simplex");
        }
    }
    if (!means.allFinite()) throw Error("state means must be finite");
    if (!vars.allFinite() || (vars.array() <= 0.0).any()) throw Error("state variances must be positive and finite");
}

Eigen::MatrixXd GaussianHmm::log_emissions(const Eigen::MatrixXd& obs) const {
    check_dim(*this, obs);
    const auto n = means.rows();
    Eigen::MatrixXd out(obs.rows(), n);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::RowVectorXd mu = means.row(j);
        const Eigen::RowVectorXd inv_var = vars.row(j).cwiseInverse();
        const double norm = -0.5 * (static_cast<double>(means.cols()) * log2pi + vars.row(j).array().log().sum());
        for (Eigen::Index t = 0; t < obs.rows(); ++t) {
            out(t, j) = norm - 0.5 * ((obs.row(t) - mu).array().square() * inv_var.array()).sum();
        }
    }
    return out;
}

void GaussianHmm::clamp_variances(double floor, double ceil) { vars = vars.cwiseMax(floor).cwiseMin(ceil); }

void TrainConfig::validate() const {
    if (max_iterations < 1) throw Error("max_iterations must be at least 1");
    if (init_iterations < 0) throw Error("init_iterations must be nonnegative");
    if (!(loglik_tolerance >= 0.0)) throw Error("loglik_tolerance must be nonnegative");
    if (!(var_floor > 0.0) || !(var_floor < var_ceil)) throw Error("variance clamp requires 0 < var_floor < var_ceil");
}

GaussianHmm init_from_segments(std::span<const ObservationSequence> sequences, int n_states,
                               const TrainConfig& config, int n_representatives) {
    config.validate();
    if (n_states < 1) throw Error("n_states must be at least 1");
    if (n_states > 1 && 1.0 - kInitialSwitchProbability * (n_states - 1) < 0.0) {
        throw Error("too many states for the 0.025 switching initialization");
    }
    if (n_representatives < 1) throw Error("n_representatives must be at least 1");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (sequences[i].length() >= n_states) eligible.push_back(i);
    }
    if (eligible.empty()) {
        throw Error("no training sequence has at least " + std::to_string(n_states) + " observations");
    }
    std::stable_sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
        return sequences[a].length() > sequences[b].length();
    });
    eligible.resize(std::min(eligible.size(), static_cast<std::size_t>(n_representatives)));

    const auto d = sequences[eligible.front()].dim();
    const auto n = static_cast<Eigen::Index>(n_states);
    GaussianHmm m;
    m.prior = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    m.trans = Eigen::MatrixXd::Constant(n, n, kInitialSwitchProbability);
    m.trans.diagonal().setConstant(1.0 - kInitialSwitchProbability * static_cast<double>(n - 1));
    m.means = Eigen::MatrixXd::Zero(n, d);
    m.vars = Eigen::MatrixXd::Zero(n, d);

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
    for (std::size_t idx : eligible) {
        const auto& obs = sequences[idx].obs;
        if (obs.cols() != d) throw Error("training sequences differ in dimension");
        const auto t_len = obs.rows();
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto lo = j * t_len / n;
            const auto hi = (j + 1) * t_len / n;
            m.means.row(j) += obs.middleRows(lo, hi - lo).colwise().sum();
            counts(j) += static_cast<double>(hi - lo);
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) m.means.row(j) /= counts(j);
    for (std::size_t idx : eligible) {
        const auto& obs = sequences[idx].obs;
        const auto t_len = obs.rows();
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto lo = j * t_len / n;
            const auto hi = (j + 1) * t_len / n;
            m.vars.row(j) += (obs.middleRows(lo, hi - lo).rowwise() - m.means.row(j)).array().square().matrix().colwise().sum();
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) m.vars.row(j) /= counts(j);
    m.clamp_variances(config.var_floor, config.var_ceil);
    return m;
}

double log_likelihood(const GaussianHmm& model, const Eigen::MatrixXd& obs) {
    Lattice lat;
    lat.log_b = model.log_emissions(obs);
    forward(log_of(model.prior), log_of(model.trans), lat);
    return lat.loglik;
}

ViterbiResult viterbi(const GaussianHmm& model, const Eigen::MatrixXd& obs) {
    const Eigen::MatrixXd log_b = model.log_emissions(obs);
    const Eigen::MatrixXd log_a = log_of(model.trans);
    const Eigen::VectorXd log_pi = log_of(model.prior);
    const auto t_len = log_b.rows();
    const auto n = log_b.cols();

    Eigen::MatrixXd delta(t_len, n);
    Eigen::MatrixXi back(t_len, n);
    for (Eigen::Index j = 0; j < n; ++j) delta(0, j) = log_pi(j) + log_b(0, j);
    for (Eigen::Index t = 1; t < t_len; ++t) {
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Index best_i = 0;
            double best = delta(t - 1, 0) + log_a(0, j);
            for (Eigen::Index i = 1; i < n; ++i) {
                const double v = delta(t - 1, i) + log_a(i, j);
                if (v > best) {
                    best = v;
                    best_i = i;
                }
            }
            delta(t, j) = best + log_b(t, j);
            back(t, j) = static_cast<int>(best_i);
        }
    }
    ViterbiResult out;
    out.path.resize(static_cast<std::size_t>(t_len));
    Eigen::Index state = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
        if (delta(t_len - 1, j) > delta(t_len - 1, state)) state = j;
    }
    out.log_prob = delta(t_len - 1, state);
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
        out.path[static_cast<std::size_t>(t)] = static_cast<int>(state);
        if (t > 0) state = back(t, state);
    }
    return out;
}

TrainResult baum_welch(GaussianHmm model, std::span<const ObservationSequence> sequences, const TrainConfig& config,
                       int max_iterations) {
    config.validate();
    model.validate();
    if (sequences.empty()) throw Error("Baum-Welch needs at least one training sequence");
    for (const auto& s : sequences) check_dim(model, s.obs);
    if (max_iterations < 0) max_iterations = config.max_iterations;

    const auto n = static_cast<Eigen::Index>(model.n_states());
    const auto d = static_cast<Eigen::Index>(model.dim());
    std::mt19937_64 rng(config.seed);
    std::vector<Lattice> lattices(sequences.size());
    std::vector<Eigen::MatrixXd> gammas(sequences.size());

    TrainResult result;
    auto& trace = result.trace;
    for (int iter = 0;; ++iter) {
        // E-step.
        const Eigen::VectorXd log_pi = log_of(model.prior);
        const Eigen::MatrixXd log_a = log_of(model.trans);
        double total = 0.0;
        Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd gamma_first = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd gamma_out = Eigen::VectorXd::Zero(n);  // responsibilities excluding the last step
        Eigen::VectorXd gamma_all = Eigen::VectorXd::Zero(n);
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            auto& lat = lattices[s];
            lat.log_b = model.log_emissions(sequences[s].obs);
            forward(log_pi, log_a, lat);
            backward(log_a, lat);
            total += lat.loglik;
            const auto t_len = lat.log_b.rows();
            auto& gamma = gammas[s];
            gamma = ((lat.log_alpha + lat.log_beta).array() - lat.loglik).exp();
            gamma_first += gamma.row(0).transpose();
            gamma_all += gamma.colwise().sum().transpose();
            if (t_len > 1) gamma_out += gamma.topRows(t_len - 1).colwise().sum().transpose();
            for (Eigen::Index t = 0; t + 1 < t_len; ++t) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index j = 0; j < n; ++j) {
                        xi_sum(i, j) += std::exp(lat.log_alpha(t, i) + log_a(i, j) + lat.log_b(t + 1, j) +
                                                 lat.log_beta(t + 1, j) - lat.loglik);
                    }
                }
            }
        }
        if (!std::isfinite(total)) throw Error("training log-likelihood is not finite");
        trace.loglik.push_back(total);
        if (iter > 0 && total - trace.loglik[trace.loglik.size() - 2] < config.loglik_tolerance) {
            trace.converged = true;
            break;
        }
        if (iter == max_iterations) break;

        // M-step.
        model.prior = gamma_first / static_cast<double>(sequences.size());
        model.prior /= model.prior.sum();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (gamma_out(i) > 0.0 && xi_sum.row(i).sum() > 0.0) model.trans.row(i) = xi_sum.row(i) / xi_sum.row(i).sum();
        }
        Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(n, d);
        for (std::size_t s = 0; s < sequences.size(); ++s) mean_acc += gammas[s].transpose() * sequences[s].obs;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (gamma_all(j) > std::numeric_limits<double>::min()) {
                model.means.row(j) = mean_acc.row(j) / gamma_all(j);
            } else {
                std::uniform_int_distribution<std::size_t> pick_seq(0, sequences.size() - 1);
                const auto& obs = sequences[pick_seq(rng)].obs;
                std::uniform_int_distribution<Eigen::Index> pick_row(0, obs.rows() - 1);
                model.means.row(j) = obs.row(pick_row(rng));
                ++trace.reinitialized_states;
                trace.notes.push_back("iteration " + std::to_string(iter) + ": state " + std::to_string(j) +
                                      " received no responsibility; mean reset to a training vector");
            }
        }
        Eigen::MatrixXd var_acc = Eigen::MatrixXd::Zero(n, d);
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            const auto& obs = sequences[s].obs;
            for (Eigen::Index j = 0; j < n; ++j) {
                var_acc.row(j) += gammas[s].col(j).transpose() *
                                  (obs.rowwise() - model.means.row(j)).array().square().matrix();
            }
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (gamma_all(j) > std::numeric_limits<double>::min()) model.vars.row(j) = var_acc.row(j) / gamma_all(j);
        }
        model.clamp_variances(config.var_floor, config.var_ceil);
        ++trace.iterations;
    }
    result.model = std::move(model);
    return result;
}

TrainResult train(std::span<const ObservationSequence> sequences, int n_states, const TrainConfig& config) {
    GaussianHmm model = init_from_segments(sequences, n_states, config);
    if (config.init_iterations > 0) {
        std::vector<std::size_t> idx(sequences.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return sequences[a].length() > sequences[b].length();
        });
        std::vector<ObservationSequence> reps;
        for (std::size_t i : idx) {
            if (reps.size() == static_cast<std::size_t>(kRepresentativeSequences)) break;
            if (sequences[i].length() >= n_states) reps.push_back(sequences[i]);
        }
        model = baum_welch(std::move(model), reps, config, config.init_iterations).model;
    }
    return baum_welch(std::move(model), sequences, config);
}

}  // namespace xfhmm::hmm
