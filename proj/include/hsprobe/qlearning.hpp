#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsprobe/envs.hpp"
#include "hsprobe/network.hpp"
#include "hsprobe/optimizer.hpp"
#include "hsprobe/rng.hpp"

namespace hsprobe {

struct Transition {
    Observation state;
    std::size_t action = 0;
    double reward = 0.0;
    Observation next_state;
    /// True end state: no bootstrapping from next_state. Cap truncation is not terminal here.
    bool terminal = false;
};

/// Argmax over Q(s, .); ties go to the lowest action index.
std::size_t greedy_action(const Tensor& q_values);
std::size_t greedy_action(const ParamSet& net, const Observation& s);

double huber(double residual, double threshold = 1.0);
double huber_derivative(double residual, double threshold = 1.0);

// ---------------------------------------------------------------------------
// Prioritized replay (proportional variant)

struct ReplayConfig {
    std::size_t capacity = 50000;
    double priority_exponent = 0.6;  // alpha_pr
    double priority_floor = 1e-6;    // eps_pr
};

struct ReplaySample {
    std::vector<std::size_t> indices;
    std::vector<double> probabilities;
    /// (N P(i))^-beta divided by the largest such weight in the buffer.
    std::vector<double> weights;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(ReplayConfig config);

    /// New items enter with the largest priority seen so far.
    void push(const Transition& t);
    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return config_.capacity; }

    /// Transitions are stored with 8-bit pixels; env renderings are integral.
    Transition get(std::size_t index) const;

    double priority(std::size_t index) const { return priorities_.at(index); }
    /// P(i) = p_i^alpha / sum_k p_k^alpha over the stored items.
    std::vector<double> probabilities() const;

    /// Stratified proportional sampling; `importance_exponent` is beta_is.
    ReplaySample sample(std::size_t batch_size, double importance_exponent, Rng& rng) const;

    /// Sets priorities to |td_error| + eps_pr.
    void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);
    /// Direct priority assignment (p_i > 0).
    void set_priority(std::size_t index, double priority);

private:
    struct Packed {
        std::vector<std::uint8_t> state, next_state;
        std::size_t action = 0;
        double reward = 0.0;
        bool terminal = false;
    };

    void tree_set(std::size_t index, double value);
    std::size_t tree_find(double mass) const;

    ReplayConfig config_;
    std::size_t leaves_ = 1;
    std::vector<Packed> items_;
    std::vector<double> priorities_;
    std::vector<double> sum_tree_;
    std::vector<double> min_tree_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
    std::size_t height_ = 0, width_ = 0, channels_ = 0;
    double max_priority_ = 1.0;
};

// ---------------------------------------------------------------------------
// Losses

struct LossBreakdown {
    double td = 0.0;
    double regularizer = 0.0;
    double adversarial = 0.0;
    double total = 0.0;
};

/// Importance-weighted mean Huber TD loss with Double-DQN targets
/// r + gamma * Q_target(s', argmax_a Q_online(s', a)).
/// Optionally accumulates d(loss)/d(online params) * grad_scale and the
/// per-sample residuals Q(s,a) - target.
double td_loss(const ParamSet& online, const ParamSet& target, std::span<const Transition> batch,
               std::span<const double> weights, double gamma, double huber_threshold = 1.0,
               ParamGrads* grads = nullptr, std::vector<double>* residuals = nullptr, double grad_scale = 1.0);

double double_dqn_target(const ParamSet& online, const ParamSet& target, const Transition& t, double gamma);

/// l-infinity ball of radius eps around the [0,1]-scaled observation, clipped to [0, 1].
Interval input_ball(const Observation& s, double eps);

/// max( max_{a != a*} Q_upper(a) - Q_lower(a*), -c ) over the eps-ball with
/// a* the clean greedy action.
double sa_regularizer(const ParamSet& net, const Observation& s, double eps, double c, ParamGrads* grads = nullptr,
                      double grad_scale = 1.0);

/// Batch mean of sum_{a_hat} OV(s, a_hat, eps) * Q_diff(s, a_hat) with
/// Q_diff(s,a_hat) = max(0, Q(s,a_hat) - Q(s,a)) for the transition's action a
/// and OV = max(0, Q_upper(s,a_hat) - Q_lower(s,a) + Q_diff / 2).
double radial_loss(const ParamSet& net, std::span<const Transition> batch, double eps, ParamGrads* grads = nullptr,
                   double grad_scale = 1.0);

/// Per-action overlap term for given clean values and bounds; exposed for tests.
double radial_term(std::span<const double> q, std::span<const double> q_lower, std::span<const double> q_upper,
                   std::size_t action);

/// Q_lower(s,a*) > Q_upper(s,a) for every a != a* over the eps-ball.
bool certified(const ParamSet& net, const Observation& s, double eps);

// ---------------------------------------------------------------------------
// Training

enum class Objective { vanilla, sa_ddqn, radial };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct ExplorationSchedule {
    double start = 1.0;
    double end = 0.05;
    std::size_t decay_steps = 10000;

    double at(std::size_t step) const;
};

struct TrainConfig {
    OptimizerConfig optimizer;
    double gamma = 0.99;
    ExplorationSchedule exploration;
    std::size_t target_sync = 500;
    double robust_radius = 0.02;     // eps_rob, on [0,1]-scaled pixels
    /// Robust terms are off before robust_start, then the radius grows
    /// linearly to robust_radius over robust_ramp steps.
    std::size_t robust_start = 0;
    std::size_t robust_ramp = 0;
    double sa_cap = 1.0;             // c
    double sa_weight = 1.0;
    double adversarial_weight = 0.5;
    double huber_threshold = 1.0;
    double grad_clip_norm = 10.0;    // 0 disables
    std::size_t total_steps = 30000;
    std::size_t learning_starts = 1000;
    std::size_t train_every = 4;
    std::size_t batch_size = 32;
    ReplayConfig replay;
    double importance_start = 0.4;
    double importance_end = 1.0;
    std::size_t conv_channels = 8;
    std::size_t hidden_units = 64;
    std::uint64_t seed = 7;
    Objective objective = Objective::vanilla;

    double radius_at(std::size_t step) const;
    void validate() const;
};

struct EpisodeRecord {
    double episode_return = 0.0;
    std::size_t length = 0;
};

struct Checkpoint {
    ParamSet params;
    EnvSpec env;
    TrainConfig config;
    std::vector<EpisodeRecord> curve;

    std::string id() const { return paramset_digest(params); }
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// conv(k = stride = cell size, relu) -> dense(hidden, relu) -> dense(|A|).
ParamSet make_q_network(const EnvSpec& env, const TrainConfig& config);
/// make_q_network initialized from the config seed.
ParamSet initial_q_network(const EnvSpec& env, const TrainConfig& config);

/// Episode seed used for the i-th training episode.
std::uint64_t training_episode_seed(std::uint64_t config_seed, std::size_t episode);

/// epsilon-greedy Double-DQN with prioritized replay and periodic target
/// sync; the objective adds the SA hinge or the RADIAL overlap loss.
/// Throws TrainingError on a non-finite loss or gradient.
Checkpoint train(const EnvSpec& env, const TrainConfig& config);

/// Loss terms and gradient for one minibatch under the configured objective.
LossBreakdown minibatch_loss(const ParamSet& online, const ParamSet& target, std::span<const Transition> batch,
                             std::span<const double> weights, const TrainConfig& config, ParamGrads* grads,
                             std::vector<double>* residuals);

/// Undiscounted return of a greedy rollout from `episode_seed`.
double greedy_return(const ParamSet& net, const EnvSpec& env, std::uint64_t episode_seed);

}  // namespace hsprobe
