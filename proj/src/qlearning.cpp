#include "hsprobe/qlearning.hpp"

#include <algorithm>
#include <cmath>

namespace hsprobe {

std::size_t greedy_action(const Tensor& q_values)
{
    if (q_values.size() == 0) throw std::invalid_argument("greedy_action on empty Q vector");
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_values.size(); ++a)
        if (q_values[a] > q_values[best]) best = a;
    return best;
}

std::size_t greedy_action(const ParamSet& net, const Observation& s)
{
    return greedy_action(forward_output(net, to_network_input(s)));
}

double huber(double residual, double threshold)
{
    const double a = std::fabs(residual);
    return a <= threshold ? 0.5 * residual * residual : threshold * (a - 0.5 * threshold);
}

double huber_derivative(double residual, double threshold)
{
    return std::clamp(residual, -threshold, threshold);
}

// ---------------------------------------------------------------------------

double double_dqn_target(const ParamSet& online, const ParamSet& target, const Transition& t, double gamma)
{
    if (t.terminal) return t.reward;
    const Tensor next = to_network_input(t.next_state);
    const std::size_t a_next = greedy_action(forward_output(online, next));
    return t.reward + gamma * forward_output(target, next)[a_next];
}

double td_loss(const ParamSet& online, const ParamSet& target, std::span<const Transition> batch,
               std::span<const double> weights, double gamma, double huber_threshold, ParamGrads* grads,
               std::vector<double>* residuals, double grad_scale)
{
    if (batch.empty()) throw std::invalid_argument("td_loss needs a non-empty batch");
    if (!weights.empty() && weights.size() != batch.size())
        throw std::invalid_argument("importance weights and batch differ in length");
    const double n = static_cast<double>(batch.size());
    if (residuals) residuals->assign(batch.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        const double w = weights.empty() ? 1.0 : weights[i];
        const double y = double_dqn_target(online, target, t, gamma);
        const Activations acts = forward(online, to_network_input(t.state));
        const Tensor& q = acts.back();
        if (t.action >= q.size()) throw std::invalid_argument("transition action out of range");
        const double delta = q[t.action] - y;
        loss += w * huber(delta, huber_threshold) / n;
        if (residuals) (*residuals)[i] = delta;
        if (grads) {
            Tensor g(q.shape());
            g[t.action] = grad_scale * w * huber_derivative(delta, huber_threshold) / n;
            backprop_into(online, acts, g, *grads);
        }
    }
    return loss;
}

Interval input_ball(const Observation& s, double eps)
{
    if (!(eps >= 0.0)) throw std::invalid_argument("robustness radius must be >= 0");
    return Interval::around_clipped(to_network_input(s), eps, 0.0, 1.0);
}

double sa_regularizer(const ParamSet& net, const Observation& s, double eps, double c, ParamGrads* grads,
                      double grad_scale)
{
    if (!(c > 0.0)) throw std::invalid_argument("hinge cap c must be > 0");
    const Tensor x = to_network_input(s);
    const Tensor q = forward_output(net, x);
    if (q.size() < 2) throw std::invalid_argument("sa_regularizer needs at least two actions");
    const std::size_t best = greedy_action(q);
    const IntervalTrace trace = ibp_trace(net, input_ball(s, eps));
    const Interval& out = trace.back();
    std::size_t worst = best == 0 ? 1 : 0;
    for (std::size_t a = 0; a < q.size(); ++a)
        if (a != best && out.upper[a] > out.upper[worst]) worst = a;
    const double inner = out.upper[worst] - out.lower[best];
    if (inner <= -c) return -c;
    if (grads) {
        Tensor gl(q.shape()), gu(q.shape());
        gl[best] = -grad_scale;
        gu[worst] = grad_scale;
        ibp_backprop_into(net, trace, gl, gu, *grads);
    }
    return inner;
}

double radial_term(std::span<const double> q, std::span<const double> q_lower, std::span<const double> q_upper,
                   std::size_t action)
{
    double total = 0.0;
    for (std::size_t ah = 0; ah < q.size(); ++ah) {
        const double diff = std::max(0.0, q[ah] - q[action]);
        const double overlap = std::max(0.0, q_upper[ah] - q_lower[action] + 0.5 * diff);
        total += overlap * diff;
    }
    return total;
}

double radial_loss(const ParamSet& net, std::span<const Transition> batch, double eps, ParamGrads* grads,
                   double grad_scale)
{
    if (batch.empty()) throw std::invalid_argument("radial_loss needs a non-empty batch");
    const double n = static_cast<double>(batch.size());
    double loss = 0.0;
    for (const Transition& t : batch) {
        const Activations acts = forward(net, to_network_input(t.state));
        const Tensor& q = acts.back();
        if (t.action >= q.size()) throw std::invalid_argument("transition action out of range");
        const IntervalTrace trace = ibp_trace(net, input_ball(t.state, eps));
        const Interval& out = trace.back();
        const std::size_t a = t.action;
        loss += radial_term(q.values(), out.lower.values(), out.upper.values(), a) / n;
        if (!grads) continue;

        Tensor gq(q.shape()), gl(q.shape()), gu(q.shape());
        bool any = false;
        for (std::size_t ah = 0; ah < q.size(); ++ah) {
            const double diff = std::max(0.0, q[ah] - q[a]);
            if (!(diff > 0.0)) continue;
            const double raw_overlap = out.upper[ah] - out.lower[a] + 0.5 * diff;
            const double overlap = std::max(0.0, raw_overlap);
            const double active = raw_overlap > 0.0 ? 1.0 : 0.0;
            // d(overlap * diff) = diff * d(overlap) + overlap * d(diff)
            const double coef_diff = overlap + 0.5 * diff * active;
            gq[ah] += coef_diff;
            gq[a] -= coef_diff;
            gu[ah] += diff * active;
            gl[a] -= diff * active;
            any = true;
        }
        if (!any) continue;
        const double s = grad_scale / n;
        for (std::size_t k = 0; k < q.size(); ++k) {
            gq[k] *= s;
            gl[k] *= s;
            gu[k] *= s;
        }
        backprop_into(net, acts, gq, *grads);
        ibp_backprop_into(net, trace, gl, gu, *grads);
    }
    return loss;
}

bool certified(const ParamSet& net, const Observation& s, double eps)
{
    const Tensor q = forward_output(net, to_network_input(s));
    const std::size_t best = greedy_action(q);
    const Interval out = ibp_forward(net, input_ball(s, eps));
    for (std::size_t a = 0; a < q.size(); ++a)
        if (a != best && !(out.lower[best] > out.upper[a])) return false;
    return true;
}

// ---------------------------------------------------------------------------

std::string to_string(Objective o)
{
    switch (o) {
    case Objective::vanilla: return "vanilla";
    case Objective::sa_ddqn: return "sa-ddqn";
    case Objective::radial: return "radial";
    }
    return "vanilla";
}

Objective objective_from_string(const std::string& s)
{
    if (s == "vanilla") return Objective::vanilla;
    if (s == "sa-ddqn") return Objective::sa_ddqn;
    if (s == "radial") return Objective::radial;
    throw std::invalid_argument("unknown objective '" + s + "'");
}

double ExplorationSchedule::at(std::size_t step) const
{
    if (decay_steps == 0 || step >= decay_steps) return end;
    const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
    return start + (end - start) * frac;
}

double TrainConfig::radius_at(std::size_t step) const
{
    if (step < robust_start) return 0.0;
    if (robust_ramp == 0) return robust_radius;
    const double frac = static_cast<double>(step - robust_start) / static_cast<double>(robust_ramp);
    return robust_radius * std::min(1.0, frac);
}

void TrainConfig::validate() const
{
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("train.gamma must lie in (0, 1]");
    if (!(robust_radius >= 0.0)) throw std::invalid_argument("train.robust_radius must be >= 0");
    if (!(sa_cap > 0.0)) throw std::invalid_argument("train.sa_cap must be > 0");
    if (!(sa_weight >= 0.0) || !(adversarial_weight >= 0.0))
        throw std::invalid_argument("loss weights must be >= 0");
    if (!(huber_threshold > 0.0)) throw std::invalid_argument("train.huber_threshold must be > 0");
    if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
    if (!(exploration.start >= 0.0 && exploration.start <= 1.0 && exploration.end >= 0.0 && exploration.end <= 1.0))
        throw std::invalid_argument("exploration rates must lie in [0, 1]");
    if (target_sync == 0) throw std::invalid_argument("train.target_sync must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("train.batch_size must be >= 1");
    if (train_every == 0) throw std::invalid_argument("train.train_every must be >= 1");
    if (replay.capacity < batch_size) throw std::invalid_argument("replay capacity smaller than batch size");
    if (!(replay.priority_exponent >= 0.0)) throw std::invalid_argument("priority exponent must be >= 0");
    if (!(replay.priority_floor > 0.0)) throw std::invalid_argument("priority floor must be > 0");
    if (!(importance_start >= 0.0 && importance_start <= 1.0 && importance_end >= 0.0 && importance_end <= 1.0))
        throw std::invalid_argument("importance exponents must lie in [0, 1]");
    if (conv_channels == 0 || hidden_units == 0) throw std::invalid_argument("network widths must be >= 1");
    if (!(grad_clip_norm >= 0.0)) throw std::invalid_argument("train.grad_clip_norm must be >= 0");
}

ParamSet make_q_network(const EnvSpec& env, const TrainConfig& config)
{
    const Shape in = env.observation_shape();
    std::vector<Layer> layers;
    layers.push_back(make_conv2d("conv1", in, config.conv_channels, env.cell_pixels, env.cell_pixels, 0,
                                 Activation::relu));
    layers.push_back(make_dense("fc1", layers.back().output_shape, config.hidden_units, Activation::relu));
    layers.push_back(make_dense("q", layers.back().output_shape, env.action_count, Activation::identity));
    return ParamSet(std::move(layers));
}

ParamSet initial_q_network(const EnvSpec& env, const TrainConfig& config)
{
    ParamSet net = make_q_network(env, config);
    net.initialize(derive_seed(config.seed, 0x696e6974ULL));
    return net;
}

std::uint64_t training_episode_seed(std::uint64_t config_seed, std::size_t episode)
{
    return derive_seed(config_seed ^ 0x747261696eULL, episode);
}

LossBreakdown minibatch_loss(const ParamSet& online, const ParamSet& target, std::span<const Transition> batch,
                             std::span<const double> weights, const TrainConfig& config, ParamGrads* grads,
                             std::vector<double>* residuals)
{
    LossBreakdown out;
    out.td = td_loss(online, target, batch, weights, config.gamma, config.huber_threshold, grads, residuals);
    if (config.objective == Objective::sa_ddqn) {
        const double n = static_cast<double>(batch.size());
        for (const Transition& t : batch)
            out.regularizer += sa_regularizer(online, t.state, config.robust_radius, config.sa_cap, grads,
                                              config.sa_weight / n) / n;
    } else if (config.objective == Objective::radial) {
        out.adversarial = radial_loss(online, batch, config.robust_radius, grads, config.adversarial_weight);
    }
    out.total = out.td + config.sa_weight * out.regularizer + config.adversarial_weight * out.adversarial;
    return out;
}

namespace {

void clip_gradient_norm(ParamGrads& g, double max_norm)
{
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& t : g.weights)
        for (double v : t.storage()) sq += v * v;
    for (const auto& t : g.biases)
        for (double v : t.storage()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) g.scale(max_norm / norm);
}

}  // namespace

Checkpoint train(const EnvSpec& env_spec, const TrainConfig& config)
{
    env_spec.validate();
    config.validate();
    Checkpoint ckpt{initial_q_network(env_spec, config), env_spec, config, {}};
    if (config.total_steps == 0) return ckpt;

    ParamSet& online = ckpt.params;
    ParamSet target = online;
    Optimizer optimizer(config.optimizer);
    ReplayBuffer replay(config.replay);
    Rng rng(derive_seed(config.seed, 0x6578706cULL));
    auto env = make_env(env_spec);

    std::size_t episode = 0;
    Observation obs = env->reset(training_episode_seed(config.seed, episode));
    EpisodeRecord current;

    for (std::size_t step = 0; step < config.total_steps; ++step) {
        const double explore = config.exploration.at(step);
        const std::size_t action =
            rng.uniform() < explore ? rng.index(env_spec.action_count) : greedy_action(online, obs);
        StepResult res = env->step(action);
        current.episode_return += res.reward;
        current.length = res.step_index;
        replay.push({obs, action, res.reward, res.observation, res.terminal && !res.truncated});
        if (res.terminal) {
            ckpt.curve.push_back(current);
            current = {};
            obs = env->reset(training_episode_seed(config.seed, ++episode));
        } else {
            obs = std::move(res.observation);
        }

        if (step >= config.learning_starts && replay.size() >= config.batch_size && step % config.train_every == 0) {
            const double frac = static_cast<double>(step) / static_cast<double>(config.total_steps);
            const double beta = config.importance_start + (config.importance_end - config.importance_start) * frac;
            const ReplaySample sample = replay.sample(config.batch_size, beta, rng);
            std::vector<Transition> batch;
            batch.reserve(sample.indices.size());
            for (auto idx : sample.indices) batch.push_back(replay.get(idx));

            ParamGrads grads = ParamGrads::zeros_like(online);
            std::vector<double> residuals;
            TrainConfig scheduled = config;
            scheduled.robust_radius = config.radius_at(step);
            const bool robust = config.objective != Objective::vanilla && step >= config.robust_start;
            if (!robust) scheduled.objective = Objective::vanilla;
            const LossBreakdown loss =
                minibatch_loss(online, target, batch, sample.weights, scheduled, &grads, &residuals);
            if (!std::isfinite(loss.total) || !grads.all_finite())
                throw TrainingError("training diverged at step " + std::to_string(step) + " (loss " +
                                    std::to_string(loss.total) + ")");
            clip_gradient_norm(grads, config.grad_clip_norm);
            optimizer.step(online, grads);
            replay.update_priorities(sample.indices, residuals);
        }
        if ((step + 1) % config.target_sync == 0) target = online;
    }
    return ckpt;
}

double greedy_return(const ParamSet& net, const EnvSpec& env_spec, std::uint64_t episode_seed)
{
    auto env = make_env(env_spec);
    Observation obs = env->reset(episode_seed);
    double total = 0.0;
    for (;;) {
        StepResult r = env->step(greedy_action(net, obs));
        total += r.reward;
        if (r.terminal) break;
        obs = std::move(r.observation);
    }
    return total;
}

}  // namespace hsprobe
