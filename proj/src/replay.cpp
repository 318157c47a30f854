#include <algorithm>
#include <cmath>
#include <limits>

#include "hsprobe/qlearning.hpp"

namespace hsprobe {

namespace {

std::vector<std::uint8_t> pack_pixels(const Observation& o)
{
    std::vector<std::uint8_t> out(o.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(o.pixels[i]), 0L, 255L));
    return out;
}

Observation unpack_pixels(const std::vector<std::uint8_t>& v, std::size_t h, std::size_t w, std::size_t c)
{
    Observation o(h, w, c);
    for (std::size_t i = 0; i < v.size(); ++i) o.pixels[i] = v[i];
    return o;
}

}  // namespace

ReplayBuffer::ReplayBuffer(ReplayConfig config) : config_(config)
{
    if (config_.capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    if (!(config_.priority_exponent >= 0.0)) throw std::invalid_argument("priority exponent must be >= 0");
    if (!(config_.priority_floor > 0.0)) throw std::invalid_argument("priority floor must be > 0");
    while (leaves_ < config_.capacity) leaves_ *= 2;
    items_.resize(config_.capacity);
    priorities_.assign(config_.capacity, 0.0);
    sum_tree_.assign(2 * leaves_, 0.0);
    min_tree_.assign(2 * leaves_, std::numeric_limits<double>::infinity());
}

void ReplayBuffer::tree_set(std::size_t index, double value)
{
    std::size_t node = leaves_ + index;
    sum_tree_[node] = value;
    min_tree_[node] = value;
    for (node /= 2; node >= 1; node /= 2) {
        sum_tree_[node] = sum_tree_[2 * node] + sum_tree_[2 * node + 1];
        min_tree_[node] = std::min(min_tree_[2 * node], min_tree_[2 * node + 1]);
    }
}

std::size_t ReplayBuffer::tree_find(double mass) const
{
    std::size_t node = 1;
    while (node < leaves_) {
        const std::size_t left = 2 * node;
        if (mass < sum_tree_[left] || sum_tree_[left + 1] <= 0.0) {
            node = left;
        } else {
            mass -= sum_tree_[left];
            node = left + 1;
        }
    }
    return std::min(node - leaves_, size_ - 1);
}

void ReplayBuffer::push(const Transition& t)
{
    if (!t.state.same_shape(t.next_state)) throw ShapeError("transition states differ in shape");
    if (size_ == 0) {
        height_ = t.state.height;
        width_ = t.state.width;
        channels_ = t.state.channels;
    } else if (t.state.height != height_ || t.state.width != width_ || t.state.channels != channels_) {
        throw ShapeError("transition observation shape differs from buffer contents");
    }
    Packed& slot = items_[next_];
    slot.state = pack_pixels(t.state);
    slot.next_state = pack_pixels(t.next_state);
    slot.action = t.action;
    slot.reward = t.reward;
    slot.terminal = t.terminal;
    priorities_[next_] = max_priority_;
    tree_set(next_, std::pow(max_priority_, config_.priority_exponent));
    next_ = (next_ + 1) % config_.capacity;
    size_ = std::min(size_ + 1, config_.capacity);
}

Transition ReplayBuffer::get(std::size_t index) const
{
    if (index >= size_) throw std::out_of_range("replay index out of range");
    const Packed& p = items_[index];
    return {unpack_pixels(p.state, height_, width_, channels_), p.action, p.reward,
            unpack_pixels(p.next_state, height_, width_, channels_), p.terminal};
}

std::vector<double> ReplayBuffer::probabilities() const
{
    std::vector<double> out(size_);
    const double total = sum_tree_[1];
    for (std::size_t i = 0; i < size_; ++i) out[i] = sum_tree_[leaves_ + i] / total;
    return out;
}

ReplaySample ReplayBuffer::sample(std::size_t batch_size, double importance_exponent, Rng& rng) const
{
    if (size_ == 0) throw std::invalid_argument("cannot sample from an empty replay buffer");
    if (batch_size == 0 || batch_size > size_)
        throw std::invalid_argument("batch size " + std::to_string(batch_size) + " exceeds replay size " +
                                    std::to_string(size_));
    if (!(importance_exponent >= 0.0 && importance_exponent <= 1.0))
        throw std::invalid_argument("importance exponent must lie in [0, 1]");
    ReplaySample out;
    const double total = sum_tree_[1];
    const double n = static_cast<double>(size_);
    const double max_weight = std::pow(n * min_tree_[1] / total, -importance_exponent);
    const double segment = total / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double mass = segment * (static_cast<double>(i) + rng.uniform());
        const std::size_t idx = tree_find(mass);
        const double p = sum_tree_[leaves_ + idx] / total;
        out.indices.push_back(idx);
        out.probabilities.push_back(p);
        out.weights.push_back(std::pow(n * p, -importance_exponent) / max_weight);
    }
    return out;
}

void ReplayBuffer::set_priority(std::size_t index, double priority)
{
    if (index >= size_) throw std::out_of_range("replay index out of range");
    if (!(priority > 0.0) || !std::isfinite(priority)) throw std::invalid_argument("priority must be positive and finite");
    priorities_[index] = priority;
    max_priority_ = std::max(max_priority_, priority);
    tree_set(index, std::pow(priority, config_.priority_exponent));
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors)
{
    if (indices.size() != td_errors.size()) throw std::invalid_argument("indices and td errors differ in length");
    for (std::size_t k = 0; k < indices.size(); ++k)
        set_priority(indices[k], std::fabs(td_errors[k]) + config_.priority_floor);
}

}  // namespace hsprobe
