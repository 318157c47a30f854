#include "hsprobe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hsprobe {

std::size_t shape_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

static void check_rank(const Shape& shape)
{
    if (shape.size() > 4) throw ShapeError("tensor rank exceeds 4: " + shape_to_string(shape));
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape))
{
    check_rank(shape_);
    values_.assign(shape_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values))
{
    check_rank(shape_);
    if (values_.size() != shape_count(shape_))
        throw ShapeError("tensor data length " + std::to_string(values_.size()) + " does not match shape " +
                         shape_to_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), values_);
}

void Tensor::fill(double value)
{
    std::fill(values_.begin(), values_.end(), value);
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Interval::Interval(Tensor lo, Tensor hi) : lower(std::move(lo)), upper(std::move(hi))
{
    if (lower.shape() != upper.shape())
        throw ShapeError("interval bounds differ in shape: " + shape_to_string(lower.shape()) + " vs " +
                         shape_to_string(upper.shape()));
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] <= upper[i])) throw std::invalid_argument("interval lower bound exceeds upper bound");
}

Interval Interval::around(const Tensor& center, double radius)
{
    if (!(radius >= 0.0)) throw std::invalid_argument("interval radius must be nonnegative");
    Tensor lo = center, hi = center;
    for (std::size_t i = 0; i < center.size(); ++i) {
        lo[i] -= radius;
        hi[i] += radius;
    }
    return {std::move(lo), std::move(hi)};
}

Interval Interval::around_clipped(const Tensor& center, double radius, double lo_clip, double hi_clip)
{
    Interval box = around(center, radius);
    for (std::size_t i = 0; i < center.size(); ++i) {
        box.lower[i] = std::clamp(box.lower[i], lo_clip, hi_clip);
        box.upper[i] = std::clamp(box.upper[i], lo_clip, hi_clip);
    }
    return box;
}

bool Interval::contains(const Tensor& x) const
{
    if (x.shape() != lower.shape()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
}

}  // namespace hsprobe
