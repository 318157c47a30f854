#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsprobe {

/// Dimension list of a tensor, outermost first. Rank is at most 4.
using Shape = std::vector<std::size_t>;

std::size_t shape_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t rank() const noexcept { return shape_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    /// Same data viewed under a new shape with the same element count.
    Tensor reshaped(Shape shape) const;
    void fill(double value);
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> values_;
};

/// Elementwise box [lower, upper].
struct Interval {
    Tensor lower;
    Tensor upper;

    Interval() = default;
    Interval(Tensor lo, Tensor hi);

    /// Box of l-infinity radius `radius` around `center`.
    static Interval around(const Tensor& center, double radius);
    /// `around` intersected with [lo_clip, hi_clip] per element.
    static Interval around_clipped(const Tensor& center, double radius, double lo_clip, double hi_clip);

    bool contains(const Tensor& x) const;
};

}  // namespace hsprobe
