#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "hsprobe/tensor.hpp"

namespace hsprobe {

/// Height x width x channels pixel grid on the 8-bit scale [0, 255].
struct Observation {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;

    Observation() = default;
    Observation(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill)
    {
    }

    double& at(std::size_t i, std::size_t j, std::size_t c = 0) { return pixels[(i * width + j) * channels + c]; }
    double at(std::size_t i, std::size_t j, std::size_t c = 0) const { return pixels[(i * width + j) * channels + c]; }

    Shape shape() const { return {height, width, channels}; }
    bool same_shape(const Observation& o) const
    {
        return height == o.height && width == o.width && channels == o.channels;
    }
    /// Every pixel finite and inside [0, 255].
    bool valid() const;

    friend bool operator==(const Observation&, const Observation&) = default;
};

inline constexpr double kPixelMax = 255.0;

/// Pixels scaled to [0, 1], shaped {H, W, C}: the network input convention.
Tensor to_network_input(const Observation& obs);
/// Inverse of to_network_input; values clamped to the pixel range.
Observation from_network_input(const Tensor& t);

void clamp_pixels(Observation& obs);

/// Binary PGM (P5) of channel 0, values rounded to 8 bits.
void write_pgm(const std::filesystem::path& path, const Observation& obs);
/// Single-channel observation from a binary PGM with maxval 255.
Observation read_pgm(const std::filesystem::path& path);

}  // namespace hsprobe
