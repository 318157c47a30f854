#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>

#include "hsprobe/observation.hpp"

namespace hsprobe {

// Policy-independent observation transforms. Every family works on the
// [0, 255] pixel scale and clamps its result back into that range.

struct IdentityParams {
    friend bool operator==(const IdentityParams&, const IdentityParams&) = default;
};
struct BrightnessContrastParams {
    double alpha = 1.0;  // contrast
    double beta = 0.0;   // brightness
    friend bool operator==(const BrightnessContrastParams&, const BrightnessContrastParams&) = default;
};
struct MedianBlurParams {
    std::size_t kernel = 1;
    friend bool operator==(const MedianBlurParams&, const MedianBlurParams&) = default;
};
struct RotationParams {
    double degrees = 0.0;
    friend bool operator==(const RotationParams&, const RotationParams&) = default;
};
struct ShiftParams {
    long ti = 0;  // rows
    long tj = 0;  // columns
    bool circular = false;
    friend bool operator==(const ShiftParams&, const ShiftParams&) = default;
};
enum class CornerMode { fixed, seeded };
struct PerspectiveParams {
    double pt_norm = 0.0;
    CornerMode mode = CornerMode::fixed;
    std::uint64_t seed = 0;
    friend bool operator==(const PerspectiveParams&, const PerspectiveParams&) = default;
};
struct DctArtifactParams {
    double kappa = 0.0;
    friend bool operator==(const DctArtifactParams&, const DctArtifactParams&) = default;
};

using PerturbationSpec = std::variant<IdentityParams, BrightnessContrastParams, MedianBlurParams, RotationParams,
                                      ShiftParams, PerspectiveParams, DctArtifactParams>;

/// Family tag: identity, brightness_contrast, median_blur, rotation, shift, perspective, dct_artifacts.
std::string family_name(const PerturbationSpec& spec);
/// Throws std::invalid_argument if the parameters break the family's invariants.
void validate(const PerturbationSpec& spec);
std::string describe(const PerturbationSpec& spec);

/// s * alpha + beta per pixel.
Observation brightness_contrast(const Observation& s, double alpha, double beta);
/// Per-channel k x k median with edge replication. k must be odd, 1 <= k <= min(H, W).
Observation median_blur(const Observation& s, std::size_t k);
/// Rotation about the image center, inverse-mapped bilinear sampling, fill 0.
Observation rotate(const Observation& s, double degrees);
/// Pixel (i, j) moves to (i + ti, j + tj); vacated pixels are 0 unless circular.
Observation shift(const Observation& s, long ti, long tj, bool circular = false);

/// Row-major 3x3 homogeneous matrix acting on (row, col, 1).
using Homography = std::array<double, 9>;

struct Point2 {
    double i = 0.0;  // row
    double j = 0.0;  // column
};

/// Matrix mapping each src[k] to dst[k] (up to scale), normalized so the
/// bottom-right entry is 1. Throws on a degenerate correspondence.
Homography homography_from_corners(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst);
/// Image corners (top-left, top-right, bottom-right, bottom-left) and their
/// displaced positions for the given norm and corner mode.
std::array<Point2, 4> image_corners(std::size_t height, std::size_t width);
std::array<Point2, 4> displaced_corners(std::size_t height, std::size_t width, const PerspectiveParams& p);
/// Output pixel p samples the input at the inverse image of p under `forward`.
Observation warp_perspective(const Observation& s, const Homography& forward);
Observation perspective(const Observation& s, const PerspectiveParams& p);

/// 8x8 block DCT-II, quantization with step 1 + kappa * 8 * (u + v) rounding toward
/// zero (no coefficient grows in magnitude), inverse DCT.
/// kappa = 0 skips quantization entirely.
Observation dct_artifacts(const Observation& s, double kappa);

inline constexpr std::size_t kDctBlock = 8;
inline constexpr double kDctSlope = 8.0;

/// Orthonormal 8x8 DCT-II / DCT-III of one block (row-major).
std::array<double, 64> dct8x8(const std::array<double, 64>& block);
std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs);

Observation apply(const PerturbationSpec& spec, const Observation& s);

}  // namespace hsprobe
