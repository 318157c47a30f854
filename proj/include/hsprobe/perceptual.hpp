#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsprobe/network.hpp"
#include "hsprobe/observation.hpp"

namespace hsprobe {

/// Fixed convolutional feature extractor for the perceptual distance.
/// Never trained; weights come from a seeded generator and are pinned by a
/// versioned asset file.
struct FeatureNet {
    ParamSet net;
    /// One nonnegative weight vector of length C_l per layer.
    std::vector<std::vector<double>> channel_weights;
    std::string version;

    std::size_t input_size() const { return net.input_shape().at(0); }
    void validate() const;
};

inline constexpr const char* kFeatureNetVersion = "featurenet-v1";
inline constexpr std::uint64_t kFeatureNetSeed = 0x4c50495053ULL;
inline constexpr std::size_t kFeatureNetInput = 36;

/// 36x36x1 input, three 3x3 stride-2 convolutions (8/16/16 channels, relu),
/// all channel weights 1.
FeatureNet make_reference_feature_net();

void save_feature_net(const std::filesystem::path& path, const FeatureNet& f);
/// Throws FormatError when the asset's tag is not a known feature-net version.
FeatureNet load_feature_net(const std::filesystem::path& path);
/// Asset shipped with the build if present, otherwise the seeded construction.
FeatureNet default_feature_net();

/// Channel-averaged grayscale, area-resampled to size x size, scaled to [0, 1].
Tensor resample_area(const Observation& s, std::size_t size);

/// Per-layer activations with each spatial site's channel vector scaled to
/// unit l2 norm (all-zero vectors stay zero).
std::vector<Tensor> normalized_activations(const FeatureNet& f, const Observation& s);

/// sum_l 1/(H_l W_l) sum_{h,w} || w_l * (y1_hw - y2_hw) ||^2 over normalized activations.
double lpips_from_activations(const FeatureNet& f, const std::vector<Tensor>& a, const std::vector<Tensor>& b);
double lpips(const FeatureNet& f, const Observation& s, const Observation& s_hat);

}  // namespace hsprobe
