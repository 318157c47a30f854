#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hsprobe/tensor.hpp"

namespace hsprobe {

enum class LayerKind { dense, conv2d };
enum class Activation { identity, relu };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

/// One affine layer followed by an elementwise activation.
///
/// Dense layers flatten their input and hold weights shaped {out, in}.
/// Convolutions work on height x width x channels inputs with weights shaped
/// {c_out, k, k, c_in}, square kernels, and zero padding.
struct Layer {
    std::string name;
    LayerKind kind = LayerKind::dense;
    Activation activation = Activation::identity;
    Shape input_shape;
    Shape output_shape;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
    Tensor weights;
    Tensor bias;

    friend bool operator==(const Layer&, const Layer&) = default;
};

Layer make_dense(std::string name, Shape input_shape, std::size_t outputs, Activation act);
Layer make_conv2d(std::string name, Shape input_shape, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, Activation act);

/// Ordered layer stack with chained shapes.
class ParamSet {
public:
    ParamSet() = default;
    explicit ParamSet(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t size() const noexcept { return layers_.size(); }
    bool empty() const noexcept { return layers_.empty(); }

    const Shape& input_shape() const;
    const Shape& output_shape() const;
    std::size_t parameter_count() const;

    /// Throws ShapeError naming the first layer whose shapes do not chain.
    void validate() const;

    /// Fan-in scaled uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    void initialize(std::uint64_t seed);

    friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
    std::vector<Layer> layers_;
};

/// Gradient buffers laid out like a ParamSet.
struct ParamGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    static ParamGrads zeros_like(const ParamSet& net);
    void add(const ParamGrads& other, double scale = 1.0);
    void scale(double factor);
    bool all_finite() const;
};

/// Input followed by every layer's post-activation output.
using Activations = std::vector<Tensor>;

Activations forward(const ParamSet& net, const Tensor& input);
Tensor forward_output(const ParamSet& net, const Tensor& input);

struct Backprop {
    Tensor input_grad;
    ParamGrads param_grads;
};

/// Reverse-mode gradients of <output, output_grad> w.r.t. input and parameters.
Backprop backprop(const ParamSet& net, const Tensor& input, const Tensor& output_grad);
/// Same as `backprop` but reuses stored activations and accumulates into `grads`.
Tensor backprop_into(const ParamSet& net, const Activations& acts, const Tensor& output_grad, ParamGrads& grads);

/// Interval bounds after every layer, starting with the input box.
using IntervalTrace = std::vector<Interval>;

Interval ibp_forward(const ParamSet& net, const Interval& input);
IntervalTrace ibp_trace(const ParamSet& net, const Interval& input);

/// Gradients of <lower_out, lower_grad> + <upper_out, upper_grad> through the
/// interval propagation. Accumulates parameter gradients; returns gradients
/// with respect to the input lower and upper bounds.
Interval ibp_backprop_into(const ParamSet& net, const IntervalTrace& trace, const Tensor& lower_grad,
                           const Tensor& upper_grad, ParamGrads& grads);

// Versioned text serialization. Values are written with 17 significant digits.
inline constexpr const char* kParamSetFormat = "hsprobe-paramset";
inline constexpr int kParamSetVersion = 1;

void write_paramset(std::ostream& out, const ParamSet& net, const std::string& tag);
/// Reads one paramset block. Returns the tag stored with it.
ParamSet read_paramset(std::istream& in, std::string* tag = nullptr);

std::string paramset_to_string(const ParamSet& net, const std::string& tag);
ParamSet paramset_from_string(const std::string& text, std::string* tag = nullptr);

/// FNV-1a digest of the serialized parameters, as 16 hex digits.
std::string paramset_digest(const ParamSet& net);

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hsprobe
