#include "hsprobe/network.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "hsprobe/rng.hpp"

namespace hsprobe {

std::string to_string(LayerKind kind)
{
    return kind == LayerKind::dense ? "dense" : "conv2d";
}

std::string to_string(Activation act)
{
    return act == Activation::identity ? "identity" : "relu";
}

LayerKind layer_kind_from_string(const std::string& s)
{
    if (s == "dense") return LayerKind::dense;
    if (s == "conv2d") return LayerKind::conv2d;
    throw FormatError("unknown layer kind '" + s + "'");
}

Activation activation_from_string(const std::string& s)
{
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unsupported activation '" + s + "'");
}

Layer make_dense(std::string name, Shape input_shape, std::size_t outputs, Activation act)
{
    Layer l;
    l.name = std::move(name);
    l.kind = LayerKind::dense;
    l.activation = act;
    const std::size_t inputs = shape_count(input_shape);
    l.input_shape = std::move(input_shape);
    l.output_shape = {outputs};
    l.weights = Tensor({outputs, inputs});
    l.bias = Tensor({outputs});
    return l;
}

Layer make_conv2d(std::string name, Shape input_shape, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, Activation act)
{
    if (input_shape.size() != 3) throw ShapeError("conv2d layer '" + name + "' needs an HxWxC input shape");
    if (kernel == 0 || stride == 0) throw std::invalid_argument("conv2d layer '" + name + "': kernel and stride must be >= 1");
    const std::size_t h = input_shape[0] + 2 * padding, w = input_shape[1] + 2 * padding;
    if (h < kernel || w < kernel) throw ShapeError("conv2d layer '" + name + "': kernel larger than padded input");
    Layer l;
    l.name = std::move(name);
    l.kind = LayerKind::conv2d;
    l.activation = act;
    l.kernel = kernel;
    l.stride = stride;
    l.padding = padding;
    l.output_shape = {(h - kernel) / stride + 1, (w - kernel) / stride + 1, out_channels};
    l.weights = Tensor({out_channels, kernel, kernel, input_shape[2]});
    l.bias = Tensor({out_channels});
    l.input_shape = std::move(input_shape);
    return l;
}

ParamSet::ParamSet(std::vector<Layer> layers) : layers_(std::move(layers))
{
    validate();
}

const Shape& ParamSet::input_shape() const
{
    if (layers_.empty()) throw ShapeError("empty network has no input shape");
    return layers_.front().input_shape;
}

const Shape& ParamSet::output_shape() const
{
    if (layers_.empty()) throw ShapeError("empty network has no output shape");
    return layers_.back().output_shape;
}

std::size_t ParamSet::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

void ParamSet::validate() const
{
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        const std::string where = "layer " + std::to_string(i) + " ('" + l.name + "')";
        if (i > 0 && layers_[i - 1].output_shape != l.input_shape)
            throw ShapeError(where + " expects input " + shape_to_string(l.input_shape) + " but previous layer emits " +
                             shape_to_string(layers_[i - 1].output_shape));
        if (l.kind == LayerKind::dense) {
            const Shape want{l.output_shape.at(0), shape_count(l.input_shape)};
            if (l.output_shape.size() != 1 || l.weights.shape() != want || l.bias.shape() != Shape{want[0]})
                throw ShapeError(where + ": dense weight/bias shapes inconsistent");
        } else {
            if (l.input_shape.size() != 3 || l.output_shape.size() != 3)
                throw ShapeError(where + ": conv2d needs rank-3 shapes");
            const std::size_t co = l.output_shape[2], k = l.kernel;
            if (l.stride == 0 || k == 0) throw ShapeError(where + ": zero kernel or stride");
            const std::size_t h = l.input_shape[0] + 2 * l.padding, w = l.input_shape[1] + 2 * l.padding;
            if (h < k || w < k || (h - k) / l.stride + 1 != l.output_shape[0] ||
                (w - k) / l.stride + 1 != l.output_shape[1])
                throw ShapeError(where + ": conv2d output shape inconsistent with kernel/stride/padding");
            if (l.weights.shape() != Shape{co, k, k, l.input_shape[2]} || l.bias.shape() != Shape{co})
                throw ShapeError(where + ": conv2d weight/bias shapes inconsistent");
        }
    }
}

void ParamSet::initialize(std::uint64_t seed)
{
    Rng rng(seed);
    for (auto& l : layers_) {
        const std::size_t fan_in = l.kind == LayerKind::dense ? l.weights.shape()[1]
                                                              : l.kernel * l.kernel * l.input_shape[2];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& w : l.weights.storage()) w = rng.uniform(-bound, bound);
        for (auto& b : l.bias.storage()) b = rng.uniform(-bound, bound);
    }
}

ParamGrads ParamGrads::zeros_like(const ParamSet& net)
{
    ParamGrads g;
    for (const auto& l : net.layers()) {
        g.weights.emplace_back(l.weights.shape());
        g.biases.emplace_back(l.bias.shape());
    }
    return g;
}

void ParamGrads::add(const ParamGrads& other, double scale)
{
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += scale * other.weights[l][i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += scale * other.biases[l][i];
    }
}

void ParamGrads::scale(double factor)
{
    for (auto& t : weights)
        for (auto& v : t.storage()) v *= factor;
    for (auto& t : biases)
        for (auto& v : t.storage()) v *= factor;
}

bool ParamGrads::all_finite() const
{
    for (const auto& t : weights)
        if (!t.all_finite()) return false;
    for (const auto& t : biases)
        if (!t.all_finite()) return false;
    return true;
}

namespace {

enum class WeightMode { signed_weights, absolute_weights };

inline double weight_value(double w, WeightMode mode)
{
    return mode == WeightMode::absolute_weights ? std::fabs(w) : w;
}

// out = W x (+ b)
Tensor linear_apply(const Layer& l, const Tensor& x, WeightMode mode, bool with_bias)
{
    Tensor out(l.output_shape);
    const double* w = l.weights.storage().data();
    const double* xin = x.storage().data();
    double* o = out.storage().data();
    if (l.kind == LayerKind::dense) {
        const std::size_t n_out = l.weights.shape()[0], n_in = l.weights.shape()[1];
        for (std::size_t r = 0; r < n_out; ++r) {
            const double* row = w + r * n_in;
            double acc = with_bias ? l.bias[r] : 0.0;
            if (mode == WeightMode::signed_weights) {
                for (std::size_t c = 0; c < n_in; ++c) acc += row[c] * xin[c];
            } else {
                for (std::size_t c = 0; c < n_in; ++c) acc += std::fabs(row[c]) * xin[c];
            }
            o[r] = acc;
        }
        return out;
    }
    const std::size_t H = l.input_shape[0], W = l.input_shape[1], C = l.input_shape[2];
    const std::size_t OH = l.output_shape[0], OW = l.output_shape[1], CO = l.output_shape[2];
    const std::size_t k = l.kernel, s = l.stride;
    const long p = static_cast<long>(l.padding);
    for (std::size_t oh = 0; oh < OH; ++oh)
        for (std::size_t ow = 0; ow < OW; ++ow)
            for (std::size_t co = 0; co < CO; ++co) {
                double acc = with_bias ? l.bias[co] : 0.0;
                for (std::size_t kh = 0; kh < k; ++kh) {
                    const long ih = static_cast<long>(oh * s + kh) - p;
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const long iw = static_cast<long>(ow * s + kw) - p;
                        if (iw < 0 || iw >= static_cast<long>(W)) continue;
                        const double* wk = w + ((co * k + kh) * k + kw) * C;
                        const double* xi = xin + (static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)) * C;
                        for (std::size_t ci = 0; ci < C; ++ci) acc += weight_value(wk[ci], mode) * xi[ci];
                    }
                }
                o[(oh * OW + ow) * CO + co] = acc;
            }
    return out;
}

// Returns W^T g shaped like the layer input.
Tensor linear_transpose(const Layer& l, const Tensor& g, WeightMode mode)
{
    Tensor out(l.input_shape);
    const double* w = l.weights.storage().data();
    const double* gv = g.storage().data();
    double* o = out.storage().data();
    if (l.kind == LayerKind::dense) {
        const std::size_t n_out = l.weights.shape()[0], n_in = l.weights.shape()[1];
        for (std::size_t r = 0; r < n_out; ++r) {
            const double gr = gv[r];
            if (gr == 0.0) continue;
            const double* row = w + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) o[c] += weight_value(row[c], mode) * gr;
        }
        return out;
    }
    const std::size_t H = l.input_shape[0], W = l.input_shape[1], C = l.input_shape[2];
    const std::size_t OH = l.output_shape[0], OW = l.output_shape[1], CO = l.output_shape[2];
    const std::size_t k = l.kernel, s = l.stride;
    const long p = static_cast<long>(l.padding);
    for (std::size_t oh = 0; oh < OH; ++oh)
        for (std::size_t ow = 0; ow < OW; ++ow)
            for (std::size_t co = 0; co < CO; ++co) {
                const double go = gv[(oh * OW + ow) * CO + co];
                if (go == 0.0) continue;
                for (std::size_t kh = 0; kh < k; ++kh) {
                    const long ih = static_cast<long>(oh * s + kh) - p;
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const long iw = static_cast<long>(ow * s + kw) - p;
                        if (iw < 0 || iw >= static_cast<long>(W)) continue;
                        const double* wk = w + ((co * k + kh) * k + kw) * C;
                        double* xi = o + (static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)) * C;
                        for (std::size_t ci = 0; ci < C; ++ci) xi[ci] += weight_value(wk[ci], mode) * go;
                    }
                }
            }
    return out;
}

// dW += g x^T (times sign(W) in absolute mode); db += g when requested.
void linear_param_grad(const Layer& l, const Tensor& x, const Tensor& g, WeightMode mode, bool with_bias, Tensor& dw,
                       Tensor& db)
{
    const double* w = l.weights.storage().data();
    const double* xin = x.storage().data();
    const double* gv = g.storage().data();
    double* d = dw.storage().data();
    auto factor = [&](std::size_t idx) {
        if (mode == WeightMode::signed_weights) return 1.0;
        return w[idx] > 0.0 ? 1.0 : (w[idx] < 0.0 ? -1.0 : 0.0);
    };
    if (l.kind == LayerKind::dense) {
        const std::size_t n_out = l.weights.shape()[0], n_in = l.weights.shape()[1];
        for (std::size_t r = 0; r < n_out; ++r) {
            const double gr = gv[r];
            if (with_bias) db[r] += gr;
            if (gr == 0.0) continue;
            double* drow = d + r * n_in;
            if (mode == WeightMode::signed_weights) {
                for (std::size_t c = 0; c < n_in; ++c) drow[c] += gr * xin[c];
            } else {
                for (std::size_t c = 0; c < n_in; ++c) drow[c] += gr * xin[c] * factor(r * n_in + c);
            }
        }
        return;
    }
    const std::size_t H = l.input_shape[0], W = l.input_shape[1], C = l.input_shape[2];
    const std::size_t OH = l.output_shape[0], OW = l.output_shape[1], CO = l.output_shape[2];
    const std::size_t k = l.kernel, s = l.stride;
    const long p = static_cast<long>(l.padding);
    for (std::size_t oh = 0; oh < OH; ++oh)
        for (std::size_t ow = 0; ow < OW; ++ow)
            for (std::size_t co = 0; co < CO; ++co) {
                const double go = gv[(oh * OW + ow) * CO + co];
                if (with_bias) db[co] += go;
                if (go == 0.0) continue;
                for (std::size_t kh = 0; kh < k; ++kh) {
                    const long ih = static_cast<long>(oh * s + kh) - p;
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const long iw = static_cast<long>(ow * s + kw) - p;
                        if (iw < 0 || iw >= static_cast<long>(W)) continue;
                        const std::size_t wbase = ((co * k + kh) * k + kw) * C;
                        const double* xi = xin + (static_cast<std::size_t>(ih) * W + static_cast<std::size_t>(iw)) * C;
                        for (std::size_t ci = 0; ci < C; ++ci) d[wbase + ci] += go * xi[ci] * factor(wbase + ci);
                    }
                }
            }
}

void activate(Activation act, Tensor& t)
{
    if (act == Activation::relu)
        for (auto& v : t.storage()) v = v > 0.0 ? v : 0.0;
}

// Gradient through the activation, using the post-activation value.
void activation_backward(Activation act, const Tensor& post, Tensor& g)
{
    if (act == Activation::relu)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!(post[i] > 0.0)) g[i] = 0.0;
}

void check_input(const ParamSet& net, const Shape& shape)
{
    if (net.empty()) throw ShapeError("network has no layers");
    const Layer& first = net.layers().front();
    if (shape != first.input_shape)
        throw ShapeError("input shape " + shape_to_string(shape) + " does not match layer 0 ('" + first.name +
                         "') input " + shape_to_string(first.input_shape));
}

}  // namespace

Activations forward(const ParamSet& net, const Tensor& input)
{
    check_input(net, input.shape());
    Activations acts;
    acts.reserve(net.size() + 1);
    acts.push_back(input);
    for (const auto& l : net.layers()) {
        Tensor z = linear_apply(l, acts.back(), WeightMode::signed_weights, true);
        activate(l.activation, z);
        acts.push_back(std::move(z));
    }
    return acts;
}

Tensor forward_output(const ParamSet& net, const Tensor& input)
{
    check_input(net, input.shape());
    Tensor x = input;
    for (const auto& l : net.layers()) {
        x = linear_apply(l, x, WeightMode::signed_weights, true);
        activate(l.activation, x);
    }
    return x;
}

Tensor backprop_into(const ParamSet& net, const Activations& acts, const Tensor& output_grad, ParamGrads& grads)
{
    if (output_grad.shape() != net.output_shape())
        throw ShapeError("output gradient shape " + shape_to_string(output_grad.shape()) +
                         " does not match network output " + shape_to_string(net.output_shape()));
    Tensor g = output_grad;
    for (std::size_t li = net.size(); li-- > 0;) {
        const Layer& l = net.layers()[li];
        activation_backward(l.activation, acts[li + 1], g);
        linear_param_grad(l, acts[li], g, WeightMode::signed_weights, true, grads.weights[li], grads.biases[li]);
        g = linear_transpose(l, g, WeightMode::signed_weights);
    }
    return g;
}

Backprop backprop(const ParamSet& net, const Tensor& input, const Tensor& output_grad)
{
    const Activations acts = forward(net, input);
    Backprop out{Tensor{}, ParamGrads::zeros_like(net)};
    out.input_grad = backprop_into(net, acts, output_grad, out.param_grads);
    return out;
}

IntervalTrace ibp_trace(const ParamSet& net, const Interval& input)
{
    check_input(net, input.lower.shape());
    IntervalTrace trace;
    trace.reserve(net.size() + 1);
    trace.push_back(input);
    for (const auto& l : net.layers()) {
        const Interval& in = trace.back();
        Tensor center(in.lower.shape()), radius(in.lower.shape());
        for (std::size_t i = 0; i < center.size(); ++i) {
            center[i] = 0.5 * (in.lower[i] + in.upper[i]);
            radius[i] = 0.5 * (in.upper[i] - in.lower[i]);
        }
        Tensor c = linear_apply(l, center, WeightMode::signed_weights, true);
        Tensor r = linear_apply(l, radius, WeightMode::absolute_weights, false);
        Tensor lo(c.shape()), hi(c.shape());
        for (std::size_t i = 0; i < c.size(); ++i) {
            lo[i] = c[i] - r[i];
            hi[i] = c[i] + r[i];
        }
        activate(l.activation, lo);
        activate(l.activation, hi);
        trace.emplace_back(std::move(lo), std::move(hi));
    }
    return trace;
}

Interval ibp_forward(const ParamSet& net, const Interval& input)
{
    return std::move(ibp_trace(net, input).back());
}

Interval ibp_backprop_into(const ParamSet& net, const IntervalTrace& trace, const Tensor& lower_grad,
                           const Tensor& upper_grad, ParamGrads& grads)
{
    Tensor gl = lower_grad, gu = upper_grad;
    for (std::size_t li = net.size(); li-- > 0;) {
        const Layer& l = net.layers()[li];
        activation_backward(l.activation, trace[li + 1].lower, gl);
        activation_backward(l.activation, trace[li + 1].upper, gu);
        // lo = c - r, hi = c + r
        Tensor gc(gl.shape()), gr(gl.shape());
        for (std::size_t i = 0; i < gc.size(); ++i) {
            gc[i] = gl[i] + gu[i];
            gr[i] = gu[i] - gl[i];
        }
        const Interval& in = trace[li];
        Tensor center(in.lower.shape()), radius(in.lower.shape());
        for (std::size_t i = 0; i < center.size(); ++i) {
            center[i] = 0.5 * (in.lower[i] + in.upper[i]);
            radius[i] = 0.5 * (in.upper[i] - in.lower[i]);
        }
        linear_param_grad(l, center, gc, WeightMode::signed_weights, true, grads.weights[li], grads.biases[li]);
        linear_param_grad(l, radius, gr, WeightMode::absolute_weights, false, grads.weights[li], grads.biases[li]);
        Tensor gc_in = linear_transpose(l, gc, WeightMode::signed_weights);
        Tensor gr_in = linear_transpose(l, gr, WeightMode::absolute_weights);
        gl = Tensor(gc_in.shape());
        gu = Tensor(gc_in.shape());
        for (std::size_t i = 0; i < gl.size(); ++i) {
            gl[i] = 0.5 * (gc_in[i] - gr_in[i]);
            gu[i] = 0.5 * (gc_in[i] + gr_in[i]);
        }
    }
    return {std::move(gl), std::move(gu)};
}

// ---------------------------------------------------------------------------
// Serialization
//
//   hsprobe-paramset 1
//   tag <tag>
//   layers <n>
//   layer <name> <kind> <activation> kernel <k> stride <s> padding <p>
//   input <rank> <dims...>
//   output <rank> <dims...>
//   weights <count> <values...>
//   bias <count> <values...>
//   end-paramset

namespace {

void write_real(std::ostream& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

void write_values(std::ostream& out, const char* label, const Tensor& t)
{
    out << label << ' ' << t.size();
    for (double v : t.storage()) {
        out << ' ';
        write_real(out, v);
    }
    out << '\n';
}

void write_shape(std::ostream& out, const char* label, const Shape& s)
{
    out << label << ' ' << s.size();
    for (auto d : s) out << ' ' << d;
    out << '\n';
}

std::string expect_word(std::istream& in, const char* word)
{
    std::string got;
    if (!(in >> got)) throw FormatError(std::string("paramset truncated: expected '") + word + "'");
    if (got != word) throw FormatError(std::string("paramset malformed: expected '") + word + "', found '" + got + "'");
    return got;
}

template <class T>
T read_number(std::istream& in, const char* what)
{
    std::string tok;
    if (!(in >> tok)) throw FormatError(std::string("paramset truncated while reading ") + what);
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        char* end = nullptr;
        value = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) throw FormatError(std::string("bad number for ") + what + ": " + tok);
    } else {
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw FormatError(std::string("bad integer for ") + what + ": " + tok);
    }
    return value;
}

Shape read_shape(std::istream& in, const char* label)
{
    expect_word(in, label);
    const auto rank = read_number<std::size_t>(in, "rank");
    if (rank > 4) throw FormatError("paramset shape rank exceeds 4");
    Shape s(rank);
    for (auto& d : s) d = read_number<std::size_t>(in, "dimension");
    return s;
}

Tensor read_values(std::istream& in, const char* label, const Shape& shape)
{
    expect_word(in, label);
    const auto count = read_number<std::size_t>(in, "value count");
    if (count != shape_count(shape)) throw FormatError(std::string("paramset ") + label + " count does not match shape");
    std::vector<double> v(count);
    for (auto& x : v) {
        x = read_number<double>(in, label);
        if (!std::isfinite(x)) throw FormatError("paramset contains a non-finite value");
    }
    return Tensor(shape, std::move(v));
}

}  // namespace

void write_paramset(std::ostream& out, const ParamSet& net, const std::string& tag)
{
    out << kParamSetFormat << ' ' << kParamSetVersion << '\n';
    out << "tag " << (tag.empty() ? "-" : tag) << '\n';
    out << "layers " << net.size() << '\n';
    for (const auto& l : net.layers()) {
        out << "layer " << l.name << ' ' << to_string(l.kind) << ' ' << to_string(l.activation) << " kernel "
            << l.kernel << " stride " << l.stride << " padding " << l.padding << '\n';
        write_shape(out, "input", l.input_shape);
        write_shape(out, "output", l.output_shape);
        write_values(out, "weights", l.weights);
        write_values(out, "bias", l.bias);
    }
    out << "end-paramset\n";
}

ParamSet read_paramset(std::istream& in, std::string* tag)
{
    expect_word(in, kParamSetFormat);
    const int version = read_number<int>(in, "version");
    if (version != kParamSetVersion)
        throw FormatError("paramset version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kParamSetVersion) + ")");
    expect_word(in, "tag");
    std::string t;
    if (!(in >> t)) throw FormatError("paramset truncated: missing tag");
    if (tag) *tag = t == "-" ? "" : t;
    expect_word(in, "layers");
    const auto n = read_number<std::size_t>(in, "layer count");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < n; ++i) {
        Layer l;
        expect_word(in, "layer");
        std::string kind, act;
        if (!(in >> l.name >> kind >> act)) throw FormatError("paramset truncated in layer header");
        l.kind = layer_kind_from_string(kind);
        try {
            l.activation = activation_from_string(act);
        } catch (const std::invalid_argument& e) {
            throw FormatError(e.what());
        }
        expect_word(in, "kernel");
        l.kernel = read_number<std::size_t>(in, "kernel");
        expect_word(in, "stride");
        l.stride = read_number<std::size_t>(in, "stride");
        expect_word(in, "padding");
        l.padding = read_number<std::size_t>(in, "padding");
        l.input_shape = read_shape(in, "input");
        l.output_shape = read_shape(in, "output");
        const Shape wshape = l.kind == LayerKind::dense
                                 ? Shape{l.output_shape.empty() ? 0 : l.output_shape[0], shape_count(l.input_shape)}
                                 : Shape{l.output_shape.size() == 3 ? l.output_shape[2] : 0, l.kernel, l.kernel,
                                         l.input_shape.size() == 3 ? l.input_shape[2] : 0};
        l.weights = read_values(in, "weights", wshape);
        l.bias = read_values(in, "bias", Shape{wshape[0]});
        layers.push_back(std::move(l));
    }
    expect_word(in, "end-paramset");
    try {
        return ParamSet(std::move(layers));
    } catch (const ShapeError& e) {
        throw FormatError(std::string("paramset layers inconsistent: ") + e.what());
    }
}

std::string paramset_to_string(const ParamSet& net, const std::string& tag)
{
    std::ostringstream out;
    write_paramset(out, net, tag);
    return out.str();
}

ParamSet paramset_from_string(const std::string& text, std::string* tag)
{
    std::istringstream in(text);
    return read_paramset(in, tag);
}

std::string paramset_digest(const ParamSet& net)
{
    const std::string text = paramset_to_string(net, "");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hsprobe
