#include "hsprobe/perceptual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hsprobe {

void FeatureNet::validate() const
{
    net.validate();
    if (net.input_shape().size() != 3 || net.input_shape()[0] != net.input_shape()[1] || net.input_shape()[2] != 1)
        throw ShapeError("feature net needs a square single-channel input");
    if (channel_weights.size() != net.size()) throw ShapeError("feature net needs one weight vector per layer");
    for (std::size_t l = 0; l < net.size(); ++l) {
        const auto& layer = net.layers()[l];
        if (layer.kind != LayerKind::conv2d) throw ShapeError("feature net layers must be convolutions");
        if (channel_weights[l].size() != layer.output_shape[2])
            throw ShapeError("feature net channel weights do not match layer width");
        for (double w : channel_weights[l])
            if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("feature net channel weights must be >= 0");
    }
}

FeatureNet make_reference_feature_net()
{
    std::vector<Layer> layers;
    const Shape in{kFeatureNetInput, kFeatureNetInput, 1};
    layers.push_back(make_conv2d("feat1", in, 8, 3, 2, 1, Activation::relu));
    layers.push_back(make_conv2d("feat2", layers.back().output_shape, 16, 3, 2, 1, Activation::relu));
    layers.push_back(make_conv2d("feat3", layers.back().output_shape, 16, 3, 2, 1, Activation::relu));
    FeatureNet f{ParamSet(std::move(layers)), {}, kFeatureNetVersion};
    f.net.initialize(kFeatureNetSeed);
    for (const auto& l : f.net.layers()) f.channel_weights.emplace_back(l.output_shape[2], 1.0);
    return f;
}

void save_feature_net(const std::filesystem::path& path, const FeatureNet& f)
{
    f.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_paramset(out, f.net, f.version);
    out << "channel_weights " << f.channel_weights.size() << '\n';
    char buf[40];
    for (const auto& w : f.channel_weights) {
        out << w.size();
        for (double v : w) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    out << "end-featurenet\n";
}

FeatureNet load_feature_net(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature-net asset " + path.string());
    FeatureNet f;
    f.net = read_paramset(in, &f.version);
    if (f.version.rfind("featurenet-", 0) != 0)
        throw FormatError("asset " + path.string() + " is not a feature-net (tag '" + f.version + "')");
    std::string word;
    std::size_t n = 0;
    if (!(in >> word >> n) || word != "channel_weights") throw FormatError("feature-net asset missing channel weights");
    for (std::size_t l = 0; l < n; ++l) {
        std::size_t c = 0;
        if (!(in >> c)) throw FormatError("feature-net asset truncated");
        std::vector<double> w(c);
        for (auto& v : w) {
            std::string tok;
            if (!(in >> tok)) throw FormatError("feature-net asset truncated");
            v = std::strtod(tok.c_str(), nullptr);
        }
        f.channel_weights.push_back(std::move(w));
    }
    if (!(in >> word) || word != "end-featurenet") throw FormatError("feature-net asset truncated");
    try {
        f.validate();
    } catch (const std::exception& e) {
        throw FormatError(std::string("feature-net asset invalid: ") + e.what());
    }
    return f;
}

FeatureNet default_feature_net()
{
#ifdef HSPROBE_ASSET_DIR
    const std::filesystem::path asset = std::filesystem::path(HSPROBE_ASSET_DIR) / "featurenet-v1.txt";
    if (std::filesystem::exists(asset)) return load_feature_net(asset);
#endif
    return make_reference_feature_net();
}

namespace {

// Row k holds the coverage of source cells by output cell k; rows sum to 1.
std::vector<std::vector<std::pair<std::size_t, double>>> area_weights(std::size_t src, std::size_t dst)
{
    std::vector<std::vector<std::pair<std::size_t, double>>> w(dst);
    const double ratio = static_cast<double>(src) / static_cast<double>(dst);
    for (std::size_t k = 0; k < dst; ++k) {
        const double lo = static_cast<double>(k) * ratio, hi = static_cast<double>(k + 1) * ratio;
        for (std::size_t s = static_cast<std::size_t>(std::floor(lo)); s < src && static_cast<double>(s) < hi; ++s) {
            const double overlap = std::min(hi, static_cast<double>(s + 1)) - std::max(lo, static_cast<double>(s));
            if (overlap > 0.0) w[k].emplace_back(s, overlap / ratio);
        }
    }
    return w;
}

}  // namespace

Tensor resample_area(const Observation& s, std::size_t size)
{
    if (s.height == 0 || s.width == 0 || s.channels == 0) throw std::invalid_argument("cannot resample an empty observation");
    std::vector<double> gray(s.height * s.width);
    for (std::size_t i = 0; i < s.height; ++i)
        for (std::size_t j = 0; j < s.width; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < s.channels; ++c) acc += s.at(i, j, c);
            gray[i * s.width + j] = acc / static_cast<double>(s.channels) / kPixelMax;
        }
    if (s.height == size && s.width == size) return Tensor({size, size, 1}, std::move(gray));
    const auto wr = area_weights(s.height, size), wc = area_weights(s.width, size);
    Tensor out({size, size, 1});
    for (std::size_t p = 0; p < size; ++p)
        for (std::size_t q = 0; q < size; ++q) {
            double acc = 0.0;
            for (const auto& [r, a] : wr[p])
                for (const auto& [c, b] : wc[q]) acc += a * b * gray[r * s.width + c];
            out[p * size + q] = acc;
        }
    return out;
}

std::vector<Tensor> normalized_activations(const FeatureNet& f, const Observation& s)
{
    Activations acts = forward(f.net, resample_area(s, f.input_size()));
    std::vector<Tensor> out;
    for (std::size_t l = 1; l < acts.size(); ++l) {
        Tensor t = std::move(acts[l]);
        const std::size_t C = t.shape()[2], sites = t.size() / C;
        for (std::size_t site = 0; site < sites; ++site) {
            double* v = t.storage().data() + site * C;
            double sq = 0.0;
            for (std::size_t c = 0; c < C; ++c) sq += v[c] * v[c];
            if (sq == 0.0) continue;
            const double norm = std::sqrt(sq);
            for (std::size_t c = 0; c < C; ++c) v[c] /= norm;
        }
        out.push_back(std::move(t));
    }
    return out;
}

double lpips_from_activations(const FeatureNet& f, const std::vector<Tensor>& a, const std::vector<Tensor>& b)
{
    if (a.size() != b.size() || a.size() != f.channel_weights.size())
        throw ShapeError("activation lists do not match the feature net");
    double total = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (a[l].shape() != b[l].shape()) throw ShapeError("activation shapes differ at layer " + std::to_string(l));
        const std::size_t H = a[l].shape()[0], W = a[l].shape()[1], C = a[l].shape()[2];
        const auto& w = f.channel_weights[l];
        double layer_sum = 0.0;
        for (std::size_t site = 0; site < H * W; ++site)
            for (std::size_t c = 0; c < C; ++c) {
                const double d = w[c] * (a[l][site * C + c] - b[l][site * C + c]);
                layer_sum += d * d;
            }
        total += layer_sum / static_cast<double>(H * W);
    }
    return total;
}

double lpips(const FeatureNet& f, const Observation& s, const Observation& s_hat)
{
    if (!s.same_shape(s_hat)) throw ShapeError("lpips: observations differ in shape");
    return lpips_from_activations(f, normalized_activations(f, s), normalized_activations(f, s_hat));
}

}  // namespace hsprobe
