#include "hsprobe/observation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hsprobe {

bool Observation::valid() const
{
    if (pixels.size() != height * width * channels) return false;
    return std::all_of(pixels.begin(), pixels.end(),
                       [](double v) { return std::isfinite(v) && v >= 0.0 && v <= kPixelMax; });
}

Tensor to_network_input(const Observation& obs)
{
    std::vector<double> v(obs.pixels.size());
    std::transform(obs.pixels.begin(), obs.pixels.end(), v.begin(), [](double p) { return p / kPixelMax; });
    return Tensor(obs.shape(), std::move(v));
}

Observation from_network_input(const Tensor& t)
{
    if (t.rank() != 3) throw ShapeError("observation tensor must be HxWxC, got " + shape_to_string(t.shape()));
    Observation obs(t.shape()[0], t.shape()[1], t.shape()[2]);
    for (std::size_t i = 0; i < t.size(); ++i) obs.pixels[i] = std::clamp(t[i] * kPixelMax, 0.0, kPixelMax);
    return obs;
}

void clamp_pixels(Observation& obs)
{
    for (auto& p : obs.pixels) p = std::clamp(p, 0.0, kPixelMax);
}

void write_pgm(const std::filesystem::path& path, const Observation& obs)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << obs.width << ' ' << obs.height << "\n255\n";
    for (std::size_t i = 0; i < obs.height; ++i)
        for (std::size_t j = 0; j < obs.width; ++j) {
            const double v = std::clamp(std::round(obs.at(i, j, 0)), 0.0, kPixelMax);
            out.put(static_cast<char>(static_cast<unsigned char>(v)));
        }
}

Observation read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic;
    // Header tokens may be separated by comment lines.
    auto next_number = [&](std::size_t& v) {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string skip;
            std::getline(in, skip);
            in >> std::ws;
        }
        in >> v;
    };
    next_number(w);
    next_number(h);
    next_number(maxval);
    if (!in || magic != "P5" || maxval != 255 || w == 0 || h == 0)
        throw std::runtime_error(path.string() + " is not an 8-bit binary PGM");
    in.get();
    Observation obs;
    obs.height = h;
    obs.width = w;
    obs.channels = 1;
    obs.pixels.resize(w * h);
    for (auto& v : obs.pixels) {
        const int c = in.get();
        if (c == EOF) throw std::runtime_error(path.string() + " is truncated");
        v = static_cast<double>(c);
    }
    return obs;
}

}  // namespace hsprobe
