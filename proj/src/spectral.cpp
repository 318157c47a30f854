#include "hsprobe/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace hsprobe {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

void check_image(const std::vector<double>& image, std::size_t rows, std::size_t cols)
{
    if (rows == 0 || cols == 0 || image.size() != rows * cols)
        throw std::invalid_argument("dft2: image size does not match dimensions");
}

}  // namespace

Spectrum dft2(const std::vector<double>& image, std::size_t rows, std::size_t cols)
{
    check_image(image, rows, cols);
    const std::size_t n = rows * cols;
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < n; ++k) {
        in[k][0] = image[k];
        in[k][1] = 0.0;
    }
    fftw_execute(plan);
    Spectrum s{rows, cols, std::vector<Complex>(n)};
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) s.values[k] = Complex(out[k][0] * scale, out[k][1] * scale);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

std::size_t frequency_band(std::size_t u, std::size_t v, std::size_t rows, std::size_t cols)
{
    const std::size_t fu = std::min(u, rows - u), fv = std::min(v, cols - v);
    return std::max(fu, fv);
}

std::size_t band_count(std::size_t rows, std::size_t cols)
{
    return std::max(rows / 2, cols / 2) + 1;
}

std::vector<double> energy_profile(const Spectrum& spectrum)
{
    std::vector<double> e(band_count(spectrum.rows, spectrum.cols), 0.0);
    for (std::size_t u = 0; u < spectrum.rows; ++u)
        for (std::size_t v = 0; v < spectrum.cols; ++v)
            e[frequency_band(u, v, spectrum.rows, spectrum.cols)] += std::norm(spectrum.at(u, v));
    return e;
}

SpectrumProfile spectrum_profile(const Observation& s)
{
    if (s.height == 0 || s.width == 0 || s.channels == 0) throw std::invalid_argument("spectrum of empty observation");
    SpectrumProfile p;
    p.rows = s.height;
    p.cols = s.width;
    p.power.assign(s.height * s.width, 0.0);
    p.energy.assign(band_count(s.height, s.width), 0.0);
    std::vector<double> plane(s.height * s.width);
    for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t i = 0; i < s.height; ++i)
            for (std::size_t j = 0; j < s.width; ++j) plane[i * s.width + j] = s.at(i, j, c) / kPixelMax;
        Spectrum spec = dft2(plane, s.height, s.width);
        for (std::size_t k = 0; k < plane.size(); ++k) p.power[k] += std::norm(spec.values[k]);
        const auto e = energy_profile(spec);
        for (std::size_t f = 0; f < e.size(); ++f) p.energy[f] += e[f];
        p.channels.push_back(std::move(spec));
    }
    return p;
}

double high_band_energy(const std::vector<double>& energy, std::size_t n)
{
    double total = 0.0;
    for (std::size_t f = 0; f < energy.size(); ++f)
        if (8 * f > 3 * n) total += energy[f];
    return total;
}

double low_band_energy(const std::vector<double>& energy, std::size_t n)
{
    double total = 0.0;
    for (std::size_t f = 0; f < energy.size(); ++f)
        if (8 * f < n) total += energy[f];
    return total;
}

BandDelta band_delta(const Observation& base, const Observation& perturbed)
{
    if (!base.same_shape(perturbed)) throw std::invalid_argument("band_delta: observations differ in shape");
    BandDelta d;
    d.base = spectrum_profile(base).energy;
    d.perturbed = spectrum_profile(perturbed).energy;
    d.delta.resize(d.base.size());
    for (std::size_t f = 0; f < d.base.size(); ++f) d.delta[f] = d.perturbed[f] - d.base[f];
    const std::size_t n = std::max(base.height, base.width);
    d.low_band_delta = low_band_energy(d.delta, n);
    d.high_band_delta = high_band_energy(d.delta, n);
    return d;
}

void write_band_csv(std::ostream& out, const BandDelta& d)
{
    out << "f,E_base,E_pert,delta\n";
    char buf[128];
    for (std::size_t f = 0; f < d.base.size(); ++f) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", f, d.base[f], d.perturbed[f], d.delta[f]);
        out << buf;
    }
}

}  // namespace hsprobe
