#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "hsprobe/observation.hpp"

namespace hsprobe {

using Complex = std::complex<double>;

/// One channel's DFT on an I x J grid (row-major), normalized by 1/(IJ).
struct Spectrum {
    std::size_t rows = 0;  // I
    std::size_t cols = 0;  // J
    std::vector<Complex> values;

    Complex at(std::size_t u, std::size_t v) const { return values[u * cols + v]; }
};

/// Frequency-domain summary of an observation.
struct SpectrumProfile {
    std::size_t rows = 0;
    std::size_t cols = 0;
    /// One spectrum per channel.
    std::vector<Spectrum> channels;
    /// |F(u,v)|^2 summed over channels.
    std::vector<double> power;
    /// E(f), f = 0 .. max band.
    std::vector<double> energy;
};

/// F(u,v) = 1/(IJ) sum_{i,j} x(i,j) exp(-2 pi j (u i / I + v j / J)) via FFT.
Spectrum dft2(const std::vector<double>& image, std::size_t rows, std::size_t cols);

/// Band of (u, v): max(min(u, I-u), min(v, J-v)).
std::size_t frequency_band(std::size_t u, std::size_t v, std::size_t rows, std::size_t cols);
std::size_t band_count(std::size_t rows, std::size_t cols);

/// E(f) = sum over (u, v) in band f of |F(u,v)|^2.
std::vector<double> energy_profile(const Spectrum& spectrum);

/// Spectrum of the observation scaled to [0, 1], per channel, with summed energy.
SpectrumProfile spectrum_profile(const Observation& s);

struct BandDelta {
    std::vector<double> base;
    std::vector<double> perturbed;
    std::vector<double> delta;  // perturbed - base
    /// Sum of delta over f < N/8 and over f > 3N/8, N = max(I, J).
    double low_band_delta = 0.0;
    double high_band_delta = 0.0;
};

BandDelta band_delta(const Observation& base, const Observation& perturbed);

/// Sum of E(f) over f > 3N/8.
double high_band_energy(const std::vector<double>& energy, std::size_t n);
double low_band_energy(const std::vector<double>& energy, std::size_t n);

/// CSV columns: f,E_base,E_pert,delta
void write_band_csv(std::ostream& out, const BandDelta& d);

}  // namespace hsprobe
