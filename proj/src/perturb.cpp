#include "hsprobe/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hsprobe/rng.hpp"

namespace hsprobe {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Bilinear sample at fractional (row, col); pixels outside the frame read as 0.
double bilinear(const Observation& s, double y, double x, std::size_t c)
{
    const double fy0 = std::floor(y), fx0 = std::floor(x);
    if (!std::isfinite(fy0) || !std::isfinite(fx0)) return 0.0;
    const double fy = y - fy0, fx = x - fx0;
    const long y0 = static_cast<long>(fy0), x0 = static_cast<long>(fx0);
    const double wy[2] = {1.0 - fy, fy}, wx[2] = {1.0 - fx, fx};
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        if (wy[dy] == 0.0) continue;
        const long yy = y0 + dy;
        if (yy < 0 || yy >= static_cast<long>(s.height)) continue;
        for (int dx = 0; dx < 2; ++dx) {
            if (wx[dx] == 0.0) continue;
            const long xx = x0 + dx;
            if (xx < 0 || xx >= static_cast<long>(s.width)) continue;
            acc += wy[dy] * wx[dx] * s.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
        }
    }
    return acc;
}

void check_nonempty(const Observation& s)
{
    if (s.height == 0 || s.width == 0 || s.channels == 0 || s.pixels.size() != s.height * s.width * s.channels)
        throw std::invalid_argument("observation is empty or malformed");
}

}  // namespace

std::string family_name(const PerturbationSpec& spec)
{
    return std::visit(overloaded{
                          [](const IdentityParams&) { return std::string("identity"); },
                          [](const BrightnessContrastParams&) { return std::string("brightness_contrast"); },
                          [](const MedianBlurParams&) { return std::string("median_blur"); },
                          [](const RotationParams&) { return std::string("rotation"); },
                          [](const ShiftParams&) { return std::string("shift"); },
                          [](const PerspectiveParams&) { return std::string("perspective"); },
                          [](const DctArtifactParams&) { return std::string("dct_artifacts"); },
                      },
                      spec);
}

void validate(const PerturbationSpec& spec)
{
    std::visit(overloaded{
                   [](const IdentityParams&) {},
                   [](const BrightnessContrastParams& p) {
                       if (!std::isfinite(p.alpha) || !std::isfinite(p.beta))
                           throw std::invalid_argument("brightness_contrast: alpha and beta must be finite");
                   },
                   [](const MedianBlurParams& p) {
                       if (p.kernel < 1 || p.kernel % 2 == 0)
                           throw std::invalid_argument("median_blur: kernel must be odd and >= 1");
                   },
                   [](const RotationParams& p) {
                       if (!std::isfinite(p.degrees)) throw std::invalid_argument("rotation: degrees must be finite");
                   },
                   [](const ShiftParams&) {},
                   [](const PerspectiveParams& p) {
                       if (!(p.pt_norm >= 0.0) || !std::isfinite(p.pt_norm))
                           throw std::invalid_argument("perspective: pt_norm must be finite and >= 0");
                   },
                   [](const DctArtifactParams& p) {
                       if (!(p.kappa >= 0.0 && p.kappa <= 1.0))
                           throw std::invalid_argument("dct_artifacts: kappa must lie in [0, 1]");
                   },
               },
               spec);
}

std::string describe(const PerturbationSpec& spec)
{
    std::ostringstream out;
    out << family_name(spec);
    std::visit(overloaded{
                   [](const IdentityParams&) {},
                   [&](const BrightnessContrastParams& p) { out << "[alpha=" << p.alpha << ",beta=" << p.beta << "]"; },
                   [&](const MedianBlurParams& p) { out << "[kernel=" << p.kernel << "]"; },
                   [&](const RotationParams& p) { out << "[degrees=" << p.degrees << "]"; },
                   [&](const ShiftParams& p) {
                       out << "[ti=" << p.ti << ",tj=" << p.tj << (p.circular ? ",circular" : "") << "]";
                   },
                   [&](const PerspectiveParams& p) {
                       out << "[pt_norm=" << p.pt_norm << (p.mode == CornerMode::seeded ? ",seeded" : "") << "]";
                   },
                   [&](const DctArtifactParams& p) { out << "[kappa=" << p.kappa << "]"; },
               },
               spec);
    return out.str();
}

Observation brightness_contrast(const Observation& s, double alpha, double beta)
{
    validate(BrightnessContrastParams{alpha, beta});
    Observation out = s;
    for (auto& p : out.pixels) p = std::clamp(p * alpha + beta, 0.0, kPixelMax);
    return out;
}

Observation median_blur(const Observation& s, std::size_t k)
{
    validate(MedianBlurParams{k});
    check_nonempty(s);
    if (k > std::min(s.height, s.width)) throw std::invalid_argument("median_blur: kernel exceeds image size");
    if (k == 1) return s;
    Observation out = s;
    const long r = static_cast<long>(k / 2);
    const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
    std::vector<double> window(k * k);
    for (std::size_t c = 0; c < s.channels; ++c)
        for (long i = 0; i < H; ++i)
            for (long j = 0; j < W; ++j) {
                std::size_t n = 0;
                for (long di = -r; di <= r; ++di)
                    for (long dj = -r; dj <= r; ++dj) {
                        const long y = std::clamp(i + di, 0L, H - 1), x = std::clamp(j + dj, 0L, W - 1);
                        window[n++] = s.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
                    }
                auto mid = window.begin() + static_cast<long>(window.size() / 2);
                std::nth_element(window.begin(), mid, window.end());
                out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) = *mid;
            }
    return out;
}

Observation rotate(const Observation& s, double degrees)
{
    validate(RotationParams{degrees});
    check_nonempty(s);
    double cos_t, sin_t;
    const double reduced = std::fmod(degrees, 360.0);
    const double turn = reduced < 0 ? reduced + 360.0 : reduced;
    if (turn == 0.0) return s;
    if (turn == 90.0) {
        cos_t = 0.0;
        sin_t = 1.0;
    } else if (turn == 180.0) {
        cos_t = -1.0;
        sin_t = 0.0;
    } else if (turn == 270.0) {
        cos_t = 0.0;
        sin_t = -1.0;
    } else {
        const double rad = degrees * std::numbers::pi / 180.0;
        cos_t = std::cos(rad);
        sin_t = std::sin(rad);
    }
    const double cy = 0.5 * static_cast<double>(s.height - 1), cx = 0.5 * static_cast<double>(s.width - 1);
    Observation out(s.height, s.width, s.channels);
    for (std::size_t i = 0; i < s.height; ++i)
        for (std::size_t j = 0; j < s.width; ++j) {
            const double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
            const double sx = cx + cos_t * dx + sin_t * dy;
            const double sy = cy - sin_t * dx + cos_t * dy;
            for (std::size_t c = 0; c < s.channels; ++c) out.at(i, j, c) = bilinear(s, sy, sx, c);
        }
    clamp_pixels(out);
    return out;
}

Observation shift(const Observation& s, long ti, long tj, bool circular)
{
    check_nonempty(s);
    const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
    if (std::labs(ti) >= H || std::labs(tj) >= W)
        throw std::invalid_argument("shift: |ti| must be < height and |tj| < width");
    Observation out(s.height, s.width, s.channels);
    for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
            long y = i + ti, x = j + tj;
            if (circular) {
                y = ((y % H) + H) % H;
                x = ((x % W) + W) % W;
            } else if (y < 0 || y >= H || x < 0 || x >= W) {
                continue;
            }
            for (std::size_t c = 0; c < s.channels; ++c)
                out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
                    s.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Perspective

Homography homography_from_corners(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst)
{
    // Unknowns h11 h12 h13 h21 h22 h23 h31 h32 with h33 = 1.
    double a[8][9] = {};
    for (int k = 0; k < 4; ++k) {
        const double x = src[k].i, y = src[k].j, u = dst[k].i, v = dst[k].j;
        double* r0 = a[2 * k];
        double* r1 = a[2 * k + 1];
        r0[0] = x, r0[1] = y, r0[2] = 1, r0[6] = -x * u, r0[7] = -y * u, r0[8] = u;
        r1[3] = x, r1[4] = y, r1[5] = 1, r1[6] = -x * v, r1[7] = -y * v, r1[8] = v;
    }
    double scale = 0.0;
    for (auto& row : a)
        for (int c = 0; c < 8; ++c) scale = std::max(scale, std::fabs(row[c]));
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) <= 1e-12 * std::max(scale, 1.0))
            throw std::invalid_argument("perspective: degenerate corner correspondence");
        if (pivot != col)
            for (int c = 0; c < 9; ++c) std::swap(a[col][c], a[pivot][c]);
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
        }
    }
    Homography h{};
    for (int k = 0; k < 8; ++k) h[static_cast<std::size_t>(k)] = a[k][8] / a[k][k];
    h[8] = 1.0;
    return h;
}

std::array<Point2, 4> image_corners(std::size_t height, std::size_t width)
{
    const double b = static_cast<double>(height - 1), r = static_cast<double>(width - 1);
    return {Point2{0.0, 0.0}, Point2{0.0, r}, Point2{b, r}, Point2{b, 0.0}};
}

std::array<Point2, 4> displaced_corners(std::size_t height, std::size_t width, const PerspectiveParams& p)
{
    std::array<Point2, 4> out = image_corners(height, width);
    const double n = p.pt_norm;
    if (p.mode == CornerMode::fixed) {
        // Clockwise from top-left: right, down, left, up.
        out[0].j += n;
        out[1].i += n;
        out[2].j -= n;
        out[3].i -= n;
        return out;
    }
    Rng rng(derive_seed(p.seed, 0x7065727370ULL));
    std::array<Point2, 4> offsets{};
    double largest = 0.0;
    for (auto& o : offsets) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double radius = std::sqrt(rng.uniform(0.05, 1.0));
        o = {radius * std::sin(angle), radius * std::cos(angle)};
        largest = std::max(largest, radius);
    }
    for (std::size_t k = 0; k < 4; ++k) {
        out[k].i += offsets[k].i * n / largest;
        out[k].j += offsets[k].j * n / largest;
    }
    return out;
}

namespace {

Homography invert(const Homography& m)
{
    const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6], h = m[7], k = m[8];
    const double A = e * k - f * h, B = -(d * k - f * g), C = d * h - e * g;
    const double det = a * A + b * B + c * C;
    double norm = 0.0;
    for (double v : m) norm = std::max(norm, std::fabs(v));
    if (!(std::fabs(det) > 1e-12 * norm * norm * norm)) throw std::invalid_argument("perspective: singular matrix");
    const Homography adj{A, -(b * k - c * h), b * f - c * e, B, a * k - c * g, -(a * f - c * d), C, -(a * h - b * g),
                         a * e - b * d};
    Homography inv{};
    for (std::size_t i = 0; i < 9; ++i) inv[i] = adj[i] / det;
    return inv;
}

}  // namespace

Observation warp_perspective(const Observation& s, const Homography& forward)
{
    check_nonempty(s);
    for (double v : forward)
        if (!std::isfinite(v)) throw std::invalid_argument("perspective: non-finite matrix");
    const Homography inv = invert(forward);
    Observation out(s.height, s.width, s.channels);
    for (std::size_t i = 0; i < s.height; ++i)
        for (std::size_t j = 0; j < s.width; ++j) {
            const double y = static_cast<double>(i), x = static_cast<double>(j);
            const double w = inv[6] * y + inv[7] * x + inv[8];
            if (std::fabs(w) < 1e-12) continue;
            const double sy = (inv[0] * y + inv[1] * x + inv[2]) / w;
            const double sx = (inv[3] * y + inv[4] * x + inv[5]) / w;
            for (std::size_t c = 0; c < s.channels; ++c) out.at(i, j, c) = bilinear(s, sy, sx, c);
        }
    clamp_pixels(out);
    return out;
}

Observation perspective(const Observation& s, const PerspectiveParams& p)
{
    validate(p);
    check_nonempty(s);
    const auto src = image_corners(s.height, s.width);
    const auto dst = displaced_corners(s.height, s.width, p);
    bool unchanged = true;
    for (std::size_t k = 0; k < 4; ++k) unchanged = unchanged && src[k].i == dst[k].i && src[k].j == dst[k].j;
    const Homography h = unchanged ? Homography{1, 0, 0, 0, 1, 0, 0, 0, 1} : homography_from_corners(src, dst);
    return warp_perspective(s, h);
}

// ---------------------------------------------------------------------------
// Block DCT

namespace {

struct DctBasis {
    double m[8][8];
    DctBasis()
    {
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) m[u][x] = a * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
        }
    }
};

const DctBasis& basis()
{
    static const DctBasis b;
    return b;
}

}  // namespace

std::array<double, 64> dct8x8(const std::array<double, 64>& block)
{
    const auto& m = basis().m;
    std::array<double, 64> tmp{}, out{};
    for (int u = 0; u < 8; ++u)
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += m[u][x] * block[x * 8 + y];
            tmp[u * 8 + y] = acc;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += m[v][y] * tmp[u * 8 + y];
            out[u * 8 + v] = acc;
        }
    return out;
}

std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs)
{
    const auto& m = basis().m;
    std::array<double, 64> tmp{}, out{};
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) acc += m[u][x] * coeffs[u * 8 + v];
            tmp[x * 8 + v] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) acc += m[v][y] * tmp[x * 8 + v];
            out[x * 8 + y] = acc;
        }
    return out;
}

Observation dct_artifacts(const Observation& s, double kappa)
{
    validate(DctArtifactParams{kappa});
    check_nonempty(s);
    Observation out(s.height, s.width, s.channels);
    const std::size_t B = kDctBlock;
    for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t bi = 0; bi < s.height; bi += B)
            for (std::size_t bj = 0; bj < s.width; bj += B) {
                std::array<double, 64> block{};
                for (std::size_t x = 0; x < B; ++x)
                    for (std::size_t y = 0; y < B; ++y)
                        block[x * B + y] = s.at(std::min(bi + x, s.height - 1), std::min(bj + y, s.width - 1), c);
                auto coeffs = dct8x8(block);
                if (kappa > 0.0)
                    for (std::size_t u = 0; u < B; ++u)
                        for (std::size_t v = 0; v < B; ++v) {
                            const double q = 1.0 + kappa * kDctSlope * static_cast<double>(u + v);
                            coeffs[u * B + v] = std::trunc(coeffs[u * B + v] / q) * q;
                        }
                const auto rec = idct8x8(coeffs);
                for (std::size_t x = 0; x < B && bi + x < s.height; ++x)
                    for (std::size_t y = 0; y < B && bj + y < s.width; ++y)
                        out.at(bi + x, bj + y, c) = rec[x * B + y];
            }
    clamp_pixels(out);
    return out;
}

Observation apply(const PerturbationSpec& spec, const Observation& s)
{
    validate(spec);
    return std::visit(overloaded{
                          [&](const IdentityParams&) { return s; },
                          [&](const BrightnessContrastParams& p) { return brightness_contrast(s, p.alpha, p.beta); },
                          [&](const MedianBlurParams& p) { return median_blur(s, p.kernel); },
                          [&](const RotationParams& p) { return rotate(s, p.degrees); },
                          [&](const ShiftParams& p) { return shift(s, p.ti, p.tj, p.circular); },
                          [&](const PerspectiveParams& p) { return perspective(s, p); },
                          [&](const DctArtifactParams& p) { return dct_artifacts(s, p.kappa); },
                      },
                      spec);
}

}  // namespace hsprobe
