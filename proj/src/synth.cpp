#include "dntune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dntune/noise.hpp"

namespace dntune {

namespace {

// Bilinearly interpolated random lattice (value noise) at the given spacing.
void add_value_noise(Image& img, Rng& rng, int spacing, double amplitude) {
    const int gw = img.width / spacing + 2, gh = img.height / spacing + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = rng.uniform01() - 0.5;
    auto at = [&](int gx, int gy) { return lattice[static_cast<std::size_t>(gy) * gw + gx]; };
    for (int y = 0; y < img.height; ++y) {
        const int gy = y / spacing;
        const double fy = static_cast<double>(y % spacing) / spacing;
        for (int x = 0; x < img.width; ++x) {
            const int gx = x / spacing;
            const double fx = static_cast<double>(x % spacing) / spacing;
            const double top = at(gx, gy) * (1.0 - fx) + at(gx + 1, gy) * fx;
            const double bot = at(gx, gy + 1) * (1.0 - fx) + at(gx + 1, gy + 1) * fx;
            img.at(x, y) += amplitude * (top * (1.0 - fy) + bot * fy);
        }
    }
}

}  // namespace

Image synth_scene(int width, int height, std::uint64_t seed) {
    Rng rng(seed, /*stream*/ 0x5C3E);
    Image img(width, height, 0.0);

    // multi-octave texture down to pixel scale; heavy fine-scale grain, as in
    // detailed photographs (foliage, fabric, sensor grain)
    const int spacings[] = {32, 16, 8, 4, 2, 1};
    const double amps[] = {0.35, 0.28, 0.22, 0.25, 0.55, 0.30};
    for (int o = 0; o < 6; ++o) {
        const int sp = std::min(spacings[o], std::max(1, std::max(width, height) / 3));
        add_value_noise(img, rng, sp, amps[o]);
    }

    // hard-edged shapes on top of the texture
    const double dim = std::max(width, height);
    const int n_shapes = 6;
    for (int j = 0; j < n_shapes; ++j) {
        const bool disk = rng.uniform01() < 0.5;
        const double cx = rng.uniform01() * width;
        const double cy = rng.uniform01() * height;
        const double r = (0.07 + 0.16 * rng.uniform01()) * dim;
        const double offset = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * (0.15 + 0.25 * rng.uniform01());
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dx = x - cx, dy = y - cy;
                const bool inside = disk ? (dx * dx + dy * dy <= r * r)
                                         : (std::abs(dx) <= r && std::abs(dy) <= 0.7 * r);
                if (inside) img.at(x, y) += offset;
            }
    }

    // a couple of oriented stripe bands
    for (int j = 0; j < 2; ++j) {
        const int y0 = static_cast<int>(rng.uniform01() * height);
        const int y1 = std::min(height, y0 + height / 5);
        const double freq = (6.0 + 6.0 * rng.uniform01()) / dim;
        const double ang = 2.0 * std::numbers::pi * rng.uniform01();
        const double ca = std::cos(ang), sa = std::sin(ang);
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < width; ++x)
                img.at(x, y) += 0.06 * std::sin(2.0 * std::numbers::pi * freq * (ca * x + sa * y));
    }

    // affine-normalize into [0.05, 0.95]
    const auto [mn_it, mx_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;
    for (double& v : img.data) v = 0.05 + 0.9 * (v - mn) / span;
    return img;
}

}  // namespace dntune
