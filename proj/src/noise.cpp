#include "dntune/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dntune {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id)
    : key_(mix64(mix64(seed + kGamma) ^ (stream_id * kGamma))) {}

std::uint64_t Rng::next_u64() {
    counter_ += kGamma;
    return mix64(key_ ^ counter_);
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform01();
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

long Rng::poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // inverse transform on the CDF
        const double u = uniform01();
        double p = std::exp(-mean);
        double cdf = p;
        long k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    // PTRS transformed rejection (Hormann 1993), exact for mean >= 10.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = uniform01() - 0.5;
        double v = uniform01();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double log_mean = std::log(mean);
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - std::lgamma(k + 1.0))
            return static_cast<long>(k);
    }
}

Image add_gaussian(const Image& x, double sigma, Rng& rng) {
    if (sigma <= 0.0) throw std::invalid_argument("add_gaussian: sigma must be positive");
    Image y = x;
    for (double& v : y.data) v += sigma * rng.normal();
    return y;
}

Image add_poisson(const Image& x, double peak, Rng& rng) {
    if (peak <= 0.0) throw std::invalid_argument("add_poisson: peak must be positive");
    Image y = x;
    for (double& v : y.data) {
        if (v < 0.0) throw std::invalid_argument("add_poisson: negative input pixel");
        v = static_cast<double>(rng.poisson(peak * v)) / peak;
    }
    return y;
}

Image renoise(const Image& y, const NoiseModel& model, double alpha, Rng& rng) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("renoise: alpha must be in (0,1]");
    switch (model.kind) {
        case NoiseKind::Gaussian:
            return add_gaussian(y, alpha * model.sigma, rng);
        case NoiseKind::Poisson:
            if (alpha != 1.0)
                throw std::invalid_argument("renoise: alpha scaling is only defined for Gaussian noise");
            return add_poisson(y, model.peak, rng);
    }
    throw std::invalid_argument("renoise: unknown noise kind");
}

std::pair<Image, Image> recorrupt_apply(const Image& y, double d_scale, const Image& noise) {
    if (d_scale <= 0.0) throw std::invalid_argument("recorrupt: d_scale must be positive");
    if (!y.same_dims(noise)) throw std::invalid_argument("recorrupt: noise field dimension mismatch");
    Image z1 = y, z2 = y;
    const double inv = 1.0 / d_scale;
    for (std::size_t i = 0; i < y.size(); ++i) {
        z1.data[i] += d_scale * noise.data[i];
        z2.data[i] -= inv * noise.data[i];
    }
    return {std::move(z1), std::move(z2)};
}

std::pair<Image, Image> recorrupt_pair(const Image& y, const RecorruptConfig& cfg, Rng& rng) {
    if (cfg.sigma <= 0.0) throw std::invalid_argument("recorrupt_pair: sigma must be positive");
    Image ns(y.width, y.height);
    for (double& v : ns.data) v = cfg.sigma * rng.normal();
    return recorrupt_apply(y, cfg.d_scale, ns);
}

}  // namespace dntune
