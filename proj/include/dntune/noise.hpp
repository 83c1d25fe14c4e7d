#pragma once

// Seeded random corruption processes. All randomness flows through Rng, a
// counter-based generator keyed by (seed, stream id): the same key always
// replays the same sample sequence, so every noisy draw in the pipeline is
// reproducible and independent streams can be consumed in any order.

#include <cstdint>
#include <utility>

#include "dntune/image.hpp"

namespace dntune {

enum class NoiseKind { Gaussian, Poisson };

struct NoiseModel {
    NoiseKind kind = NoiseKind::Gaussian;
    double sigma = 0.0;   // Gaussian std, intensity units
    double peak = 0.0;    // Poisson photon count at intensity 1
    std::uint64_t seed = 0;

    static NoiseModel gaussian(double sigma, std::uint64_t seed) {
        return {NoiseKind::Gaussian, sigma, 0.0, seed};
    }
    static NoiseModel poisson(double peak, std::uint64_t seed) {
        return {NoiseKind::Poisson, 0.0, peak, seed};
    }
};

// Pair construction for R2R: z1 = y + d_scale*n_s, z2 = y - n_s/d_scale.
struct RecorruptConfig {
    double d_scale = 0.5;    // D = d_scale * I, must be nonzero (invertible)
    double sigma = 0.0;      // std of the simulated n_s
    int m_inference = 50;    // Monte-Carlo samples at inference
};

// Stream-id conventions used across the pipeline.
namespace stream {
inline constexpr std::uint64_t corrupt_y = 0;   // first corruption of the clean image
inline constexpr std::uint64_t corrupt_y2 = 1;  // the independent second realization
inline constexpr std::uint64_t tune_base = 0x100000;   // + iteration k
inline constexpr std::uint64_t infer_base = 0x200000;  // + Monte-Carlo index m
inline std::uint64_t iteration(std::uint64_t k) { return tune_base + k; }
inline std::uint64_t inference(std::uint64_t m) { return infer_base + m; }
}  // namespace stream

// Counter-based deterministic generator (SplitMix64 output function over an
// incrementing counter, keyed by seed and stream). Bit-stable across runs;
// a single instance is not meant to be shared between threads.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform01();          // [0, 1), 53-bit resolution
    double normal();             // standard Gaussian, Box-Muller
    long poisson(double mean);   // inverse transform below mean 10, PTRS rejection above

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// y = x + n with n iid N(0, sigma^2). Output intentionally not clamped to
// [0,1]: the tuning derivations need the exact additive structure.
Image add_gaussian(const Image& x, double sigma, Rng& rng);

// y_i = Poisson(peak*x_i)/peak. Requires x >= 0 elementwise.
Image add_poisson(const Image& x, double peak, Rng& rng);

// z = y + n_s with n_s drawn from the model's own corruption process.
// Gaussian: n_s ~ N(0, (alpha*sigma)^2), alpha in (0,1]. Other noise kinds
// only support alpha == 1 (no variance scaling is defined for them).
Image renoise(const Image& y, const NoiseModel& model, double alpha, Rng& rng);

// Applies the R2R pair construction with an explicit noise field (test hook
// and the deterministic core of recorrupt_pair).
std::pair<Image, Image> recorrupt_apply(const Image& y, double d_scale, const Image& noise);

// Draws n_s ~ N(0, cfg.sigma^2) and builds (z1, z2). Sharing one n_s draw
// gives the exact pixelwise identity (z1 - y)/d_scale = -d_scale*(z2 - y).
std::pair<Image, Image> recorrupt_pair(const Image& y, const RecorruptConfig& cfg, Rng& rng);

}  // namespace dntune
