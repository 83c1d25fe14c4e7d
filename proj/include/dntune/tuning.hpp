#pragma once

// Per-image hyperparameter tuning: five cost functions (one supervised gold
// standard, four unsupervised), an Adam-driven descent over the free
// parameterization, and the scheme-specific inference rules that map the tuned
// parameters to the final estimate.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "dntune/grad.hpp"
#include "dntune/image.hpp"
#include "dntune/noise.hpp"
#include "dntune/theta.hpp"

namespace dntune {

enum class Scheme { Supervised, N2N, NaC, Nr2N, R2R };

const char* scheme_name(Scheme s);
std::optional<Scheme> scheme_from_name(std::string_view name);

// A scheme bundles a cost function with an inference rule; alpha and the
// recorruption parameters only apply to the schemes that use them.
struct TuneScheme {
    Scheme tag = Scheme::N2N;
    double alpha = 1.0;    // Nr2N renoising scale, in (0,1]
    double d_scale = 0.5;  // R2R recorruption D = d_scale * I
    int m_inference = 50;  // R2R Monte-Carlo inference samples
};

struct TuneConfig {
    int iterations = 100;
    double learning_rate = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double fd_step = 1e-3;  // central-difference step in free coordinates
    Theta theta0{};
    std::uint64_t seed = 0;
};

struct TuneInputs {
    Image y;
    std::optional<Image> y2;  // second independent noisy realization (N2N)
    std::optional<Image> x;   // clean image; supervision or evaluation only
};

struct TuneReport {
    Theta theta_hat;
    std::vector<double> cost_trace;
    Image x_hat;
    std::optional<double> psnr_in;   // only when x was supplied
    std::optional<double> psnr_out;
    double final_cost = 0.0;
    double wall_ms = 0.0;
};

using Denoiser = std::function<Image(const Image&, const Theta&)>;

// Squared L2 costs. The z arguments are the per-iteration recorruptions.
double cost_supervised(const Denoiser& den, const Theta& theta, const Image& y, const Image& x);
double cost_n2n(const Denoiser& den, const Theta& theta, const Image& y, const Image& y2);
double cost_nac(const Denoiser& den, const Theta& theta, const Image& y, const Image& z_k);
double cost_nr2n(const Denoiser& den, const Theta& theta, const Image& y, const Image& z_k);
double cost_r2r(const Denoiser& den, const Theta& theta, const Image& z1, const Image& z2);

struct AdamState {
    std::array<double, 4> m{};
    std::array<double, 4> v{};
    long t = 0;
};

// Standard Adam with bias correction, applied in free coordinates.
void adam_step(AdamState& state, const Gradient& g, const TuneConfig& cfg, ThetaFree& u);

// The scheme's stochastic cost as a CostFn: evaluation at iteration k draws
// the recorruption from stream::iteration(k), so repeated evaluation with the
// same k is identical. Unsupervised closures never receive the clean image.
CostFn make_cost(const TuneScheme& scheme, const TuneInputs& inputs, const NoiseModel& model,
                 const TuneConfig& cfg, const Denoiser& den);

// Scheme-specific inference rule applied after tuning. Nr2N draws one fresh z
// and applies the variance correction; R2R averages the denoiser over
// m_inference fresh recorruptions (dedicated inference streams).
Image infer(const TuneScheme& scheme, const Theta& theta_hat, const Image& y,
            const NoiseModel& model, const TuneConfig& cfg, const Denoiser& den);

// Full loop: availability check, K Adam iterations with a fresh draw per
// iteration (frozen within each gradient estimate), then inference.
TuneReport tune(const TuneScheme& scheme, const TuneInputs& inputs, const NoiseModel& model,
                const TuneConfig& cfg, const Denoiser& den);

// Data-availability decision tree; nullopt means no scheme covers the case.
std::optional<Scheme> select_scheme(bool has_two_noisy, bool gaussian_zero_mean, bool weak_noise,
                                    bool additive);

}  // namespace dntune
