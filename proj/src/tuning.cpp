#include "dntune/tuning.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "dntune/errors.hpp"

namespace dntune {

namespace {

double sq_l2(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("cost: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc;
}

void require_known_model(const NoiseModel& model, Scheme tag) {
    if (model.kind == NoiseKind::Gaussian && model.sigma > 0.0) return;
    if (model.kind == NoiseKind::Poisson && model.peak > 0.0) return;
    throw UsageError(std::string(scheme_name(tag)) +
                     " requires a known noise model (pass --sigma or --peak)");
}

}  // namespace

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Supervised: return "supervised";
        case Scheme::N2N: return "n2n";
        case Scheme::NaC: return "nac";
        case Scheme::Nr2N: return "nr2n";
        case Scheme::R2R: return "r2r";
    }
    return "?";
}

std::optional<Scheme> scheme_from_name(std::string_view name) {
    if (name == "supervised" || name == "gold") return Scheme::Supervised;
    if (name == "n2n") return Scheme::N2N;
    if (name == "nac") return Scheme::NaC;
    if (name == "nr2n") return Scheme::Nr2N;
    if (name == "r2r") return Scheme::R2R;
    return std::nullopt;
}

double cost_supervised(const Denoiser& den, const Theta& theta, const Image& y, const Image& x) {
    return sq_l2(den(y, theta), x);
}

double cost_n2n(const Denoiser& den, const Theta& theta, const Image& y, const Image& y2) {
    return sq_l2(den(y, theta), y2);
}

double cost_nac(const Denoiser& den, const Theta& theta, const Image& y, const Image& z_k) {
    return sq_l2(den(z_k, theta), y);
}

double cost_nr2n(const Denoiser& den, const Theta& theta, const Image& y, const Image& z_k) {
    // same functional form as NaC; the schemes differ in inference
    return cost_nac(den, theta, y, z_k);
}

double cost_r2r(const Denoiser& den, const Theta& theta, const Image& z1, const Image& z2) {
    return sq_l2(den(z1, theta), z2);
}

void adam_step(AdamState& state, const Gradient& g, const TuneConfig& cfg, ThetaFree& u) {
    if (!g.all_finite()) throw std::runtime_error("adam_step: non-finite gradient");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (int i = 0; i < 4; ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g.g[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.g[i] * g.g[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        u.u[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

CostFn make_cost(const TuneScheme& scheme, const TuneInputs& inputs, const NoiseModel& model,
                 const TuneConfig& cfg, const Denoiser& den) {
    const auto y = std::make_shared<const Image>(inputs.y);
    const std::uint64_t seed = cfg.seed;

    switch (scheme.tag) {
        case Scheme::Supervised: {
            if (!inputs.x) throw UsageError("supervised tuning requires the clean image (--clean)");
            auto x = std::make_shared<const Image>(*inputs.x);
            return [den, y, x](const ThetaFree& u, std::uint64_t) {
                return cost_supervised(den, u.to_theta(), *y, *x);
            };
        }
        case Scheme::N2N: {
            if (!inputs.y2)
                throw UsageError(
                    "n2n requires two independent noisy versions of the image "
                    "(decision tree: 'at least 2 independent noisy versions available?'); "
                    "pass --input2");
            auto y2 = std::make_shared<const Image>(*inputs.y2);
            return [den, y, y2](const ThetaFree& u, std::uint64_t) {
                return cost_n2n(den, u.to_theta(), *y, *y2);
            };
        }
        case Scheme::NaC: {
            require_known_model(model, scheme.tag);
            return [den, y, model, seed](const ThetaFree& u, std::uint64_t k) {
                Rng rng(seed, stream::iteration(k));
                const Image z = renoise(*y, model, 1.0, rng);
                return cost_nac(den, u.to_theta(), *y, z);
            };
        }
        case Scheme::Nr2N: {
            require_known_model(model, scheme.tag);
            if (model.kind != NoiseKind::Gaussian && scheme.alpha != 1.0)
                throw UsageError("nr2n: alpha scaling requires Gaussian noise");
            const double alpha = scheme.alpha;
            return [den, y, model, seed, alpha](const ThetaFree& u, std::uint64_t k) {
                Rng rng(seed, stream::iteration(k));
                const Image z = renoise(*y, model, alpha, rng);
                return cost_nr2n(den, u.to_theta(), *y, z);
            };
        }
        case Scheme::R2R: {
            if (model.kind != NoiseKind::Gaussian || model.sigma <= 0.0)
                throw UsageError(
                    "r2r requires zero-mean Gaussian noise with known sigma "
                    "(decision tree: 'zero-mean Gaussian noise?'); pass --sigma");
            const RecorruptConfig rc{scheme.d_scale, model.sigma, scheme.m_inference};
            return [den, y, rc, seed](const ThetaFree& u, std::uint64_t k) {
                Rng rng(seed, stream::iteration(k));
                const auto [z1, z2] = recorrupt_pair(*y, rc, rng);
                return cost_r2r(den, u.to_theta(), z1, z2);
            };
        }
    }
    throw std::invalid_argument("make_cost: unknown scheme");
}

Image infer(const TuneScheme& scheme, const Theta& theta_hat, const Image& y,
            const NoiseModel& model, const TuneConfig& cfg, const Denoiser& den) {
    theta_hat.check();
    switch (scheme.tag) {
        case Scheme::Supervised:
        case Scheme::N2N:
        case Scheme::NaC:
            return den(y, theta_hat);
        case Scheme::Nr2N: {
            Rng rng(cfg.seed, stream::inference(0));
            const Image z = renoise(y, model, scheme.alpha, rng);
            const double a2 = scheme.alpha * scheme.alpha;
            Image out = den(z, theta_hat);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data[i] = ((1.0 + a2) * out.data[i] - z.data[i]) / a2;
            return out;
        }
        case Scheme::R2R: {
            if (scheme.m_inference < 1)
                throw std::invalid_argument("infer: r2r needs m_inference >= 1");
            const RecorruptConfig rc{scheme.d_scale, model.sigma, scheme.m_inference};
            Image acc(y.width, y.height, 0.0);
            for (int m = 1; m <= scheme.m_inference; ++m) {
                Rng rng(cfg.seed, stream::inference(static_cast<std::uint64_t>(m)));
                const Image z1 = recorrupt_pair(y, rc, rng).first;
                const Image d = den(z1, theta_hat);
                for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += d.data[i];
            }
            for (double& v : acc.data) v /= scheme.m_inference;
            return acc;
        }
    }
    throw std::invalid_argument("infer: unknown scheme");
}

TuneReport tune(const TuneScheme& scheme, const TuneInputs& inputs, const NoiseModel& model,
                const TuneConfig& cfg, const Denoiser& den) {
    if (cfg.iterations < 1) throw std::invalid_argument("tune: iterations must be >= 1");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("tune: negative learning rate");
    cfg.theta0.check();
    const auto t0 = std::chrono::steady_clock::now();

    // availability check happens here, before any optimization work
    const CostFn cost = make_cost(scheme, inputs, model, cfg, den);

    ThetaFree u = ThetaFree::from_theta(cfg.theta0);
    AdamState adam;
    TuneReport rep;
    rep.cost_trace.reserve(cfg.iterations);
    for (int k = 1; k <= cfg.iterations; ++k) {
        const double c = cost(u, static_cast<std::uint64_t>(k));
        if (!std::isfinite(c)) {
            std::ostringstream os;
            os << "tune: non-finite cost at iteration " << k;
            throw std::runtime_error(os.str());
        }
        rep.cost_trace.push_back(c);
        const Gradient g = grad_central(cost, u, cfg.fd_step, static_cast<std::uint64_t>(k));
        adam_step(adam, g, cfg, u);
    }

    rep.theta_hat = u.to_theta();
    rep.x_hat = infer(scheme, rep.theta_hat, inputs.y, model, cfg, den);
    rep.final_cost = rep.cost_trace.back();
    if (inputs.x) {
        rep.psnr_in = psnr(inputs.y, *inputs.x);
        rep.psnr_out = psnr(rep.x_hat, *inputs.x);
    }
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::optional<Scheme> select_scheme(bool has_two_noisy, bool gaussian_zero_mean, bool weak_noise,
                                    bool additive) {
    if (has_two_noisy) return Scheme::N2N;
    if (gaussian_zero_mean) return Scheme::R2R;
    if (weak_noise) return Scheme::NaC;
    if (additive) return Scheme::Nr2N;
    return std::nullopt;
}

}  // namespace dntune
