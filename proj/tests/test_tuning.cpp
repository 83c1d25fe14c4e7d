#include <doctest.h>

#include <cmath>

#include "dntune/dequip.hpp"
#include "dntune/errors.hpp"
#include "dntune/noise.hpp"
#include "dntune/synth.hpp"
#include "dntune/tuning.hpp"

using namespace dntune;

namespace {

// test hooks standing in for the full denoiser
const Denoiser identity_hook = [](const Image& y, const Theta&) { return y; };

const Denoiser scalar_hook = [](const Image& y, const Theta& t) {
    Image out = y;
    for (double& v : out.data) v *= t.planck_ratio;
    return out;
};

double dot(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double sq_norm(const Image& a) { return dot(a, a); }

}  // namespace

TEST_SUITE_BEGIN("tuning");

TEST_CASE("scheme names roundtrip") {
    for (Scheme s : {Scheme::Supervised, Scheme::N2N, Scheme::NaC, Scheme::Nr2N, Scheme::R2R})
        CHECK(scheme_from_name(scheme_name(s)) == s);
    CHECK_FALSE(scheme_from_name("bm3d").has_value());
}

TEST_CASE("supervised cost with the identity hook") {
    const Image x = synth_scene(16, 16, 1);
    CHECK(cost_supervised(identity_hook, Theta{}, x, x) == 0.0);
    Rng rng(1, 0);
    const Image y = add_gaussian(x, 0.1, rng);
    Image n = y;
    for (std::size_t i = 0; i < n.size(); ++i) n.data[i] -= x.data[i];
    CHECK(cost_supervised(identity_hook, Theta{}, y, x) == doctest::Approx(sq_norm(n)));
}

TEST_CASE("supervised cost is quadratic in the scalar hook with known minimizer") {
    const Image x = synth_scene(20, 20, 2);
    Rng rng(2, 0);
    const Image y = add_gaussian(x, 0.1, rng);
    const double t_star = dot(x, y) / sq_norm(y);
    auto cost_at = [&](double t) {
        Theta th;
        th.planck_ratio = t;
        return cost_supervised(scalar_hook, th, y, x);
    };
    CHECK(cost_at(t_star) < cost_at(t_star + 0.01));
    CHECK(cost_at(t_star) < cost_at(t_star - 0.01));
    // quadratic: symmetric second difference equals 2*||y||^2 * delta^2
    const double second = cost_at(t_star + 0.1) + cost_at(t_star - 0.1) - 2.0 * cost_at(t_star);
    CHECK(second == doctest::Approx(2.0 * sq_norm(y) * 0.01).epsilon(1e-9));
}

TEST_CASE("n2n cost basics") {
    const Image x = synth_scene(12, 12, 3);
    Rng rng(3, 0);
    const Image y = add_gaussian(x, 0.1, rng);
    CHECK(cost_n2n(identity_hook, Theta{}, y, y) == 0.0);

    Image y1(1, 1), y2(1, 1);
    y1.data = {2.0};
    y2.data = {0.0};
    for (double t : {0.3, 1.0, 1.7}) {
        Theta th;
        th.planck_ratio = t;
        CHECK(cost_n2n(scalar_hook, th, y1, y2) == doctest::Approx(4.0 * t * t));
    }
}

TEST_CASE("nac and nr2n share the cost form") {
    const Image x = synth_scene(12, 12, 4);
    Rng r1(4, 0), r2(4, 1);
    const Image y = add_gaussian(x, 0.1, r1);
    const Image z = add_gaussian(y, 0.1, r2);
    CHECK(cost_nac(identity_hook, Theta{}, y, y) == 0.0);
    const Theta th{0.8, 0.0, 0.01, 0.2};
    CHECK(cost_nac(scalar_hook, th, y, z) == doctest::Approx(cost_nr2n(scalar_hook, th, y, z)));
    CHECK(cost_nac(scalar_hook, th, y, z) >= 0.0);
    // per-draw quadratic minimizer <y,z>/||z||^2
    const double t_star = dot(y, z) / sq_norm(z);
    auto cost_at = [&](double t) {
        Theta v;
        v.planck_ratio = t;
        return cost_nac(scalar_hook, v, y, z);
    };
    CHECK(cost_at(t_star) < cost_at(t_star * 1.02));
    CHECK(cost_at(t_star) < cost_at(t_star * 0.98));
}

TEST_CASE("r2r cost vanishes on constructed pairs") {
    const Image x = synth_scene(12, 12, 5);
    Rng rng(5, 0);
    const Image y = add_gaussian(x, 0.1, rng);
    const auto [z1, z2] = recorrupt_pair(y, {0.5, 0.1, 1}, rng);
    const Image az1 = scalar_hook(z1, Theta{0.9, 0, 0.01, 0.2});
    CHECK(cost_r2r([&](const Image& im, const Theta& t) { return scalar_hook(im, t); },
                   Theta{0.9, 0, 0.01, 0.2}, z1, az1) == 0.0);
    CHECK(cost_r2r(scalar_hook, Theta{}, z1, z2) >= 0.0);
}

TEST_CASE("adam single-step algebra") {
    TuneConfig cfg;
    cfg.learning_rate = 0.1;

    SUBCASE("zero gradient leaves parameters unchanged") {
        AdamState st;
        ThetaFree u;
        u.u = {1.0, 2.0, 3.0, 4.0};
        const ThetaFree before = u;
        adam_step(st, Gradient{}, cfg, u);
        CHECK(u.u == before.u);
    }
    SUBCASE("first step is -lr * sign after bias correction") {
        AdamState st;
        ThetaFree u;
        Gradient g;
        g.g = {2.0, -2.0, 0.5, 0.0};
        adam_step(st, g, cfg, u);
        CHECK(u.u[0] == doctest::Approx(-0.1).epsilon(1e-6));
        CHECK(u.u[1] == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(u.u[0] == doctest::Approx(-u.u[1]));  // symmetric opposite updates
        CHECK(u.u[3] == 0.0);
    }
    SUBCASE("non-finite gradient is rejected") {
        AdamState st;
        ThetaFree u;
        Gradient g;
        g.g[1] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(adam_step(st, g, cfg, u), std::runtime_error);
    }
}

TEST_CASE("availability errors fire before any denoiser work") {
    const Image x = synth_scene(16, 16, 6);
    Rng rng(6, 0);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, 0.1, rng);
    int calls = 0;
    const Denoiser counting = [&](const Image& y, const Theta&) {
        ++calls;
        return y;
    };
    const TuneConfig cfg;
    const NoiseModel unknown{NoiseKind::Gaussian, 0.0, 0.0, 0};

    CHECK_THROWS_WITH_AS(tune(TuneScheme{Scheme::N2N}, inputs, unknown, cfg, counting),
                         doctest::Contains("two independent noisy versions"), UsageError);
    CHECK_THROWS_AS(tune(TuneScheme{Scheme::Supervised}, inputs, unknown, cfg, counting), UsageError);
    CHECK_THROWS_AS(tune(TuneScheme{Scheme::NaC}, inputs, unknown, cfg, counting), UsageError);
    CHECK_THROWS_WITH_AS(
        tune(TuneScheme{Scheme::R2R}, inputs, NoiseModel::poisson(30, 1), cfg, counting),
        doctest::Contains("Gaussian"), UsageError);
    CHECK(calls == 0);
}

TEST_CASE("decision tree routes by data availability") {
    CHECK(select_scheme(true, false, false, false) == Scheme::N2N);
    CHECK(select_scheme(true, true, true, true) == Scheme::N2N);
    CHECK(select_scheme(false, true, false, true) == Scheme::R2R);
    CHECK(select_scheme(false, false, true, false) == Scheme::NaC);
    CHECK(select_scheme(false, false, false, true) == Scheme::Nr2N);
    CHECK_FALSE(select_scheme(false, false, false, false).has_value());
}

TEST_CASE("k = 1 with zero learning rate returns theta0 and its inference") {
    const Image x = synth_scene(16, 16, 7);
    Rng r1(7, 0), r2(7, 1);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, 0.1, r1);
    inputs.y2 = add_gaussian(x, 0.1, r2);
    TuneConfig cfg;
    cfg.iterations = 1;
    cfg.learning_rate = 0.0;
    cfg.theta0 = Theta{0.7, 0.3, 0.02, 0.4};
    const auto rep = tune(TuneScheme{Scheme::N2N}, inputs, NoiseModel::gaussian(0.1, 7), cfg,
                          scalar_hook);
    CHECK(rep.theta_hat.planck_ratio == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(rep.theta_hat.c2 == doctest::Approx(0.4).epsilon(1e-12));
    const Image expect = scalar_hook(inputs.y, rep.theta_hat);
    CHECK(rep.x_hat.data == expect.data);
    CHECK(rep.cost_trace.size() == 1);
}

TEST_CASE("scalar n2n and supervised tuning both reach the closed-form optimum") {
    const Image x = synth_scene(64, 64, 8);  // N = 4096
    const double sigma = 0.1;
    Rng r1(8, stream::corrupt_y), r2(8, stream::corrupt_y2);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, sigma, r1);
    inputs.y2 = add_gaussian(x, sigma, r2);
    inputs.x = x;

    const double target = sq_norm(x) / (sq_norm(x) + x.size() * sigma * sigma);
    TuneConfig cfg;
    cfg.iterations = 200;
    cfg.learning_rate = 0.05;
    cfg.seed = 8;

    const auto rep_n2n = tune(TuneScheme{Scheme::N2N}, inputs, NoiseModel::gaussian(sigma, 8), cfg,
                              scalar_hook);
    const auto rep_sup = tune(TuneScheme{Scheme::Supervised}, inputs,
                              NoiseModel::gaussian(sigma, 8), cfg, scalar_hook);
    CHECK(std::abs(rep_n2n.theta_hat.planck_ratio - target) / target < 0.02);
    CHECK(std::abs(rep_sup.theta_hat.planck_ratio - target) / target < 0.02);
}

TEST_CASE("nr2n inference inverts the conditional-mean oracle exactly at alpha 1") {
    const Image x = synth_scene(24, 24, 9);
    Rng rng(9, 0);
    const Image y = add_gaussian(x, 0.1, rng);
    // E[x|z] oracle for matched Gaussians: the midpoint of x and z
    const Denoiser oracle = [&x](const Image& z, const Theta&) {
        Image out = z;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = 0.5 * (x.data[i] + z.data[i]);
        return out;
    };
    TuneScheme scheme{Scheme::Nr2N};
    scheme.alpha = 1.0;
    const Image xh = infer(scheme, Theta{}, y, NoiseModel::gaussian(0.1, 9), TuneConfig{}, oracle);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(xh.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
}

TEST_CASE("r2r inference variance shrinks as 1/sqrt(M)") {
    const Image y(100, 100, 0.3);
    const NoiseModel model = NoiseModel::gaussian(0.1, 11);
    TuneConfig cfg;
    cfg.seed = 11;
    std::vector<double> log_m, log_std;
    for (int m : {1, 4, 16, 64}) {
        TuneScheme scheme{Scheme::R2R};
        scheme.d_scale = 0.5;
        scheme.m_inference = m;
        const Image xh = infer(scheme, Theta{}, y, model, cfg, identity_hook);
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < xh.size(); ++i) {
            const double r = xh.data[i] - y.data[i];
            s += r;
            s2 += r * r;
        }
        const double n = static_cast<double>(xh.size());
        const double var = s2 / n - (s / n) * (s / n);
        log_m.push_back(std::log(static_cast<double>(m)));
        log_std.push_back(0.5 * std::log(var));
    }
    // least-squares slope of log std against log M
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_m.size(); ++i) {
        mx += log_m[i];
        my += log_std[i];
    }
    mx /= log_m.size();
    my /= log_m.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < log_m.size(); ++i) {
        num += (log_m[i] - mx) * (log_std[i] - my);
        den += (log_m[i] - mx) * (log_m[i] - mx);
    }
    const double slope = num / den;
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("r2r single-sample inference reproduces one recorruption") {
    const Image y(16, 16, 0.4);
    const NoiseModel model = NoiseModel::gaussian(0.05, 13);
    TuneConfig cfg;
    cfg.seed = 13;
    TuneScheme scheme{Scheme::R2R};
    scheme.m_inference = 1;
    const Image xh = infer(scheme, Theta{}, y, model, cfg, identity_hook);
    Rng rng(13, stream::inference(1));
    const Image expect = recorrupt_pair(y, {scheme.d_scale, model.sigma, 1}, rng).first;
    CHECK(xh.data == expect.data);
}

TEST_CASE("stochastic cost closures reuse the iteration draw") {
    const Image x = synth_scene(16, 16, 14);
    Rng rng(14, 0);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, 0.1, rng);
    TuneConfig cfg;
    cfg.seed = 14;
    const CostFn cost = make_cost(TuneScheme{Scheme::NaC}, inputs, NoiseModel::gaussian(0.1, 14),
                                  cfg, scalar_hook);
    const ThetaFree u = ThetaFree::from_theta(Theta{});
    CHECK(cost(u, 3) == cost(u, 3));
    CHECK(cost(u, 3) != cost(u, 4));
}

TEST_CASE("identical configuration reproduces the report bit for bit") {
    const Image x = synth_scene(24, 24, 15);
    Rng r1(15, stream::corrupt_y);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, 0.1, r1);
    inputs.x = x;
    TuneConfig cfg;
    cfg.iterations = 20;
    cfg.seed = 15;
    cfg.learning_rate = 0.1;
    const NoiseModel model = NoiseModel::gaussian(0.1, 15);
    const auto a = tune(TuneScheme{Scheme::NaC}, inputs, model, cfg, scalar_hook);
    const auto b = tune(TuneScheme{Scheme::NaC}, inputs, model, cfg, scalar_hook);
    CHECK(a.x_hat.data == b.x_hat.data);
    CHECK(a.cost_trace == b.cost_trace);
    CHECK(a.theta_hat.planck_ratio == b.theta_hat.planck_ratio);
}

TEST_CASE("full denoiser descent trends downward and stays finite") {
    const Image x = synth_scene(32, 32, 16);
    const double sigma = 25.0 / 255.0;
    Rng r1(16, stream::corrupt_y), r2(16, stream::corrupt_y2);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, sigma, r1);
    inputs.y2 = add_gaussian(x, sigma, r2);
    inputs.x = x;
    TuneConfig cfg;
    cfg.seed = 16;
    const auto rep = tune(TuneScheme{Scheme::N2N}, inputs, NoiseModel::gaussian(sigma, 16), cfg,
                          dequip::make_denoiser({8, 4, 1}));
    REQUIRE(rep.cost_trace.size() == 100);
    for (double c : rep.cost_trace) CHECK(std::isfinite(c));
    double lead = 0.0, trail = 0.0;
    for (int i = 0; i < 10; ++i) {
        lead += rep.cost_trace[i];
        trail += rep.cost_trace[rep.cost_trace.size() - 1 - i];
    }
    CHECK(trail < lead);
    CHECK(rep.psnr_out.has_value());
    CHECK(*rep.psnr_out > *rep.psnr_in);  // tuned parameters beat the noisy input
}

TEST_SUITE_END();
