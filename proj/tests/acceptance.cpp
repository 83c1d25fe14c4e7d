// Acceptance suite. Each criterion prints one pass/fail line with the
// measured numbers; the process exits nonzero if any criterion fails.
//
// The heavy criteria dispatch tuning runs onto a worker pool (2 cores by
// default, DNTUNE_WORKERS overrides); each run is internally sequential so
// results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dntune/bench.hpp"
#include "dntune/dequip.hpp"
#include "dntune/grad.hpp"
#include "dntune/image.hpp"
#include "dntune/noise.hpp"
#include "dntune/parallel.hpp"
#include "dntune/synth.hpp"
#include "dntune/theta.hpp"
#include "dntune/tuning.hpp"

using namespace dntune;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
    std::printf("criterion %d [%s] %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Fn>
void pool_for(std::size_t n, Fn&& fn) {
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(0), n));
    std::atomic<std::size_t> next{0};
    parallel_chunks(w, w, [&](std::size_t, std::size_t) {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    });
}

struct RunSpec {
    const Image* clean;
    Scheme scheme;
    NoiseKind kind;
    double level;  // sigma or peak
    std::uint64_t seed;
};

struct RunOut {
    Scheme scheme;
    double level;
    double psnr_out;
};

// One full tuning run at the paper-default configuration (K=100, lr=1,
// Adam defaults, alpha=1, D=I/2, M=50).
RunOut full_run(const RunSpec& spec) {
    TuneInputs inputs;
    {
        Rng rng(spec.seed, stream::corrupt_y);
        inputs.y = spec.kind == NoiseKind::Gaussian ? add_gaussian(*spec.clean, spec.level, rng)
                                                    : add_poisson(*spec.clean, spec.level, rng);
    }
    if (spec.scheme == Scheme::N2N) {
        Rng rng(spec.seed, stream::corrupt_y2);
        inputs.y2 = spec.kind == NoiseKind::Gaussian ? add_gaussian(*spec.clean, spec.level, rng)
                                                     : add_poisson(*spec.clean, spec.level, rng);
    }
    inputs.x = *spec.clean;
    const NoiseModel model = spec.kind == NoiseKind::Gaussian
                                 ? NoiseModel::gaussian(spec.level, spec.seed)
                                 : NoiseModel::poisson(spec.level, spec.seed);
    TuneScheme scheme;
    scheme.tag = spec.scheme;
    TuneConfig cfg;
    cfg.seed = spec.seed;
    const TuneReport rep = tune(scheme, inputs, model, cfg, dequip::make_denoiser({8, 4, 1}));
    return {spec.scheme, spec.level, *rep.psnr_out};
}

std::map<std::pair<int, double>, double> mean_psnr_by_cell(const std::vector<RunOut>& outs) {
    std::map<std::pair<int, double>, std::pair<double, int>> acc;
    for (const auto& o : outs) {
        auto& a = acc[{static_cast<int>(o.scheme), o.level}];
        a.first += o.psnr_out;
        a.second += 1;
    }
    std::map<std::pair<int, double>, double> means;
    for (const auto& [k, v] : acc) means[k] = v.first / v.second;
    return means;
}

std::vector<Image> make_scenes(int count, int size, std::uint64_t base_seed) {
    std::vector<Image> imgs;
    for (int i = 0; i < count; ++i) imgs.push_back(synth_scene(size, size, base_seed + i));
    return imgs;
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_scalar_equivalence() {
    const auto t0 = Clock::now();
    const Image x = synth_scene(64, 64, 4201);  // N = 4096
    const double sigma = 0.1;
    Rng r1(1, stream::corrupt_y), r2(1, stream::corrupt_y2);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, sigma, r1);
    inputs.y2 = add_gaussian(x, sigma, r2);
    inputs.x = x;

    double xx = 0.0;
    for (double v : x.data) xx += v * v;
    const double target = xx / (xx + static_cast<double>(x.size()) * sigma * sigma);

    const Denoiser scalar = [](const Image& y, const Theta& t) {
        Image out = y;
        for (double& v : out.data) v *= t.planck_ratio;
        return out;
    };
    TuneConfig cfg;
    cfg.iterations = 200;
    cfg.learning_rate = 0.05;
    cfg.seed = 1;
    const NoiseModel model = NoiseModel::gaussian(sigma, 1);
    const double n2n = tune(TuneScheme{Scheme::N2N}, inputs, model, cfg, scalar)
                           .theta_hat.planck_ratio;
    const double sup = tune(TuneScheme{Scheme::Supervised}, inputs, model, cfg, scalar)
                           .theta_hat.planck_ratio;
    const double re_n2n = std::abs(n2n - target) / target;
    const double re_sup = std::abs(sup - target) / target;
    const double secs = seconds_since(t0);
    const bool pass = re_n2n < 0.02 && re_sup < 0.02 && secs < 5.0;
    report(1, pass,
           fmt("scalar-shrinkage N2N equivalence: theta_n2n=%.4f theta_sup=%.4f target=%.4f "
               "rel_err=(%.3g, %.3g) < 2%%",
               n2n, sup, target, re_n2n, re_sup),
           secs);
}

void criterion_2_gold_gap(const std::vector<Image>& scenes) {
    const auto t0 = Clock::now();
    const double sigma = 25.0 / 255.0;
    std::vector<RunSpec> specs;
    for (const auto& img : scenes)
        for (Scheme sc : {Scheme::Supervised, Scheme::N2N, Scheme::R2R})
            specs.push_back({&img, sc, NoiseKind::Gaussian, sigma, 1});
    std::vector<RunOut> outs(specs.size());
    pool_for(specs.size(), [&](std::size_t i) { outs[i] = full_run(specs[i]); });

    const auto means = mean_psnr_by_cell(outs);
    const double gold = means.at({static_cast<int>(Scheme::Supervised), sigma});
    const double n2n = means.at({static_cast<int>(Scheme::N2N), sigma});
    const double r2r = means.at({static_cast<int>(Scheme::R2R), sigma});
    const double gap_n2n = (gold - n2n) / gold;
    const double gap_r2r = (gold - r2r) / gold;
    const double secs = seconds_since(t0);
    const bool pass = gap_n2n <= 0.015 && gap_r2r <= 0.015 && secs < 1200.0;
    report(2, pass,
           fmt("gold-standard gap at sigma=25/255 over %zu scenes: gold=%.2f dB n2n=%.2f dB "
               "r2r=%.2f dB, gaps=(%.2f%%, %.2f%%) <= 1.5%%",
               scenes.size(), gold, n2n, r2r, 100.0 * gap_n2n, 100.0 * gap_r2r),
           secs);
}

void criterion_3_ordering(const std::vector<Image>& scenes) {
    const auto t0 = Clock::now();
    const double s50 = 50.0 / 255.0, s10 = 10.0 / 255.0;
    std::vector<RunSpec> specs;
    for (const auto& img : scenes) {
        for (Scheme sc :
             {Scheme::Supervised, Scheme::N2N, Scheme::R2R, Scheme::NaC, Scheme::Nr2N})
            specs.push_back({&img, sc, NoiseKind::Gaussian, s50, 1});
        for (Scheme sc : {Scheme::Supervised, Scheme::NaC})
            specs.push_back({&img, sc, NoiseKind::Gaussian, s10, 1});
    }
    std::vector<RunOut> outs(specs.size());
    pool_for(specs.size(), [&](std::size_t i) { outs[i] = full_run(specs[i]); });

    const auto means = mean_psnr_by_cell(outs);
    auto m = [&](Scheme sc, double level) { return means.at({static_cast<int>(sc), level}); };
    const double gold50 = m(Scheme::Supervised, s50), n2n50 = m(Scheme::N2N, s50),
                 r2r50 = m(Scheme::R2R, s50), nac50 = m(Scheme::NaC, s50),
                 nr2n50 = m(Scheme::Nr2N, s50);
    const double gold10 = m(Scheme::Supervised, s10), nac10 = m(Scheme::NaC, s10);

    const double tie = 0.2;  // dB slack for the top of the ordering
    const bool top_ok = gold50 >= n2n50 - tie && gold50 >= r2r50 - tie &&
                        std::abs(n2n50 - r2r50) <= tie;
    const bool nac_ok = std::min(n2n50, r2r50) >= nac50 && nac50 >= nr2n50;
    const bool gap_shrinks = (gold10 - nac10) < (gold50 - nac50);
    const double secs = seconds_since(t0);
    report(3, top_ok && nac_ok && gap_shrinks,
           fmt("ordering at sigma=50/255: gold=%.2f n2n=%.2f r2r=%.2f nac=%.2f nr2n=%.2f dB; "
               "NaC gap to gold %.2f dB at 50/255 vs %.2f dB at 10/255",
               gold50, n2n50, r2r50, nac50, nr2n50, gold50 - nac50, gold10 - nac10),
           secs);
}

void criterion_4_poisson() {
    const auto t0 = Clock::now();
    const auto scenes = make_scenes(3, 96, 4401);
    const double peak = 30.0;
    std::vector<RunSpec> specs;
    for (const auto& img : scenes)
        for (Scheme sc : {Scheme::Supervised, Scheme::N2N})
            specs.push_back({&img, sc, NoiseKind::Poisson, peak, 1});
    std::vector<RunOut> outs(specs.size());
    pool_for(specs.size(), [&](std::size_t i) { outs[i] = full_run(specs[i]); });

    const auto means = mean_psnr_by_cell(outs);
    const double gold = means.at({static_cast<int>(Scheme::Supervised), peak});
    const double n2n = means.at({static_cast<int>(Scheme::N2N), peak});
    const double secs = seconds_since(t0);
    const bool pass = (gold - n2n) <= 0.5 && secs < 600.0;
    report(4, pass,
           fmt("poisson peak=30 over 3 scenes: gold=%.2f dB n2n=%.2f dB, gap=%.2f dB <= 0.5 dB",
               gold, n2n, gold - n2n),
           secs);
}

void criterion_5_denoiser_identities() {
    const auto t0 = Clock::now();
    const Image x = synth_scene(96, 96, 4501);
    Rng rng(3, stream::corrupt_y);
    const Image y = add_gaussian(x, 25.0 / 255.0, rng);

    // all-pass gains reduce the pipeline to the identity
    const Image same = dequip::denoise(y, Theta{0.7, 1.1, 0.0, 1e-300}, {8, 4, 2});
    double ident_err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        ident_err = std::max(ident_err, std::abs(same.data[i] - y.data[i]));

    // per-patch orthonormality at theta0
    const dequip::Pipeline pipe(y, {8, 4, 2});
    const auto an = pipe.analyze(Theta{}.planck_ratio, Theta{}.interaction);
    double ortho_err = 0.0;
    for (const auto& b : an.bases) {
        const auto n = b.vectors.cols();
        ortho_err = std::max(
            ortho_err, (b.vectors.transpose() * b.vectors - Eigen::MatrixXd::Identity(n, n))
                           .cwiseAbs()
                           .maxCoeff());
    }

    // constant images are fixed points for random valid thetas
    const Image c(64, 64, 0.5);
    Rng trng(4502, 0);
    double const_err = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double c1 = 0.4 * trng.uniform01();
        const Theta theta{0.05 + 2.5 * trng.uniform01(), 3.0 * trng.uniform01(), c1,
                          c1 + 0.05 + trng.uniform01()};
        const Image out = dequip::denoise(c, theta, {8, 4, 2});
        for (double v : out.data) const_err = std::max(const_err, std::abs(v - 0.5));
    }

    const double secs = seconds_since(t0);
    const bool pass = ident_err < 1e-8 && ortho_err < 1e-8 && const_err < 1e-8 && secs < 60.0;
    report(5, pass,
           fmt("denoiser identities: reconstruction err=%.2e, orthonormality err=%.2e, "
               "constant fixed-point err=%.2e, all < 1e-8",
               ident_err, ortho_err, const_err),
           secs);
}

void criterion_6_recorruption() {
    const auto t0 = Clock::now();
    const double sigma = 25.0 / 255.0, d = 0.5;
    const Image x(1000, 1000, 0.5);  // 1e6 paired samples
    Rng rng(4601, 0);
    const Image y = add_gaussian(x, sigma, rng);
    const auto [z1, z2] = recorrupt_pair(y, {d, sigma, 1}, rng);

    double max_ident = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double lhs = (z1.data[i] - y.data[i]) / (d * d);
        const double rhs = -(z2.data[i] - y.data[i]);
        max_ident = std::max(max_ident, std::abs(lhs - rhs));
    }

    double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double a = z1.data[i] - x.data[i];
        const double b = z2.data[i] - x.data[i];
        s1 += a;
        s2 += b;
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    const double rho = (s12 / n - (s1 / n) * (s2 / n)) /
                       std::sqrt((s11 / n - (s1 / n) * (s1 / n)) * (s22 / n - (s2 / n) * (s2 / n)));
    const double secs = seconds_since(t0);
    const bool pass = std::abs(rho) < 0.01 && max_ident < 1e-13;
    report(6, pass,
           fmt("recorruption with D=I/2: |rho|=%.2e < 0.01 over 1e6 samples, pixelwise identity "
               "max dev=%.2e",
               std::abs(rho), max_ident),
           secs);
}

void criterion_7_gradient() {
    const auto t0 = Clock::now();
    const Image x = synth_scene(8, 8, 1);
    const double sigma = 25.0 / 255.0;
    Rng r1(1, stream::corrupt_y), r2(1, stream::corrupt_y2);
    TuneInputs inputs;
    inputs.y = add_gaussian(x, sigma, r1);
    inputs.y2 = add_gaussian(x, sigma, r2);
    const TuneConfig cfg;
    const CostFn cost = make_cost(TuneScheme{Scheme::N2N}, inputs, NoiseModel::gaussian(sigma, 1),
                                  cfg, dequip::make_denoiser({8, 4, 1}));
    const ThetaFree u0 = ThetaFree::from_theta(cfg.theta0);
    const Gradient g = grad_central(cost, u0, 1e-3, 1);
    const double hs[] = {1e-4};
    const auto rep = grad_check(cost, u0, g, hs, 1);
    const double secs = seconds_since(t0);
    report(7, rep.max_rel_err < 1e-3,
           fmt("gradient consistency on the full cost (h=1e-3 vs 1e-4): max rel err=%.2e < 1e-3",
               rep.max_rel_err),
           secs);
}

void criterion_8_reproducibility() {
    const auto t0 = Clock::now();
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "dntune_acceptance_c8";
    fs::remove_all(root);
    fs::create_directories(root / "img");
    for (int i = 0; i < 2; ++i)
        save_image(synth_scene(48, 48, 4801 + i), (root / "img" / ("s" + std::to_string(i) + ".pgm")).string());

    BenchmarkConfig cfg;
    cfg.image_dir = (root / "img").string();
    cfg.crop = 0;
    cfg.levels = {0.1};
    cfg.schemes = {Scheme::N2N, Scheme::NaC};
    cfg.seeds = {1, 2};
    cfg.tune.iterations = 3;

    auto strip_wall = [](const std::string& text) {
        std::istringstream in(text);
        std::ostringstream out;
        std::string line;
        std::size_t wall_idx = std::string::npos;
        bool header = true;
        while (std::getline(in, line)) {
            std::vector<std::string> fields;
            std::string f;
            std::istringstream ls(line);
            while (std::getline(ls, f, ',')) fields.push_back(f);
            if (header) {
                header = false;
                for (std::size_t i = 0; i < fields.size(); ++i)
                    if (fields[i] == "wall_ms") wall_idx = i;
                out << line << '\n';
                continue;
            }
            if (wall_idx < fields.size()) fields[wall_idx] = "";
            for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
            out << '\n';
        }
        return out.str();
    };
    auto read_file = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };

    cfg.workers = 1;
    cfg.output_dir = (root / "run_w1").string();
    run_benchmark_to_dir(cfg);
    cfg.workers = 4;
    cfg.output_dir = (root / "run_w4").string();
    run_benchmark_to_dir(cfg);

    const bool results_same = strip_wall(read_file(root / "run_w1" / "results.csv")) ==
                              strip_wall(read_file(root / "run_w4" / "results.csv"));
    const bool summary_same =
        read_file(root / "run_w1" / "summary.csv") == read_file(root / "run_w4" / "summary.csv");
    const bool plot_same =
        read_file(root / "run_w1" / "plot.svg") == read_file(root / "run_w4" / "plot.svg");
    const double secs = seconds_since(t0);
    report(8, results_same && summary_same && plot_same,
           fmt("benchmark reruns with 1 vs 4 workers: results %s, summary %s, plot %s "
               "(wall columns excluded)",
               results_same ? "identical" : "DIFFER", summary_same ? "identical" : "DIFFER",
               plot_same ? "identical" : "DIFFER"),
           secs);
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    std::printf("acceptance suite: %u workers\n", resolve_workers(0));
    std::fflush(stdout);

    criterion_1_scalar_equivalence();
    criterion_5_denoiser_identities();
    criterion_6_recorruption();
    criterion_7_gradient();
    criterion_8_reproducibility();

    const auto scenes = make_scenes(5, 96, 4301);
    criterion_2_gold_gap(scenes);
    criterion_3_ordering(scenes);
    criterion_4_poisson();

    std::printf("acceptance: %d of 8 criteria passed (%.1f s total)\n", 8 - g_failures,
                seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
