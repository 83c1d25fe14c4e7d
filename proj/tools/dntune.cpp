// Command-line front end: tune a denoiser on one image, sweep a benchmark,
// check gradients, or apply a fixed parameter set.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dntune/bench.hpp"
#include "dntune/dequip.hpp"
#include "dntune/errors.hpp"
#include "dntune/grad.hpp"
#include "dntune/image.hpp"
#include "dntune/noise.hpp"
#include "dntune/parallel.hpp"
#include "dntune/synth.hpp"
#include "dntune/tuning.hpp"

namespace {

using namespace dntune;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::string input, input2, clean;
    std::string scheme = "auto";
    double sigma = 0.0;
    double peak = 0.0;
    std::uint64_t seed = 1;
    double alpha = 1.0;
    double d_scale = 0.5;
    int m_inference = 50;
    int iterations = 100;
    double lr = 1.0;
    std::vector<double> theta0;
    int patch_size = 8;
    int stride = 4;
    unsigned workers = 0;
    bool weak_noise = false;
    double psnr_peak = 1.0;
};

void add_noise_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--sigma", f.sigma, "Gaussian noise std in [0,1] intensity units");
    cmd->add_option("--peak", f.peak, "Poisson peak (photon count at intensity 1)");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--alpha", f.alpha, "Nr2N renoising scale in (0,1]");
    cmd->add_option("--d-scale", f.d_scale, "R2R recorruption scale (D = d*I)");
    cmd->add_option("--m-inference", f.m_inference, "R2R Monte-Carlo inference samples");
}

void add_tune_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--iterations,-K", f.iterations, "optimization iterations");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--theta0", f.theta0, "initial theta: planck_ratio interaction c1 c2")
        ->expected(4);
    cmd->add_option("--patch-size", f.patch_size, "denoiser patch size");
    cmd->add_option("--stride", f.stride, "denoiser patch stride");
    cmd->add_option("--workers", f.workers, "worker threads (DNTUNE_WORKERS overrides)");
    cmd->add_flag("--weak-noise", f.weak_noise, "assert weak noise for --scheme auto");
    cmd->add_option("--psnr-peak", f.psnr_peak, "PSNR peak value (default 1.0)");
}

NoiseModel make_model(const CommonFlags& f) {
    if (f.sigma > 0.0 && f.peak > 0.0) throw UsageError("pass either --sigma or --peak, not both");
    if (f.sigma > 0.0) return NoiseModel::gaussian(f.sigma, f.seed);
    if (f.peak > 0.0) return NoiseModel::poisson(f.peak, f.seed);
    return NoiseModel{NoiseKind::Gaussian, 0.0, 0.0, f.seed};  // unknown model
}

Scheme resolve_scheme(const CommonFlags& f) {
    if (f.scheme == "auto") {
        const bool has_two = !f.input2.empty();
        const bool gaussian = f.sigma > 0.0;
        const auto sc = select_scheme(has_two, gaussian, f.weak_noise, gaussian);
        if (!sc)
            throw UsageError(
                "no scheme covers this case (single noisy image, non-Gaussian, not weak, "
                "not additive); see the data-availability decision tree in the README");
        return *sc;
    }
    if (f.scheme == "supervised" && f.clean.empty())
        throw UsageError("supervised tuning requires the clean image (--clean)");
    const auto sc = scheme_from_name(f.scheme);
    if (!sc) throw UsageError("unknown scheme '" + f.scheme + "'");
    return *sc;
}

TuneConfig make_tune_config(const CommonFlags& f) {
    TuneConfig tc;
    tc.iterations = f.iterations;
    tc.learning_rate = f.lr;
    tc.seed = f.seed;
    if (!f.theta0.empty())
        tc.theta0 = Theta{f.theta0[0], f.theta0[1], f.theta0[2], f.theta0[3]};
    return tc;
}

TuneScheme make_scheme_params(const CommonFlags& f, Scheme tag) {
    TuneScheme s;
    s.tag = tag;
    s.alpha = f.alpha;
    s.d_scale = f.d_scale;
    s.m_inference = f.m_inference;
    return s;
}

dequip::Config make_dequip_config(const CommonFlags& f) {
    return {f.patch_size, f.stride, resolve_workers(f.workers)};
}

int cmd_tune(const CommonFlags& f, const std::string& out_path, const std::string& report_path,
             const std::string& trace_path) {
    TuneInputs inputs;
    inputs.y = load_image(f.input);
    if (!f.input2.empty()) inputs.y2 = load_image(f.input2);
    if (!f.clean.empty()) inputs.x = load_image(f.clean);

    const Scheme tag = resolve_scheme(f);
    const NoiseModel model = make_model(f);
    TuneReport rep = tune(make_scheme_params(f, tag), inputs, model, make_tune_config(f),
                          dequip::make_denoiser(make_dequip_config(f)));
    if (inputs.x && f.psnr_peak != 1.0) {
        rep.psnr_in = psnr(inputs.y, *inputs.x, f.psnr_peak);
        rep.psnr_out = psnr(rep.x_hat, *inputs.x, f.psnr_peak);
    }

    const std::string out = out_path.empty()
                                ? std::filesystem::path(f.input).stem().string() + "_" +
                                      scheme_name(tag) + ".pgm"
                                : out_path;
    save_image(rep.x_hat, out);

    const std::string row = tune_report_csv_row(scheme_name(tag), model, f.seed, rep);
    if (report_path.empty()) {
        std::cout << tune_report_csv_header() << '\n' << row << '\n';
    } else {
        std::ofstream rf(report_path);
        if (!rf) throw IoError(report_path + ": cannot open for writing");
        rf << tune_report_csv_header() << '\n' << row << '\n';
    }
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw IoError(trace_path + ": cannot open for writing");
        tf << "iteration,cost\n";
        for (std::size_t k = 0; k < rep.cost_trace.size(); ++k)
            tf << k + 1 << ',' << format_double(rep.cost_trace[k]) << '\n';
    }
    std::cerr << "wrote " << out << '\n';
    return kExitOk;
}

int cmd_denoise(const CommonFlags& f, const std::vector<double>& theta_vals,
                const std::string& out_path) {
    const Image y = load_image(f.input);
    const Theta theta{theta_vals[0], theta_vals[1], theta_vals[2], theta_vals[3]};
    theta.check();
    const Image out = dequip::denoise(y, theta, make_dequip_config(f));
    const std::string path = out_path.empty()
                                 ? std::filesystem::path(f.input).stem().string() + "_denoised.pgm"
                                 : out_path;
    save_image(out, path);
    std::cerr << "wrote " << path << '\n';
    return kExitOk;
}

int cmd_gradcheck(const CommonFlags& f, std::vector<double> h_list, std::uint64_t iteration) {
    TuneInputs inputs;
    inputs.y = load_image(f.input);
    if (!f.input2.empty()) inputs.y2 = load_image(f.input2);
    if (!f.clean.empty()) inputs.x = load_image(f.clean);

    const Scheme tag = resolve_scheme(f);
    const NoiseModel model = make_model(f);
    const TuneConfig tc = make_tune_config(f);
    const CostFn cost = make_cost(make_scheme_params(f, tag), inputs, model, tc,
                                  dequip::make_denoiser(make_dequip_config(f)));
    const ThetaFree u0 = ThetaFree::from_theta(tc.theta0);
    if (h_list.empty()) h_list = {1e-4};
    const Gradient g = grad_central(cost, u0, tc.fd_step, iteration);
    const GradCheckReport rep = grad_check(cost, u0, g, h_list, iteration);
    std::cout << rep.to_csv();
    std::cout << "max_rel_err," << format_double(rep.max_rel_err) << '\n';
    return kExitOk;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir, unsigned workers) {
    BenchmarkConfig cfg = load_benchmark_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    const int failures = run_benchmark_to_dir(cfg);
    std::cerr << "benchmark results in " << cfg.output_dir << (failures ? " (with failures)" : "")
              << '\n';
    return failures == 0 ? kExitOk : kExitIo;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-image denoiser hyperparameter tuning without ground truth"};
    app.require_subcommand(1);

    CommonFlags f;
    std::string out_path, report_path, trace_path, config_path, out_dir;
    std::vector<double> theta_vals, h_list;
    std::uint64_t iteration = 1;
    unsigned bench_workers = 0;

    auto* tune_cmd = app.add_subcommand("tune", "tune parameters on one noisy image");
    tune_cmd->add_option("--input", f.input, "noisy image (PGM/PNG)")->required();
    tune_cmd->add_option("--input2", f.input2, "second independent noisy image (n2n)");
    tune_cmd->add_option("--clean", f.clean, "clean image (supervised scheme / evaluation)");
    tune_cmd->add_option("--scheme", f.scheme, "supervised|n2n|nac|nr2n|r2r|auto");
    tune_cmd->add_option("--out", out_path, "output image path");
    tune_cmd->add_option("--report", report_path, "report CSV path (default: stdout)");
    tune_cmd->add_option("--trace", trace_path, "per-iteration cost trace CSV path");
    add_noise_flags(tune_cmd, f);
    add_tune_flags(tune_cmd, f);

    auto* den_cmd = app.add_subcommand("denoise", "apply a fixed theta without tuning");
    den_cmd->add_option("--input", f.input, "noisy image (PGM/PNG)")->required();
    den_cmd->add_option("--theta", theta_vals, "planck_ratio interaction c1 c2")
        ->required()
        ->expected(4);
    den_cmd->add_option("--out", out_path, "output image path");
    den_cmd->add_option("--patch-size", f.patch_size, "denoiser patch size");
    den_cmd->add_option("--stride", f.stride, "denoiser patch stride");
    den_cmd->add_option("--workers", f.workers, "worker threads");

    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient consistency report");
    gc_cmd->add_option("--input", f.input, "noisy image (PGM/PNG)")->required();
    gc_cmd->add_option("--input2", f.input2, "second noisy image (n2n)");
    gc_cmd->add_option("--clean", f.clean, "clean image (supervised)");
    gc_cmd->add_option("--scheme", f.scheme, "cost function to probe");
    gc_cmd->add_option("--h-list", h_list, "reference step sizes (default 1e-4)");
    gc_cmd->add_option("--iteration", iteration, "frozen iteration index");
    add_noise_flags(gc_cmd, f);
    add_tune_flags(gc_cmd, f);

    auto* bench_cmd = app.add_subcommand("benchmark", "run a config-driven sweep");
    bench_cmd->add_option("--config", config_path, "benchmark config file")->required();
    bench_cmd->add_option("--output-dir", out_dir, "override [output] dir");
    bench_cmd->add_option("--workers", bench_workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(tune_cmd)) return cmd_tune(f, out_path, report_path, trace_path);
        if (app.got_subcommand(den_cmd)) return cmd_denoise(f, theta_vals, out_path);
        if (app.got_subcommand(gc_cmd)) return cmd_gradcheck(f, h_list, iteration);
        if (app.got_subcommand(bench_cmd)) return cmd_benchmark(config_path, out_dir, bench_workers);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
