#pragma once

// Benchmark harness: sweeps (image x noise level x seed x scheme), always
// adding the supervised gold standard, and emits a results table, per-scheme
// summary statistics and a self-contained SVG plot. One plain-text config
// file fully specifies a sweep so results can be reproduced byte-for-byte
// (wall-clock columns aside).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dntune/dequip.hpp"
#include "dntune/noise.hpp"
#include "dntune/tuning.hpp"

namespace dntune {

struct BenchmarkConfig {
    std::string image_dir;
    std::vector<std::string> image_files;  // explicit list; merged with image_dir scan
    int crop = 96;                         // center crop, 0 keeps full size
    NoiseKind kind = NoiseKind::Gaussian;
    std::vector<double> levels;            // sigmas (Gaussian) or peaks (Poisson)
    std::vector<Scheme> schemes;
    std::vector<std::uint64_t> seeds{1};
    TuneConfig tune;
    TuneScheme scheme_params;  // alpha / d_scale / m_inference shared by rows
    dequip::Config dequip;
    std::string output_dir = "bench_out";
    unsigned workers = 0;  // 0 = auto (DNTUNE_WORKERS env var, then hardware)
    double psnr_peak = 1.0;

    void validate() const;  // throws UsageError on an unusable sweep
};

BenchmarkConfig parse_benchmark_config(std::istream& in, const std::string& origin);
BenchmarkConfig load_benchmark_config(const std::string& path);

struct BenchRow {
    std::string image_id;
    Scheme scheme = Scheme::N2N;
    NoiseKind kind = NoiseKind::Gaussian;
    double level = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> psnr_in;
    std::optional<double> psnr_out;
    Theta theta_hat;
    double final_cost = 0.0;
    double wall_ms = 0.0;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

struct BenchSummaryRow {
    Scheme scheme;
    double level;
    double psnr_in_mean;
    double psnr_out_mean;
    double psnr_out_std;         // over all rows of the cell
    double psnr_out_std_images;  // over per-image means (seeds pooled)
    double psnr_out_std_seeds;   // over per-seed means (images pooled)
    int n;
};

struct BenchResult {
    std::vector<BenchRow> rows;  // sorted by (image, scheme, level, seed)
    std::vector<BenchSummaryRow> summary;
    int failures = 0;
};

BenchResult run_benchmark(const BenchmarkConfig& cfg);

// Stable CSV schemas; see README. Fields are never reordered.
void write_results_csv(const BenchResult& r, std::ostream& out);
void write_summary_csv(const BenchResult& r, std::ostream& out);
void write_plot_svg(const BenchResult& r, std::ostream& out);

// Runs the sweep and writes results.csv, summary.csv and plot.svg into
// cfg.output_dir. Returns the number of failed rows.
int run_benchmark_to_dir(const BenchmarkConfig& cfg);

// Deterministic number formatting shared by all CSV writers ("inf" for the
// infinite-PSNR sentinel).
std::string format_double(double v);

std::string tune_report_csv_header();
std::string tune_report_csv_row(const std::string& scheme, const NoiseModel& model,
                                std::uint64_t seed, const TuneReport& rep);

}  // namespace dntune
