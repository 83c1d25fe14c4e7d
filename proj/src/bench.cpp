#include "dntune/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "dntune/errors.hpp"
#include "dntune/parallel.hpp"

namespace dntune {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_num(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("benchmark config: bad number '" + v + "' for " + what);
    }
}

// sanitize for CSV: commas and newlines would break the row shape
std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// population std; well-defined for a single sample (0)
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void BenchmarkConfig::validate() const {
    if (image_dir.empty() && image_files.empty())
        throw UsageError("benchmark config: no images ([images] dir or files)");
    if (levels.empty()) throw UsageError("benchmark config: no noise levels");
    if (schemes.empty()) throw UsageError("benchmark config: empty scheme list");
    if (seeds.empty()) throw UsageError("benchmark config: empty seed list");
    for (double l : levels)
        if (l <= 0.0) throw UsageError("benchmark config: noise levels must be positive");
}

BenchmarkConfig parse_benchmark_config(std::istream& in, const std::string& origin) {
    BenchmarkConfig cfg;
    cfg.schemes.clear();
    cfg.seeds.clear();
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string where = origin + ":" + std::to_string(lineno);

        if (section == "images") {
            if (key == "dir") cfg.image_dir = val;
            else if (key == "files") cfg.image_files = split_list(val);
            else if (key == "crop") cfg.crop = static_cast<int>(parse_num(val, key));
            else throw UsageError(where + ": unknown key '" + key + "' in [images]");
        } else if (section == "noise") {
            if (key == "kind") {
                if (val == "gaussian") cfg.kind = NoiseKind::Gaussian;
                else if (val == "poisson") cfg.kind = NoiseKind::Poisson;
                else throw UsageError(where + ": unknown noise kind '" + val + "'");
            } else if (key == "levels" || key == "sigmas" || key == "peaks") {
                cfg.levels.clear();
                for (const auto& s : split_list(val)) cfg.levels.push_back(parse_num(s, key));
            } else {
                throw UsageError(where + ": unknown key '" + key + "' in [noise]");
            }
        } else if (section == "run") {
            if (key == "schemes") {
                cfg.schemes.clear();
                for (const auto& s : split_list(val)) {
                    const auto sc = scheme_from_name(s);
                    if (!sc) throw UsageError(where + ": unknown scheme '" + s + "'");
                    cfg.schemes.push_back(*sc);
                }
            } else if (key == "seeds") {
                cfg.seeds.clear();
                for (const auto& s : split_list(val))
                    cfg.seeds.push_back(static_cast<std::uint64_t>(parse_num(s, key)));
            } else if (key == "iterations") cfg.tune.iterations = static_cast<int>(parse_num(val, key));
            else if (key == "learning_rate") cfg.tune.learning_rate = parse_num(val, key);
            else if (key == "fd_step") cfg.tune.fd_step = parse_num(val, key);
            else if (key == "alpha") cfg.scheme_params.alpha = parse_num(val, key);
            else if (key == "d_scale") cfg.scheme_params.d_scale = parse_num(val, key);
            else if (key == "m_inference") cfg.scheme_params.m_inference = static_cast<int>(parse_num(val, key));
            else if (key == "patch_size") cfg.dequip.patch_size = static_cast<int>(parse_num(val, key));
            else if (key == "stride") cfg.dequip.stride = static_cast<int>(parse_num(val, key));
            else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_num(val, key));
            else if (key == "psnr_peak") cfg.psnr_peak = parse_num(val, key);
            else if (key == "theta0") {
                const auto parts = split_list(val);
                if (parts.size() != 4) throw UsageError(where + ": theta0 needs 4 values");
                cfg.tune.theta0.planck_ratio = parse_num(parts[0], key);
                cfg.tune.theta0.interaction = parse_num(parts[1], key);
                cfg.tune.theta0.c1 = parse_num(parts[2], key);
                cfg.tune.theta0.c2 = parse_num(parts[3], key);
            } else {
                throw UsageError(where + ": unknown key '" + key + "' in [run]");
            }
        } else if (section == "output") {
            if (key == "dir") cfg.output_dir = val;
            else throw UsageError(where + ": unknown key '" + key + "' in [output]");
        } else {
            throw UsageError(where + ": key outside a known section");
        }
    }
    cfg.validate();
    return cfg;
}

BenchmarkConfig load_benchmark_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    return parse_benchmark_config(in, path);
}

namespace {

Image center_crop(const Image& img, int crop) {
    if (crop <= 0 || (img.width <= crop && img.height <= crop)) return img;
    const int w = std::min(crop, img.width), h = std::min(crop, img.height);
    const int x0 = (img.width - w) / 2, y0 = (img.height - h) / 2;
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

struct CleanImage {
    std::string id;
    Image pixels;
};

std::vector<CleanImage> load_clean_images(const BenchmarkConfig& cfg) {
    std::vector<std::string> paths = cfg.image_files;
    if (!cfg.image_dir.empty()) {
        if (!fs::is_directory(cfg.image_dir))
            throw IoError(cfg.image_dir + ": not a directory");
        for (const auto& e : fs::directory_iterator(cfg.image_dir)) {
            const auto ext = e.path().extension().string();
            if (ext == ".pgm" || ext == ".png") paths.push_back(e.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    if (paths.empty()) throw UsageError("benchmark: no .pgm/.png images found");
    std::vector<CleanImage> out;
    out.reserve(paths.size());
    for (const auto& p : paths)
        out.push_back({fs::path(p).stem().string(), center_crop(load_image(p), cfg.crop)});
    return out;
}

struct Task {
    const CleanImage* clean;
    Scheme scheme;
    double level;
    std::uint64_t seed;
};

BenchRow run_task(const BenchmarkConfig& cfg, const Task& task) {
    BenchRow row;
    row.image_id = task.clean->id;
    row.scheme = task.scheme;
    row.kind = cfg.kind;
    row.level = task.level;
    row.seed = task.seed;
    try {
        const NoiseModel model = cfg.kind == NoiseKind::Gaussian
                                     ? NoiseModel::gaussian(task.level, task.seed)
                                     : NoiseModel::poisson(task.level, task.seed);
        TuneInputs inputs;
        {
            Rng rng(task.seed, stream::corrupt_y);
            inputs.y = cfg.kind == NoiseKind::Gaussian
                           ? add_gaussian(task.clean->pixels, task.level, rng)
                           : add_poisson(task.clean->pixels, task.level, rng);
        }
        if (task.scheme == Scheme::N2N) {
            Rng rng(task.seed, stream::corrupt_y2);
            inputs.y2 = cfg.kind == NoiseKind::Gaussian
                            ? add_gaussian(task.clean->pixels, task.level, rng)
                            : add_poisson(task.clean->pixels, task.level, rng);
        }
        inputs.x = task.clean->pixels;  // supervision for gold, evaluation elsewhere

        TuneScheme scheme = cfg.scheme_params;
        scheme.tag = task.scheme;
        TuneConfig tc = cfg.tune;
        tc.seed = task.seed;

        const TuneReport rep = tune(scheme, inputs, model, tc, dequip::make_denoiser(cfg.dequip));
        if (cfg.psnr_peak != 1.0) {
            row.psnr_in = psnr(inputs.y, task.clean->pixels, cfg.psnr_peak);
            row.psnr_out = psnr(rep.x_hat, task.clean->pixels, cfg.psnr_peak);
        } else {
            row.psnr_in = rep.psnr_in;
            row.psnr_out = rep.psnr_out;
        }
        row.theta_hat = rep.theta_hat;
        row.final_cost = rep.final_cost;
        row.wall_ms = rep.wall_ms;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

std::vector<BenchSummaryRow> summarize(const std::vector<BenchRow>& rows) {
    std::map<std::pair<int, double>, std::vector<const BenchRow*>> cells;
    for (const auto& r : rows)
        if (r.ok() && r.psnr_out) cells[{static_cast<int>(r.scheme), r.level}].push_back(&r);

    std::vector<BenchSummaryRow> out;
    for (const auto& [key, cell] : cells) {
        BenchSummaryRow s{};
        s.scheme = static_cast<Scheme>(key.first);
        s.level = key.second;
        s.n = static_cast<int>(cell.size());
        std::vector<double> pin, pout;
        std::map<std::string, std::vector<double>> by_image;
        std::map<std::uint64_t, std::vector<double>> by_seed;
        for (const BenchRow* r : cell) {
            pin.push_back(*r->psnr_in);
            pout.push_back(*r->psnr_out);
            by_image[r->image_id].push_back(*r->psnr_out);
            by_seed[r->seed].push_back(*r->psnr_out);
        }
        s.psnr_in_mean = mean_of(pin);
        s.psnr_out_mean = mean_of(pout);
        s.psnr_out_std = std_of(pout);
        std::vector<double> image_means, seed_means;
        for (auto& [_, v] : by_image) image_means.push_back(mean_of(v));
        for (auto& [_, v] : by_seed) seed_means.push_back(mean_of(v));
        s.psnr_out_std_images = std_of(image_means);
        s.psnr_out_std_seeds = std_of(seed_means);
        out.push_back(s);
    }
    return out;
}

}  // namespace

BenchResult run_benchmark(const BenchmarkConfig& cfg) {
    cfg.validate();
    const auto clean = load_clean_images(cfg);

    // gold standard runs for every (image, level, seed), whether requested or not
    std::vector<Scheme> schemes = cfg.schemes;
    if (std::find(schemes.begin(), schemes.end(), Scheme::Supervised) == schemes.end())
        schemes.push_back(Scheme::Supervised);

    std::vector<Task> tasks;
    for (const auto& img : clean)
        for (Scheme sc : schemes)
            for (double level : cfg.levels)
                for (std::uint64_t seed : cfg.seeds) tasks.push_back({&img, sc, level, seed});

    BenchResult res;
    res.rows.resize(tasks.size());
    const unsigned workers =
        std::min<std::size_t>(resolve_workers(cfg.workers), tasks.size());
    std::atomic<std::size_t> next{0};
    parallel_chunks(workers, workers, [&](std::size_t, std::size_t) {
        // dynamic dispatch: tasks vary wildly in cost, each result lands in
        // its own preallocated slot so output order is fixed
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            res.rows[i] = run_task(cfg, tasks[i]);
        }
    });

    std::stable_sort(res.rows.begin(), res.rows.end(), [](const BenchRow& a, const BenchRow& b) {
        return std::tie(a.image_id, a.scheme, a.level, a.seed) <
               std::tie(b.image_id, b.scheme, b.level, b.seed);
    });
    for (const auto& r : res.rows)
        if (!r.ok()) ++res.failures;
    res.summary = summarize(res.rows);
    return res;
}

void write_results_csv(const BenchResult& r, std::ostream& out) {
    out << "image,scheme,noise_kind,noise_level,seed,psnr_in,psnr_out,theta_planck_ratio,"
           "theta_interaction,theta_c1,theta_c2,final_cost,wall_ms,error\n";
    for (const auto& row : r.rows) {
        out << row.image_id << ',' << scheme_name(row.scheme) << ','
            << (row.kind == NoiseKind::Gaussian ? "gaussian" : "poisson") << ','
            << format_double(row.level) << ',' << row.seed << ',';
        if (row.ok()) {
            out << (row.psnr_in ? format_double(*row.psnr_in) : "") << ','
                << (row.psnr_out ? format_double(*row.psnr_out) : "") << ','
                << format_double(row.theta_hat.planck_ratio) << ','
                << format_double(row.theta_hat.interaction) << ','
                << format_double(row.theta_hat.c1) << ',' << format_double(row.theta_hat.c2) << ','
                << format_double(row.final_cost) << ',' << format_double(row.wall_ms) << ",\n";
        } else {
            out << ",,,,,,," << format_double(row.wall_ms) << ',' << csv_safe(row.error) << '\n';
        }
    }
}

void write_summary_csv(const BenchResult& r, std::ostream& out) {
    out << "scheme,noise_level,psnr_in_mean,psnr_out_mean,psnr_out_std,psnr_out_std_images,"
           "psnr_out_std_seeds,rows\n";
    for (const auto& s : r.summary)
        out << scheme_name(s.scheme) << ',' << format_double(s.level) << ','
            << format_double(s.psnr_in_mean) << ',' << format_double(s.psnr_out_mean) << ','
            << format_double(s.psnr_out_std) << ',' << format_double(s.psnr_out_std_images) << ','
            << format_double(s.psnr_out_std_seeds) << ',' << s.n << '\n';
}

namespace {

struct PlotSeries {
    Scheme scheme;
    std::vector<double> x, y, band;  // psnr_in mean, psnr_out mean, +-1 std
};

const char* scheme_color(Scheme s) {
    switch (s) {
        case Scheme::Supervised: return "#000000";
        case Scheme::N2N: return "#1f77b4";
        case Scheme::NaC: return "#2ca02c";
        case Scheme::Nr2N: return "#d62728";
        case Scheme::R2R: return "#9467bd";
    }
    return "#777777";
}

}  // namespace

void write_plot_svg(const BenchResult& r, std::ostream& out) {
    std::map<int, PlotSeries> series;
    for (const auto& s : r.summary) {
        auto& ps = series[static_cast<int>(s.scheme)];
        ps.scheme = s.scheme;
        ps.x.push_back(s.psnr_in_mean);
        ps.y.push_back(s.psnr_out_mean);
        ps.band.push_back(s.psnr_out_std);
    }
    const double W = 640, H = 460, ml = 64, mr = 160, mt = 28, mb = 52;
    double xmin = 1e30, xmax = -1e30, ymin = 1e30, ymax = -1e30;
    for (auto& [_, s] : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - s.band[i]);
            ymax = std::max(ymax, s.y[i] + s.band[i]);
        }
    if (series.empty()) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax - xmin < 1e-9) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-9) { ymin -= 0.5; ymax += 0.5; }
    const double padx = 0.05 * (xmax - xmin), pady = 0.08 * (ymax - ymin);
    xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;
    auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes + ticks
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\"/>\n</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        out << "<text x=\"" << X(fx) << "\" y=\"" << H - mb + 16
            << "\" text-anchor=\"middle\">" << format_double(std::round(fx * 10) / 10) << "</text>\n";
        out << "<text x=\"" << ml - 6 << "\" y=\"" << Y(fy) + 4
            << "\" text-anchor=\"end\">" << format_double(std::round(fy * 10) / 10) << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 14
        << "\" text-anchor=\"middle\">input PSNR (dB)</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (mt + H - mb) / 2
        << ")\">output PSNR (dB)</text>\n</g>\n";

    int legend_i = 0;
    for (auto& [_, s] : series) {
        // sort points by x for sane polylines
        std::vector<std::size_t> idx(s.x.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
        const char* color = scheme_color(s.scheme);
        if (idx.size() > 1) {
            out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i : idx) out << X(s.x[i]) << ',' << Y(s.y[i] + s.band[i]) << ' ';
            for (auto it = idx.rbegin(); it != idx.rend(); ++it)
                out << X(s.x[*it]) << ',' << Y(s.y[*it] - s.band[*it]) << ' ';
            out << "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i : idx) out << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
        out << "\"/>\n";
        for (std::size_t i : idx)
            out << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"2.6\" fill=\""
                << color << "\"/>\n";
        const double ly = mt + 14 + 18 * legend_i++;
        out << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 36
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n"
            << "<text font-family=\"sans-serif\" font-size=\"12\" x=\"" << W - mr + 42 << "\" y=\""
            << ly + 4 << "\">" << scheme_name(s.scheme) << "</text>\n";
    }
    out << "</svg>\n";
}

int run_benchmark_to_dir(const BenchmarkConfig& cfg) {
    const BenchResult res = run_benchmark(cfg);
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream f(fs::path(cfg.output_dir) / "results.csv");
        if (!f) throw IoError(cfg.output_dir + "/results.csv: cannot open for writing");
        write_results_csv(res, f);
    }
    {
        std::ofstream f(fs::path(cfg.output_dir) / "summary.csv");
        if (!f) throw IoError(cfg.output_dir + "/summary.csv: cannot open for writing");
        write_summary_csv(res, f);
    }
    {
        std::ofstream f(fs::path(cfg.output_dir) / "plot.svg");
        if (!f) throw IoError(cfg.output_dir + "/plot.svg: cannot open for writing");
        write_plot_svg(res, f);
    }
    return res.failures;
}

std::string tune_report_csv_header() {
    return "scheme,noise_kind,noise_level,seed,theta_planck_ratio,theta_interaction,theta_c1,"
           "theta_c2,psnr_in,psnr_out,final_cost,wall_ms";
}

std::string tune_report_csv_row(const std::string& scheme, const NoiseModel& model,
                                std::uint64_t seed, const TuneReport& rep) {
    std::ostringstream os;
    os << scheme << ',' << (model.kind == NoiseKind::Gaussian ? "gaussian" : "poisson") << ','
       << format_double(model.kind == NoiseKind::Gaussian ? model.sigma : model.peak) << ',' << seed
       << ',' << format_double(rep.theta_hat.planck_ratio) << ','
       << format_double(rep.theta_hat.interaction) << ',' << format_double(rep.theta_hat.c1) << ','
       << format_double(rep.theta_hat.c2) << ','
       << (rep.psnr_in ? format_double(*rep.psnr_in) : "") << ','
       << (rep.psnr_out ? format_double(*rep.psnr_out) : "") << ','
       << format_double(rep.final_cost) << ',' << format_double(rep.wall_ms);
    return os.str();
}

}  // namespace dntune
