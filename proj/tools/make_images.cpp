// Writes a small set of synthetic grayscale scenes as 8-bit PGM files,
// handy as clean ground truth for benchmark sweeps and demos.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "dntune/image.hpp"
#include "dntune/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate synthetic test scenes"};
    std::string out_dir = "data";
    int count = 5;
    int size = 96;
    std::uint64_t seed = 7;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--count", count, "number of scenes");
    app.add_option("--size", size, "square scene size in pixels");
    app.add_option("--seed", seed, "base seed");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        for (int i = 0; i < count; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "scene_%02d.pgm", i);
            const auto path = (std::filesystem::path(out_dir) / name).string();
            dntune::save_image(dntune::synth_scene(size, size, seed + i), path);
            std::cout << path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
