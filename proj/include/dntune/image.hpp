#pragma once

// Grayscale images, patch decomposition/reassembly and quality metrics.
// Intensities are real-valued with nominal range [0,1]; noisy images may
// leave that range and are only clamped on save.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dntune {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major, width*height

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool same_dims(const Image& o) const { return width == o.width && height == o.height; }

    // true when data length matches dims and every value is finite
    bool valid() const;
};

// Overlapping square patches covering the full image. Positions are row-major
// over the patch lattice; the last patch of each row/column is clamped to the
// image edge so no pixel is left uncovered.
struct PatchGrid {
    int patch_size = 0;  // s
    int stride = 0;      // t, 1 <= t <= s
    int image_width = 0;
    int image_height = 0;
    int cols = 0;  // patches per row
    int rows = 0;  // patches per column
    std::vector<int> pos_x;           // per-patch top-left x
    std::vector<int> pos_y;           // per-patch top-left y
    std::vector<double> values;       // n_patches * s * s, patch-major, row-major inside
    std::vector<int> coverage;        // per image pixel: number of covering patches

    int n_patches() const { return static_cast<int>(pos_x.size()); }
    std::span<double> patch(int i) {
        const std::size_t ps = static_cast<std::size_t>(patch_size) * patch_size;
        return {values.data() + ps * i, ps};
    }
    std::span<const double> patch(int i) const {
        const std::size_t ps = static_cast<std::size_t>(patch_size) * patch_size;
        return {values.data() + ps * i, ps};
    }
};

// Reads an 8/16-bit binary PGM (P5) or grayscale PNG, scaled to [0,1].
Image load_image(const std::string& path);

// Writes an 8-bit binary PGM; values are clamped to [0,1] then quantized
// (round half away from zero).
void save_image(const Image& img, const std::string& path);

double mse(const Image& a, const Image& b);

// 10*log10(peak^2/mse); returns +infinity when mse == 0 (serialized as "inf").
double psnr(const Image& a, const Image& b, double peak = 1.0);

PatchGrid extract_patches(const Image& img, int patch_size, int stride);

// Every pixel becomes the average of all patch copies covering it, so the
// per-pixel weights form a partition of unity.
Image reassemble(const PatchGrid& grid, int width, int height);

}  // namespace dntune
