#include "dntune/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>

#include "dntune/errors.hpp"

namespace dntune {

bool Image::valid() const {
    if (width <= 0 || height <= 0) return false;
    if (data.size() != static_cast<std::size_t>(width) * height) return false;
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// Skips PGM whitespace and '#' comment lines, then parses one nonnegative integer.
int pgm_read_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw IoError(path + ": truncated header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 30) throw IoError(path + ": header value out of range");
        c = in.get();
    }
    return static_cast<int>(v);
}

Image load_pgm(std::istream& in, const std::string& path) {
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in) throw IoError(path + ": truncated header");
    if (m0 != 'P' || m1 != '5') {
        std::string magic{m0, m1};
        throw IoError(path + ": unsupported format '" + magic + "' (expected binary grayscale P5)");
    }
    const int w = pgm_read_int(in, path);
    const int h = pgm_read_int(in, path);
    const int maxval = pgm_read_int(in, path);
    if (w <= 0 || h <= 0) throw IoError(path + ": bad dimensions");
    if (maxval <= 0 || maxval > 65535) throw IoError(path + ": unsupported maxval " + std::to_string(maxval));
    // the integer parser consumed the single whitespace after maxval

    Image img(w, h);
    const std::size_t n = img.size();
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(path + ": truncated raster");
        for (std::size_t i = 0; i < n; ++i) img.data[i] = buf[i] / static_cast<double>(maxval);
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (static_cast<std::size_t>(in.gcount()) != 2 * n) throw IoError(path + ": truncated raster");
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];  // big-endian
            img.data[i] = v / static_cast<double>(maxval);
        }
    }
    return img;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

const char* png_color_name(int t) {
    switch (t) {
        case PNG_COLOR_TYPE_GRAY: return "grayscale";
        case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
        case PNG_COLOR_TYPE_PALETTE: return "palette";
        case PNG_COLOR_TYPE_RGB: return "RGB";
        case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
        default: return "unknown";
    }
}

Image load_png(const std::string& path) {
    PngReadCloser c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw IoError(path + ": cannot open for reading");
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError(path + ": libpng init failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError(path + ": corrupt PNG");

    png_init_io(c.png, c.fp);
    png_read_info(c.png, c.info);

    const int color = png_get_color_type(c.png, c.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw IoError(path + ": unsupported PNG color format '" + png_color_name(color) +
                      "' (expected grayscale)");
    int depth = png_get_bit_depth(c.png, c.info);
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(c.png);
        depth = 8;
    }
    const int w = static_cast<int>(png_get_image_width(c.png, c.info));
    const int h = static_cast<int>(png_get_image_height(c.png, c.info));
    png_read_update_info(c.png, c.info);

    const std::size_t row_bytes = png_get_rowbytes(c.png, c.info);
    std::vector<unsigned char> raster(row_bytes * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = raster.data() + row_bytes * y;
    png_read_image(c.png, rows.data());

    Image img(w, h);
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < h; ++y) {
        const unsigned char* r = rows[y];
        for (int x = 0; x < w; ++x) {
            unsigned v = depth == 16 ? (static_cast<unsigned>(r[2 * x]) << 8) | r[2 * x + 1] : r[x];
            img.at(x, y) = v / maxval;
        }
    }
    return img;
}

bool has_png_signature(std::istream& in) {
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    const bool ok = in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
    in.clear();
    in.seekg(0);
    return ok;
}

}  // namespace

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    if (has_png_signature(in)) {
        in.close();
        return load_png(path);
    }
    Image img = load_pgm(in, path);
    if (!img.valid()) throw IoError(path + ": non-finite pixel values");
    return img;
}

void save_image(const Image& img, const std::string& path) {
    if (!img.valid()) throw IoError(path + ": refusing to save invalid image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> buf(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = img.data[i];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        buf[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError(path + ": write failed");
}

double mse(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mse: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double peak) {
    if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

namespace {

// Patch start offsets along one axis: 0, t, 2t, ... with the final one clamped
// to dim - s so the last patch ends exactly at the image edge.
std::vector<int> axis_positions(int dim, int s, int t) {
    std::vector<int> pos;
    int p = 0;
    while (p + s < dim) {
        pos.push_back(p);
        p += t;
    }
    pos.push_back(dim - s);
    return pos;
}

}  // namespace

PatchGrid extract_patches(const Image& img, int patch_size, int stride) {
    const int s = patch_size, t = stride;
    if (s < 1 || s > std::min(img.width, img.height))
        throw std::invalid_argument("extract_patches: patch size out of range");
    if (t < 1 || t > s) throw std::invalid_argument("extract_patches: stride out of range (need 1 <= t <= s)");

    PatchGrid g;
    g.patch_size = s;
    g.stride = t;
    g.image_width = img.width;
    g.image_height = img.height;
    const std::vector<int> xs = axis_positions(img.width, s, t);
    const std::vector<int> ys = axis_positions(img.height, s, t);
    g.cols = static_cast<int>(xs.size());
    g.rows = static_cast<int>(ys.size());
    const int n = g.cols * g.rows;
    g.pos_x.reserve(n);
    g.pos_y.reserve(n);
    g.values.resize(static_cast<std::size_t>(n) * s * s);
    g.coverage.assign(img.size(), 0);

    std::size_t k = 0;
    for (int py : ys) {
        for (int px : xs) {
            g.pos_x.push_back(px);
            g.pos_y.push_back(py);
            for (int dy = 0; dy < s; ++dy)
                for (int dx = 0; dx < s; ++dx) {
                    g.values[k++] = img.at(px + dx, py + dy);
                    ++g.coverage[static_cast<std::size_t>(py + dy) * img.width + (px + dx)];
                }
        }
    }
    return g;
}

Image reassemble(const PatchGrid& grid, int width, int height) {
    const int s = grid.patch_size;
    Image out(width, height, 0.0);
    std::vector<int> count(out.size(), 0);
    for (int i = 0; i < grid.n_patches(); ++i) {
        const int px = grid.pos_x[i], py = grid.pos_y[i];
        if (px < 0 || py < 0 || px + s > width || py + s > height)
            throw std::invalid_argument("reassemble: patch position inconsistent with image dimensions");
        auto vals = grid.patch(i);
        for (int dy = 0; dy < s; ++dy)
            for (int dx = 0; dx < s; ++dx) {
                out.at(px + dx, py + dy) += vals[static_cast<std::size_t>(dy) * s + dx];
                ++count[static_cast<std::size_t>(py + dy) * width + (px + dx)];
            }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (count[i] == 0) throw std::invalid_argument("reassemble: uncovered pixel");
        out.data[i] /= count[i];
    }
    return out;
}

}  // namespace dntune
