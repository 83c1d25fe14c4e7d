#include "dntune/dequip.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dntune/parallel.hpp"

namespace dntune {
namespace dequip {

namespace {

// Accumulates sum over lattice neighbors of |A - B| / d(A,B)^2 per patch;
// multiplying by p gives the interaction potential.
std::vector<std::vector<double>> interaction_sums(const PatchGrid& grid) {
    const int s = grid.patch_size;
    const std::size_t ps = static_cast<std::size_t>(s) * s;
    const int n = grid.n_patches();
    if (grid.rows * grid.cols != n)
        throw std::invalid_argument("interaction_potential: grid lattice is inconsistent");

    std::vector<std::vector<double>> sums(n, std::vector<double>(ps, 0.0));
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const int a = r * grid.cols + c;
            auto va = grid.patch(a);
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= grid.rows || cc < 0 || cc >= grid.cols) continue;
                    const int b = rr * grid.cols + cc;
                    const double dx = grid.pos_x[b] - grid.pos_x[a];
                    const double dy = grid.pos_y[b] - grid.pos_y[a];
                    const double d2 = dx * dx + dy * dy;
                    auto vb = grid.patch(b);
                    for (std::size_t i = 0; i < ps; ++i)
                        sums[a][i] += std::abs(va[i] - vb[i]) / d2;
                }
            }
        }
    }
    return sums;
}

void fix_column_signs(Eigen::MatrixXd& q) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            if (q(i, j) != 0.0) {
                if (q(i, j) < 0.0) q.col(j) = -q.col(j);
                break;
            }
        }
    }
}

}  // namespace

std::vector<std::vector<double>> interaction_potential(const PatchGrid& grid, double p) {
    if (p < 0.0) throw std::invalid_argument("interaction_potential: p must be >= 0");
    auto sums = interaction_sums(grid);
    for (auto& m : sums)
        for (double& v : m) v *= p;
    return sums;
}

Eigen::MatrixXd neg_laplacian(int s) {
    if (s < 1) throw std::invalid_argument("neg_laplacian: bad size");
    const int n = s * s;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const int i = y * s + x;
            int degree = 0;
            auto link = [&](int xx, int yy) {
                if (xx < 0 || xx >= s || yy < 0 || yy >= s) return;
                m(i, yy * s + xx) = -1.0;
                ++degree;
            };
            link(x - 1, y);
            link(x + 1, y);
            link(x, y - 1);
            link(x, y + 1);
            m(i, i) = degree;
        }
    }
    return m;
}

Eigen::MatrixXd build_hamiltonian(std::span<const double> potential, double planck_ratio) {
    if (planck_ratio <= 0.0) throw std::invalid_argument("build_hamiltonian: planck_ratio must be > 0");
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(potential.size()))));
    if (static_cast<std::size_t>(s) * s != potential.size())
        throw std::invalid_argument("build_hamiltonian: potential size is not a perfect square");
    Eigen::MatrixXd h = planck_ratio * neg_laplacian(s);
    for (int i = 0; i < s * s; ++i) h(i, i) += potential[i];
    return h;
}

EigenBasis eigenbasis(const Eigen::MatrixXd& H) {
    if (H.rows() != H.cols()) throw std::invalid_argument("eigenbasis: matrix not square");
    if (!H.allFinite()) throw std::invalid_argument("eigenbasis: non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenbasis: eigensolver failed to converge");
    EigenBasis b;
    b.eigenvalues = es.eigenvalues();  // ascending
    b.vectors = es.eigenvectors();
    fix_column_signs(b.vectors);
    return b;
}

double threshold_gain(double magnitude, double c1, double c2) {
    if (c1 < 0.0 || c2 <= c1) throw std::invalid_argument("threshold_gain: need 0 <= c1 < c2");
    if (magnitude <= c1) return 0.0;
    if (magnitude >= c2) return 1.0;
    return (magnitude - c1) / (c2 - c1);
}

Pipeline::Pipeline(const Image& y, const Config& cfg)
    : cfg_(cfg),
      grid_(extract_patches(y, cfg.patch_size, cfg.stride)),
      neg_lap_(neg_laplacian(cfg.patch_size)),
      interaction_sums_(interaction_sums(grid_)) {}

Pipeline::Analysis Pipeline::analyze(double planck_ratio, double interaction) const {
    const int n = grid_.n_patches();
    const int ps = cfg_.patch_size * cfg_.patch_size;
    Analysis an;
    an.bases.resize(n);
    an.coeffs.resize(n);

    parallel_chunks(static_cast<std::size_t>(n), cfg_.threads, [&](std::size_t lo, std::size_t hi) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        Eigen::MatrixXd h(ps, ps);
        Eigen::VectorXd v(ps);
        for (std::size_t i = lo; i < hi; ++i) {
            auto patch = grid_.patch(static_cast<int>(i));
            const auto& sums = interaction_sums_[i];
            for (int j = 0; j < ps; ++j) v(j) = patch[j] + interaction * sums[j];
            h = planck_ratio * neg_lap_;
            h.diagonal() += v;
            es.compute(h);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("dequip: eigensolver failed to converge");
            EigenBasis& b = an.bases[i];
            b.eigenvalues = es.eigenvalues();
            b.vectors = es.eigenvectors();
            fix_column_signs(b.vectors);
            an.coeffs[i] = b.vectors.transpose() * Eigen::Map<const Eigen::VectorXd>(patch.data(), ps);
        }
    });
    return an;
}

Image Pipeline::synthesize(const Analysis& analysis, double c1, double c2) const {
    if (c1 < 0.0 || c2 <= c1) throw std::invalid_argument("dequip: need 0 <= c1 < c2");
    const int n = grid_.n_patches();
    const int ps = cfg_.patch_size * cfg_.patch_size;
    PatchGrid out = grid_;

    parallel_chunks(static_cast<std::size_t>(n), cfg_.threads, [&](std::size_t lo, std::size_t hi) {
        Eigen::VectorXd shrunk(ps);
        for (std::size_t i = lo; i < hi; ++i) {
            const Eigen::VectorXd& a = analysis.coeffs[i];
            shrunk = a;
            double amax = 0.0;
            for (int j = 1; j < ps; ++j) amax = std::max(amax, std::abs(a(j)));
            if (amax > 0.0) {
                // ground-state coefficient a(0) passes through untouched
                for (int j = 1; j < ps; ++j)
                    shrunk(j) = a(j) * threshold_gain(std::abs(a(j)) / amax, c1, c2);
            }
            Eigen::Map<Eigen::VectorXd>(out.patch(static_cast<int>(i)).data(), ps) =
                analysis.bases[i].vectors * shrunk;
        }
    });
    return reassemble(out, grid_.image_width, grid_.image_height);
}

Image Pipeline::run(const Theta& theta) const {
    theta.check();
    return synthesize(analyze(theta.planck_ratio, theta.interaction), theta.c1, theta.c2);
}

Image denoise(const Image& y, const Theta& theta, const Config& cfg) {
    return Pipeline(y, cfg).run(theta);
}

CachedDenoiser::CachedDenoiser(const Config& cfg, std::size_t capacity)
    : cfg_(cfg), capacity_(std::max<std::size_t>(1, capacity)) {}

std::function<Image(const Image&, const Theta&)> make_denoiser(const Config& cfg) {
    auto cached = std::make_shared<CachedDenoiser>(cfg);
    return [cached](const Image& y, const Theta& theta) { return (*cached)(y, theta); };
}

Image CachedDenoiser::operator()(const Image& y, const Theta& theta) {
    theta.check();
    for (const Entry& e : entries_) {
        if (e.planck_ratio == theta.planck_ratio && e.interaction == theta.interaction &&
            e.image.same_dims(y) && e.image.data == y.data) {
            ++hits_;
            return e.pipeline->synthesize(*e.analysis, theta.c1, theta.c2);
        }
    }
    // reuse the pipeline (grid + interaction sums) when only theta changed
    std::shared_ptr<Pipeline> pipe;
    for (const Entry& e : entries_) {
        if (e.image.same_dims(y) && e.image.data == y.data) {
            pipe = e.pipeline;
            break;
        }
    }
    if (!pipe) pipe = std::make_shared<Pipeline>(y, cfg_);
    auto analysis =
        std::make_shared<Pipeline::Analysis>(pipe->analyze(theta.planck_ratio, theta.interaction));
    ++analyses_;
    if (entries_.size() >= capacity_) entries_.pop_front();
    entries_.push_back({y, theta.planck_ratio, theta.interaction, pipe, analysis});
    return pipe->synthesize(*analysis, theta.c1, theta.c2);
}

}  // namespace dequip
}  // namespace dntune
