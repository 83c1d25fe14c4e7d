#include "dntune/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dntune {

namespace {

double checked_eval(const CostFn& cost, const ThetaFree& u, std::uint64_t iteration, int coord,
                    double offset) {
    const double v = cost(u, iteration);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "grad: non-finite cost at coordinate " << coord << " (offset " << offset << ")";
        throw std::runtime_error(os.str());
    }
    return v;
}

double rel_gap(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

bool Gradient::all_finite() const {
    return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
}

Gradient grad_central(const CostFn& cost, const ThetaFree& u, double h, std::uint64_t iteration) {
    if (h <= 0.0) throw std::invalid_argument("grad_central: step must be positive");
    Gradient out;
    for (int i = 0; i < 4; ++i) {
        ThetaFree up = u, dn = u;
        up.u[i] += h;
        dn.u[i] -= h;
        const double cp = checked_eval(cost, up, iteration, i, +h);
        const double cm = checked_eval(cost, dn, iteration, i, -h);
        out.g[i] = (cp - cm) / (2.0 * h);
    }
    return out;
}

GradCheckReport grad_check(const CostFn& cost, const ThetaFree& u, const Gradient& g,
                           std::span<const double> h_list, std::uint64_t iteration,
                           double tolerance) {
    if (h_list.empty()) throw std::invalid_argument("grad_check: empty step list");
    std::vector<double> hs(h_list.begin(), h_list.end());
    std::sort(hs.begin(), hs.end(), std::greater<>());  // descending, pick smallest agreeing

    struct Probe {
        double h;
        Gradient d_h;
        Gradient d_half;
    };
    std::vector<Probe> probes;
    probes.reserve(hs.size());
    for (double h : hs)
        probes.push_back({h, grad_central(cost, u, h, iteration),
                          grad_central(cost, u, h / 2.0, iteration)});

    GradCheckReport rep;
    for (int i = 0; i < 4; ++i) {
        double best_resid = std::numeric_limits<double>::infinity();
        const Probe* chosen = nullptr;
        bool agreed = false;
        for (const Probe& p : probes) {
            const double r = (4.0 * p.d_half.g[i] - p.d_h.g[i]) / 3.0;
            const double resid = rel_gap(r, p.d_half.g[i]);
            if (resid <= tolerance) {
                chosen = &p;  // keep scanning: list is descending, smallest agreeing h wins
                best_resid = resid;
                agreed = true;
            } else if (!agreed && resid < best_resid) {
                chosen = &p;
                best_resid = resid;
            }
        }
        GradCheckRow& row = rep.rows[i];
        row.coordinate = i;
        row.supplied = g.g[i];
        row.reference = chosen->d_h.g[i];
        row.h_used = chosen->h;
        row.richardson_resid = best_resid;
        row.rel_err = rel_gap(row.supplied, row.reference);
        row.flagged = row.rel_err > tolerance;
        rep.max_rel_err = std::max(rep.max_rel_err, row.rel_err);
        rep.any_flagged = rep.any_flagged || row.flagged;
    }
    return rep;
}

std::string GradCheckReport::to_csv() const {
    std::ostringstream os;
    os << "coordinate,supplied,fd_reference,rel_err,h,richardson_resid,flagged\n";
    os.setf(std::ios::scientific);
    os.precision(9);
    for (const auto& r : rows)
        os << r.coordinate << ',' << r.supplied << ',' << r.reference << ',' << r.rel_err << ','
           << r.h_used << ',' << r.richardson_resid << ',' << (r.flagged ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace dntune
