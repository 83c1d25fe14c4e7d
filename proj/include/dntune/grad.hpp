#pragma once

// Finite-difference gradient engine over the free parameter vector, plus a
// self-validation harness for any alternative gradient implementation.
//
// Cost functions may be stochastic, but must be deterministic given the
// iteration index: every evaluation inside one gradient estimate passes the
// same index, so all of them see the same noise draw and the differences
// measure parameter sensitivity rather than noise.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "dntune/theta.hpp"

namespace dntune {

using CostFn = std::function<double(const ThetaFree&, std::uint64_t iteration)>;

struct Gradient {
    std::array<double, 4> g{};
    bool all_finite() const;
};

// Central differences: g_i = (cost(u + h e_i) - cost(u - h e_i)) / 2h.
// Throws if any evaluation is non-finite, naming the offending coordinate.
Gradient grad_central(const CostFn& cost, const ThetaFree& u, double h, std::uint64_t iteration);

struct GradCheckRow {
    int coordinate = 0;
    double supplied = 0.0;   // the gradient under test
    double reference = 0.0;  // central-difference estimate at h_used
    double rel_err = 0.0;    // |supplied - reference| / max(|supplied|, |reference|, 1e-12)
    double h_used = 0.0;
    double richardson_resid = 0.0;  // asymptotic-regime indicator at h_used
    bool flagged = false;
};

struct GradCheckReport {
    std::array<GradCheckRow, 4> rows;
    double max_rel_err = 0.0;
    bool any_flagged = false;

    std::string to_csv() const;
};

// Compares g against central-difference references. For each h in h_list the
// harness also evaluates at h/2 and forms the Richardson extrapolation
// R = (4 D(h/2) - D(h)) / 3; the reference per coordinate is D(h) at the
// smallest h whose extrapolation residual |R - D(h/2)| is relatively small
// (the three estimates agree), falling back to the h with the least residual.
GradCheckReport grad_check(const CostFn& cost, const ThetaFree& u, const Gradient& g,
                           std::span<const double> h_list, std::uint64_t iteration,
                           double tolerance = 1e-3);

}  // namespace dntune
