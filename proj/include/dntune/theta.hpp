#pragma once

// The 4-dimensional denoiser parameter vector and its unconstrained
// reparameterization. Optimizers work in ThetaFree (all of R^4); the softplus
// maps guarantee the constraints planck_ratio > 0, interaction > 0 and
// 0 < c1 < c2 hold at every point the descent visits.

#include <array>
#include <string>

namespace dntune {

struct Theta {
    double planck_ratio = 0.5;  // kinetic coefficient on the patch Laplacian
    double interaction = 1.0;   // neighbor-patch coupling strength p
    double c1 = 0.05;           // shrinkage ramp start
    double c2 = 0.5;            // shrinkage ramp end, > c1

    bool valid() const;
    // throws std::invalid_argument naming the violated constraint
    void check() const;
    std::string describe() const;
};

struct ThetaFree {
    std::array<double, 4> u{};

    Theta to_theta() const;
    static ThetaFree from_theta(const Theta& t);
};

double softplus(double u);
double softplus_inv(double v);  // v must be > 0

}  // namespace dntune
