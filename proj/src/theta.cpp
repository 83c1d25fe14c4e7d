#include "dntune/theta.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dntune {

bool Theta::valid() const {
    return planck_ratio > 0.0 && interaction >= 0.0 && c1 >= 0.0 && c1 < c2 &&
           std::isfinite(planck_ratio) && std::isfinite(interaction) && std::isfinite(c1) &&
           std::isfinite(c2);
}

void Theta::check() const {
    if (!std::isfinite(planck_ratio) || planck_ratio <= 0.0)
        throw std::invalid_argument("theta: planck_ratio must be finite and > 0");
    if (!std::isfinite(interaction) || interaction < 0.0)
        throw std::invalid_argument("theta: interaction must be finite and >= 0");
    if (!std::isfinite(c1) || c1 < 0.0) throw std::invalid_argument("theta: c1 must be finite and >= 0");
    if (!std::isfinite(c2) || c2 <= c1) throw std::invalid_argument("theta: need c1 < c2");
}

std::string Theta::describe() const {
    std::ostringstream os;
    os << "planck_ratio=" << planck_ratio << " interaction=" << interaction << " c1=" << c1
       << " c2=" << c2;
    return os.str();
}

double softplus(double u) {
    if (u > 0.0) return u + std::log1p(std::exp(-u));
    return std::log1p(std::exp(u));
}

double softplus_inv(double v) {
    if (v <= 0.0) throw std::invalid_argument("softplus_inv: argument must be > 0");
    if (v > 36.0) return v;  // exp(-v) below double epsilon
    return std::log(std::expm1(v));
}

Theta ThetaFree::to_theta() const {
    Theta t;
    t.planck_ratio = softplus(u[0]);
    t.interaction = softplus(u[1]);
    t.c1 = softplus(u[2]);
    t.c2 = t.c1 + softplus(u[3]);
    return t;
}

ThetaFree ThetaFree::from_theta(const Theta& t) {
    t.check();
    // clamp exact zeros slightly inside the open softplus range
    const double tiny = 1e-12;
    ThetaFree f;
    f.u[0] = softplus_inv(std::max(t.planck_ratio, tiny));
    f.u[1] = softplus_inv(std::max(t.interaction, tiny));
    f.u[2] = softplus_inv(std::max(t.c1, tiny));
    f.u[3] = softplus_inv(std::max(t.c2 - t.c1, tiny));
    return f;
}

}  // namespace dntune
