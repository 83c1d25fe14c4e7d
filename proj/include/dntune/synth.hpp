#pragma once

// Deterministic synthetic grayscale scenes: smooth background gradients,
// piecewise-constant shapes with hard edges and a few textured regions.
// Used as clean ground truth by the tests and the demo data generator.

#include <cstdint>

#include "dntune/image.hpp"

namespace dntune {

Image synth_scene(int width, int height, std::uint64_t seed);

}  // namespace dntune
