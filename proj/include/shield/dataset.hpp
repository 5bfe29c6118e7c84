#pragma once

#include <vector>

#include "shield/tensor.hpp"

namespace shield {

// Procedural stand-in corpus: seeded compositions of gradient backgrounds
// and soft-edged ellipses/rectangles, pixels kept inside (0,1).
std::vector<Tensor> gen_toy_dataset(uint64_t seed, int count, int resolution = 64);

}  // namespace shield
