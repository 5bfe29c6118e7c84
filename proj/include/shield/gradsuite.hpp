#pragma once

#include <vector>

#include "shield/gradcheck.hpp"

namespace shield {

// Finite-difference coverage of every differentiable op plus the composite
// forwards (encoder, cryptor, each loss term, and the attack objective
// through the random distortion layer). Each case is probed at `points`
// random points; the report keeps the worst errors seen. Composites run at
// reduced dimensions so the full suite stays fast.
std::vector<GradReport> run_gradient_suite(double tol = 1e-4, int points = 10);

bool all_passed(const std::vector<GradReport>& reports);

}  // namespace shield
