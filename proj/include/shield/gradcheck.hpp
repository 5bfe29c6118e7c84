#pragma once

#include <functional>
#include <string>

#include "shield/autodiff.hpp"

namespace shield {

struct GradReport {
    std::string op_name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool passed = false;
};

// Builds a scalar graph from a leaf at `point`, runs reverse mode, and
// compares against central finite differences (step h). passed iff
// max_rel_error <= tol or max_abs_error <= abs_floor.
// Throws std::domain_error if the function goes non-finite while probing.
using ScalarFn = std::function<ad::Var(const ad::Var&)>;

GradReport finite_diff_check(const std::string& op_name, const ScalarFn& f, const Tensor& point,
                             double tol = 1e-4, double h = 1e-5, double abs_floor = 1e-7);

}  // namespace shield
