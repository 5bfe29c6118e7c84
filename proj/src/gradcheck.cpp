#include "shield/gradcheck.hpp"

#include <cmath>

namespace shield {

GradReport finite_diff_check(const std::string& op_name, const ScalarFn& f, const Tensor& point,
                             double tol, double h, double abs_floor) {
    ad::Var x = ad::leaf(point);
    ad::Var y = f(x);
    if (y->value.numel() != 1)
        throw std::invalid_argument("finite_diff_check: function must be scalar-valued");
    if (!std::isfinite(y->value.data[0]))
        throw std::domain_error("finite_diff_check[" + op_name + "]: non-finite value at base point");
    ad::backward(y);
    Tensor analytic = x->grad;

    GradReport rep{op_name, 0.0, 0.0, false};
    Tensor probe = point;
    for (size_t i = 0; i < probe.data.size(); ++i) {
        double keep = probe.data[i];
        probe.data[i] = keep + h;
        double fp = ad::value0(f(ad::constant(probe)));
        probe.data[i] = keep - h;
        double fm = ad::value0(f(ad::constant(probe)));
        probe.data[i] = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::domain_error("finite_diff_check[" + op_name +
                                    "]: non-finite value while probing element " +
                                    std::to_string(i));
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic.data[i];
        double abs_err = std::fabs(a - numeric);
        double denom = std::max(std::fabs(a), std::fabs(numeric));
        double rel_err = denom > 0 ? abs_err / denom : 0.0;
        rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
        // elements that pass on the absolute floor do not count against
        // the relative tolerance (matters where the true gradient is ~0)
        if (abs_err > abs_floor) rep.max_rel_error = std::max(rep.max_rel_error, rel_err);
    }
    rep.passed = rep.max_rel_error <= tol || rep.max_abs_error <= abs_floor;
    return rep;
}

}  // namespace shield
