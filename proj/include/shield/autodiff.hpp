#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "shield/tensor.hpp"

namespace shield::ad {

// Reverse-mode autodiff over a dynamically built graph. Each forward call
// produces a fresh Node; parameter leaves persist across graphs and are
// re-used by the trainer. Values are immutable once produced.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated during backward()
    bool requires_grad = false;
    std::vector<Var> parents;
    // Accumulates this->grad into the parents' grads.
    std::function<void(Node*)> backprop;
};

Var constant(Tensor value);
Var leaf(Tensor value);  // requires_grad = true

// Runs reverse-mode accumulation from a scalar root. Grads of every node
// reachable from the root are zeroed first, so leaves can be reused.
void backward(const Var& root);

// ---- elementwise / structural ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var affine(const Var& a, double mul, double shift);  // mul*a + shift
Var add_const(const Var& a, const Tensor& c);        // backward passes through a only
Var reshape(const Var& a, std::vector<int> shape);
Var clamp(const Var& a, double lo, double hi);  // zero grad outside (lo,hi)
Var gelu(const Var& a);

// ---- reductions / vector ops ----
Var sum(const Var& a);                // -> scalar {1}
Var dot(const Var& a, const Var& b);  // vectors -> {1}
Var cos_sim_raw(const Var& a, const Var& b);      // [-1,1]
Var cos_sim_clamped(const Var& a, const Var& b);  // max(0, raw)

// ---- matrix ops ----
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& m);
Var softmax_rows(const Var& m);
Var mean_rows(const Var& m);      // {r,c} -> {c}
Var center_columns(const Var& m); // subtract per-column mean over rows
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);       // {c}
Var layer_norm_rows(const Var& m, const Var& gain, const Var& bias, double eps = 1e-5);  // per row
Var stack_rows(const std::vector<Var>& rows);
Var select_rows(const Var& m, const std::vector<int>& indices);
Var get_row(const Var& m, int row);  // -> {c}

// Depthwise 2-D convolution: image {H,W,C}, kernel {kh,kw} shared across
// channels. pad counts pixels added on each side.
enum class Padding { zero, reflect };
Var conv2d(const Var& image, const Var& kernel, int stride = 1, int pad = 0,
           Padding mode = Padding::zero);

// 0.5 * sum over ordered pairs k!=j of max(0, cos(row_k, row_j)).
// Forward matches the scalar double-loop bit for bit; backward is fused.
Var pairwise_cos_penalty(const Var& m);

// image {H,W,C} -> {num_patches, ps*ps*C}, row-major patch order
Var extract_patches(const Var& image, int ps);

// helpers
Var linear(const Var& v, const Var& w, const Var& b);  // {k} x {k,n} + {n}
Var add_n(const std::vector<Var>& terms);
inline double value0(const Var& v) { return v->value.data.at(0); }

}  // namespace shield::ad
