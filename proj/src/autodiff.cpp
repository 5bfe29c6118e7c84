#include "shield/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace shield::ad {

namespace {

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node*)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    bool req = false;
    for (const auto& p : n->parents) req = req || p->requires_grad;
    n->requires_grad = req;
    if (req) n->backprop = std::move(backprop);
    return n;
}

void ensure_grad(Node* n) {
    if (n->grad.data.empty()) n->grad = Tensor::zeros(n->value.shape);
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(op + ": shape mismatch " + shape_str(a.shape) + " vs " +
                                shape_str(b.shape));
}

double vec_norm(const Tensor& v) {
    double s = 0;
    for (double x : v.data) s += x * x;
    return std::sqrt(s);
}

}  // namespace

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return n;
}

Var leaf(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return n;
}

void backward(const Var& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar, got " +
                                    shape_str(root->value.shape));
    // Iterative post-order DFS; order depends only on graph construction,
    // never on pointer values, so runs are reproducible.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    for (Node* n : order) {
        n->grad = Tensor::zeros(n->value.shape);
    }
    root->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(n);
    }
}

// ---------------- elementwise / structural ----------------

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_error("add", a->value, b->value);
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node* n) {
        for (const auto& p : n->parents) {
            if (!p->requires_grad) continue;
            ensure_grad(p.get());
            for (size_t i = 0; i < n->grad.data.size(); ++i) p->grad.data[i] += n->grad.data[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_error("sub", a->value, b->value);
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node* n) {
        Node* a = n->parents[0].get();
        Node* b = n->parents[1].get();
        if (a->requires_grad) {
            ensure_grad(a);
            for (size_t i = 0; i < n->grad.data.size(); ++i) a->grad.data[i] += n->grad.data[i];
        }
        if (b->requires_grad) {
            ensure_grad(b);
            for (size_t i = 0; i < n->grad.data.size(); ++i) b->grad.data[i] -= n->grad.data[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_error("mul", a->value, b->value);
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node* n) {
        Node* a = n->parents[0].get();
        Node* b = n->parents[1].get();
        if (a->requires_grad) {
            ensure_grad(a);
            for (size_t i = 0; i < n->grad.data.size(); ++i)
                a->grad.data[i] += n->grad.data[i] * b->value.data[i];
        }
        if (b->requires_grad) {
            ensure_grad(b);
            for (size_t i = 0; i < n->grad.data.size(); ++i)
                b->grad.data[i] += n->grad.data[i] * a->value.data[i];
        }
    });
}

Var scale(const Var& a, double s) { return affine(a, s, 0.0); }

Var affine(const Var& a, double mul, double shift) {
    Tensor out = a->value;
    for (double& v : out.data) v = mul * v + shift;
    return make_node(std::move(out), {a}, [mul](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        for (size_t i = 0; i < n->grad.data.size(); ++i) a->grad.data[i] += mul * n->grad.data[i];
    });
}

Var add_const(const Var& a, const Tensor& c) {
    if (!a->value.same_shape(c)) shape_error("add_const", a->value, c);
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += c.data[i];
    return make_node(std::move(out), {a}, [](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        for (size_t i = 0; i < n->grad.data.size(); ++i) a->grad.data[i] += n->grad.data[i];
    });
}

Var reshape(const Var& a, std::vector<int> shape) {
    if (Tensor::numel_of(shape) != a->value.numel())
        throw std::invalid_argument("reshape: element count mismatch " +
                                    shape_str(a->value.shape) + " -> " + shape_str(shape));
    Tensor out(std::move(shape), a->value.data);
    return make_node(std::move(out), {a}, [](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        for (size_t i = 0; i < n->grad.data.size(); ++i) a->grad.data[i] += n->grad.data[i];
    });
}

Var clamp(const Var& a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    Tensor out = a->value;
    for (double& v : out.data) v = std::min(hi, std::max(lo, v));
    return make_node(std::move(out), {a}, [lo, hi](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        // boundary counts as clamped (zero subgradient)
        for (size_t i = 0; i < n->grad.data.size(); ++i) {
            double x = a->value.data[i];
            if (x > lo && x < hi) a->grad.data[i] += n->grad.data[i];
        }
    });
}

Var gelu(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v * 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
    return make_node(std::move(out), {a}, [](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        for (size_t i = 0; i < n->grad.data.size(); ++i) {
            double x = a->value.data[i];
            double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            a->grad.data[i] += n->grad.data[i] * (cdf + x * pdf);
        }
    });
}

// ---------------- reductions / vector ops ----------------

Var sum(const Var& a) {
    double s = 0;
    for (double v : a->value.data) s += v;
    return make_node(Tensor::scalar(s), {a}, [](Node* n) {
        Node* a = n->parents[0].get();
        ensure_grad(a);
        double g = n->grad.data[0];
        for (double& v : a->grad.data) v += g;
    });
}

Var dot(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_error("dot", a->value, b->value);
    double s = 0;
    for (size_t i = 0; i < a->value.data.size(); ++i) s += a->value.data[i] * b->value.data[i];
    return make_node(Tensor::scalar(s), {a, b}, [](Node* n) {
        Node* a = n->parents[0].get();
        Node* b = n->parents[1].get();
        double g = n->grad.data[0];
        if (a->requires_grad) {
            ensure_grad(a);
            for (size_t i = 0; i < a->grad.data.size(); ++i)
                a->grad.data[i] += g * b->value.data[i];
        }
        if (b->requires_grad) {
            ensure_grad(b);
            for (size_t i = 0; i < b->grad.data.size(); ++i)
                b->grad.data[i] += g * a->value.data[i];
        }
    });
}

Var cos_sim_raw(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_error("cos_sim_raw", a->value, b->value);
    double na = vec_norm(a->value);
    double nb = vec_norm(b->value);
    if (na == 0.0) throw std::domain_error("cos_sim_raw: first argument has zero norm");
    if (nb == 0.0) throw std::domain_error("cos_sim_raw: second argument has zero norm");
    double d = 0;
    for (size_t i = 0; i < a->value.data.size(); ++i) d += a->value.data[i] * b->value.data[i];
    double c = d / (na * nb);
    return make_node(Tensor::scalar(c), {a, b}, [na, nb, c](Node* n) {
        Node* a = n->parents[0].get();
        Node* b = n->parents[1].get();
        double g = n->grad.data[0];
        if (a->requires_grad) {
            ensure_grad(a);
            for (size_t i = 0; i < a->grad.data.size(); ++i)
                a->grad.data[i] +=
                    g * (b->value.data[i] / (na * nb) - c * a->value.data[i] / (na * na));
        }
        if (b->requires_grad) {
            ensure_grad(b);
            for (size_t i = 0; i < b->grad.data.size(); ++i)
                b->grad.data[i] +=
                    g * (a->value.data[i] / (na * nb) - c * b->value.data[i] / (nb * nb));
        }
    });
}

Var cos_sim_clamped(const Var& a, const Var& b) {
    Var raw = cos_sim_raw(a, b);
    double c = raw->value.data[0];
    Tensor out = Tensor::scalar(std::max(0.0, c));
    return make_node(std::move(out), {raw}, [c](Node* n) {
        Node* r = n->parents[0].get();
        ensure_grad(r);
        if (c > 0.0) r->grad.data[0] += n->grad.data[0];
    });
}

// ---------------- matrix ops ----------------

Var matmul(const Var& a, const Var& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.ndim() != 2 || B.ndim() != 2 || A.cols() != B.rows())
        shape_error("matmul", A, B);
    int m = A.rows(), k = A.cols(), n = B.cols();
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double av = A.data[static_cast<size_t>(i) * k + p];
            const double* brow = &B.data[static_cast<size_t>(p) * n];
            double* orow = &out.data[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    return make_node(std::move(out), {a, b}, [m, k, n](Node* node) {
        Node* a = node->parents[0].get();
        Node* b = node->parents[1].get();
        const Tensor& g = node->grad;
        if (a->requires_grad) {
            ensure_grad(a);
            // gA = g * B^T
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    double gv = g.data[static_cast<size_t>(i) * n + j];
                    const double* brow = &b->value.data[0];
                    for (int p = 0; p < k; ++p)
                        a->grad.data[static_cast<size_t>(i) * k + p] +=
                            gv * brow[static_cast<size_t>(p) * n + j];
                }
        }
        if (b->requires_grad) {
            ensure_grad(b);
            // gB = A^T * g
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double av = a->value.data[static_cast<size_t>(i) * k + p];
                    const double* grow = &g.data[static_cast<size_t>(i) * n];
                    double* brow = &b->grad.data[static_cast<size_t>(p) * n];
                    for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
        }
    });
}

Var transpose(const Var& m) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("transpose: expected 2-D");
    int r = X.rows(), c = X.cols();
    Tensor out = Tensor::zeros({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at2(j, i) = X.at2(i, j);
    return make_node(std::move(out), {m}, [r, c](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m->grad.at2(i, j) += n->grad.at2(j, i);
    });
}

Var softmax_rows(const Var& m) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("softmax_rows: expected 2-D");
    int r = X.rows(), c = X.cols();
    Tensor out = Tensor::zeros({r, c});
    for (int i = 0; i < r; ++i) {
        double mx = X.at2(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, X.at2(i, j));
        double z = 0;
        for (int j = 0; j < c; ++j) {
            double e = std::exp(X.at2(i, j) - mx);
            out.at2(i, j) = e;
            z += e;
        }
        for (int j = 0; j < c; ++j) out.at2(i, j) /= z;
    }
    return make_node(std::move(out), {m}, [r, c](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        for (int i = 0; i < r; ++i) {
            double gy = 0;
            for (int j = 0; j < c; ++j) gy += n->grad.at2(i, j) * n->value.at2(i, j);
            for (int j = 0; j < c; ++j)
                m->grad.at2(i, j) += n->value.at2(i, j) * (n->grad.at2(i, j) - gy);
        }
    });
}

Var mean_rows(const Var& m) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("mean_rows: expected 2-D");
    int r = X.rows(), c = X.cols();
    Tensor out = Tensor::zeros({c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.data[static_cast<size_t>(j)] += X.at2(i, j);
    for (double& v : out.data) v /= r;
    return make_node(std::move(out), {m}, [r, c](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                m->grad.at2(i, j) += n->grad.data[static_cast<size_t>(j)] / r;
    });
}

Var center_columns(const Var& m) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("center_columns: expected 2-D");
    int r = X.rows(), c = X.cols();
    std::vector<double> mean(static_cast<size_t>(c), 0.0);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) mean[static_cast<size_t>(j)] += X.at2(i, j);
    for (double& v : mean) v /= r;
    Tensor out = Tensor::zeros({r, c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at2(i, j) = X.at2(i, j) - mean[static_cast<size_t>(j)];
    return make_node(std::move(out), {m}, [r, c](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        for (int j = 0; j < c; ++j) {
            double gm = 0;
            for (int i = 0; i < r; ++i) gm += n->grad.at2(i, j);
            gm /= r;
            for (int i = 0; i < r; ++i) m->grad.at2(i, j) += n->grad.at2(i, j) - gm;
        }
    });
}

namespace {

// Shared layer-norm kernel over contiguous rows of length c.
void ln_forward(const double* x, const double* gain, const double* bias, int c, double eps,
                double* out, double* xhat, double* inv_std) {
    double mu = 0;
    for (int j = 0; j < c; ++j) mu += x[j];
    mu /= c;
    double var = 0;
    for (int j = 0; j < c; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= c;
    double s = 1.0 / std::sqrt(var + eps);
    *inv_std = s;
    for (int j = 0; j < c; ++j) {
        xhat[j] = (x[j] - mu) * s;
        out[j] = gain[j] * xhat[j] + bias[j];
    }
}

}  // namespace

Var layer_norm_rows(const Var& m, const Var& gain, const Var& bias, double eps) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("layer_norm_rows: expected 2-D");
    int r = X.rows(), c = X.cols();
    if (gain->value.numel() != c || bias->value.numel() != c)
        throw std::invalid_argument("layer_norm_rows: gain/bias dim mismatch");
    Tensor out = Tensor::zeros({r, c});
    auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(r) * c);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i)
        ln_forward(&X.data[static_cast<size_t>(i) * c], gain->value.data.data(),
                   bias->value.data.data(), c, eps, &out.data[static_cast<size_t>(i) * c],
                   &(*xhat)[static_cast<size_t>(i) * c], &(*inv_std)[static_cast<size_t>(i)]);
    return make_node(std::move(out), {m, gain, bias}, [r, c, xhat, inv_std](Node* n) {
        Node* m = n->parents[0].get();
        Node* gain = n->parents[1].get();
        Node* bias = n->parents[2].get();
        for (int i = 0; i < r; ++i) {
            const double* g = &n->grad.data[static_cast<size_t>(i) * c];
            const double* xh = &(*xhat)[static_cast<size_t>(i) * c];
            double s = (*inv_std)[static_cast<size_t>(i)];
            if (gain->requires_grad) {
                ensure_grad(gain);
                for (int j = 0; j < c; ++j) gain->grad.data[static_cast<size_t>(j)] += g[j] * xh[j];
            }
            if (bias->requires_grad) {
                ensure_grad(bias);
                for (int j = 0; j < c; ++j) bias->grad.data[static_cast<size_t>(j)] += g[j];
            }
            if (m->requires_grad) {
                ensure_grad(m);
                double mean_gh = 0, mean_ghx = 0;
                std::vector<double> gh(static_cast<size_t>(c));
                for (int j = 0; j < c; ++j) {
                    gh[static_cast<size_t>(j)] = g[j] * gain->value.data[static_cast<size_t>(j)];
                    mean_gh += gh[static_cast<size_t>(j)];
                    mean_ghx += gh[static_cast<size_t>(j)] * xh[j];
                }
                mean_gh /= c;
                mean_ghx /= c;
                for (int j = 0; j < c; ++j)
                    m->grad.data[static_cast<size_t>(i) * c + j] +=
                        s * (gh[static_cast<size_t>(j)] - mean_gh - xh[j] * mean_ghx);
            }
        }
    });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    if (x->value.ndim() != 1) throw std::invalid_argument("layer_norm: expected vector");
    int c = x->value.dim(0);
    return reshape(layer_norm_rows(reshape(x, {1, c}), gain, bias, eps), {c});
}

Var stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
    int c = static_cast<int>(rows[0]->value.numel());
    for (const auto& r : rows)
        if (r->value.numel() != c) throw std::invalid_argument("stack_rows: ragged rows");
    int n = static_cast<int>(rows.size());
    Tensor out = Tensor::zeros({n, c});
    for (int i = 0; i < n; ++i)
        std::copy(rows[static_cast<size_t>(i)]->value.data.begin(),
                  rows[static_cast<size_t>(i)]->value.data.end(),
                  out.data.begin() + static_cast<size_t>(i) * c);
    std::vector<Var> parents(rows.begin(), rows.end());
    return make_node(std::move(out), std::move(parents), [c](Node* node) {
        for (size_t i = 0; i < node->parents.size(); ++i) {
            Node* p = node->parents[i].get();
            if (!p->requires_grad) continue;
            ensure_grad(p);
            for (int j = 0; j < c; ++j)
                p->grad.data[static_cast<size_t>(j)] += node->grad.data[i * c + j];
        }
    });
}

Var select_rows(const Var& m, const std::vector<int>& indices) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("select_rows: expected 2-D");
    int r = X.rows(), c = X.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= r) throw std::out_of_range("select_rows: index out of range");
    Tensor out = Tensor::zeros({static_cast<int>(indices.size()), c});
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy(X.data.begin() + static_cast<size_t>(indices[i]) * c,
                  X.data.begin() + static_cast<size_t>(indices[i] + 1) * c,
                  out.data.begin() + i * c);
    auto idx = indices;
    return make_node(std::move(out), {m}, [idx, c](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < c; ++j)
                m->grad.data[static_cast<size_t>(idx[i]) * c + j] += n->grad.data[i * c + j];
    });
}

Var get_row(const Var& m, int row) {
    int c = m->value.cols();
    return reshape(select_rows(m, {row}), {c});
}

Var conv2d(const Var& image, const Var& kernel, int stride, int pad, Padding mode) {
    const Tensor& X = image->value;
    const Tensor& K = kernel->value;
    if (X.ndim() != 3) throw std::invalid_argument("conv2d: image must be HxWxC");
    if (K.ndim() != 2) throw std::invalid_argument("conv2d: kernel must be 2-D");
    if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
    int H = X.dim(0), W = X.dim(1), C = X.dim(2);
    int kh = K.dim(0), kw = K.dim(1);
    int Ho = (H + 2 * pad - kh) / stride + 1;
    int Wo = (W + 2 * pad - kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: kernel larger than padded image");
    if (mode == Padding::reflect && pad >= H) throw std::invalid_argument("conv2d: reflect pad too large");

    auto map_idx = [mode](int x, int n) -> int {
        if (x >= 0 && x < n) return x;
        if (mode == Padding::zero) return -1;
        return x < 0 ? -x : 2 * n - 2 - x;
    };

    Tensor out = Tensor::zeros({Ho, Wo, C});
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int i = 0; i < kh; ++i) {
                int hi = map_idx(ho * stride - pad + i, H);
                if (hi < 0) continue;
                for (int j = 0; j < kw; ++j) {
                    int wi = map_idx(wo * stride - pad + j, W);
                    if (wi < 0) continue;
                    double kv = K.at2(i, j);
                    const double* src = &X.data[(static_cast<size_t>(hi) * W + wi) * C];
                    double* dst = &out.data[(static_cast<size_t>(ho) * Wo + wo) * C];
                    for (int ch = 0; ch < C; ++ch) dst[ch] += kv * src[ch];
                }
            }
    return make_node(std::move(out), {image, kernel},
                     [H, W, C, kh, kw, Ho, Wo, stride, pad, map_idx](Node* n) {
        Node* img = n->parents[0].get();
        Node* ker = n->parents[1].get();
        if (img->requires_grad) ensure_grad(img);
        if (ker->requires_grad) ensure_grad(ker);
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo)
                for (int i = 0; i < kh; ++i) {
                    int hi = map_idx(ho * stride - pad + i, H);
                    if (hi < 0) continue;
                    for (int j = 0; j < kw; ++j) {
                        int wi = map_idx(wo * stride - pad + j, W);
                        if (wi < 0) continue;
                        const double* g = &n->grad.data[(static_cast<size_t>(ho) * Wo + wo) * C];
                        if (img->requires_grad) {
                            double kv = ker->value.at2(i, j);
                            double* gi = &img->grad.data[(static_cast<size_t>(hi) * W + wi) * C];
                            for (int ch = 0; ch < C; ++ch) gi[ch] += kv * g[ch];
                        }
                        if (ker->requires_grad) {
                            const double* src =
                                &img->value.data[(static_cast<size_t>(hi) * W + wi) * C];
                            double acc = 0;
                            for (int ch = 0; ch < C; ++ch) acc += src[ch] * g[ch];
                            ker->grad.at2(i, j) += acc;
                        }
                    }
                }
    });
}

Var pairwise_cos_penalty(const Var& m) {
    const Tensor& X = m->value;
    if (X.ndim() != 2) throw std::invalid_argument("pairwise_cos_penalty: expected 2-D");
    int r = X.rows(), c = X.cols();
    if (r < 2) throw std::invalid_argument("pairwise_cos_penalty: needs at least 2 rows");
    auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        double s = 0;
        const double* row = &X.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) s += row[j] * row[j];
        (*norms)[static_cast<size_t>(i)] = std::sqrt(s);
        if ((*norms)[static_cast<size_t>(i)] == 0.0)
            throw std::domain_error("pairwise_cos_penalty: row " + std::to_string(i) +
                                    " has zero norm");
    }
    // cos matrix cached for backward; summation order matches the scalar
    // double-loop oracle (ordered pairs, k-major).
    auto cosm = std::make_shared<std::vector<double>>(static_cast<size_t>(r) * r, 0.0);
    double total = 0;
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j) {
            if (k == j) continue;
            double d = 0;
            const double* a = &X.data[static_cast<size_t>(k) * c];
            const double* b = &X.data[static_cast<size_t>(j) * c];
            for (int t = 0; t < c; ++t) d += a[t] * b[t];
            double cs = d / ((*norms)[static_cast<size_t>(k)] * (*norms)[static_cast<size_t>(j)]);
            (*cosm)[static_cast<size_t>(k) * r + j] = cs;
            total += std::max(0.0, cs);
        }
    total *= 0.5;
    return make_node(Tensor::scalar(total), {m}, [r, c, norms, cosm](Node* n) {
        Node* m = n->parents[0].get();
        ensure_grad(m);
        double g = 0.5 * n->grad.data[0];
        for (int k = 0; k < r; ++k) {
            const double* xk = &m->value.data[static_cast<size_t>(k) * c];
            double* gk = &m->grad.data[static_cast<size_t>(k) * c];
            double nk = (*norms)[static_cast<size_t>(k)];
            for (int j = 0; j < r; ++j) {
                if (k == j) continue;
                double cs = (*cosm)[static_cast<size_t>(k) * r + j];
                if (cs <= 0.0) continue;
                // both ordered pairs (k,j) and (j,k) carry the term, so the
                // per-row gradient below is applied once per ordered pair
                const double* xj = &m->value.data[static_cast<size_t>(j) * c];
                double nj = (*norms)[static_cast<size_t>(j)];
                double inv = 1.0 / (nk * nj);
                double self = cs / (nk * nk);
                for (int t = 0; t < c; ++t) gk[t] += 2.0 * g * (xj[t] * inv - self * xk[t]);
            }
        }
    });
}

Var extract_patches(const Var& image, int ps) {
    const Tensor& X = image->value;
    if (X.ndim() != 3) throw std::invalid_argument("extract_patches: image must be HxWxC");
    int H = X.dim(0), W = X.dim(1), C = X.dim(2);
    if (ps <= 0 || H % ps != 0 || W % ps != 0)
        throw std::invalid_argument("extract_patches: patch size must tile the image");
    int gh = H / ps, gw = W / ps;
    int P = gh * gw, D = ps * ps * C;
    Tensor out = Tensor::zeros({P, D});
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            double* dst = &out.data[static_cast<size_t>(gy * gw + gx) * D];
            for (int i = 0; i < ps; ++i) {
                const double* src = &X.data[(static_cast<size_t>(gy * ps + i) * W + gx * ps) * C];
                std::copy(src, src + static_cast<size_t>(ps) * C, dst + static_cast<size_t>(i) * ps * C);
            }
        }
    return make_node(std::move(out), {image}, [H, W, C, ps](Node* n) {
        Node* img = n->parents[0].get();
        ensure_grad(img);
        int gh = H / ps, gw = W / ps, D = ps * ps * C;
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx) {
                const double* g = &n->grad.data[static_cast<size_t>(gy * gw + gx) * D];
                for (int i = 0; i < ps; ++i) {
                    double* dst = &img->grad.data[(static_cast<size_t>(gy * ps + i) * W + gx * ps) * C];
                    const double* src = g + static_cast<size_t>(i) * ps * C;
                    for (int t = 0; t < ps * C; ++t) dst[t] += src[t];
                }
            }
    });
}

Var linear(const Var& v, const Var& w, const Var& b) {
    if (v->value.ndim() != 1) throw std::invalid_argument("linear: expected vector input");
    int k = v->value.dim(0);
    int n = w->value.cols();
    Var out = reshape(matmul(reshape(v, {1, k}), w), {n});
    return b ? add(out, b) : out;
}

Var add_n(const std::vector<Var>& terms) {
    if (terms.empty()) throw std::invalid_argument("add_n: empty input");
    Tensor out = terms[0]->value;
    for (size_t t = 1; t < terms.size(); ++t) {
        if (!terms[t]->value.same_shape(out)) shape_error("add_n", out, terms[t]->value);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += terms[t]->value.data[i];
    }
    std::vector<Var> parents(terms.begin(), terms.end());
    return make_node(std::move(out), std::move(parents), [](Node* n) {
        for (const auto& p : n->parents) {
            if (!p->requires_grad) continue;
            ensure_grad(p.get());
            for (size_t i = 0; i < n->grad.data.size(); ++i) p->grad.data[i] += n->grad.data[i];
        }
    });
}

}  // namespace shield::ad
