#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace shield {

// Dense row-major tensor of doubles. Shapes are small at desk scale, so
// everything is value-semantic and lives on the heap behind std::vector.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<size_t>(numel_of(shape)) != data.size())
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    static long numel_of(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) {
        long n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
    }

    static Tensor full(std::vector<int> s, double v) {
        long n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor vector(std::vector<double> d) {
        int n = static_cast<int>(d.size());
        return Tensor({n}, std::move(d));
    }

    long numel() const { return static_cast<long>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    int rows() const {
        if (ndim() != 2) throw std::logic_error("Tensor::rows: not 2-D");
        return shape[0];
    }
    int cols() const {
        if (ndim() != 2) throw std::logic_error("Tensor::cols: not 2-D");
        return shape[1];
    }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    double& at2(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
    double at2(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Seeded random stream. Gaussian draws use Box-Muller on top of the raw
// mt19937_64 words instead of std::normal_distribution, whose output is
// implementation-defined; this keeps checkpoints reproducible across
// standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        return static_cast<int>(gen_() % static_cast<uint64_t>(n));
    }

    double normal() {
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Tensor normal_tensor(std::vector<int> shape, double stddev = 1.0) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (double& v : t.data) v = stddev * normal();
        return t;
    }

    // k distinct indices from [0, n), uniform without replacement.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < k; ++i) {
            int j = i + uniform_int(n - i);
            std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        }
        idx.resize(static_cast<size_t>(k));
        return idx;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace shield
