#include "shield/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace shield {

namespace {

struct Color {
    double r, g, b;
};

Color random_color(Rng& rng) {
    // keep away from exact 0/1 so pixel gradients never die at the clamp
    return {rng.uniform(0.08, 0.92), rng.uniform(0.08, 0.92), rng.uniform(0.08, 0.92)};
}

void blend(Tensor& img, int x, int y, const Color& c, double alpha) {
    int W = img.dim(1);
    size_t base = (static_cast<size_t>(y) * W + x) * 3;
    img.data[base + 0] = (1 - alpha) * img.data[base + 0] + alpha * c.r;
    img.data[base + 1] = (1 - alpha) * img.data[base + 1] + alpha * c.g;
    img.data[base + 2] = (1 - alpha) * img.data[base + 2] + alpha * c.b;
}

Tensor gen_one(Rng& rng, int res) {
    Tensor img = Tensor::zeros({res, res, 3});
    // linear gradient background between two colors along a random direction
    Color c0 = random_color(rng), c1 = random_color(rng);
    double ang = rng.uniform(0, 2 * M_PI);
    double dx = std::cos(ang), dy = std::sin(ang);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            double t = 0.5 + 0.5 * ((x - res / 2.0) * dx + (y - res / 2.0) * dy) / (res * 0.75);
            t = std::clamp(t, 0.0, 1.0);
            size_t base = (static_cast<size_t>(y) * res + x) * 3;
            img.data[base + 0] = (1 - t) * c0.r + t * c1.r;
            img.data[base + 1] = (1 - t) * c0.g + t * c1.g;
            img.data[base + 2] = (1 - t) * c0.b + t * c1.b;
        }

    int shapes = 3 + rng.uniform_int(4);
    for (int s = 0; s < shapes; ++s) {
        Color c = random_color(rng);
        double cx = rng.uniform(0.15, 0.85) * res;
        double cy = rng.uniform(0.15, 0.85) * res;
        double rx = rng.uniform(0.08, 0.3) * res;
        double ry = rng.uniform(0.08, 0.3) * res;
        double edge = rng.uniform(1.0, 3.0);  // soft border width in pixels
        bool ellipse = rng.uniform() < 0.6;
        double rot = rng.uniform(0, M_PI);
        double cr = std::cos(rot), sr = std::sin(rot);
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                double ux = (x - cx) * cr + (y - cy) * sr;
                double uy = -(x - cx) * sr + (y - cy) * cr;
                double d;
                if (ellipse) {
                    d = std::sqrt((ux / rx) * (ux / rx) + (uy / ry) * (uy / ry)) - 1.0;
                    d *= std::min(rx, ry);
                } else {
                    d = std::max(std::fabs(ux) - rx, std::fabs(uy) - ry);
                }
                if (d < edge) {
                    double alpha = d <= 0 ? 1.0 : 1.0 - d / edge;
                    blend(img, x, y, c, 0.9 * alpha);
                }
            }
    }
    for (double& v : img.data) v = std::clamp(v, 0.02, 0.98);
    return img;
}

}  // namespace

std::vector<Tensor> gen_toy_dataset(uint64_t seed, int count, int resolution) {
    if (count < 1) throw std::invalid_argument("gen_toy_dataset: count must be >= 1");
    Rng rng(seed);
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(gen_one(rng, resolution));
    return out;
}

}  // namespace shield
