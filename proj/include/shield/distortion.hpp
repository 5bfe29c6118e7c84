#pragma once

#include <vector>

#include "shield/autodiff.hpp"
#include "shield/tensor.hpp"

namespace shield {

enum class Distortion { identity, gaussian_noise, gaussian_blur };

std::string distortion_name(Distortion d);
Distortion distortion_from_name(const std::string& name);

// Normalized 3x3 Gaussian kernel, sigma 0.4.
Tensor gaussian_blur_kernel();

// Differentiable random distortion: picks one member of `set` uniformly.
// Noise is N(0, 0.01^2) per pixel, treated as an additive constant in the
// backward pass and clamped back to [0,1]; blur is the 3x3 kernel with
// reflect padding; identity passes the image through untouched.
ad::Var diff_distortion(const ad::Var& image, Rng& rng,
                        const std::vector<Distortion>& set);

// Evaluation-only distortions (non-differentiable path).
enum class EvalDistortion { noise, blur, jpeg };
std::string eval_distortion_name(EvalDistortion d);

Tensor apply_gaussian_noise(const Tensor& image, uint64_t seed, double sigma = 0.01);
Tensor apply_gaussian_blur(const Tensor& image);
// Round trip through a baseline JPEG codec (quality 90, 4:2:0).
Tensor apply_jpeg(const Tensor& image, int quality = 90);
Tensor eval_distortion(const Tensor& image, EvalDistortion kind, uint64_t seed = 0);

}  // namespace shield
