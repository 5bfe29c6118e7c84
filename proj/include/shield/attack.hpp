#pragma once

#include "shield/cryptor.hpp"
#include "shield/distortion.hpp"

namespace shield {

enum class UpdateRule { sign_gradient, raw_gradient };

std::string update_rule_name(UpdateRule r);
UpdateRule update_rule_from_name(const std::string& name);

struct AttackConfig {
    double epsilon = 11.0 / 255.0;   // 21/255 for the artwork regime
    double step_size = 1.0 / 255.0;  // sigma
    double ths = 0.75;               // 0.65 for the artwork regime
    int max_iters = 2000;
    UpdateRule update_rule = UpdateRule::sign_gradient;
    std::vector<Distortion> distortion_set{Distortion::identity, Distortion::gaussian_noise,
                                           Distortion::gaussian_blur};
    int hidden_rows = 8;  // row vectors sampled per iteration for clip_hidden
    uint64_t seed = 0;

    void validate(int encoder_count) const;
};

struct AttackReport {
    int iterations = 0;
    std::vector<double> target_similarity;  // clamped, per encoder, final image
    bool success = false;
    double psnr = 0;
    double linf = 0;
};

// E_tar_i = encrypt_i(encode_i(image), password_i); full-row matrix for
// clip_hidden.
std::vector<Tensor> make_targets(const Tensor& image, const std::vector<EncoderModel>& encoders,
                                 const std::vector<CryptorPair>& pairs,
                                 const std::vector<Password>& passwords);

// The multi-targeted attack: optimizes a bounded perturbation until the
// minimum per-encoder clamped similarity to the encrypted targets,
// measured on the undistorted protected image, reaches cfg.ths.
// Exhausting max_iters returns the best iterate with success=false.
std::pair<Tensor, AttackReport> protect_image(const Tensor& image,
                                              const std::vector<EncoderModel>& encoders,
                                              const std::vector<Tensor>& targets,
                                              const AttackConfig& cfg);

}  // namespace shield
