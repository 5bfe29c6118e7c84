#pragma once

#include <optional>

#include "shield/attack.hpp"

namespace shield {

// PSNR in dB for images in [0,1]; identical images cap at 99 dB.
double psnr(const Tensor& a, const Tensor& b);

// Mean raw cosine between embeddings of paired original/protected images,
// optionally distorting the protected images first.
double protection_similarity(const std::vector<Tensor>& images,
                             const std::vector<Tensor>& protected_images,
                             const EncoderModel& encoder,
                             std::optional<EvalDistortion> distortion = std::nullopt,
                             uint64_t distortion_seed = 0);

struct CryptorEffect {
    double encrypt_effect = 0;    // raw cos(enc(e,p), e), mean
    double decrypt_effect = 0;    // raw cos(dec(enc(e,p),p), e), mean
    double encrypt_diversity = 0; // raw cos between encryptions under different passwords
    double decrypt_diversity = 0; // raw cos between wrong-password decryptions
};

CryptorEffect cryptor_effect_metrics(const CryptorPair& pair, const std::vector<Tensor>& embeddings,
                                     int n_passwords, uint64_t seed);

// Mean pairwise raw cosine of same-password encryptions across embeddings.
double diversity_same_pwd(const CryptorPair& pair, const std::vector<Tensor>& embeddings,
                          const Password& fixed_password);

// Fraction of (embedding, random wrong password) trials whose decryption
// similarity to the original reaches `threshold`.
double wrong_dec_rate(const CryptorPair& pair, const std::vector<Tensor>& embeddings, int trials,
                      double threshold, uint64_t seed);

struct MtAblation {
    double specific_single = 0;  // attacked-encoder similarity, m=1
    double unseen_single = 0;    // left-out encoder similarity, m=1
    double specific_multi = 0;   // mean over all encoders, m=all
    double unseen_multi = 0;     // equals specific_multi by construction
};

// Compares single-target and multi-target protection on the same images.
MtAblation mt_ablation(const std::vector<Tensor>& images,
                       const std::vector<EncoderModel>& encoders,
                       const std::vector<CryptorPair>& pairs,
                       const std::vector<Password>& passwords, size_t single_target_index,
                       const AttackConfig& cfg);

// One record per reported table cell.
struct EvalRecord {
    std::string metric;
    std::string encoder;
    std::string distortion;  // empty when not applicable
    double value = 0;
    int n = 0;
};

std::string to_json_line(const EvalRecord& rec);

}  // namespace shield
