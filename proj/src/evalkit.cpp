#include "shield/evalkit.hpp"

#include <cmath>

#include "json.hpp"

namespace shield {

double psnr(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("psnr: shape mismatch " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
    double mse = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0) return 99.0;
    return std::min(99.0, 20.0 * std::log10(1.0 / std::sqrt(mse)));
}

double protection_similarity(const std::vector<Tensor>& images,
                             const std::vector<Tensor>& protected_images,
                             const EncoderModel& encoder,
                             std::optional<EvalDistortion> distortion, uint64_t distortion_seed) {
    if (images.size() != protected_images.size() || images.empty())
        throw std::invalid_argument("protection_similarity: paired non-empty lists required");
    double acc = 0;
    for (size_t i = 0; i < images.size(); ++i) {
        Tensor prot = protected_images[i];
        if (distortion) prot = eval_distortion(prot, *distortion, distortion_seed + i);
        acc += embedding_similarity_raw(encode(encoder, images[i]), encode(encoder, prot));
    }
    return acc / static_cast<double>(images.size());
}

CryptorEffect cryptor_effect_metrics(const CryptorPair& pair, const std::vector<Tensor>& embeddings,
                                     int n_passwords, uint64_t seed) {
    if (embeddings.empty()) throw std::invalid_argument("cryptor_effect_metrics: empty set");
    if (n_passwords < 2)
        throw std::invalid_argument("cryptor_effect_metrics: need at least 2 passwords");
    Rng rng(seed);
    int dim = pair.enc.embed_dim;
    CryptorEffect eff;
    long eff_count = 0;
    for (const auto& e : embeddings) {
        std::vector<Password> pwds;
        for (int i = 0; i < n_passwords; ++i)
            pwds.push_back(generate_password(rng.next_u64(), dim));
        // correct-password round trips
        std::vector<Tensor> encs, decs;
        for (const auto& p : pwds) {
            Tensor c = encrypt(pair, e, p);
            eff.encrypt_effect += embedding_similarity_raw(c, e);
            eff.decrypt_effect += embedding_similarity_raw(decrypt(pair, c, p), e);
            ++eff_count;
            encs.push_back(std::move(c));
        }
        // wrong-password decryptions of the first encryption
        for (int i = 1; i < n_passwords; ++i)
            decs.push_back(decrypt(pair, encs[0], pwds[static_cast<size_t>(i)]));
        for (size_t i = 0; i < encs.size(); ++i)
            for (size_t j = i + 1; j < encs.size(); ++j)
                eff.encrypt_diversity += embedding_similarity_raw(encs[i], encs[j]);
        for (size_t i = 0; i < decs.size(); ++i)
            for (size_t j = i + 1; j < decs.size(); ++j)
                eff.decrypt_diversity += embedding_similarity_raw(decs[i], decs[j]);
    }
    long enc_pairs_per_item = static_cast<long>(n_passwords) * (n_passwords - 1) / 2;
    long dec_pairs_per_item = static_cast<long>(n_passwords - 1) * (n_passwords - 2) / 2;
    eff.encrypt_effect /= static_cast<double>(eff_count);
    eff.decrypt_effect /= static_cast<double>(eff_count);
    eff.encrypt_diversity /= static_cast<double>(enc_pairs_per_item * embeddings.size());
    if (dec_pairs_per_item > 0)
        eff.decrypt_diversity /= static_cast<double>(dec_pairs_per_item * embeddings.size());
    return eff;
}

double diversity_same_pwd(const CryptorPair& pair, const std::vector<Tensor>& embeddings,
                          const Password& fixed_password) {
    if (embeddings.size() < 2)
        throw std::invalid_argument("diversity_same_pwd: need at least 2 embeddings");
    std::vector<Tensor> encs;
    for (const auto& e : embeddings) encs.push_back(encrypt(pair, e, fixed_password));
    double acc = 0;
    long count = 0;
    for (size_t i = 0; i < encs.size(); ++i)
        for (size_t j = i + 1; j < encs.size(); ++j) {
            acc += embedding_similarity_raw(encs[i], encs[j]);
            ++count;
        }
    return acc / static_cast<double>(count);
}

double wrong_dec_rate(const CryptorPair& pair, const std::vector<Tensor>& embeddings, int trials,
                      double threshold, uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("wrong_dec_rate: trials must be >= 1");
    if (embeddings.empty()) throw std::invalid_argument("wrong_dec_rate: empty set");
    Rng rng(seed);
    int dim = pair.enc.embed_dim;
    long hits = 0;
    for (int t = 0; t < trials; ++t) {
        const Tensor& e = embeddings[static_cast<size_t>(
            rng.uniform_int(static_cast<int>(embeddings.size())))];
        Password correct = generate_password(rng.next_u64(), dim);
        Password wrong = generate_password(rng.next_u64(), dim);
        Tensor dec = decrypt(pair, encrypt(pair, e, correct), wrong);
        if (embedding_similarity_raw(dec, e) >= threshold) ++hits;
    }
    return static_cast<double>(hits) / trials;
}

MtAblation mt_ablation(const std::vector<Tensor>& images,
                       const std::vector<EncoderModel>& encoders,
                       const std::vector<CryptorPair>& pairs,
                       const std::vector<Password>& passwords, size_t single_target_index,
                       const AttackConfig& cfg) {
    if (encoders.size() < 2) throw std::invalid_argument("mt_ablation: need at least 2 encoders");
    if (single_target_index >= encoders.size())
        throw std::invalid_argument("mt_ablation: single_target_index out of range");

    std::vector<EncoderModel> single_enc{encoders[single_target_index]};
    std::vector<CryptorPair> single_pair{pairs[single_target_index]};
    std::vector<Password> single_pwd{passwords[single_target_index]};

    MtAblation out;
    long unseen_count = 0;
    for (size_t k = 0; k < images.size(); ++k) {
        const Tensor& img = images[k];
        AttackConfig c = cfg;
        c.seed = cfg.seed + k;

        auto tgt1 = make_targets(img, single_enc, single_pair, single_pwd);
        auto [prot1, rep1] = protect_image(img, single_enc, tgt1, c);
        out.specific_single += embedding_similarity_raw(
            encode(encoders[single_target_index], img),
            encode(encoders[single_target_index], prot1));
        for (size_t i = 0; i < encoders.size(); ++i) {
            if (i == single_target_index) continue;
            out.unseen_single += embedding_similarity_raw(encode(encoders[i], img),
                                                          encode(encoders[i], prot1));
            ++unseen_count;
        }

        auto tgt_all = make_targets(img, encoders, pairs, passwords);
        auto [prot_all, rep_all] = protect_image(img, encoders, tgt_all, c);
        double acc = 0;
        for (size_t i = 0; i < encoders.size(); ++i)
            acc += embedding_similarity_raw(encode(encoders[i], img), encode(encoders[i], prot_all));
        out.specific_multi += acc / static_cast<double>(encoders.size());
    }
    double n = static_cast<double>(images.size());
    out.specific_single /= n;
    out.unseen_single /= static_cast<double>(unseen_count);
    out.specific_multi /= n;
    out.unseen_multi = out.specific_multi;  // every encoder is attacked
    return out;
}

std::string to_json_line(const EvalRecord& rec) {
    nlohmann::json j;
    j["metric"] = rec.metric;
    j["encoder"] = rec.encoder;
    if (!rec.distortion.empty()) j["distortion"] = rec.distortion;
    j["value"] = rec.value;
    j["n"] = rec.n;
    return j.dump();
}

}  // namespace shield
