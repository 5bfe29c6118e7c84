#include "shield/attack.hpp"

#include <cmath>

#include "shield/evalkit.hpp"

namespace shield {

std::string update_rule_name(UpdateRule r) {
    return r == UpdateRule::sign_gradient ? "sign" : "raw";
}

UpdateRule update_rule_from_name(const std::string& name) {
    if (name == "sign" || name == "sign_gradient") return UpdateRule::sign_gradient;
    if (name == "raw" || name == "raw_gradient") return UpdateRule::raw_gradient;
    throw std::invalid_argument("unknown update rule: " + name);
}

void AttackConfig::validate(int encoder_count) const {
    if (epsilon < 0 || epsilon >= 1) throw std::invalid_argument("AttackConfig: epsilon must be in [0,1)");
    if (epsilon > 0 && (step_size <= 0 || step_size > epsilon))
        throw std::invalid_argument("AttackConfig: need 0 < step_size <= epsilon");
    if (ths <= 0 || ths >= 1) throw std::invalid_argument("AttackConfig: ths must be in (0,1)");
    if (max_iters < 1) throw std::invalid_argument("AttackConfig: max_iters must be >= 1");
    if (distortion_set.empty()) throw std::invalid_argument("AttackConfig: empty distortion set");
    if (encoder_count < 1) throw std::invalid_argument("AttackConfig: need at least one encoder");
}

std::vector<Tensor> make_targets(const Tensor& image, const std::vector<EncoderModel>& encoders,
                                 const std::vector<CryptorPair>& pairs,
                                 const std::vector<Password>& passwords) {
    if (encoders.empty()) throw std::invalid_argument("make_targets: no encoders");
    if (pairs.size() != encoders.size() || passwords.size() != encoders.size())
        throw std::invalid_argument("make_targets: need one cryptor pair and password per encoder");
    std::vector<Tensor> targets;
    for (size_t i = 0; i < encoders.size(); ++i) {
        if (pairs[i].encoder_id != encoders[i].id)
            throw std::invalid_argument("make_targets: cryptor pair " + std::to_string(i) +
                                        " trained for " + encoder_name(pairs[i].encoder_id) +
                                        ", not " + encoder_name(encoders[i].id));
        targets.push_back(encrypt(pairs[i], encode(encoders[i], image), passwords[i]));
    }
    return targets;
}

namespace {

// 1 - clamped similarity to the target; mean row cosine over the sampled
// rows for matrix embeddings
ad::Var mt_term(const ad::Var& e_pro, const Tensor& target, const std::vector<int>& rows) {
    if (target.ndim() == 1)
        return ad::affine(ad::cos_sim_clamped(e_pro, ad::constant(target)), -1.0, 1.0);
    int c = target.cols();
    std::vector<ad::Var> row_terms;
    for (size_t i = 0; i < rows.size(); ++i) {
        Tensor trow({c},
                    std::vector<double>(target.data.begin() + static_cast<size_t>(rows[i]) * c,
                                        target.data.begin() + static_cast<size_t>(rows[i] + 1) * c));
        row_terms.push_back(
            ad::cos_sim_clamped(ad::get_row(e_pro, static_cast<int>(i)), ad::constant(trow)));
    }
    return ad::affine(ad::scale(ad::add_n(row_terms), 1.0 / static_cast<double>(rows.size())),
                      -1.0, 1.0);
}

Tensor clamp01(const Tensor& t) {
    Tensor out = t;
    for (double& v : out.data) v = std::min(1.0, std::max(0.0, v));
    return out;
}

std::vector<double> similarities_clamped(const Tensor& protected_img,
                                         const std::vector<EncoderModel>& encoders,
                                         const std::vector<Tensor>& targets) {
    std::vector<double> sims;
    for (size_t i = 0; i < encoders.size(); ++i)
        sims.push_back(embedding_similarity_clamped(encode(encoders[i], protected_img), targets[i]));
    return sims;
}

}  // namespace

std::pair<Tensor, AttackReport> protect_image(const Tensor& image,
                                              const std::vector<EncoderModel>& encoders,
                                              const std::vector<Tensor>& targets,
                                              const AttackConfig& cfg) {
    cfg.validate(static_cast<int>(encoders.size()));
    if (targets.size() != encoders.size())
        throw std::invalid_argument("protect_image: one target per encoder required");

    Rng rng(cfg.seed);
    ad::Var delta = ad::leaf(Tensor::zeros(image.shape));
    ad::Var original = ad::constant(image);

    Tensor best_delta = delta->value;
    double best_min_sim = -1.0;
    AttackReport report;

    auto finish = [&](const Tensor& d, int iters, bool success) {
        Tensor protected_img = clamp01([&] {
            Tensor t = image;
            for (size_t i = 0; i < t.data.size(); ++i) t.data[i] += d.data[i];
            return t;
        }());
        report.iterations = iters;
        report.success = success;
        report.target_similarity = similarities_clamped(protected_img, encoders, targets);
        report.psnr = psnr(image, protected_img);
        report.linf = 0;
        for (double v : d.data) report.linf = std::max(report.linf, std::fabs(v));
        return std::make_pair(std::move(protected_img), report);
    };

    for (int iter = 0; iter <= cfg.max_iters; ++iter) {
        // stop rule: minimum clamped similarity on the undistorted image
        Tensor cur = clamp01([&] {
            Tensor t = image;
            for (size_t i = 0; i < t.data.size(); ++i) t.data[i] += delta->value.data[i];
            return t;
        }());
        std::vector<double> sims = similarities_clamped(cur, encoders, targets);
        double min_sim = sims[0];
        for (double s : sims) min_sim = std::min(min_sim, s);
        if (min_sim > best_min_sim) {
            best_min_sim = min_sim;
            best_delta = delta->value;
        }
        if (min_sim >= cfg.ths) return finish(delta->value, iter, true);
        if (iter == cfg.max_iters) break;

        ad::Var protected_var = ad::clamp(ad::add(original, delta), 0.0, 1.0);
        ad::Var distorted = diff_distortion(protected_var, rng, cfg.distortion_set);

        std::vector<ad::Var> terms;
        for (size_t i = 0; i < encoders.size(); ++i) {
            ad::Var e_pro = encode_graph(encoders[i], distorted);
            std::vector<int> rows;
            if (encoders[i].is_matrix()) {
                int R = e_pro->value.rows();
                rows = rng.sample_without_replacement(R, std::min(cfg.hidden_rows, R));
                e_pro = ad::select_rows(e_pro, rows);
            }
            terms.push_back(mt_term(e_pro, targets[i], rows));
        }
        ad::Var l_mt = ad::add_n(terms);
        ad::backward(l_mt);

        const Tensor& g = delta->grad;
        if (!g.all_finite())
            throw std::runtime_error("protect_image: non-finite gradient at iteration " +
                                     std::to_string(iter));
        for (size_t i = 0; i < delta->value.data.size(); ++i) {
            double step;
            if (cfg.update_rule == UpdateRule::sign_gradient) {
                // sign(0) is resolved to a seeded random sign: an exactly
                // zero partial occurs when every clamped term is at its
                // floor, and a zero step could never leave that plateau
                double s = g.data[i] > 0 ? 1.0
                           : g.data[i] < 0 ? -1.0
                                           : (rng.next_u64() & 1 ? 1.0 : -1.0);
                step = cfg.step_size * s;
            } else {
                step = cfg.step_size * g.data[i];
            }
            double v = delta->value.data[i] - step;
            delta->value.data[i] = std::min(cfg.epsilon, std::max(-cfg.epsilon, v));
        }
    }
    return finish(best_delta, cfg.max_iters, false);
}

}  // namespace shield
