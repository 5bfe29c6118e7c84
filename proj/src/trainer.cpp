#include "shield/trainer.hpp"

#include <chrono>
#include <cmath>

namespace shield {

void TrainConfig::validate() const {
    if (batch < 2) throw std::invalid_argument("TrainConfig: batch must be >= 2");
    if (n_wrong < 1) throw std::invalid_argument("TrainConfig: n_wrong must be >= 1");
    if (tokens < 1) throw std::invalid_argument("TrainConfig: tokens must be >= 1");
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (lr <= 0) throw std::invalid_argument("TrainConfig: lr must be positive");
}

std::string TrainConfig::fingerprint() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "enc=%s;b=%d;n=%d;t=%d;lr=%g;steps=%d;seed=%llu;w=%g,%g,%g,%g,%g;opt=adam(0.9,0.999)",
                  encoder_name(encoder_id).c_str(), batch, n_wrong, tokens, lr, steps,
                  static_cast<unsigned long long>(seed), weights.l_enc, weights.l_dec,
                  weights.l_wrg, weights.l_div, weights.l_div_s);
    return buf;
}

void Adam::step(const std::vector<ad::Var>& params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(Tensor::zeros(p->value.shape));
            v_.push_back(Tensor::zeros(p->value.shape));
        }
    }
    if (m_.size() != params.size())
        throw std::logic_error("Adam: parameter list changed between steps");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        ad::Node* p = params[i].get();
        if (p->grad.data.empty()) continue;  // parameter not reached this step
        for (size_t j = 0; j < p->value.data.size(); ++j) {
            double g = p->grad.data[j];
            m_[i].data[j] = beta1_ * m_[i].data[j] + (1 - beta1_) * g;
            v_[i].data[j] = beta2_ * v_[i].data[j] + (1 - beta2_) * g * g;
            double mhat = m_[i].data[j] / bc1;
            double vhat = v_[i].data[j] / bc2;
            p->value.data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

namespace {

uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

const Tensor& EmbeddingCache::get(const EncoderModel& model, const Tensor& image) {
    uint64_t h = fnv1a(image.data.data(), image.data.size() * sizeof(double));
    std::string key = encoder_name(model.id) + "/" + std::to_string(model.seed) + "/" +
                      std::to_string(h);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(key, encode(model, image)).first->second;
}

std::vector<Tensor> precompute_embeddings(const EncoderModel& model,
                                          const std::vector<Tensor>& images) {
    EmbeddingCache cache;
    std::vector<Tensor> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(cache.get(model, img));
    return out;
}

LossBreakdown train_step(CryptorPair& pair, const std::vector<Tensor>& batch,
                         const TrainConfig& cfg, Rng& rng, Adam& opt) {
    if (static_cast<int>(batch.size()) != cfg.batch)
        throw std::invalid_argument("train_step: batch size mismatch");
    int dim = pair.enc.embed_dim;

    std::vector<ad::Var> items, correct;
    std::vector<std::vector<ad::Var>> wrongs;
    for (const auto& e : batch) {
        if (e.numel() != dim) throw std::invalid_argument("train_step: embedding dim mismatch");
        items.push_back(ad::constant(e));
        correct.push_back(ad::constant(rng.normal_tensor({dim})));
        std::vector<ad::Var> w;
        for (int i = 0; i < cfg.n_wrong; ++i) w.push_back(ad::constant(rng.normal_tensor({dim})));
        wrongs.push_back(std::move(w));
    }
    ad::Var p_enc_fixed = ad::constant(rng.normal_tensor({dim}));
    ad::Var p_dec_fixed = ad::constant(rng.normal_tensor({dim}));

    LossTerms terms = loss_total(cryptor_fn(pair.enc), cryptor_fn(pair.dec), items, correct,
                                 wrongs, p_enc_fixed, p_dec_fixed, cfg.weights);
    LossBreakdown bd = terms.values(cfg.weights);
    if (!std::isfinite(bd.total))
        throw std::runtime_error("train_step: non-finite loss (enc=" + std::to_string(bd.l_enc) +
                                 " dec=" + std::to_string(bd.l_dec) +
                                 " wrg=" + std::to_string(bd.l_wrg) +
                                 " div=" + std::to_string(bd.l_div) +
                                 " div_s=" + std::to_string(bd.l_div_s) + ")");
    ad::backward(terms.total);

    std::vector<ad::Var> params = pair.enc.params();
    auto dp = pair.dec.params();
    params.insert(params.end(), dp.begin(), dp.end());
    opt.step(params);
    return bd;
}

std::pair<CryptorPair, TrainLog> train_cryptor(const EncoderModel& model,
                                               const std::vector<Tensor>& images,
                                               const TrainConfig& cfg) {
    cfg.validate();
    bool hidden = model.is_matrix();
    if (!hidden && static_cast<int>(images.size()) < cfg.batch)
        throw std::invalid_argument("train_cryptor: dataset smaller than batch");
    if (images.empty()) throw std::invalid_argument("train_cryptor: empty dataset");

    std::vector<Tensor> embeddings = precompute_embeddings(model, images);

    CryptorPair pair = init_cryptor_pair(model.id, model.embed_dim(), cfg.seed, cfg.tokens, cfg.ca_gain,
                                         cfg.ca_qk_gain);
    pair.config_fingerprint += ";" + cfg.fingerprint();
    Adam opt(cfg.lr);
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainLog log;
    auto t0 = std::chrono::steady_clock::now();
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<Tensor> batch;
        if (hidden) {
            // one image per step; its sampled token rows form the batch
            const Tensor& mat = embeddings[static_cast<size_t>(
                rng.uniform_int(static_cast<int>(embeddings.size())))];
            int b = std::min(cfg.batch, mat.rows());
            std::vector<int> idx = rng.sample_without_replacement(mat.rows(), b);
            int c = mat.cols();
            for (int i : idx)
                batch.emplace_back(std::vector<int>{c},
                                   std::vector<double>(mat.data.begin() + static_cast<size_t>(i) * c,
                                                       mat.data.begin() + static_cast<size_t>(i + 1) * c));
        } else {
            std::vector<int> idx = rng.sample_without_replacement(
                static_cast<int>(embeddings.size()), cfg.batch);
            for (int i : idx) batch.push_back(embeddings[static_cast<size_t>(i)]);
        }
        TrainConfig step_cfg = cfg;
        step_cfg.batch = static_cast<int>(batch.size());
        LossBreakdown bd = train_step(pair, batch, step_cfg, rng, opt);
        if (bd.total > 1e4)
            throw std::runtime_error("train_cryptor: diverged at step " + std::to_string(step) +
                                     " (total=" + std::to_string(bd.total) + ")");
        if (step % cfg.log_every == 0 || step == cfg.steps - 1)
            log.steps.push_back({step, bd});
    }
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(pair), std::move(log)};
}

}  // namespace shield
