#pragma once

#include <unordered_map>

#include "shield/losses.hpp"

namespace shield {

struct TrainConfig {
    int batch = 32;   // 8 for the hidden-state regime
    int n_wrong = 4;
    int tokens = 8;   // token count for the cryptor nets; must divide the embed dim
    double ca_gain = 4.0;      // cross-attention value/output init gain, see init_cryptor
    double ca_qk_gain = 1.0;   // cross-attention query/key init gain
    LossWeights weights;
    double lr = 1e-3;
    int steps = 3000;
    uint64_t seed = 0;
    EncoderId encoder_id = EncoderId::face_a;
    int log_every = 50;

    void validate() const;
    std::string fingerprint() const;
};

struct StepRecord {
    int step = 0;
    LossBreakdown loss;
};

struct TrainLog {
    std::vector<StepRecord> steps;
    double wall_seconds = 0;
};

// Adaptive moment estimation, (0.9, 0.999), eps 1e-8.
class Adam {
  public:
    explicit Adam(double lr) : lr_(lr) {}
    void step(const std::vector<ad::Var>& params);

  private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Deterministic embedding cache keyed by (encoder_id, encoder seed, image hash).
class EmbeddingCache {
  public:
    const Tensor& get(const EncoderModel& model, const Tensor& image);
    size_t size() const { return cache_.size(); }

  private:
    std::unordered_map<std::string, Tensor> cache_;
};

std::vector<Tensor> precompute_embeddings(const EncoderModel& model,
                                          const std::vector<Tensor>& images);

// One joint update of both nets. `batch` holds flat embeddings (for
// clip_hidden: already-sampled row vectors). Throws on non-finite loss.
LossBreakdown train_step(CryptorPair& pair, const std::vector<Tensor>& batch,
                         const TrainConfig& cfg, Rng& rng, Adam& opt);

// Trains a fresh pair for `model` on the image set. For clip_hidden each
// step draws one image and samples cfg.batch row vectors from its token
// matrix; other encoders draw cfg.batch pooled embeddings.
std::pair<CryptorPair, TrainLog> train_cryptor(const EncoderModel& model,
                                               const std::vector<Tensor>& images,
                                               const TrainConfig& cfg);

}  // namespace shield
