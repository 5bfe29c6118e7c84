#pragma once

#include <string>

#include "shield/autodiff.hpp"
#include "shield/tensor.hpp"

namespace shield {

enum class EncoderId { face_a, face_b, clip_pooled, clip_hidden };

std::string encoder_name(EncoderId id);
EncoderId encoder_from_name(const std::string& name);

struct EncoderConfig {
    int resolution = 64;  // square RGB input
    // face-style encoders: 8x8 patches -> token dim -> pooled -> 64
    int face_patch = 8;
    int face_token_dim = 64;
    int face_embed_dim = 64;
    // clip-style trunk: 16x16 patches -> token matrix (16 x 48);
    // clip_pooled adds a pooled head to 96
    int clip_patch = 16;
    int clip_token_dim = 48;
    int clip_pooled_dim = 96;
    // rank of the factorized output head. The head is the product of a
    // token_dim x rank and a rank x out_dim matrix, so every embedding lies
    // in a fixed rank-dimensional subspace. Concentrating the embedding
    // distribution this way is what makes the password mixture channel
    // through the cryptor's cross-attention accurate enough to invert.
    int head_rank = 4;
    // fixed scalar on the (linear) output stage. High-pass features plus
    // small init weights leave raw outputs around 1e-4; the gain brings
    // embedding magnitudes in line with password vectors so the cryptor's
    // layer norms (finite eps) do not flatten the signal. Cosine metrics
    // are unaffected.
    double output_gain = 1e4;
};

// Frozen stand-in image encoder. Parameters are drawn once from the seed
// and never mutated; face_a and face_b share the architecture and differ
// only by seed, clip_pooled and clip_hidden share the trunk layout.
struct EncoderModel {
    EncoderId id;
    uint64_t seed = 0;
    EncoderConfig cfg;
    Tensor w_patch;  // patch_dim x token_dim (pixels centered on 0.5 upstream)
    Tensor w_head;   // token_dim x embed_dim, rank head_rank by construction;
                     // for clip_hidden a token_dim x token_dim per-row head

    bool is_matrix() const { return id == EncoderId::clip_hidden; }
    int patch_size() const;
    int token_count() const;
    int token_dim() const;
    int embed_dim() const;  // vector dim, or token dim for clip_hidden rows
};

EncoderModel init_encoder(EncoderId id, uint64_t seed, const EncoderConfig& cfg = {});

// Differentiable forward: image {H,W,3} in [0,1] -> {embed_dim} vector,
// or {R, token_dim} matrix for clip_hidden.
ad::Var encode_graph(const EncoderModel& model, const ad::Var& image);

Tensor encode(const EncoderModel& model, const Tensor& image);

// b distinct row indices, uniform without replacement.
std::vector<int> sample_row_indices(int row_count, int b, Rng& rng);
Tensor sample_rows(const Tensor& matrix, int b, uint64_t rng_seed, std::vector<int>* indices_out = nullptr);

// Cosine similarity between two embeddings of the same encoder: plain
// cosine for vectors, mean row cosine for token matrices.
double embedding_similarity_raw(const Tensor& a, const Tensor& b);
double embedding_similarity_clamped(const Tensor& a, const Tensor& b);

}  // namespace shield
