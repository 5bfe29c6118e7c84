#include "shield/encoders.hpp"

#include <cmath>
#include <stdexcept>

namespace shield {

std::string encoder_name(EncoderId id) {
    switch (id) {
        case EncoderId::face_a: return "face_a";
        case EncoderId::face_b: return "face_b";
        case EncoderId::clip_pooled: return "clip_pooled";
        case EncoderId::clip_hidden: return "clip_hidden";
    }
    throw std::logic_error("encoder_name: bad id");
}

EncoderId encoder_from_name(const std::string& name) {
    if (name == "face_a") return EncoderId::face_a;
    if (name == "face_b") return EncoderId::face_b;
    if (name == "clip_pooled") return EncoderId::clip_pooled;
    if (name == "clip_hidden") return EncoderId::clip_hidden;
    throw std::invalid_argument("unknown encoder id: " + name);
}

int EncoderModel::patch_size() const {
    return (id == EncoderId::face_a || id == EncoderId::face_b) ? cfg.face_patch : cfg.clip_patch;
}

int EncoderModel::token_count() const {
    int g = cfg.resolution / patch_size();
    return g * g;
}

int EncoderModel::token_dim() const {
    return (id == EncoderId::face_a || id == EncoderId::face_b) ? cfg.face_token_dim
                                                                : cfg.clip_token_dim;
}

int EncoderModel::embed_dim() const {
    switch (id) {
        case EncoderId::face_a:
        case EncoderId::face_b: return cfg.face_embed_dim;
        case EncoderId::clip_pooled: return cfg.clip_pooled_dim;
        case EncoderId::clip_hidden: return cfg.clip_token_dim;
    }
    throw std::logic_error("embed_dim: bad id");
}

EncoderModel init_encoder(EncoderId id, uint64_t seed, const EncoderConfig& cfg) {
    EncoderModel m;
    m.id = id;
    m.seed = seed;
    m.cfg = cfg;
    if (cfg.resolution % cfg.face_patch != 0 || cfg.resolution % cfg.clip_patch != 0)
        throw std::invalid_argument("init_encoder: patch size must tile the resolution");
    Rng rng(seed);
    int ps = m.patch_size();
    int patch_dim = ps * ps * 3;
    // normal(0, 1/fan_in): small weights keep the token activations in the
    // near-linear part of gelu, so pooling does not pick up a rectification
    // bias common to all images
    m.w_patch = rng.normal_tensor({patch_dim, m.token_dim()}, 1.0 / patch_dim);
    int td = m.token_dim();
    if (id == EncoderId::face_a || id == EncoderId::face_b) {
        // full-rank head: the protection attack must be able to steer these
        // embeddings toward arbitrary encrypted targets
        m.w_head = rng.normal_tensor({td, m.embed_dim()}, 1.0 / td);
        return m;
    }
    // clip-style heads are factorized through rank head_rank, so their
    // embeddings (and clip_hidden's token rows) live in one fixed low-rank
    // subspace; that concentration is what makes the password mixture
    // channel through the cryptor's cross-attention accurate enough to
    // invert
    int k = cfg.head_rank;
    if (k < 1 || k > td) throw std::invalid_argument("init_encoder: head_rank out of range");
    int out = (id == EncoderId::clip_hidden) ? td : m.embed_dim();
    Tensor wa = rng.normal_tensor({td, k}, 1.0 / td);
    Tensor wb = rng.normal_tensor({k, out}, 1.0 / std::sqrt(static_cast<double>(k)));
    m.w_head = Tensor::zeros({td, out});
    for (int i = 0; i < td; ++i)
        for (int j = 0; j < out; ++j) {
            double v = 0;
            for (int q = 0; q < k; ++q)
                v += wa.data[static_cast<size_t>(i) * k + q] *
                     wb.data[static_cast<size_t>(q) * out + j];
            m.w_head.data[static_cast<size_t>(i) * out + j] = v;
        }
    return m;
}

ad::Var encode_graph(const EncoderModel& model, const ad::Var& image) {
    const Tensor& img = image->value;
    int res = model.cfg.resolution;
    if (img.ndim() != 3 || img.dim(0) != res || img.dim(1) != res || img.dim(2) != 3)
        throw std::invalid_argument("encode: expected " + std::to_string(res) + "x" +
                                    std::to_string(res) + "x3 image, got " +
                                    shape_str(img.shape));
    // local high-pass features: pixel minus its 3x3 box average, so the
    // embedding responds to fine texture rather than smooth shading
    static const Tensor box3 = Tensor::full({3, 3}, 1.0 / 9.0);
    ad::Var highpass =
        ad::sub(image, ad::conv2d(image, ad::constant(box3), 1, 1, ad::Padding::reflect));
    ad::Var patches = ad::extract_patches(highpass, model.patch_size());
    ad::Var tokens = ad::gelu(ad::matmul(patches, ad::constant(model.w_patch)));
    if (model.id == EncoderId::clip_hidden)
        return ad::scale(ad::matmul(tokens, ad::constant(model.w_head)),
                         model.cfg.output_gain);
    ad::Var pooled = ad::mean_rows(tokens);
    return ad::scale(ad::linear(pooled, ad::constant(model.w_head), nullptr),
                     model.cfg.output_gain);
}

Tensor encode(const EncoderModel& model, const Tensor& image) {
    return encode_graph(model, ad::constant(image))->value;
}

std::vector<int> sample_row_indices(int row_count, int b, Rng& rng) {
    if (b < 1 || b > row_count)
        throw std::invalid_argument("sample_row_indices: b must be in [1, row_count]");
    return rng.sample_without_replacement(row_count, b);
}

Tensor sample_rows(const Tensor& matrix, int b, uint64_t rng_seed, std::vector<int>* indices_out) {
    if (matrix.ndim() != 2) throw std::invalid_argument("sample_rows: expected 2-D");
    Rng rng(rng_seed);
    std::vector<int> idx = sample_row_indices(matrix.rows(), b, rng);
    if (indices_out) *indices_out = idx;
    int c = matrix.cols();
    Tensor out = Tensor::zeros({b, c});
    for (int i = 0; i < b; ++i)
        std::copy(matrix.data.begin() + static_cast<size_t>(idx[static_cast<size_t>(i)]) * c,
                  matrix.data.begin() + static_cast<size_t>(idx[static_cast<size_t>(i)] + 1) * c,
                  out.data.begin() + static_cast<size_t>(i) * c);
    return out;
}

namespace {

double cos_raw_vec(const double* a, const double* b, int n) {
    double d = 0, na = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0) throw std::domain_error("embedding_similarity: first argument has zero norm");
    if (nb == 0.0) throw std::domain_error("embedding_similarity: second argument has zero norm");
    return d / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double embedding_similarity_raw(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("embedding_similarity: shape mismatch " + shape_str(a.shape) +
                                    " vs " + shape_str(b.shape));
    if (a.ndim() == 1) return cos_raw_vec(a.data.data(), b.data.data(), a.dim(0));
    if (a.ndim() == 2) {
        double acc = 0;
        int r = a.rows(), c = a.cols();
        for (int i = 0; i < r; ++i)
            acc += cos_raw_vec(&a.data[static_cast<size_t>(i) * c],
                               &b.data[static_cast<size_t>(i) * c], c);
        return acc / r;
    }
    throw std::invalid_argument("embedding_similarity: expected vector or matrix");
}

double embedding_similarity_clamped(const Tensor& a, const Tensor& b) {
    if (a.ndim() == 2) {
        double acc = 0;
        int r = a.rows(), c = a.cols();
        if (!a.same_shape(b))
            throw std::invalid_argument("embedding_similarity: shape mismatch");
        for (int i = 0; i < r; ++i)
            acc += std::max(0.0, cos_raw_vec(&a.data[static_cast<size_t>(i) * c],
                                             &b.data[static_cast<size_t>(i) * c], c));
        return acc / r;
    }
    return std::max(0.0, embedding_similarity_raw(a, b));
}

}  // namespace shield
