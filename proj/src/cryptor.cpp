#include "shield/cryptor.hpp"

#include <cmath>

namespace shield {

Password generate_password(uint64_t seed, int dim) {
    if (dim <= 0) throw std::invalid_argument("generate_password: dim must be positive");
    Rng rng(seed);
    Password p;
    p.seed = seed;
    p.dim = dim;
    p.vec = rng.normal_tensor({dim});
    return p;
}

std::vector<ad::Var> CryptorNet::params() const {
    return {sa_wq, sa_wk, sa_wv, sa_wo, ca_wq, ca_wk, ca_wv, ca_wo,
            ln1_g, ln1_b, ln2_g, ln2_b, fc_w, fc_b};
}

long CryptorNet::param_count() const {
    long n = 0;
    for (const auto& p : params()) n += p->value.numel();
    return n;
}

CryptorNet init_cryptor(CryptorRole role, int embed_dim, uint64_t seed, int tokens,
                        double ca_gain, double ca_qk_gain) {
    if (embed_dim <= 0 || tokens <= 0 || embed_dim % tokens != 0)
        throw std::invalid_argument("init_cryptor: tokens must divide embed_dim");
    CryptorNet net;
    net.role = role;
    net.embed_dim = embed_dim;
    net.tokens = tokens;
    net.token_dim = embed_dim / tokens;
    Rng rng(seed);
    int d = net.token_dim;
    double sd = 1.0 / std::sqrt(d);
    auto mat = [&] { return ad::leaf(rng.normal_tensor({d, d}, sd)); };
    net.sa_wq = mat();
    net.sa_wk = mat();
    net.sa_wv = mat();
    net.sa_wo = mat();
    // sharp cross-attention scores make a mismatched password retrieve one
    // random password token instead of the near-constant token mean
    net.ca_wq = ad::leaf(rng.normal_tensor({d, d}, ca_qk_gain * sd));
    net.ca_wk = ad::leaf(rng.normal_tensor({d, d}, ca_qk_gain * sd));
    net.ca_wv = ad::leaf(rng.normal_tensor({d, d}, ca_gain * sd));
    net.ca_wo = ad::leaf(rng.normal_tensor({d, d}, ca_gain * sd));
    net.ln1_g = ad::leaf(Tensor::full({d}, 1.0));
    net.ln1_b = ad::leaf(Tensor::zeros({d}));
    net.ln2_g = ad::leaf(Tensor::full({d}, 1.0));
    net.ln2_b = ad::leaf(Tensor::zeros({d}));
    net.fc_w = ad::leaf(rng.normal_tensor({embed_dim, embed_dim}, 1.0 / std::sqrt(embed_dim)));
    net.fc_b = ad::leaf(Tensor::zeros({embed_dim}));
    return net;
}

namespace {

// single-head scaled dot-product attention, projected back by wo
ad::Var attention(const ad::Var& q_in, const ad::Var& kv_in, const ad::Var& wq, const ad::Var& wk,
                  const ad::Var& wv, const ad::Var& wo, int token_dim) {
    ad::Var q = ad::matmul(q_in, wq);
    ad::Var k = ad::matmul(kv_in, wk);
    ad::Var v = ad::matmul(kv_in, wv);
    ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(token_dim));
    ad::Var attn = ad::softmax_rows(scores);
    return ad::matmul(ad::matmul(attn, v), wo);
}

}  // namespace

ad::Var cryptor_forward(const CryptorNet& net, const ad::Var& e, const ad::Var& p) {
    if (e->value.numel() != net.embed_dim)
        throw std::invalid_argument("cryptor_forward: embedding dim " +
                                    std::to_string(e->value.numel()) + " != net dim " +
                                    std::to_string(net.embed_dim));
    if (p->value.numel() != net.embed_dim)
        throw std::invalid_argument("cryptor_forward: password dim " +
                                    std::to_string(p->value.numel()) + " != net dim " +
                                    std::to_string(net.embed_dim));
    int T = net.tokens, d = net.token_dim;
    ad::Var x = ad::reshape(e, {T, d});
    ad::Var sa = attention(x, x, net.sa_wq, net.sa_wk, net.sa_wv, net.sa_wo, d);
    x = ad::layer_norm_rows(ad::add(x, sa), net.ln1_g, net.ln1_b);
    ad::Var ptok = ad::reshape(p, {T, d});
    ad::Var ca = attention(x, ptok, net.ca_wq, net.ca_wk, net.ca_wv, net.ca_wo, d);
    x = ad::layer_norm_rows(ad::add(x, ca), net.ln2_g, net.ln2_b);
    return ad::linear(ad::reshape(x, {net.embed_dim}), net.fc_w, net.fc_b);
}

CryptorPair init_cryptor_pair(EncoderId encoder_id, int embed_dim, uint64_t seed, int tokens,
                              double ca_gain, double ca_qk_gain) {
    CryptorPair pair;
    pair.encoder_id = encoder_id;
    // distinct parameter sets for the two roles
    pair.enc = init_cryptor(CryptorRole::encryptor, embed_dim, seed * 2 + 1, tokens, ca_gain, ca_qk_gain);
    pair.dec = init_cryptor(CryptorRole::decryptor, embed_dim, seed * 2 + 2, tokens, ca_gain, ca_qk_gain);
    pair.config_fingerprint =
        "dim=" + std::to_string(embed_dim) + ";tokens=" + std::to_string(tokens) +
        ";ca_gain=" + std::to_string(ca_gain) + ";ca_qk_gain=" + std::to_string(ca_qk_gain) +
        ";seed=" + std::to_string(seed);
    return pair;
}

namespace {

Tensor apply_rowwise_or_vec(const CryptorNet& net, const Tensor& e, const Password& p) {
    if (p.dim != net.embed_dim)
        throw std::invalid_argument("cryptor: password dim " + std::to_string(p.dim) +
                                    " does not match embedding dim " +
                                    std::to_string(net.embed_dim));
    ad::Var pv = ad::constant(p.vec);
    if (e.ndim() == 1) return cryptor_forward(net, ad::constant(e), pv)->value;
    if (e.ndim() == 2) {
        int r = e.rows(), c = e.cols();
        Tensor out = Tensor::zeros({r, c});
        for (int i = 0; i < r; ++i) {
            Tensor row({c}, std::vector<double>(e.data.begin() + static_cast<size_t>(i) * c,
                                                e.data.begin() + static_cast<size_t>(i + 1) * c));
            Tensor res = cryptor_forward(net, ad::constant(row), pv)->value;
            std::copy(res.data.begin(), res.data.end(),
                      out.data.begin() + static_cast<size_t>(i) * c);
        }
        return out;
    }
    throw std::invalid_argument("cryptor: expected vector or matrix embedding");
}

}  // namespace

Tensor encrypt(const CryptorPair& pair, const Tensor& e, const Password& p) {
    return apply_rowwise_or_vec(pair.enc, e, p);
}

Tensor decrypt(const CryptorPair& pair, const Tensor& e_enc, const Password& p) {
    return apply_rowwise_or_vec(pair.dec, e_enc, p);
}

}  // namespace shield
