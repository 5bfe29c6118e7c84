#pragma once

#include <string>
#include <vector>

#include "shield/autodiff.hpp"
#include "shield/encoders.hpp"

namespace shield {

// Secret vector with the same dimension as the embedding it conditions.
struct Password {
    uint64_t seed = 0;
    int dim = 0;
    Tensor vec;  // i.i.d. standard normal from the seed
};

Password generate_password(uint64_t seed, int dim);

enum class CryptorRole { encryptor, decryptor };

// One attention-based transform: the embedding is split into T tokens,
// passed through self-attention, then cross-attention against the
// password tokens (embedding tokens query, password tokens key/value),
// then a fully connected layer. Residual + post-norm at both blocks.
struct CryptorNet {
    CryptorRole role = CryptorRole::encryptor;
    int embed_dim = 0;
    int tokens = 0;
    int token_dim = 0;  // tokens * token_dim == embed_dim

    ad::Var sa_wq, sa_wk, sa_wv, sa_wo;  // token_dim x token_dim
    ad::Var ca_wq, ca_wk, ca_wv, ca_wo;
    ad::Var ln1_g, ln1_b, ln2_g, ln2_b;  // token_dim
    ad::Var fc_w, fc_b;                  // embed_dim x embed_dim, embed_dim

    std::vector<ad::Var> params() const;
    long param_count() const;
};

// ca_gain scales the cross-attention value/output init: the password enters
// only through that path, and a plain 1/sqrt(d) init leaves outputs nearly
// password-insensitive
CryptorNet init_cryptor(CryptorRole role, int embed_dim, uint64_t seed, int tokens = 8,
                        double ca_gain = 4.0, double ca_qk_gain = 1.0);

// Differentiable forward over graph variables; dim(e) == dim(p) == embed_dim.
ad::Var cryptor_forward(const CryptorNet& net, const ad::Var& e, const ad::Var& p);

struct CryptorPair {
    CryptorNet enc;
    CryptorNet dec;
    EncoderId encoder_id = EncoderId::face_a;
    std::string config_fingerprint;
};

CryptorPair init_cryptor_pair(EncoderId encoder_id, int embed_dim, uint64_t seed, int tokens = 8,
                              double ca_gain = 4.0, double ca_qk_gain = 1.0);

// Evaluation wrappers; matrix embeddings are handled row-wise.
Tensor encrypt(const CryptorPair& pair, const Tensor& e, const Password& p);
Tensor decrypt(const CryptorPair& pair, const Tensor& e_enc, const Password& p);

}  // namespace shield
