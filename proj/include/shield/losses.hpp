#pragma once

#include <functional>
#include <vector>

#include "shield/cryptor.hpp"

namespace shield {

struct LossWeights {
    double l_enc = 1.0;
    double l_dec = 5.0;
    double l_wrg = 1.0;
    double l_div = 1.0;
    double l_div_s = 1.0;
};

struct LossBreakdown {
    double l_enc = 0, l_dec = 0, l_wrg = 0, l_div = 0, l_div_s = 0, total = 0;
};

// Losses are written against callables so tests can swap in degenerate
// cryptors (identity, fixed-output) with known closed-form values.
using CryptorFn = std::function<ad::Var(const ad::Var& e, const ad::Var& p)>;

CryptorFn cryptor_fn(const CryptorNet& net);

// All cosine terms are clamped to [0,1].
ad::Var loss_enc(const CryptorFn& enc, const ad::Var& e_ori, const ad::Var& p_crt,
                 const std::vector<ad::Var>& wrong_passwords);
ad::Var loss_dec(const CryptorFn& enc, const CryptorFn& dec, const ad::Var& e_ori,
                 const ad::Var& p_crt);
ad::Var loss_wrg(const CryptorFn& enc, const CryptorFn& dec, const ad::Var& e_ori,
                 const ad::Var& p_crt, const std::vector<ad::Var>& wrong_passwords);

// The 2n+1 embeddings one item contributes to the diversity pool:
// n+1 encryptions (correct first) followed by n wrong decryptions.
std::vector<ad::Var> div_pool_for_item(const CryptorFn& enc, const CryptorFn& dec,
                                       const ad::Var& e_ori, const ad::Var& p_crt,
                                       const std::vector<ad::Var>& wrong_passwords);

// 0.5 * sum over ordered pairs of clamped cosines of the pooled embeddings.
ad::Var loss_div(const std::vector<ad::Var>& pooled);

// Same-password diversity over a batch: one fixed password pair for all items.
ad::Var loss_div_s(const CryptorFn& enc, const CryptorFn& dec,
                   const std::vector<ad::Var>& batch, const ad::Var& p_enc_fixed,
                   const ad::Var& p_dec_fixed);

struct LossTerms {
    ad::Var l_enc, l_dec, l_wrg, l_div, l_div_s, total;
    LossBreakdown values(const LossWeights& w) const;
};

// Full weighted objective over a batch. Per-item terms (enc/dec/wrg) are
// averaged over the batch; the diversity terms operate on the pooled sets
// and carry only the paper's 1/2 factor.
LossTerms loss_total(const CryptorFn& enc, const CryptorFn& dec,
                     const std::vector<ad::Var>& batch,
                     const std::vector<ad::Var>& correct_passwords,
                     const std::vector<std::vector<ad::Var>>& wrong_passwords,
                     const ad::Var& p_enc_fixed, const ad::Var& p_dec_fixed,
                     const LossWeights& weights);

}  // namespace shield
