#include "shield/losses.hpp"

#include <cmath>

namespace shield {

CryptorFn cryptor_fn(const CryptorNet& net) {
    // by value: the returned callable may outlive the caller's net binding
    return [net](const ad::Var& e, const ad::Var& p) { return cryptor_forward(net, e, p); };
}

ad::Var loss_enc(const CryptorFn& enc, const ad::Var& e_ori, const ad::Var& p_crt,
                 const std::vector<ad::Var>& wrong_passwords) {
    if (wrong_passwords.empty())
        throw std::invalid_argument("loss_enc: needs at least one wrong password");
    std::vector<ad::Var> terms;
    terms.push_back(ad::cos_sim_clamped(enc(e_ori, p_crt), e_ori));
    for (const auto& pw : wrong_passwords)
        terms.push_back(ad::cos_sim_clamped(enc(e_ori, pw), e_ori));
    return ad::add_n(terms);
}

ad::Var loss_dec(const CryptorFn& enc, const CryptorFn& dec, const ad::Var& e_ori,
                 const ad::Var& p_crt) {
    ad::Var e_enc = enc(e_ori, p_crt);
    return ad::affine(ad::cos_sim_clamped(dec(e_enc, p_crt), e_ori), -1.0, 1.0);
}

ad::Var loss_wrg(const CryptorFn& enc, const CryptorFn& dec, const ad::Var& e_ori,
                 const ad::Var& p_crt, const std::vector<ad::Var>& wrong_passwords) {
    if (wrong_passwords.empty())
        throw std::invalid_argument("loss_wrg: needs at least one wrong password");
    ad::Var e_enc = enc(e_ori, p_crt);
    std::vector<ad::Var> terms;
    for (const auto& pw : wrong_passwords)
        terms.push_back(ad::cos_sim_clamped(dec(e_enc, pw), e_ori));
    return ad::add_n(terms);
}

std::vector<ad::Var> div_pool_for_item(const CryptorFn& enc, const CryptorFn& dec,
                                       const ad::Var& e_ori, const ad::Var& p_crt,
                                       const std::vector<ad::Var>& wrong_passwords) {
    std::vector<ad::Var> pool;
    ad::Var e_enc_crt = enc(e_ori, p_crt);
    pool.push_back(e_enc_crt);
    for (const auto& pw : wrong_passwords) pool.push_back(enc(e_ori, pw));
    for (const auto& pw : wrong_passwords) pool.push_back(dec(e_enc_crt, pw));
    return pool;
}

ad::Var loss_div(const std::vector<ad::Var>& pooled) {
    if (pooled.size() < 2)
        throw std::invalid_argument("loss_div: needs at least 2 pooled embeddings");
    return ad::pairwise_cos_penalty(ad::stack_rows(pooled));
}

ad::Var loss_div_s(const CryptorFn& enc, const CryptorFn& dec,
                   const std::vector<ad::Var>& batch, const ad::Var& p_enc_fixed,
                   const ad::Var& p_dec_fixed) {
    if (batch.size() < 2) throw std::invalid_argument("loss_div_s: batch must have at least 2 items");
    std::vector<ad::Var> encs, decs;
    for (const auto& e : batch) {
        ad::Var c = enc(e, p_enc_fixed);
        encs.push_back(c);
        decs.push_back(dec(c, p_dec_fixed));
    }
    return ad::add(ad::pairwise_cos_penalty(ad::stack_rows(encs)),
                   ad::pairwise_cos_penalty(ad::stack_rows(decs)));
}

LossBreakdown LossTerms::values(const LossWeights& w) const {
    LossBreakdown b;
    b.l_enc = ad::value0(l_enc);
    b.l_dec = ad::value0(l_dec);
    b.l_wrg = ad::value0(l_wrg);
    b.l_div = ad::value0(l_div);
    b.l_div_s = ad::value0(l_div_s);
    b.total = w.l_enc * b.l_enc + w.l_dec * b.l_dec + w.l_wrg * b.l_wrg + w.l_div * b.l_div +
              w.l_div_s * b.l_div_s;
    return b;
}

LossTerms loss_total(const CryptorFn& enc, const CryptorFn& dec,
                     const std::vector<ad::Var>& batch,
                     const std::vector<ad::Var>& correct_passwords,
                     const std::vector<std::vector<ad::Var>>& wrong_passwords,
                     const ad::Var& p_enc_fixed, const ad::Var& p_dec_fixed,
                     const LossWeights& weights) {
    size_t b = batch.size();
    if (b < 2) throw std::invalid_argument("loss_total: batch must have at least 2 items");
    if (correct_passwords.size() != b || wrong_passwords.size() != b)
        throw std::invalid_argument("loss_total: password lists must match batch size");

    std::vector<ad::Var> enc_terms, dec_terms, wrg_terms, pool;
    for (size_t k = 0; k < b; ++k) {
        const ad::Var& e = batch[k];
        const ad::Var& p = correct_passwords[k];
        const auto& wrongs = wrong_passwords[k];
        // shared subgraph: the correct-password encryption feeds l_enc,
        // l_dec, l_wrg and the diversity pool
        ad::Var e_enc_crt = enc(e, p);
        std::vector<ad::Var> wrong_encs, wrong_decs;
        for (const auto& pw : wrongs) wrong_encs.push_back(enc(e, pw));
        for (const auto& pw : wrongs) wrong_decs.push_back(dec(e_enc_crt, pw));

        std::vector<ad::Var> et;
        et.push_back(ad::cos_sim_clamped(e_enc_crt, e));
        for (const auto& we : wrong_encs) et.push_back(ad::cos_sim_clamped(we, e));
        enc_terms.push_back(ad::add_n(et));

        dec_terms.push_back(
            ad::affine(ad::cos_sim_clamped(dec(e_enc_crt, p), e), -1.0, 1.0));

        std::vector<ad::Var> wt;
        for (const auto& wd : wrong_decs) wt.push_back(ad::cos_sim_clamped(wd, e));
        wrg_terms.push_back(ad::add_n(wt));

        pool.push_back(e_enc_crt);
        pool.insert(pool.end(), wrong_encs.begin(), wrong_encs.end());
        pool.insert(pool.end(), wrong_decs.begin(), wrong_decs.end());
    }

    LossTerms t;
    double inv_b = 1.0 / static_cast<double>(b);
    t.l_enc = ad::scale(ad::add_n(enc_terms), inv_b);
    t.l_dec = ad::scale(ad::add_n(dec_terms), inv_b);
    t.l_wrg = ad::scale(ad::add_n(wrg_terms), inv_b);
    t.l_div = loss_div(pool);
    t.l_div_s = loss_div_s(enc, dec, batch, p_enc_fixed, p_dec_fixed);
    t.total = ad::add_n({ad::scale(t.l_enc, weights.l_enc), ad::scale(t.l_dec, weights.l_dec),
                         ad::scale(t.l_wrg, weights.l_wrg), ad::scale(t.l_div, weights.l_div),
                         ad::scale(t.l_div_s, weights.l_div_s)});
    return t;
}

}  // namespace shield
