#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "shield/gradcheck.hpp"
#include "shield/losses.hpp"

using namespace shield;
using ad::Var;

namespace {

const CryptorFn identity_fn = [](const Var& e, const Var&) { return e; };
// returns the password, discarding the embedding: output depends only on p
const CryptorFn password_fn = [](const Var&, const Var& p) { return p; };

Var vec(std::vector<double> d) { return ad::constant(Tensor::vector(std::move(d))); }

// reference oracle for pairwise_cos_penalty: explicit double loop over
// ordered pairs, same arithmetic order as the fused op
double pairwise_oracle(const std::vector<std::vector<double>>& rows) {
    size_t n = rows.size(), d = rows[0].size();
    std::vector<double> norms(n);
    for (size_t k = 0; k < n; ++k) {
        double s = 0;
        for (size_t i = 0; i < d; ++i) s += rows[k][i] * rows[k][i];
        norms[k] = std::sqrt(s);
    }
    double total = 0;
    for (size_t k = 0; k < n; ++k)
        for (size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            double dot = 0;
            for (size_t i = 0; i < d; ++i) dot += rows[k][i] * rows[j][i];
            total += std::max(0.0, dot / (norms[k] * norms[j]));
        }
    return 0.5 * total;
}

}  // namespace

TEST_CASE("loss_enc with the identity cryptor is n+1") {
    Var e = vec({1, 2, 3});
    std::vector<Var> wrongs = {vec({1, 0, 0}), vec({0, 1, 0})};
    CHECK(ad::value0(loss_enc(identity_fn, e, vec({0, 0, 1}), wrongs)) ==
          doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(loss_enc(identity_fn, e, e, {}), std::invalid_argument);
}

TEST_CASE("loss_enc with orthogonal encryptions is 0") {
    // encryptor outputs the password; passwords orthogonal to e
    Var e = vec({1, 0, 0, 0});
    std::vector<Var> wrongs = {vec({0, 0, 1, 0}), vec({0, 0, 0, 1})};
    CHECK(ad::value0(loss_enc(password_fn, e, vec({0, 1, 0, 0}), wrongs)) == 0.0);
}

TEST_CASE("loss_dec closed forms") {
    Var e = vec({1, 2, 3});
    // identity round trip: 1 - cos(e,e) = 0
    CHECK(ad::value0(loss_dec(identity_fn, identity_fn, e, vec({9, 9, 9}))) ==
          doctest::Approx(0.0));
    // decryptor lands orthogonal: 1 - 0 = 1
    CryptorFn ortho = [](const Var& x, const Var&) {
        (void)x;
        return vec({-2, 1, 0});
    };
    CHECK(ad::value0(loss_dec(identity_fn, ortho, e, e)) == doctest::Approx(1.0));
}

TEST_CASE("loss_wrg with identity cryptors is n") {
    Var e = vec({1, 2, 3});
    std::vector<Var> wrongs = {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
    CHECK(ad::value0(loss_wrg(identity_fn, identity_fn, e, e, wrongs)) == doctest::Approx(3.0));
    CHECK_THROWS_AS(loss_wrg(identity_fn, identity_fn, e, e, {}), std::invalid_argument);
}

TEST_CASE("div pool layout: correct encryption, wrong encryptions, wrong decryptions") {
    Var e = vec({1, 1});
    Var p = vec({2, 2});
    std::vector<Var> wrongs = {vec({3, 3}), vec({4, 4})};
    auto pool = div_pool_for_item(password_fn, password_fn, e, p, wrongs);
    REQUIRE(pool.size() == 5);
    CHECK(pool[0]->value.data == std::vector<double>{2, 2});  // enc(e, p_crt) = p
    CHECK(pool[1]->value.data == std::vector<double>{3, 3});
    CHECK(pool[2]->value.data == std::vector<double>{4, 4});
    CHECK(pool[3]->value.data == std::vector<double>{3, 3});  // dec(.., p_wrg) = p_wrg
    CHECK(pool[4]->value.data == std::vector<double>{4, 4});
}

TEST_CASE("loss_div of 3 identical embeddings is 3") {
    Var a = vec({1, 2, 3});
    CHECK(ad::value0(loss_div({a, a, a})) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(loss_div({a}), std::invalid_argument);
}

TEST_CASE("loss_div of mutually orthogonal embeddings is 0") {
    CHECK(ad::value0(loss_div({vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})})) == 0.0);
}

TEST_CASE("pairwise penalty matches the double-loop oracle exactly") {
    Rng rng(500);
    for (int trial = 0; trial < 5; ++trial) {
        int n = 3 + trial, d = 6;
        std::vector<std::vector<double>> rows;
        std::vector<Var> pool;
        for (int k = 0; k < n; ++k) {
            Tensor t = rng.normal_tensor({d});
            rows.push_back(t.data);
            pool.push_back(ad::constant(t));
        }
        double fused = ad::value0(loss_div(pool));
        CHECK(std::fabs(fused - pairwise_oracle(rows)) <= 1e-9);
    }
}

TEST_CASE("loss_div is invariant to pool permutation") {
    Rng rng(501);
    std::vector<Var> pool;
    for (int k = 0; k < 5; ++k) pool.push_back(ad::constant(rng.normal_tensor({7})));
    double base = ad::value0(loss_div(pool));
    std::vector<Var> shuffled = {pool[3], pool[0], pool[4], pool[2], pool[1]};
    CHECK(ad::value0(loss_div(shuffled)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("duplicating an identical pool scales by (2N)(2N-1)/(N(N-1))") {
    Var a = vec({2, -1, 0.5});
    std::vector<Var> pool(4, a);
    double base = ad::value0(loss_div(pool));  // 0.5 * 4*3 = 6
    CHECK(base == doctest::Approx(6.0));
    std::vector<Var> doubled(8, a);
    CHECK(ad::value0(loss_div(doubled)) == doctest::Approx(base * (8.0 * 7.0) / (4.0 * 3.0)));
}

TEST_CASE("loss_div_s over identical outputs equals 2 for a pair") {
    // both items encrypt to the same vector, decrypt to the same vector:
    // enc penalty 0.5*2*1 = 1, dec penalty 1
    CryptorFn constant_fn = [](const Var&, const Var&) { return vec({1, 1, 1}); };
    std::vector<Var> batch = {vec({1, 0, 0}), vec({0, 1, 0})};
    CHECK(ad::value0(loss_div_s(constant_fn, constant_fn, batch, vec({1, 1, 1}), vec({1, 1, 1}))) ==
          doctest::Approx(2.0));
    CHECK_THROWS_AS(loss_div_s(constant_fn, constant_fn, {vec({1, 0, 0})}, vec({1, 1, 1}),
                               vec({1, 1, 1})),
                    std::invalid_argument);
}

TEST_CASE("loss_total closed form with identity cryptors") {
    // b=2 identical items, n=2 wrong passwords:
    //   l_enc = 3, l_dec = 0, l_wrg = 2 per item (averaged, unchanged)
    //   l_div over a 10-row pool of one repeated vector = 0.5*10*9 = 45
    //   l_div_s: encs and decs each 2 identical rows -> 1 + 1 = 2
    Var e = vec({1, 2, 3});
    std::vector<Var> batch = {e, e};
    std::vector<Var> crt = {vec({5, 5, 5}), vec({6, 6, 6})};
    std::vector<std::vector<Var>> wrongs = {{vec({1, 0, 0}), vec({0, 1, 0})},
                                            {vec({1, 0, 0}), vec({0, 1, 0})}};
    LossWeights w;  // (1, 5, 1, 1, 1)
    LossTerms t = loss_total(identity_fn, identity_fn, batch, crt, wrongs, crt[0], crt[0], w);
    LossBreakdown b = t.values(w);
    CHECK(b.l_enc == doctest::Approx(3.0));
    CHECK(b.l_dec == doctest::Approx(0.0));
    CHECK(b.l_wrg == doctest::Approx(2.0));
    CHECK(b.l_div == doctest::Approx(45.0));
    CHECK(b.l_div_s == doctest::Approx(2.0));
    CHECK(b.total == doctest::Approx(1 * 3 + 5 * 0 + 1 * 2 + 1 * 45 + 1 * 2));
    CHECK(ad::value0(t.total) == doctest::Approx(b.total));
}

TEST_CASE("loss_total rejects mismatched batch and password lists") {
    Var e = vec({1, 2, 3});
    LossWeights w;
    CHECK_THROWS_AS(loss_total(identity_fn, identity_fn, {e, e}, {e}, {{e}, {e}}, e, e, w),
                    std::invalid_argument);
    CHECK_THROWS_AS(loss_total(identity_fn, identity_fn, {e}, {e}, {{e}}, e, e, w),
                    std::invalid_argument);
}

TEST_CASE("weighting is applied per term") {
    Var e = vec({1, 2, 3});
    std::vector<Var> batch = {e, e};
    std::vector<Var> crt = {e, e};
    std::vector<std::vector<Var>> wrongs = {{e}, {e}};
    LossWeights w{2.0, 3.0, 4.0, 0.0, 0.0};
    LossTerms t = loss_total(identity_fn, identity_fn, batch, crt, wrongs, e, e, w);
    LossBreakdown b = t.values(w);
    // identity: l_enc = 2, l_dec = 0, l_wrg = 1
    CHECK(ad::value0(t.total) == doctest::Approx(2.0 * 2 + 3.0 * 0 + 4.0 * 1));
    CHECK(b.total == doctest::Approx(ad::value0(t.total)));
}

TEST_CASE("gradients of the full objective match finite differences") {
    // real (tiny) cryptor nets, differentiated through one batch item
    CryptorNet enc_net = init_cryptor(CryptorRole::encryptor, 16, 11, 4);
    CryptorNet dec_net = init_cryptor(CryptorRole::decryptor, 16, 12, 4);
    CryptorFn enc = cryptor_fn(enc_net), dec = cryptor_fn(dec_net);
    Rng rng(600);
    Tensor e0 = rng.normal_tensor({16});
    Var other = ad::constant(rng.normal_tensor({16}));
    Var p_crt0 = ad::constant(generate_password(1, 16).vec);
    Var p_crt1 = ad::constant(generate_password(2, 16).vec);
    Var p_wrg = ad::constant(generate_password(3, 16).vec);
    Var p_fix_e = ad::constant(generate_password(4, 16).vec);
    Var p_fix_d = ad::constant(generate_password(5, 16).vec);
    LossWeights w;

    auto fn = [&](const Var& x) {
        LossTerms t = loss_total(enc, dec, {x, other}, {p_crt0, p_crt1}, {{p_wrg}, {p_wrg}},
                                 p_fix_e, p_fix_d, w);
        return t.total;
    };
    GradReport rep = finite_diff_check("loss_total_embedding", fn, e0, 3e-4);
    INFO("rel=", rep.max_rel_error, " abs=", rep.max_abs_error);
    CHECK(rep.passed);

    // and through an encryptor parameter
    auto fn_param = [&](const Var& x) {
        CryptorNet probe = enc_net;
        probe.fc_w = x;
        LossTerms t = loss_total(cryptor_fn(probe), dec, {ad::constant(e0), other},
                                 {p_crt0, p_crt1}, {{p_wrg}, {p_wrg}}, p_fix_e, p_fix_d, w);
        return t.total;
    };
    GradReport rep2 = finite_diff_check("loss_total_fc_w", fn_param, enc_net.fc_w->value, 3e-4);
    INFO("rel=", rep2.max_rel_error, " abs=", rep2.max_abs_error);
    CHECK(rep2.passed);
}
