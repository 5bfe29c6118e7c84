#include <cmath>
#include <set>

#include "doctest.h"
#include "shield/dataset.hpp"
#include "shield/encoders.hpp"

using namespace shield;

namespace {

double vec_cos(const Tensor& a, const Tensor& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        dot += a.data[i] * b.data[i];
        na += a.data[i] * a.data[i];
        nb += b.data[i] * b.data[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_CASE("encoder names round-trip") {
    for (EncoderId id : {EncoderId::face_a, EncoderId::face_b, EncoderId::clip_pooled,
                         EncoderId::clip_hidden})
        CHECK(encoder_from_name(encoder_name(id)) == id);
    CHECK_THROWS_AS(encoder_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("encoder output shapes") {
    Tensor img = gen_toy_dataset(1, 1)[0];

    EncoderModel fa = init_encoder(EncoderId::face_a, 10);
    Tensor e = encode(fa, img);
    CHECK(e.shape == std::vector<int>{64});

    EncoderModel cp = init_encoder(EncoderId::clip_pooled, 11);
    CHECK(encode(cp, img).shape == std::vector<int>{96});

    EncoderModel ch = init_encoder(EncoderId::clip_hidden, 11);
    Tensor h = encode(ch, img);
    CHECK(h.shape == std::vector<int>{16, 48});
}

TEST_CASE("encoders are deterministic in seed and input") {
    Tensor img = gen_toy_dataset(2, 1)[0];
    EncoderModel a1 = init_encoder(EncoderId::face_a, 7);
    EncoderModel a2 = init_encoder(EncoderId::face_a, 7);
    CHECK(a1.w_patch.data == a2.w_patch.data);
    CHECK(a1.w_head.data == a2.w_head.data);
    CHECK(encode(a1, img).data == encode(a2, img).data);
}

TEST_CASE("clip_pooled and clip_hidden share the trunk for the same seed") {
    EncoderModel cp = init_encoder(EncoderId::clip_pooled, 21);
    EncoderModel ch = init_encoder(EncoderId::clip_hidden, 21);
    CHECK(cp.w_patch.data == ch.w_patch.data);
}

TEST_CASE("distinct-seed encoders give distinct embeddings") {
    // face_a and face_b must behave as different models: on a fresh corpus
    // at least 95% of images should have |cos| < 0.9 between their outputs
    auto images = gen_toy_dataset(33, 100);
    EncoderModel fa = init_encoder(EncoderId::face_a, 101);
    EncoderModel fb = init_encoder(EncoderId::face_b, 202);
    int distinct = 0;
    for (const auto& img : images) {
        double c = vec_cos(encode(fa, img), encode(fb, img));
        if (std::fabs(c) < 0.9) ++distinct;
    }
    CHECK(distinct >= 95);
}

TEST_CASE("embeddings vary across the corpus") {
    auto images = gen_toy_dataset(44, 20);
    EncoderModel fa = init_encoder(EncoderId::face_a, 101);
    Tensor first = encode(fa, images[0]);
    int different = 0;
    for (size_t i = 1; i < images.size(); ++i) {
        if (vec_cos(first, encode(fa, images[i])) < 0.999) ++different;
    }
    CHECK(different >= 15);
}

TEST_CASE("encoder is smooth under small pixel changes") {
    // a single-pixel bump of 1/255 should barely move the embedding
    auto images = gen_toy_dataset(55, 5);
    EncoderModel fa = init_encoder(EncoderId::face_a, 101);
    for (const auto& img : images) {
        Tensor bumped = img;
        bumped.data[1234] = std::min(1.0, bumped.data[1234] + 1.0 / 255.0);
        Tensor e0 = encode(fa, img);
        Tensor e1 = encode(fa, bumped);
        double d = 0, n = 0;
        for (size_t i = 0; i < e0.data.size(); ++i) {
            d += (e1.data[i] - e0.data[i]) * (e1.data[i] - e0.data[i]);
            n += e0.data[i] * e0.data[i];
        }
        CHECK(std::sqrt(d) / std::sqrt(n) < 0.05);
    }
}

TEST_CASE("encode matches encode_graph forward") {
    Tensor img = gen_toy_dataset(3, 1)[0];
    EncoderModel ch = init_encoder(EncoderId::clip_hidden, 5);
    ad::Var out = encode_graph(ch, ad::constant(img));
    CHECK(out->value.data == encode(ch, img).data);
}

TEST_CASE("sample_rows is deterministic and covers all rows when b equals R") {
    Tensor m = Rng(9).normal_tensor({16, 48});
    std::vector<int> idx1, idx2;
    Tensor s1 = sample_rows(m, 8, 77, &idx1);
    Tensor s2 = sample_rows(m, 8, 77, &idx2);
    CHECK(idx1 == idx2);
    CHECK(s1.data == s2.data);
    CHECK(s1.shape == std::vector<int>{8, 48});
    CHECK(std::set<int>(idx1.begin(), idx1.end()).size() == 8);

    std::vector<int> all;
    sample_rows(m, 16, 5, &all);
    CHECK(std::set<int>(all.begin(), all.end()).size() == 16);
}

TEST_CASE("sample_rows index distribution is uniform") {
    // 10000 draws of 4-of-16: each row expected 2500 times, check within
    // 3 sigma of binomial (sigma ~ 43.3)
    std::vector<int> counts(16, 0);
    Tensor m = Tensor::zeros({16, 2});
    for (uint64_t t = 0; t < 10000; ++t) {
        std::vector<int> idx;
        sample_rows(m, 4, 123456 + t, &idx);
        for (int i : idx) ++counts[static_cast<size_t>(i)];
    }
    for (int c : counts) CHECK(std::fabs(c - 2500.0) < 3.0 * 43.4);
}

TEST_CASE("embedding similarity handles vectors and token matrices") {
    Tensor v1 = Tensor::vector({1, 0});
    Tensor v2 = Tensor::vector({-1, 0});
    CHECK(embedding_similarity_raw(v1, v1) == doctest::Approx(1.0));
    CHECK(embedding_similarity_raw(v1, v2) == doctest::Approx(-1.0));
    CHECK(embedding_similarity_clamped(v1, v2) == 0.0);

    // rows (1,0) vs (1,0) and (0,1) vs (1,0): mean of 1 and 0
    Tensor m1({2, 2}, {1, 0, 0, 1});
    Tensor m2({2, 2}, {1, 0, 1, 0});
    CHECK(embedding_similarity_raw(m1, m2) == doctest::Approx(0.5));
}
