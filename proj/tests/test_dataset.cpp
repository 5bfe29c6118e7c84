#include <cmath>

#include "doctest.h"
#include "shield/dataset.hpp"
#include "shield/encoders.hpp"

using namespace shield;

TEST_CASE("dataset is deterministic in the seed") {
    auto a = gen_toy_dataset(42, 3);
    auto b = gen_toy_dataset(42, 3);
    auto c = gen_toy_dataset(43, 3);
    REQUIRE(a.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(a[i].data == b[i].data);
    CHECK(a[0].data != c[0].data);
}

TEST_CASE("images have the requested shape and stay inside (0,1)") {
    for (auto& img : gen_toy_dataset(1, 5, 32)) {
        REQUIRE(img.shape == std::vector<int>{32, 32, 3});
        for (double v : img.data) {
            CHECK(v >= 0.02);
            CHECK(v <= 0.98);
        }
        CHECK(img.all_finite());
    }
}

TEST_CASE("prefix stability: a longer corpus extends a shorter one") {
    auto small = gen_toy_dataset(9, 2);
    auto big = gen_toy_dataset(9, 5);
    CHECK(small[0].data == big[0].data);
    CHECK(small[1].data == big[1].data);
}

TEST_CASE("corpus images are visually diverse") {
    auto images = gen_toy_dataset(7, 30);
    // pixel-space: mean absolute difference between consecutive images
    int distinct = 0;
    for (size_t i = 1; i < images.size(); ++i) {
        double mad = 0;
        for (size_t k = 0; k < images[i].data.size(); ++k)
            mad += std::fabs(images[i].data[k] - images[i - 1].data[k]);
        mad /= static_cast<double>(images[i].data.size());
        if (mad > 0.05) ++distinct;
    }
    CHECK(distinct >= 28);

    // embedding-space: no two images collapse to the same embedding
    EncoderModel enc = init_encoder(EncoderId::face_a, 101);
    int collisions = 0;
    std::vector<Tensor> embs;
    for (const auto& img : images) embs.push_back(encode(enc, img));
    for (size_t i = 0; i < embs.size(); ++i)
        for (size_t j = i + 1; j < embs.size(); ++j)
            if (embedding_similarity_raw(embs[i], embs[j]) > 0.999) ++collisions;
    CHECK(collisions == 0);
}

TEST_CASE("images contain real structure, not flat fields") {
    for (auto& img : gen_toy_dataset(11, 5)) {
        double mn = 1.0, mx = 0.0;
        for (double v : img.data) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        CHECK(mx - mn > 0.2);
    }
}
