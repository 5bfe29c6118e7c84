#include <cmath>

#include "doctest.h"
#include "shield/dataset.hpp"
#include "shield/distortion.hpp"
#include "shield/evalkit.hpp"

using namespace shield;

TEST_CASE("distortion names round-trip") {
    for (Distortion d : {Distortion::identity, Distortion::gaussian_noise,
                         Distortion::gaussian_blur})
        CHECK(distortion_from_name(distortion_name(d)) == d);
    CHECK_THROWS_AS(distortion_from_name("nope"), std::invalid_argument);
}

TEST_CASE("blur kernel is normalized, symmetric and peaked at center") {
    Tensor k = gaussian_blur_kernel();
    REQUIRE(k.shape == std::vector<int>{3, 3});
    double s = 0;
    for (double v : k.data) s += v;
    CHECK(std::fabs(s - 1.0) <= 1e-12);
    CHECK(k.at2(1, 1) > k.at2(0, 1));
    CHECK(k.at2(0, 1) > k.at2(0, 0));
    CHECK(k.at2(0, 0) == doctest::Approx(k.at2(2, 2)));
    CHECK(k.at2(0, 1) == doctest::Approx(k.at2(1, 0)));
}

TEST_CASE("blur preserves constant images and is not idempotent otherwise") {
    Tensor flat = Tensor::full({8, 8, 3}, 0.5);
    Tensor once = apply_gaussian_blur(flat);
    for (double v : once.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    Tensor img = gen_toy_dataset(1, 1, 32)[0];
    Tensor b1 = apply_gaussian_blur(img);
    Tensor b2 = apply_gaussian_blur(b1);
    CHECK(b1.data != img.data);
    CHECK(b2.data != b1.data);
}

TEST_CASE("noise distortion has the configured variance") {
    Tensor flat = Tensor::full({64, 64, 3}, 0.5);
    Tensor noisy = apply_gaussian_noise(flat, 77);
    double mean = 0;
    for (double v : noisy.data) mean += v - 0.5;
    mean /= static_cast<double>(noisy.data.size());
    double var = 0;
    for (double v : noisy.data) var += (v - 0.5 - mean) * (v - 0.5 - mean);
    var /= static_cast<double>(noisy.data.size());
    // 12288 samples: variance should land within 15% of 1e-4
    CHECK(var == doctest::Approx(1e-4).epsilon(0.15));
    CHECK(std::fabs(mean) < 5e-4);
    // deterministic in the seed
    CHECK(apply_gaussian_noise(flat, 77).data == noisy.data);
    CHECK(apply_gaussian_noise(flat, 78).data != noisy.data);
}

TEST_CASE("jpeg round trip is lossy but close on natural images") {
    Tensor img = gen_toy_dataset(5, 1)[0];
    Tensor back = apply_jpeg(img);
    REQUIRE(back.shape == img.shape);
    CHECK(back.data != img.data);
    CHECK(psnr(img, back) > 25.0);

    // solid color compresses nearly losslessly
    Tensor flat = Tensor::full({64, 64, 3}, 0.25);
    CHECK(psnr(flat, apply_jpeg(flat)) >= 40.0);
}

TEST_CASE("eval_distortion dispatches by kind") {
    Tensor img = gen_toy_dataset(6, 1)[0];
    CHECK(eval_distortion(img, EvalDistortion::noise, 3).data ==
          apply_gaussian_noise(img, 3).data);
    CHECK(eval_distortion(img, EvalDistortion::blur).data == apply_gaussian_blur(img).data);
    CHECK(eval_distortion(img, EvalDistortion::jpeg).data == apply_jpeg(img).data);
}

TEST_CASE("diff_distortion picks uniformly and keeps values finite") {
    Tensor img = gen_toy_dataset(7, 1, 16)[0];
    std::vector<Distortion> all = {Distortion::identity, Distortion::gaussian_noise,
                                   Distortion::gaussian_blur};
    Rng rng(11);
    int identity_hits = 0;
    for (int t = 0; t < 300; ++t) {
        ad::Var out = diff_distortion(ad::constant(img), rng, all);
        REQUIRE(out->value.shape == img.shape);
        CHECK(out->value.all_finite());
        if (out->value.data == img.data) ++identity_hits;
    }
    // identity should fire roughly a third of the time (binomial 3 sigma)
    CHECK(identity_hits > 100 - 3 * 8.2);
    CHECK(identity_hits < 100 + 3 * 8.2);
}

TEST_CASE("diff_distortion with a singleton identity set is exact passthrough") {
    Tensor img = gen_toy_dataset(8, 1, 16)[0];
    Rng rng(12);
    ad::Var out = diff_distortion(ad::constant(img), rng, {Distortion::identity});
    CHECK(out->value.data == img.data);
}

TEST_CASE("gradients flow through every diff_distortion branch") {
    Tensor img = gen_toy_dataset(9, 1, 8)[0];
    for (Distortion d : {Distortion::identity, Distortion::gaussian_noise,
                         Distortion::gaussian_blur}) {
        Rng rng(13);
        ad::Var x = ad::leaf(img);
        ad::Var y = ad::sum(diff_distortion(x, rng, {d}));
        ad::backward(y);
        REQUIRE(x->grad.numel() == img.numel());
        double gsum = 0;
        for (double g : x->grad.data) gsum += std::fabs(g);
        CHECK(gsum > 0.0);
    }
}

TEST_CASE("noise branch clamps to the unit interval") {
    Tensor white = Tensor::full({8, 8, 3}, 1.0);
    Rng rng(14);
    ad::Var out = diff_distortion(ad::constant(white), rng, {Distortion::gaussian_noise});
    for (double v : out->value.data) {
        CHECK(v <= 1.0);
        CHECK(v >= 0.0);
    }
}
