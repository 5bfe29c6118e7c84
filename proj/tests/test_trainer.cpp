#include <cmath>

#include "doctest.h"
#include "shield/dataset.hpp"
#include "shield/trainer.hpp"

using namespace shield;

namespace {

std::vector<Tensor> param_snapshot(const CryptorPair& pair) {
    std::vector<Tensor> snap;
    for (const auto& p : pair.enc.params()) snap.push_back(p->value);
    for (const auto& p : pair.dec.params()) snap.push_back(p->value);
    return snap;
}

bool snapshots_equal(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].data != b[i].data) return false;
    return true;
}

}  // namespace

TEST_CASE("train config validation and fingerprint") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    TrainConfig bad = cfg;
    bad.batch = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.lr = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.steps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.n_wrong = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    cfg.seed = 17;
    std::string fp = cfg.fingerprint();
    CHECK(fp.find("face_a") != std::string::npos);
    CHECK(fp.find("seed=17") != std::string::npos);
    cfg.lr = 2e-3;
    CHECK(cfg.fingerprint() != fp);
}

TEST_CASE("embedding cache returns encode() results and deduplicates") {
    auto images = gen_toy_dataset(1, 4);
    EncoderModel enc = init_encoder(EncoderId::face_a, 101);
    EmbeddingCache cache;
    for (const auto& img : images) CHECK(cache.get(enc, img).data == encode(enc, img).data);
    CHECK(cache.size() == 4);
    cache.get(enc, images[0]);
    CHECK(cache.size() == 4);

    auto pre = precompute_embeddings(enc, images);
    REQUIRE(pre.size() == 4);
    for (size_t i = 0; i < 4; ++i) CHECK(pre[i].data == encode(enc, images[i]).data);
}

TEST_CASE("zero learning rate leaves parameters bit-exact") {
    CryptorPair pair = init_cryptor_pair(EncoderId::face_a, 64, 1);
    auto before = param_snapshot(pair);
    Rng rng(5);
    std::vector<Tensor> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(rng.normal_tensor({64}));
    TrainConfig cfg;
    cfg.batch = 4;
    cfg.n_wrong = 2;
    Adam opt(0.0);
    Rng step_rng(6);
    LossBreakdown bd = train_step(pair, batch, cfg, step_rng, opt);
    CHECK(std::isfinite(bd.total));
    CHECK(snapshots_equal(before, param_snapshot(pair)));
}

TEST_CASE("a step on a fixed objective reduces it for most seeds") {
    // fresh pair per trial; the exact objective is rebuilt after the update
    // with the same passwords, so only the parameter change moves it
    int improved = 0;
    const int trials = 20;
    for (uint64_t t = 0; t < trials; ++t) {
        CryptorPair pair = init_cryptor_pair(EncoderId::face_a, 64, 100 + t);
        Rng data_rng(200 + t);
        std::vector<ad::Var> batch, correct;
        std::vector<std::vector<ad::Var>> wrongs;
        for (int i = 0; i < 4; ++i) {
            batch.push_back(ad::constant(data_rng.normal_tensor({64})));
            correct.push_back(ad::constant(data_rng.normal_tensor({64})));
            wrongs.push_back({ad::constant(data_rng.normal_tensor({64})),
                              ad::constant(data_rng.normal_tensor({64}))});
        }
        ad::Var pf_e = ad::constant(data_rng.normal_tensor({64}));
        ad::Var pf_d = ad::constant(data_rng.normal_tensor({64}));
        LossWeights w;
        auto eval = [&] {
            return ad::value0(loss_total(cryptor_fn(pair.enc), cryptor_fn(pair.dec), batch,
                                         correct, wrongs, pf_e, pf_d, w)
                                  .total);
        };
        double before = eval();
        LossTerms terms = loss_total(cryptor_fn(pair.enc), cryptor_fn(pair.dec), batch, correct,
                                     wrongs, pf_e, pf_d, w);
        ad::backward(terms.total);
        std::vector<ad::Var> params = pair.enc.params();
        auto dp = pair.dec.params();
        params.insert(params.end(), dp.begin(), dp.end());
        Adam opt(1e-3);
        opt.step(params);
        if (eval() < before) ++improved;
    }
    CHECK(improved >= 16);  // 80%
}

TEST_CASE("short training run is deterministic and loss trends down") {
    auto images = gen_toy_dataset(10, 40);
    EncoderModel enc = init_encoder(EncoderId::face_a, 101);
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.n_wrong = 2;
    cfg.steps = 60;
    cfg.seed = 3;
    cfg.log_every = 10;

    auto [pair1, log1] = train_cryptor(enc, images, cfg);
    auto [pair2, log2] = train_cryptor(enc, images, cfg);
    CHECK(snapshots_equal(param_snapshot(pair1), param_snapshot(pair2)));
    REQUIRE(log1.steps.size() == log2.steps.size());
    for (size_t i = 0; i < log1.steps.size(); ++i) {
        CHECK(log1.steps[i].step == log2.steps[i].step);
        CHECK(log1.steps[i].loss.total == log2.steps[i].loss.total);
    }

    // averaged early vs late loss: the optimizer should make progress
    double early = (log1.steps[0].loss.total + log1.steps[1].loss.total) / 2.0;
    double late = (log1.steps[log1.steps.size() - 2].loss.total +
                   log1.steps.back().loss.total) /
                  2.0;
    CHECK(late < early);
    CHECK(pair1.config_fingerprint.find("seed=3") != std::string::npos);
}

TEST_CASE("training never touches the frozen encoder") {
    auto images = gen_toy_dataset(11, 20);
    EncoderModel enc = init_encoder(EncoderId::face_b, 202);
    Tensor w_patch = enc.w_patch, w_head = enc.w_head;
    TrainConfig cfg;
    cfg.batch = 4;
    cfg.n_wrong = 1;
    cfg.steps = 10;
    train_cryptor(enc, images, cfg);
    CHECK(enc.w_patch.data == w_patch.data);
    CHECK(enc.w_head.data == w_head.data);
}

TEST_CASE("hidden-state regime trains on sampled token rows") {
    auto images = gen_toy_dataset(12, 6);
    EncoderModel enc = init_encoder(EncoderId::clip_hidden, 303);
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.n_wrong = 1;
    cfg.steps = 6;
    cfg.encoder_id = EncoderId::clip_hidden;
    auto [pair, log] = train_cryptor(enc, images, cfg);
    CHECK(pair.enc.embed_dim == 48);
    CHECK(!log.steps.empty());
    for (const auto& rec : log.steps) CHECK(std::isfinite(rec.loss.total));
}

TEST_CASE("train_cryptor rejects undersized datasets") {
    auto images = gen_toy_dataset(13, 3);
    EncoderModel enc = init_encoder(EncoderId::face_a, 101);
    TrainConfig cfg;
    cfg.batch = 8;
    CHECK_THROWS_AS(train_cryptor(enc, images, cfg), std::invalid_argument);
}
