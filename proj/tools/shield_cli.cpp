// Command-line surface for the embedding-encryption and image-protection
// toolkit. Every command is deterministic given the config file and seeds;
// outputs are byte-identical across reruns.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "shield/attack.hpp"
#include "shield/dataset.hpp"
#include "shield/evalkit.hpp"
#include "shield/gradsuite.hpp"
#include "shield/io.hpp"
#include "shield/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace shield;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  all requested operations and invariant checks passed\n"
    "  1  operation failed at run time\n"
    "  2  bad usage, unknown name, or invalid configuration\n"
    "  3  an invariant or threshold check failed\n"
    "  4  file I/O error (missing, corrupt, or unwritable)\n";

int log_level() {  // 0 quiet, 1 info (default), 2 debug; env-controlled only
    const char* v = std::getenv("SHIELD_LOG");
    if (!v) return 1;
    std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "%s\n", msg.c_str());
}

struct DatasetSpec {
    uint64_t train_seed = 1000;
    uint64_t test_seed = 2000;
    int train_count = 500;
    int test_count = 50;
    int resolution = 64;
};

struct EncoderSpec {
    EncoderId id;
    uint64_t seed;
};

struct ProjectConfig {
    DatasetSpec dataset;
    std::vector<EncoderSpec> encoders;
    TrainConfig train;          // per-encoder fields filled at use time
    AttackConfig attack;
    std::vector<std::string> attack_targets;  // encoder names the attack hits
    uint64_t password_seed = 11;
    std::string out_dir = "out";
};

ProjectConfig default_config() {
    ProjectConfig cfg;
    cfg.encoders = {{EncoderId::face_a, 101},
                    {EncoderId::face_b, 202},
                    {EncoderId::clip_pooled, 303},
                    {EncoderId::clip_hidden, 303}};
    cfg.train.batch = 8;
    cfg.train.n_wrong = 2;
    cfg.train.weights.l_dec = 50.0;
    cfg.train.weights.l_wrg = 10.0;
    cfg.train.seed = 7;
    cfg.attack_targets = {"face_a", "face_b"};
    return cfg;
}

ProjectConfig load_config(const std::string& path) {
    ProjectConfig cfg = default_config();
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw FileError("config file not readable: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        cfg.dataset.train_seed = d.value("train_seed", cfg.dataset.train_seed);
        cfg.dataset.test_seed = d.value("test_seed", cfg.dataset.test_seed);
        cfg.dataset.train_count = d.value("train_count", cfg.dataset.train_count);
        cfg.dataset.test_count = d.value("test_count", cfg.dataset.test_count);
        cfg.dataset.resolution = d.value("resolution", cfg.dataset.resolution);
    }
    if (j.contains("encoders")) {
        cfg.encoders.clear();
        for (const json& e : j["encoders"])
            cfg.encoders.push_back(
                {encoder_from_name(e.at("id").get<std::string>()), e.at("seed").get<uint64_t>()});
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        cfg.train.batch = t.value("batch", cfg.train.batch);
        cfg.train.n_wrong = t.value("n_wrong", cfg.train.n_wrong);
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.steps = t.value("steps", cfg.train.steps);
        cfg.train.seed = t.value("seed", cfg.train.seed);
        if (t.contains("weights")) {
            const json& w = t["weights"];
            cfg.train.weights.l_enc = w.value("enc", cfg.train.weights.l_enc);
            cfg.train.weights.l_dec = w.value("dec", cfg.train.weights.l_dec);
            cfg.train.weights.l_wrg = w.value("wrg", cfg.train.weights.l_wrg);
            cfg.train.weights.l_div = w.value("div", cfg.train.weights.l_div);
            cfg.train.weights.l_div_s = w.value("div_s", cfg.train.weights.l_div_s);
        }
    }
    if (j.contains("attack")) {
        const json& a = j["attack"];
        cfg.attack.epsilon = a.value("epsilon", cfg.attack.epsilon);
        cfg.attack.step_size = a.value("step_size", cfg.attack.step_size);
        cfg.attack.ths = a.value("ths", cfg.attack.ths);
        cfg.attack.max_iters = a.value("max_iters", cfg.attack.max_iters);
        cfg.attack.seed = a.value("seed", cfg.attack.seed);
        if (a.contains("update_rule"))
            cfg.attack.update_rule = update_rule_from_name(a["update_rule"].get<std::string>());
        if (a.contains("distortions")) {
            cfg.attack.distortion_set.clear();
            for (const json& d : a["distortions"])
                cfg.attack.distortion_set.push_back(distortion_from_name(d.get<std::string>()));
        }
        if (a.contains("targets")) {
            cfg.attack_targets.clear();
            for (const json& t : a["targets"]) cfg.attack_targets.push_back(t.get<std::string>());
        }
    }
    cfg.password_seed = j.value("password_seed", cfg.password_seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    return cfg;
}

const EncoderSpec& find_encoder_spec(const ProjectConfig& cfg, const std::string& name) {
    EncoderId id = encoder_from_name(name);
    for (const auto& e : cfg.encoders)
        if (e.id == id) return e;
    throw std::invalid_argument("encoder not listed in config: " + name);
}

EncoderConfig encoder_config(const ProjectConfig& cfg) {
    EncoderConfig ec;
    ec.resolution = cfg.dataset.resolution;
    return ec;
}

std::string cryptor_path(const ProjectConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/checkpoints/cryptor_" + name + ".ck";
}

std::string padded(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

// per-target passwords derive from one base seed so a single flag pins them
Password target_password(uint64_t base_seed, size_t target_index, int dim) {
    return generate_password(base_seed + target_index, dim);
}

struct LoadedTargets {
    std::vector<EncoderModel> encoders;
    std::vector<CryptorPair> pairs;
    std::vector<Password> passwords;
    std::vector<std::string> names;
};

LoadedTargets load_targets(const ProjectConfig& cfg, const std::vector<std::string>& names) {
    LoadedTargets t;
    for (size_t i = 0; i < names.size(); ++i) {
        const EncoderSpec& spec = find_encoder_spec(cfg, names[i]);
        EncoderModel model = init_encoder(spec.id, spec.seed, encoder_config(cfg));
        CryptorPair pair = load_cryptor_pair(cryptor_path(cfg, names[i]));
        if (pair.encoder_id != spec.id)
            throw FormatError("checkpoint " + cryptor_path(cfg, names[i]) +
                              " holds a pair for " + encoder_name(pair.encoder_id));
        t.passwords.push_back(target_password(cfg.password_seed, i, pair.enc.embed_dim));
        t.encoders.push_back(std::move(model));
        t.pairs.push_back(std::move(pair));
        t.names.push_back(names[i]);
    }
    return t;
}

json report_to_json(const std::string& image_name, const LoadedTargets& t,
                    const AttackReport& rep) {
    json j;
    j["image"] = image_name;
    j["iterations"] = rep.iterations;
    j["success"] = rep.success;
    j["psnr"] = rep.psnr;
    j["linf"] = rep.linf;
    json sims = json::object();
    for (size_t i = 0; i < t.names.size(); ++i) sims[t.names[i]] = rep.target_similarity[i];
    j["target_similarity"] = sims;
    return j;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FileError("cannot write " + path);
    for (const auto& l : lines) out << l << "\n";
}

// ---- commands ----

int cmd_gradcheck() {
    auto reports = run_gradient_suite();
    for (const auto& r : reports)
        std::printf("%-34s max_rel=%.3e max_abs=%.3e %s\n", r.op_name.c_str(), r.max_rel_error,
                    r.max_abs_error, r.passed ? "pass" : "FAIL");
    if (!all_passed(reports)) {
        std::printf("gradient suite: FAIL\n");
        return 3;
    }
    std::printf("gradient suite: all %zu cases pass\n", reports.size());
    return 0;
}

int cmd_gen_data(const ProjectConfig& cfg) {
    auto dump = [&](const std::string& split, uint64_t seed, int count) {
        fs::create_directories(cfg.out_dir + "/data/" + split);
        auto images = gen_toy_dataset(seed, count, cfg.dataset.resolution);
        for (int i = 0; i < count; ++i)
            save_png(cfg.out_dir + "/data/" + split + "/img" + padded(i) + ".png",
                     images[static_cast<size_t>(i)]);
        info("wrote " + std::to_string(count) + " " + split + " images");
    };
    dump("train", cfg.dataset.train_seed, cfg.dataset.train_count);
    dump("test", cfg.dataset.test_seed, cfg.dataset.test_count);
    return 0;
}

int cmd_train(const ProjectConfig& cfg, const std::string& only_encoder) {
    auto train_images =
        gen_toy_dataset(cfg.dataset.train_seed, cfg.dataset.train_count, cfg.dataset.resolution);
    fs::create_directories(cfg.out_dir + "/checkpoints");
    fs::create_directories(cfg.out_dir + "/logs");
    for (const auto& spec : cfg.encoders) {
        std::string name = encoder_name(spec.id);
        if (!only_encoder.empty() && name != only_encoder) continue;
        EncoderModel model = init_encoder(spec.id, spec.seed, encoder_config(cfg));
        TrainConfig tc = cfg.train;
        tc.encoder_id = spec.id;
        if (spec.id == EncoderId::clip_hidden) tc.batch = std::min(tc.batch, 8);
        info("training cryptor pair for " + name + " (" + std::to_string(tc.steps) + " steps)");
        auto [pair, log] = train_cryptor(model, train_images, tc);
        save_encoder(cfg.out_dir + "/checkpoints/encoder_" + name + ".ck", model);
        save_cryptor_pair(cryptor_path(cfg, name), pair);
        std::vector<std::string> lines;
        for (const auto& rec : log.steps) {
            json j{{"step", rec.step},
                   {"total", rec.loss.total},
                   {"enc", rec.loss.l_enc},
                   {"dec", rec.loss.l_dec},
                   {"wrg", rec.loss.l_wrg},
                   {"div", rec.loss.l_div},
                   {"div_s", rec.loss.l_div_s}};
            lines.push_back(j.dump());
        }
        write_lines(cfg.out_dir + "/logs/train_" + name + ".jsonl", lines);
    }
    return 0;
}

int cmd_protect(const ProjectConfig& cfg) {
    LoadedTargets t = load_targets(cfg, cfg.attack_targets);
    auto images =
        gen_toy_dataset(cfg.dataset.test_seed, cfg.dataset.test_count, cfg.dataset.resolution);
    fs::create_directories(cfg.out_dir + "/protected");
    std::vector<std::string> lines;
    int failures = 0;
    for (size_t k = 0; k < images.size(); ++k) {
        auto targets = make_targets(images[k], t.encoders, t.pairs, t.passwords);
        AttackConfig ac = cfg.attack;
        ac.seed = cfg.attack.seed + k;  // one independent stream per image
        auto [protected_img, rep] = protect_image(images[k], t.encoders, targets, ac);
        if (rep.linf > ac.epsilon + 1e-9)
            throw std::runtime_error("protect: perturbation budget violated on image " +
                                     std::to_string(k));
        std::string img_name = "img" + padded(static_cast<int>(k));
        save_png(cfg.out_dir + "/protected/" + img_name + ".png", protected_img);
        lines.push_back(report_to_json(img_name, t, rep).dump());
        if (!rep.success) ++failures;
        if (log_level() >= 2)
            info(img_name + ": iters=" + std::to_string(rep.iterations) +
                 " success=" + std::to_string(rep.success));
    }
    write_lines(cfg.out_dir + "/protected/reports.jsonl", lines);
    info("protected " + std::to_string(images.size()) + " images, " + std::to_string(failures) +
         " below threshold");
    return 0;
}

Tensor embedding_of_png(const ProjectConfig& cfg, const std::string& encoder, const std::string& path) {
    const EncoderSpec& spec = find_encoder_spec(cfg, encoder);
    EncoderModel model = init_encoder(spec.id, spec.seed, encoder_config(cfg));
    return encode(model, load_png(path));
}

int cmd_reveal(const ProjectConfig& cfg, const std::string& encoder, const std::string& image_path,
               const std::string& original_path, uint64_t password_seed) {
    CryptorPair pair = load_cryptor_pair(cryptor_path(cfg, encoder));
    Password pw = generate_password(password_seed, pair.enc.embed_dim);
    Tensor protected_emb = embedding_of_png(cfg, encoder, image_path);
    Tensor decrypted = decrypt(pair, protected_emb, pw);
    if (!original_path.empty()) {
        Tensor original_emb = embedding_of_png(cfg, encoder, original_path);
        double sim = embedding_similarity_raw(decrypted, original_emb);
        std::printf("cos_sim_raw(decrypted, original) = %.6f\n", sim);
        return 0;
    }
    json j{{"encoder", encoder}, {"dim", decrypted.numel()}, {"embedding", decrypted.data}};
    std::printf("%s\n", j.dump().c_str());
    return 0;
}

int cmd_eval(const ProjectConfig& cfg) {
    auto test_images =
        gen_toy_dataset(cfg.dataset.test_seed, cfg.dataset.test_count, cfg.dataset.resolution);
    std::vector<std::string> lines;
    int rc = 0;

    // cryptor metrics per trained encoder, held-out embeddings only
    for (const auto& spec : cfg.encoders) {
        std::string name = encoder_name(spec.id);
        std::string path = cryptor_path(cfg, name);
        if (!fs::exists(path)) continue;
        EncoderModel model = init_encoder(spec.id, spec.seed, encoder_config(cfg));
        CryptorPair pair = load_cryptor_pair(path);
        std::vector<Tensor> embs;
        if (model.is_matrix()) {
            for (const auto& img : test_images)
                embs.push_back(sample_rows(encode(model, img), 8, cfg.train.seed + embs.size()));
        } else {
            embs = precompute_embeddings(model, test_images);
        }
        CryptorEffect m = cryptor_effect_metrics(pair, embs, 8, cfg.train.seed);
        double sp = diversity_same_pwd(pair, embs,
                                       generate_password(cfg.password_seed + 100, pair.enc.embed_dim));
        double wdr = wrong_dec_rate(pair, embs, 100, 0.8, cfg.train.seed + 1);
        int n = static_cast<int>(embs.size());
        for (auto& [metric, value] :
             std::initializer_list<std::pair<const char*, double>>{
                 {"encrypt_effect", m.encrypt_effect},
                 {"decrypt_effect", m.decrypt_effect},
                 {"encrypt_diversity", m.encrypt_diversity},
                 {"decrypt_diversity", m.decrypt_diversity},
                 {"diversity_same_pwd", sp},
                 {"wrong_dec_rate", wdr}})
            lines.push_back(to_json_line(EvalRecord{metric, name, "", value, n}));
    }

    // re-evaluate protected PNGs against the stored attack reports
    std::string rep_path = cfg.out_dir + "/protected/reports.jsonl";
    if (fs::exists(rep_path)) {
        LoadedTargets t = load_targets(cfg, cfg.attack_targets);
        std::ifstream in(rep_path);
        std::string line;
        int idx = 0;
        double max_drift = 0;
        std::vector<double> proto_sims(t.names.size(), 0);
        int counted = 0;
        while (std::getline(in, line)) {
            json j = json::parse(line);
            std::string img_name = j.at("image").get<std::string>();
            Tensor prot = load_png(cfg.out_dir + "/protected/" + img_name + ".png");
            Tensor orig = test_images.at(static_cast<size_t>(idx));
            auto targets = make_targets(orig, t.encoders, t.pairs, t.passwords);
            for (size_t i = 0; i < t.names.size(); ++i) {
                double stored = j.at("target_similarity").at(t.names[i]).get<double>();
                double fresh =
                    embedding_similarity_clamped(encode(t.encoders[i], prot), targets[i]);
                max_drift = std::max(max_drift, std::fabs(stored - fresh));
                proto_sims[i] +=
                    embedding_similarity_raw(encode(t.encoders[i], prot),
                                             encode(t.encoders[i], orig));
            }
            ++idx;
            ++counted;
        }
        if (counted > 0) {
            for (size_t i = 0; i < t.names.size(); ++i)
                lines.push_back(to_json_line(EvalRecord{"protected_vs_original_raw", t.names[i],
                                                        "", proto_sims[i] / counted, counted}));
            lines.push_back(to_json_line(
                EvalRecord{"report_similarity_drift_after_png", "all", "", max_drift, counted}));
            // 8-bit quantization is the only loss between attack and PNG
            if (max_drift > 0.05) {
                info("invariant failed: PNG round trip moved similarity by " +
                     std::to_string(max_drift));
                rc = 3;
            }
        }
    }
    write_lines(cfg.out_dir + "/eval.jsonl", lines);
    info("wrote " + cfg.out_dir + "/eval.jsonl");
    return rc;
}

int cmd_robustness(const ProjectConfig& cfg) {
    std::string rep_path = cfg.out_dir + "/protected/reports.jsonl";
    if (!fs::exists(rep_path)) throw FileError("run protect first: missing " + rep_path);
    auto test_images =
        gen_toy_dataset(cfg.dataset.test_seed, cfg.dataset.test_count, cfg.dataset.resolution);
    LoadedTargets t = load_targets(cfg, cfg.attack_targets);
    std::vector<Tensor> originals, protecteds;
    std::ifstream in(rep_path);
    std::string line;
    int idx = 0;
    while (std::getline(in, line)) {
        json j = json::parse(line);
        protecteds.push_back(
            load_png(cfg.out_dir + "/protected/" + j.at("image").get<std::string>() + ".png"));
        originals.push_back(test_images.at(static_cast<size_t>(idx++)));
    }
    std::vector<std::string> lines;
    for (size_t i = 0; i < t.names.size(); ++i) {
        double clean = protection_similarity(originals, protecteds, t.encoders[i]);
        lines.push_back(to_json_line(EvalRecord{"protection_similarity", t.names[i], "clean",
                                                clean, static_cast<int>(originals.size())}));
        for (EvalDistortion d : {EvalDistortion::noise, EvalDistortion::blur, EvalDistortion::jpeg}) {
            double v = protection_similarity(originals, protecteds, t.encoders[i], d,
                                             cfg.attack.seed);
            lines.push_back(to_json_line(EvalRecord{"protection_similarity", t.names[i],
                                                    eval_distortion_name(d), v,
                                                    static_cast<int>(originals.size())}));
        }
    }
    write_lines(cfg.out_dir + "/robustness.jsonl", lines);
    info("wrote " + cfg.out_dir + "/robustness.jsonl");
    return 0;
}

int cmd_ablate_mt(const ProjectConfig& cfg, const std::string& single_encoder, int image_count) {
    LoadedTargets t = load_targets(cfg, cfg.attack_targets);
    size_t single_index = 0;
    if (!single_encoder.empty()) {
        bool found = false;
        for (size_t i = 0; i < t.names.size(); ++i)
            if (t.names[i] == single_encoder) {
                single_index = i;
                found = true;
            }
        if (!found)
            throw std::invalid_argument("--encoder must name one of the attack targets");
    }
    auto images = gen_toy_dataset(cfg.dataset.test_seed, image_count, cfg.dataset.resolution);
    MtAblation ab = mt_ablation(images, t.encoders, t.pairs, t.passwords, single_index, cfg.attack);
    std::vector<std::string> lines = {
        to_json_line(EvalRecord{"single_target_specific", t.names[single_index], "", ab.specific_single,
                                image_count}),
        to_json_line(EvalRecord{"single_target_unseen", t.names[single_index], "", ab.unseen_single,
                                image_count}),
        to_json_line(EvalRecord{"multi_target_specific", "all", "", ab.specific_multi, image_count}),
        to_json_line(EvalRecord{"multi_target_unseen", "all", "", ab.unseen_multi, image_count}),
    };
    write_lines(cfg.out_dir + "/ablate_mt.jsonl", lines);
    info("wrote " + cfg.out_dir + "/ablate_mt.jsonl");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Password-conditioned embedding encryption and multi-target image protection"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    std::string config_path, out_override, encoder, image_path, original_path, update_rule;
    uint64_t seed = 0, password_seed = 0;
    bool seed_set = false, pwseed_set = false;
    double epsilon = -1, ths = -1;
    bool no_distortion = false;
    int mt_images = 20;

    app.add_option("--config", config_path, "JSON project configuration file");
    app.add_option("--out", out_override, "output directory (overrides config)");
    app.add_option("--seed", seed, "seed override for the subcommand's main RNG")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--password-seed", password_seed, "base seed for target passwords")
        ->each([&](const std::string&) { pwseed_set = true; });
    app.add_option("--encoder", encoder, "restrict to one encoder by name");
    app.add_option("--epsilon", epsilon, "perturbation budget override");
    app.add_option("--ths", ths, "attack stop threshold override");
    app.add_flag("--no-distortion", no_distortion, "disable distortion augmentation (identity only)");
    app.add_option("--update-rule", update_rule, "attack update rule: sign|raw")
        ->check(CLI::IsMember({"sign", "raw"}));

    CLI::App* c_gradcheck = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
    CLI::App* c_gendata = app.add_subcommand("gen-data", "write the synthetic train/test corpus as PNG");
    CLI::App* c_train = app.add_subcommand("train", "train cryptor pairs for the configured encoders");
    CLI::App* c_protect = app.add_subcommand("protect", "run the multi-target attack on the test images");
    CLI::App* c_reveal = app.add_subcommand("reveal", "decrypt a protected image's embedding");
    c_reveal->add_option("--image", image_path, "protected image (PNG)")->required();
    c_reveal->add_option("--original", original_path,
                         "original image; when given, prints the recovery similarity");
    CLI::App* c_eval = app.add_subcommand("eval", "cryptor metrics and protected-image re-evaluation");
    CLI::App* c_robust = app.add_subcommand("robustness", "similarity under noise/blur/JPEG");
    CLI::App* c_ablate = app.add_subcommand("ablate-mt", "single- vs multi-target comparison");
    c_ablate->add_option("--images", mt_images, "number of test images for the comparison");

    // global options may be given after the subcommand name
    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ProjectConfig cfg = load_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (pwseed_set) cfg.password_seed = password_seed;
        if (epsilon >= 0) cfg.attack.epsilon = epsilon;
        if (ths > 0) cfg.attack.ths = ths;
        if (no_distortion) cfg.attack.distortion_set = {Distortion::identity};
        if (!update_rule.empty()) cfg.attack.update_rule = update_rule_from_name(update_rule);
        if (seed_set) {
            cfg.train.seed = seed;
            cfg.attack.seed = seed;
        }

        if (c_gradcheck->parsed()) return cmd_gradcheck();
        if (c_gendata->parsed()) return cmd_gen_data(cfg);
        if (c_train->parsed()) return cmd_train(cfg, encoder);
        if (c_protect->parsed()) return cmd_protect(cfg);
        if (c_reveal->parsed()) {
            if (encoder.empty())
                throw std::invalid_argument("reveal requires --encoder");
            if (!pwseed_set)
                throw std::invalid_argument("reveal requires --password-seed");
            return cmd_reveal(cfg, encoder, image_path, original_path, password_seed);
        }
        if (c_eval->parsed()) return cmd_eval(cfg);
        if (c_robust->parsed()) return cmd_robustness(cfg);
        if (c_ablate->parsed()) return cmd_ablate_mt(cfg, encoder, mt_images);
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid argument: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
