#include <cstring>
#include <fstream>

#include "json.hpp"
#include "shield/io.hpp"

namespace shield {

namespace {

constexpr char kMagic[8] = {'S', 'H', 'L', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw TruncationError("checkpoint: truncated while reading " + what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

std::string hex_encode(const std::vector<double>& v) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(v.size() * 16);
    for (double d : v) {
        uint64_t bits;
        std::memcpy(&bits, &d, 8);
        for (int i = 0; i < 16; ++i) out.push_back(digits[(bits >> (60 - 4 * i)) & 0xf]);
    }
    return out;
}

std::vector<double> hex_decode(const std::string& s) {
    if (s.size() % 16 != 0) throw FormatError("password file: bad hex payload length");
    std::vector<double> out(s.size() / 16);
    for (size_t k = 0; k < out.size(); ++k) {
        uint64_t bits = 0;
        for (int i = 0; i < 16; ++i) {
            char c = s[k * 16 + static_cast<size_t>(i)];
            int d = c >= '0' && c <= '9' ? c - '0'
                    : c >= 'a' && c <= 'f' ? c - 'a' + 10
                    : c >= 'A' && c <= 'F' ? c - 'A' + 10
                                           : -1;
            if (d < 0) throw FormatError("password file: non-hex character in payload");
            bits = (bits << 4) | static_cast<uint64_t>(d);
        }
        std::memcpy(&out[k], &bits, 8);
    }
    return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileError("save_checkpoint: cannot open " + path);
    nlohmann::json header;
    header["kind"] = ck.kind;
    header["meta"] = ck.meta;
    auto& tl = header["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : ck.tensors) tl.push_back({{"name", name}, {"shape", t.shape}});
    std::string hs = header.dump();

    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u32(os, static_cast<uint32_t>(hs.size()));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : ck.tensors)
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!os) throw FileError("save_checkpoint: write failure for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("load_checkpoint: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8)) throw TruncationError("checkpoint: file shorter than magic: " + path);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic in " + path);
    uint32_t version = read_u32(is, "version");
    if (version != kVersion)
        throw VersionError("checkpoint: unsupported version " + std::to_string(version) +
                           " (expected " + std::to_string(kVersion) + ") in " + path);
    uint32_t hlen = read_u32(is, "header length");
    std::string hs(hlen, '\0');
    if (!is.read(hs.data(), hlen)) throw TruncationError("checkpoint: truncated header: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed header json: ") + e.what());
    }

    Checkpoint ck;
    ck.kind = header.at("kind").get<std::string>();
    ck.meta = header.at("meta").get<std::string>();
    for (const auto& entry : header.at("tensors")) {
        std::string name = entry.at("name").get<std::string>();
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        Tensor t = Tensor::zeros(shape);
        if (!is.read(reinterpret_cast<char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * sizeof(double))))
            throw TruncationError("checkpoint: truncated payload for tensor '" + name + "' in " +
                                  path);
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    // reject trailing garbage so corruption cannot pass silently
    char extra;
    if (is.read(&extra, 1)) throw FormatError("checkpoint: trailing bytes in " + path);
    return ck;
}

namespace {

const char* kNetTensorNames[] = {"sa_wq", "sa_wk", "sa_wv", "sa_wo", "ca_wq", "ca_wk", "ca_wv",
                                 "ca_wo", "ln1_g", "ln1_b", "ln2_g", "ln2_b", "fc_w", "fc_b"};

void append_net(Checkpoint& ck, const std::string& prefix, const CryptorNet& net) {
    auto params = net.params();
    for (size_t i = 0; i < params.size(); ++i)
        ck.tensors.emplace_back(prefix + kNetTensorNames[i], params[i]->value);
}

void load_net(const Checkpoint& ck, size_t offset, CryptorNet& net, const std::string& prefix) {
    auto params = net.params();
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, t] = ck.tensors.at(offset + i);
        if (name != prefix + kNetTensorNames[i])
            throw FormatError("checkpoint: unexpected tensor '" + name + "', wanted '" + prefix +
                              kNetTensorNames[i] + "'");
        if (t.shape != params[i]->value.shape)
            throw FormatError("checkpoint: shape mismatch for tensor '" + name + "'");
        params[i]->value = t;
    }
}

}  // namespace

void save_cryptor_pair(const std::string& path, const CryptorPair& pair) {
    Checkpoint ck;
    ck.kind = "cryptor_pair";
    nlohmann::json meta;
    meta["encoder_id"] = encoder_name(pair.encoder_id);
    meta["embed_dim"] = pair.enc.embed_dim;
    meta["tokens"] = pair.enc.tokens;
    meta["fingerprint"] = pair.config_fingerprint;
    ck.meta = meta.dump();
    append_net(ck, "enc.", pair.enc);
    append_net(ck, "dec.", pair.dec);
    save_checkpoint(path, ck);
}

CryptorPair load_cryptor_pair(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "cryptor_pair")
        throw FormatError("load_cryptor_pair: checkpoint kind is '" + ck.kind + "'");
    nlohmann::json meta = nlohmann::json::parse(ck.meta);
    CryptorPair pair = init_cryptor_pair(encoder_from_name(meta.at("encoder_id")),
                                         meta.at("embed_dim"), 0, meta.at("tokens"));
    pair.config_fingerprint = meta.at("fingerprint");
    load_net(ck, 0, pair.enc, "enc.");
    load_net(ck, pair.enc.params().size(), pair.dec, "dec.");
    return pair;
}

void save_encoder(const std::string& path, const EncoderModel& model) {
    Checkpoint ck;
    ck.kind = "encoder";
    nlohmann::json meta;
    meta["encoder_id"] = encoder_name(model.id);
    meta["seed"] = model.seed;
    meta["resolution"] = model.cfg.resolution;
    ck.meta = meta.dump();
    ck.tensors.emplace_back("w_patch", model.w_patch);
    if (model.w_head.numel() > 0 && !model.w_head.shape.empty())
        ck.tensors.emplace_back("w_head", model.w_head);
    save_checkpoint(path, ck);
}

EncoderModel load_encoder(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "encoder") throw FormatError("load_encoder: checkpoint kind is '" + ck.kind + "'");
    nlohmann::json meta = nlohmann::json::parse(ck.meta);
    EncoderConfig cfg;
    cfg.resolution = meta.at("resolution");
    EncoderModel model = init_encoder(encoder_from_name(meta.at("encoder_id")),
                                      meta.at("seed"), cfg);
    for (const auto& [name, t] : ck.tensors) {
        if (name == "w_patch") model.w_patch = t;
        else if (name == "w_head") model.w_head = t;
        else throw FormatError("load_encoder: unexpected tensor '" + name + "'");
    }
    return model;
}

void save_password(const std::string& path, const Password& p) {
    std::ofstream os(path);
    if (!os) throw FileError("save_password: cannot open " + path);
    nlohmann::json j;
    j["seed"] = p.seed;
    j["dim"] = p.dim;
    j["vector"] = hex_encode(p.vec.data);
    os << j.dump(2) << "\n";
    if (!os) throw FileError("save_password: write failure for " + path);
}

Password load_password(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FileError("load_password: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("password file: malformed json: ") + e.what());
    }
    Password p;
    p.seed = j.at("seed").get<uint64_t>();
    p.dim = j.at("dim").get<int>();
    std::vector<double> vec = hex_decode(j.at("vector").get<std::string>());
    if (static_cast<int>(vec.size()) != p.dim)
        throw FormatError("password file: vector length does not match dim");
    p.vec = Tensor({p.dim}, std::move(vec));
    return p;
}

}  // namespace shield
