#include "sentipipe/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sentipipe {

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<uint32_t>(v)); }

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("truncated model file");
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(buf[pos++]);
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_tensor(std::string& buf, const Mat<float>& m) {
    put_u32(buf, static_cast<uint32_t>(m.rows));
    put_u32(buf, static_cast<uint32_t>(m.cols));
    for (float v : m.data) put_f32(buf, v);
}

Mat<float> read_tensor(Reader& r) {
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    if (rows > (1u << 28) || cols > (1u << 28))
        throw std::runtime_error("model file tensor shape implausibly large");
    Mat<float> m(static_cast<int>(rows), static_cast<int>(cols));
    for (auto& v : m.data) v = r.f32();
    return m;
}

uint64_t checksum_bytes(const std::string& buf) {
    return fnv1a64(std::string_view(buf.data(), buf.size()));
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    const ModelConfig& cfg = model.config;
    check(model.vocab.size() == cfg.vocab_size, "save_model: vocabulary size != config");

    std::string buf;
    buf.append(kModelMagic, 4);
    buf.push_back(static_cast<char>(kModelFormatVersion));
    put_u32(buf, static_cast<uint32_t>(cfg.vocab_size));
    put_u32(buf, static_cast<uint32_t>(cfg.embed_dim));
    put_u32(buf, static_cast<uint32_t>(cfg.lstm_hidden_per_dir));
    put_u32(buf, static_cast<uint32_t>(cfg.num_classes));
    put_u32(buf, static_cast<uint32_t>(cfg.max_len));
    put_f32(buf, cfg.embed_dropout_p);
    put_f32(buf, cfg.final_dropout_p);

    put_u32(buf, static_cast<uint32_t>(model.vocab.tokens.size()));
    for (const auto& tok : model.vocab.tokens) {
        put_u32(buf, static_cast<uint32_t>(tok.size()));
        buf.append(tok);
    }

    for (ParamGroup group : kAllGroups) {
        std::string group_buf;
        uint32_t count = 0;
        for_each_tensor(model.params, [&](ParamGroup g, const Mat<float>& m) {
            if (g != group) return;
            put_tensor(group_buf, m);
            ++count;
        });
        put_u32(buf, count);
        buf.append(group_buf);
    }

    put_u64(buf, checksum_bytes(buf));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 13 || std::memcmp(buf.data(), kModelMagic, 4) != 0)
        throw std::runtime_error(path + ": not a model file");

    Reader r{buf, 4};
    const uint8_t version = r.u8();
    if (version != kModelFormatVersion)
        throw std::runtime_error(path + ": unsupported model file version: expected " +
                                 std::to_string(int(kModelFormatVersion)) + ", found " +
                                 std::to_string(int(version)));

    const uint64_t stored = Reader{buf, buf.size() - 8}.u64();
    const uint64_t actual = fnv1a64(std::string_view(buf.data(), buf.size() - 8));
    if (stored != actual) throw std::runtime_error(path + ": model file checksum mismatch");

    Model model;
    ModelConfig& cfg = model.config;
    cfg.vocab_size = static_cast<int>(r.u32());
    cfg.embed_dim = static_cast<int>(r.u32());
    cfg.lstm_hidden_per_dir = static_cast<int>(r.u32());
    cfg.num_classes = static_cast<int>(r.u32());
    cfg.max_len = static_cast<int>(r.u32());
    cfg.embed_dropout_p = r.f32();
    cfg.final_dropout_p = r.f32();
    cfg.validate();

    const uint32_t vocab_count = r.u32();
    if (static_cast<int>(vocab_count) != cfg.vocab_size)
        throw std::runtime_error(path + ": vocabulary count does not match config");
    model.vocab.tokens.reserve(vocab_count);
    for (uint32_t i = 0; i < vocab_count; ++i) {
        const uint32_t n = r.u32();
        model.vocab.tokens.push_back(r.bytes(n));
    }
    for (int32_t id = 0; id < static_cast<int32_t>(model.vocab.tokens.size()); ++id)
        model.vocab.index.emplace(model.vocab.tokens[static_cast<size_t>(id)], id);

    for (ParamGroup group : kAllGroups) {
        const uint32_t count = r.u32();
        std::vector<Mat<float>> tensors;
        tensors.reserve(count);
        for (uint32_t i = 0; i < count; ++i) tensors.push_back(read_tensor(r));
        size_t k = 0;
        for_each_tensor(model.params, [&](ParamGroup g, Mat<float>& m) {
            if (g != group) return;
            if (k >= tensors.size()) throw std::runtime_error(path + ": missing tensors in group");
            m = std::move(tensors[k++]);
        });
        if (k != tensors.size()) throw std::runtime_error(path + ": extra tensors in group");
    }
    if (r.pos != buf.size() - 8) throw std::runtime_error(path + ": trailing bytes in model file");
    return model;
}

}  // namespace sentipipe
