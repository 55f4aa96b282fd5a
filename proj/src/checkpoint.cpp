#include "crocs/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crocs {

namespace {

constexpr char kMagic[6] = {'C', 'R', 'O', 'C', 'S', '1'};
constexpr char kProtoTag[5] = {'P', 'R', 'O', 'T', 'O'};

void put_u64(std::ofstream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

void put_f64(std::ofstream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_vec(std::ofstream& out, const std::vector<double>& values) {
    for (double v : values) put_f64(out, v);
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

double get_f64(std::ifstream& in) { return std::bit_cast<double>(get_u64(in)); }

void get_vec(std::ifstream& in, std::vector<double>& values) {
    for (double& v : values) v = get_f64(in);
}

[[noreturn]] void corrupt(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const PrototypeBank& bank) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");

    out.write(kMagic, sizeof(kMagic));
    put_u64(out, static_cast<std::uint64_t>(encoder.config.input_len));
    put_u64(out, static_cast<std::uint64_t>(encoder.config.embed_dim));
    put_u64(out, static_cast<std::uint64_t>(encoder.config.block_count));
    put_f64(out, encoder.config.dropout_rate);

    for (const ConvBlock& block : encoder.blocks) {
        put_u64(out, static_cast<std::uint64_t>(block.in_channels));
        put_u64(out, static_cast<std::uint64_t>(block.out_channels));
        put_u64(out, static_cast<std::uint64_t>(kConvKernel));
        put_vec(out, block.weight.data);
        put_vec(out, block.bias);
        put_vec(out, block.gamma);
        put_vec(out, block.beta);
        put_vec(out, block.running_mean);
        put_vec(out, block.running_var);
    }
    put_u64(out, static_cast<std::uint64_t>(encoder.flatten_dim()));
    put_vec(out, encoder.head_weight.data);
    put_vec(out, encoder.head_bias);

    out.write(kProtoTag, sizeof(kProtoTag));
    put_u64(out, static_cast<std::uint64_t>(bank.space.class_count));
    put_u64(out, static_cast<std::uint64_t>(bank.space.sex_count));
    put_u64(out, static_cast<std::uint64_t>(bank.space.age_bin_count));
    put_u64(out, static_cast<std::uint64_t>(bank.count()));
    put_u64(out, static_cast<std::uint64_t>(bank.embed_dim()));
    put_f64(out, bank.beta);
    for (const AttributeSet& a : bank.combos) {
        put_u64(out, static_cast<std::uint64_t>(a.class_id));
        put_u64(out, static_cast<std::uint64_t>(a.sex_id));
        put_u64(out, static_cast<std::uint64_t>(a.age_bin));
    }
    put_vec(out, bank.matrix.data);

    if (!out) throw std::runtime_error("write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        corrupt(path, "not a CROCS1 checkpoint");
    }

    Checkpoint ckpt;
    EncoderConfig config;
    config.input_len = static_cast<int>(get_u64(in));
    config.embed_dim = static_cast<int>(get_u64(in));
    config.block_count = static_cast<int>(get_u64(in));
    config.dropout_rate = get_f64(in);
    if (!in || config.block_count < 1 || config.block_count > kMaxBlocks) {
        corrupt(path, "bad header");
    }

    ckpt.encoder.config = config;
    for (int b = 0; b < config.block_count; ++b) {
        ConvBlock block;
        block.in_channels = static_cast<int>(get_u64(in));
        block.out_channels = static_cast<int>(get_u64(in));
        const int kernel = static_cast<int>(get_u64(in));
        if (!in || kernel != kConvKernel || block.out_channels != kBlockChannels[b]) {
            corrupt(path, "bad block header");
        }
        block.weight = Matrix(block.out_channels, block.in_channels * kConvKernel);
        block.bias.resize(block.out_channels);
        block.gamma.resize(block.out_channels);
        block.beta.resize(block.out_channels);
        block.running_mean.resize(block.out_channels);
        block.running_var.resize(block.out_channels);
        get_vec(in, block.weight.data);
        get_vec(in, block.bias);
        get_vec(in, block.gamma);
        get_vec(in, block.beta);
        get_vec(in, block.running_mean);
        get_vec(in, block.running_var);
        ckpt.encoder.blocks.push_back(std::move(block));
    }

    const int flatten = static_cast<int>(get_u64(in));
    if (!in || flatten != encoder_flatten_dim(config.input_len, config.block_count)) {
        corrupt(path, "flatten dimension mismatch");
    }
    ckpt.encoder.head_weight = Matrix(config.embed_dim, flatten);
    ckpt.encoder.head_bias.resize(config.embed_dim);
    get_vec(in, ckpt.encoder.head_weight.data);
    get_vec(in, ckpt.encoder.head_bias);
    ckpt.encoder.mode = Mode::kEval;

    char tag[sizeof(kProtoTag)];
    in.read(tag, sizeof(tag));
    if (!in || std::memcmp(tag, kProtoTag, sizeof(kProtoTag)) != 0) {
        corrupt(path, "missing PROTO section");
    }
    ckpt.bank.space.class_count = static_cast<int>(get_u64(in));
    ckpt.bank.space.sex_count = static_cast<int>(get_u64(in));
    ckpt.bank.space.age_bin_count = static_cast<int>(get_u64(in));
    const int count = static_cast<int>(get_u64(in));
    const int embed = static_cast<int>(get_u64(in));
    ckpt.bank.beta = get_f64(in);
    if (!in || count != ckpt.bank.space.combo_count() || embed != config.embed_dim) {
        corrupt(path, "bad PROTO header");
    }
    for (int j = 0; j < count; ++j) {
        AttributeSet a;
        a.class_id = static_cast<int>(get_u64(in));
        a.sex_id = static_cast<int>(get_u64(in));
        a.age_bin = static_cast<int>(get_u64(in));
        ckpt.bank.combos.push_back(a);
    }
    ckpt.bank.matrix = Matrix(count, embed);
    get_vec(in, ckpt.bank.matrix.data);
    if (!in) corrupt(path, "truncated file");
    return ckpt;
}

}  // namespace crocs
