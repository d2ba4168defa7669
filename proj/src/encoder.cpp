#include "ssmp/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ssmp {

namespace {

template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
    for (size_t l = 0; l < p.layers.size(); ++l) {
        auto& lp = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        fn(pre + "attn_gain", lp.attn_gain);
        fn(pre + "wq", lp.wq);
        fn(pre + "wk", lp.wk);
        fn(pre + "wv", lp.wv);
        fn(pre + "wo", lp.wo);
        fn(pre + "ffn_gain", lp.ffn_gain);
        fn(pre + "w_up", lp.w_up);
        fn(pre + "w_gate", lp.w_gate);
        fn(pre + "w_out", lp.w_out);
    }
    fn("mask_placeholder", p.mask_placeholder);
}

}  // namespace

void ModelParams::for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn) {
    visit_tensors(*this, fn);
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
    visit_tensors(*this, fn);
}

ModelParams init_params(const EncoderConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const int D = cfg.dim, F = cfg.ffn_width;
    auto weight = [&](int rows, int cols) {
        return Matrix::randn(rows, cols, cfg.init_scale / std::sqrt(static_cast<double>(rows)),
                             rng);
    };
    ModelParams p;
    p.cfg = cfg;
    p.layers.resize(cfg.layers);
    for (auto& lp : p.layers) {
        lp.attn_gain = Matrix::full(1, D, 1.0);
        lp.wq = weight(D, D);
        lp.wk = weight(D, D);
        lp.wv = weight(D, D);
        lp.wo = weight(D, D);
        lp.ffn_gain = Matrix::full(1, D, 1.0);
        lp.w_up = weight(D, F);
        lp.w_gate = weight(D, F);
        lp.w_out = weight(F, D);
    }
    p.mask_placeholder = weight(1, D);
    return p;
}

Matrix rope_rotate(const Matrix& x, const std::vector<int>& positions, double base) {
    Tape tape;
    return tape.value(tape.rope(tape.leaf(x), positions, base));
}

ParamLeaves register_params(Tape& tape, const ModelParams& params) {
    ParamLeaves leaves;
    params.for_each_tensor([&](const std::string& name, const Matrix& m) {
        const Tape::Ref r = tape.leaf(m);
        if (name == "mask_placeholder") leaves.mask_placeholder = r;
        leaves.refs.push_back(r);
    });
    return leaves;
}

Tape::Ref encode_on_tape(Tape& tape, const ParamLeaves& leaves, const EncoderConfig& cfg,
                         Tape::Ref input, const std::vector<int>& positions) {
    require(tape.value(input).cols == cfg.dim, "encode: input width mismatch");
    require(static_cast<int>(positions.size()) == tape.value(input).rows,
            "encode: positions size mismatch");
    const int H = cfg.heads;
    const int dh = cfg.dim / H;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // leaves.refs layout matches for_each_tensor declaration order.
    size_t idx = 0;
    Tape::Ref h = input;
    for (int l = 0; l < cfg.layers; ++l) {
        const Tape::Ref attn_gain = leaves.refs[idx++];
        const Tape::Ref wq = leaves.refs[idx++];
        const Tape::Ref wk = leaves.refs[idx++];
        const Tape::Ref wv = leaves.refs[idx++];
        const Tape::Ref wo = leaves.refs[idx++];
        const Tape::Ref ffn_gain = leaves.refs[idx++];
        const Tape::Ref w_up = leaves.refs[idx++];
        const Tape::Ref w_gate = leaves.refs[idx++];
        const Tape::Ref w_out = leaves.refs[idx++];

        const Tape::Ref n1 = tape.rms_norm(h, attn_gain, cfg.rmsnorm_eps);
        const Tape::Ref q = tape.matmul(n1, wq);
        const Tape::Ref k = tape.matmul(n1, wk);
        const Tape::Ref v = tape.matmul(n1, wv);
        std::vector<Tape::Ref> head_outs;
        for (int head = 0; head < H; ++head) {
            const Tape::Ref qh = tape.rope(tape.slice_cols(q, head * dh, dh), positions,
                                           cfg.rope_base);
            const Tape::Ref kh = tape.rope(tape.slice_cols(k, head * dh, dh), positions,
                                           cfg.rope_base);
            const Tape::Ref vh = tape.slice_cols(v, head * dh, dh);
            const Tape::Ref scores =
                tape.scale(tape.matmul(qh, tape.transpose(kh)), attn_scale);
            const Tape::Ref attn = tape.row_softmax(scores);
            head_outs.push_back(tape.matmul(attn, vh));
        }
        const Tape::Ref msa = tape.matmul(tape.concat_cols(head_outs), wo);
        h = tape.add(h, msa);

        const Tape::Ref n2 = tape.rms_norm(h, ffn_gain, cfg.rmsnorm_eps);
        const Tape::Ref gated =
            tape.mul(tape.silu(tape.matmul(n2, w_up)), tape.matmul(n2, w_gate));
        const Tape::Ref ffn = tape.matmul(gated, w_out);
        h = tape.add(h, ffn);
    }
    return h;
}

Matrix encode(const ModelParams& params, const Matrix& input) {
    Tape tape;
    const ParamLeaves leaves = register_params(tape, params);
    std::vector<int> positions(input.rows);
    for (int i = 0; i < input.rows; ++i) positions[i] = i;
    return tape.value(encode_on_tape(tape, leaves, params.cfg, tape.leaf(input), positions));
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'S', 'M', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    require(static_cast<bool>(is), "checkpoint: truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

nlohmann::json config_to_json(const EncoderConfig& c) {
    return {{"layers", c.layers},       {"heads", c.heads},
            {"dim", c.dim},             {"ffn_width", c.ffn_width},
            {"rope_base", c.rope_base}, {"rmsnorm_eps", c.rmsnorm_eps},
            {"init_scale", c.init_scale}, {"seed", c.seed}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.dim = j.at("dim").get<int>();
    c.ffn_width = j.at("ffn_width").get<int>();
    c.rope_base = j.at("rope_base").get<double>();
    c.rmsnorm_eps = j.at("rmsnorm_eps").get<double>();
    c.init_scale = j.at("init_scale").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "save_checkpoint: cannot open " + path);
    os.write(kCheckpointMagic, 8);
    write_u32(os, kCheckpointVersion);
    const std::string blob = config_to_json(params.cfg).dump();
    write_u32(os, static_cast<uint32_t>(blob.size()));
    os.write(blob.data(), static_cast<long>(blob.size()));
    params.for_each_tensor([&](const std::string&, const Matrix& m) {
        write_u32(os, static_cast<uint32_t>(m.rows));
        write_u32(os, static_cast<uint32_t>(m.cols));
        for (double x : m.data) {
            const float f = static_cast<float>(x);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_u32(os, bits);
        }
    });
    require(static_cast<bool>(os), "save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    require(static_cast<bool>(is) && std::memcmp(magic, kCheckpointMagic, 8) == 0,
            "load_checkpoint: bad magic in " + path);
    const uint32_t version = read_u32(is);
    require(version == kCheckpointVersion,
            "load_checkpoint: unsupported version " + std::to_string(version));
    const uint32_t blob_len = read_u32(is);
    std::string blob(blob_len, '\0');
    is.read(blob.data(), static_cast<long>(blob_len));
    require(static_cast<bool>(is), "load_checkpoint: truncated config blob");
    const EncoderConfig cfg = config_from_json(nlohmann::json::parse(blob));

    ModelParams p = init_params(cfg);
    p.for_each_tensor([&](const std::string& name, Matrix& m) {
        const uint32_t rows = read_u32(is);
        const uint32_t cols = read_u32(is);
        require(static_cast<int>(rows) == m.rows && static_cast<int>(cols) == m.cols,
                "load_checkpoint: shape mismatch for " + name);
        for (auto& x : m.data) {
            const uint32_t bits = read_u32(is);
            float f;
            std::memcpy(&f, &bits, 4);
            require(std::isfinite(f), "load_checkpoint: non-finite weight in " + name);
            x = f;
        }
    });
    is.peek();
    require(is.eof(), "load_checkpoint: trailing bytes in " + path);
    return p;
}

}  // namespace ssmp
