#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssmp/autograd.hpp"
#include "ssmp/matrix.hpp"

namespace ssmp {

struct EncoderConfig {
    int layers = 2;
    int heads = 2;
    int dim = 32;
    int ffn_width = 64;
    double rope_base = 10000.0;
    double rmsnorm_eps = 1e-6;
    double init_scale = 0.5;
    uint64_t seed = 0;

    void validate() const {
        require(layers >= 1 && heads >= 1 && dim >= 1 && ffn_width >= 1,
                "EncoderConfig: non-positive dimension");
        require(dim % heads == 0, "EncoderConfig: dim not divisible by heads");
        require((dim / heads) % 2 == 0, "EncoderConfig: odd head dimension");
    }
};

struct LayerParams {
    Matrix attn_gain;  // 1 x D
    Matrix wq, wk, wv, wo;  // D x D
    Matrix ffn_gain;   // 1 x D
    Matrix w_up, w_gate;    // D x F
    Matrix w_out;      // F x D
};

/// All encoder weights plus the learnable mask placeholder.
struct ModelParams {
    EncoderConfig cfg;
    std::vector<LayerParams> layers;
    Matrix mask_placeholder;  // 1 x D

    /// Visits every tensor in declaration order (checkpoint and optimizer
    /// layout both follow this order).
    void for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn);
    void for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& fn) const;
};

ModelParams init_params(const EncoderConfig& cfg);

/// Standalone rotary rotation (the tape op shares the math). Each 2-plane
/// (2k, 2k+1) of row t is rotated by positions[t] * base^(-2k/cols).
Matrix rope_rotate(const Matrix& x, const std::vector<int>& positions, double base);

/// Leaf handles for one forward pass; gradients are read back through these
/// after Tape::backward.
struct ParamLeaves {
    std::vector<Tape::Ref> refs;  // declaration order, matches for_each_tensor
    Tape::Ref mask_placeholder = -1;
};

ParamLeaves register_params(Tape& tape, const ModelParams& params);

/// Runs the L encoder blocks over an input node of shape T x D with the
/// given absolute positions. Bidirectional attention, no mask.
Tape::Ref encode_on_tape(Tape& tape, const ParamLeaves& leaves, const EncoderConfig& cfg,
                         Tape::Ref input, const std::vector<int>& positions);

/// Convenience forward pass without gradient tracking intent (still builds
/// a throwaway tape internally).
Matrix encode(const ModelParams& params, const Matrix& input);

// Checkpoint format: magic "SSMPCKPT", version u32 = 1, length-prefixed
// JSON EncoderConfig, then every tensor in declaration order as
// u32 rows, u32 cols, float32 little-endian payload.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ssmp
