#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ssmp/corpus.hpp"
#include "ssmp/encoder.hpp"

namespace ssmp {

enum class DecodeMode { self_corrective, greedy };
DecodeMode decode_mode_from_string(const std::string& s);
std::string to_string(DecodeMode m);

/// State of the iterative fill/re-mask generation. Shot indices are 0-based
/// internally; z[j] == -1 marks an unfilled position.
struct DecodeState {
    std::vector<int> z;            // committed movie shot per position, -1 if unfilled
    std::vector<double> q;         // accumulated confidence, nondecreasing, capped at 1
    std::vector<uint8_t> masked;   // 1 = position still masked
    std::vector<uint8_t> in_pool;  // 1 = movie shot still selectable
    int iteration = 0;

    int remaining_positions() const;
    void check_invariants() const;  // throws on violation
};

DecodeState init_decode_state(int movie_shots, int trailer_shots);

/// Token matrix fed to the encoder: committed rows carry the movie shot
/// features, masked rows the placeholder.
Matrix decode_tokens(const DecodeState& state, const Matrix& movie, const Matrix& placeholder);

/// Row softmax restricted to the candidate pool; non-candidate columns get
/// probability zero.
Matrix restricted_probs(const Matrix& cosine, const std::vector<uint8_t>& in_pool);

/// One fill/re-mask sweep. Positions are visited in descending-q order
/// (ties to the lower index); shots committed earlier in the sweep are
/// excluded from later argmaxes so committed indices stay distinct. A filled
/// position that finds the pool drained keeps or re-masks on its existing
/// confidence without a q update.
void iteration_step(DecodeState& state, const Matrix& probs, std::mt19937_64& rng);

struct DecodeResult {
    std::vector<int> indices;             // 0-based, J distinct entries
    std::vector<int> filled_after_iter;   // committed positions after each iteration
    int iterations = 0;
    bool force_filled = false;            // k_max hit, remaining slots filled greedily
    // per-iteration history for inspection and trace tests
    std::vector<std::vector<double>> q_history;
    std::vector<std::vector<int>> z_history;
};

DecodeResult decode(const ModelParams& params, const Matrix& movie, int trailer_shots,
                    DecodeMode mode, uint64_t seed, int k_max = 64);

struct DecodeOutput {
    std::string movie_id;
    int trailer_shots = 0;
    DecodeMode mode = DecodeMode::self_corrective;
    uint64_t seed = 0;
    std::vector<int> indices;  // 1-based for serialization
    std::vector<int> filled_after_iter;
};

void save_decode_output(const std::string& path, const DecodeOutput& out);
DecodeOutput load_decode_output(const std::string& path);

}  // namespace ssmp
