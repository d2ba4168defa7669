#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssmp/matrix.hpp"

namespace ssmp {

/// Per-trailer-position ground truth: labels[j] is the 0-based movie shot
/// index whose cosine similarity with trailer shot j is maximal (lowest
/// index on ties).
struct GroundTruth {
    std::vector<int> labels;

    Matrix one_hot(int movie_shots) const;
};

struct MovieTrailerPair {
    std::string id;
    Matrix movie;    // I x D
    Matrix trailer;  // J x D
    GroundTruth truth;
    std::vector<int> planted;  // generator's intended indices (synthetic only)
};

struct SynthConfig {
    int movie_shots = 64;    // I
    int trailer_shots = 12;  // J
    int dim = 32;            // D
    double noise = 0.05;     // sigma applied to trailer rows
    int clusters = 4;
    uint64_t rule_seed = 1234567;  // fixes the corpus-wide selection/ordering rule
};

/// Validates the ShotMatrix invariants: nonempty, finite, no all-zero row.
void validate_shot_matrix(const Matrix& m, const std::string& what);

/// Cosine similarity matrix, entry (j,i) = cos(a_j, b_i). Rejects zero rows.
Matrix cosine_sim(const Matrix& a, const Matrix& b);

/// Per-trailer-row argmax over the cosine similarity against the movie rows.
GroundTruth ground_truth(const Matrix& movie, const Matrix& trailer);

/// Generates one movie/trailer pair with a planted selection-plus-ordering
/// rule. Movie shots carry latent cluster content plus a per-shot saliency;
/// the top-J saliency shots are selected, ordered by a latent key, and the
/// shot placed at trailer slot r receives the corpus-wide slot code for r in
/// its leading feature dimensions. Trailer rows are the selected movie rows
/// plus N(0, sigma^2) perturbation. Pure function of (config, seed).
MovieTrailerPair synth_pair(const SynthConfig& cfg, uint64_t seed);

// Feature file format (little-endian): magic "SSMPFEAT", version u32 = 1,
// rows u32, cols u32, then rows*cols float32 row-major.
void save_features(const std::string& path, const Matrix& m);
Matrix load_features(const std::string& path);

struct ManifestEntry {
    std::string id;
    std::string movie_path;
    std::string trailer_path;
    std::vector<double> shot_durations;    // optional, empty if absent
    std::vector<double> music_boundaries;  // optional, empty if absent
};

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace ssmp
