#include "ssmp/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ssmp/kernels.hpp"

namespace ssmp {

Matrix GroundTruth::one_hot(int movie_shots) const {
    Matrix g(static_cast<int>(labels.size()), movie_shots);
    for (size_t j = 0; j < labels.size(); ++j) {
        require(labels[j] >= 0 && labels[j] < movie_shots, "one_hot: label out of range");
        g.at(static_cast<int>(j), labels[j]) = 1.0;
    }
    return g;
}

void validate_shot_matrix(const Matrix& m, const std::string& what) {
    require(m.rows >= 1 && m.cols >= 1, what + ": empty shot matrix");
    require(m.all_finite(), what + ": non-finite entry");
    for (int r = 0; r < m.rows; ++r)
        require(m.row_norm(r) > 0.0, what + ": all-zero row " + std::to_string(r));
}

Matrix cosine_sim(const Matrix& a, const Matrix& b) { return kernels::cosine_sim(a, b); }

GroundTruth ground_truth(const Matrix& movie, const Matrix& trailer) {
    require(movie.cols == trailer.cols, "ground_truth: dimension mismatch");
    const Matrix s = cosine_sim(trailer, movie);
    GroundTruth gt;
    gt.labels.resize(trailer.rows);
    for (int j = 0; j < s.rows; ++j) {
        int best = 0;
        for (int i = 1; i < s.cols; ++i)
            if (s.at(j, i) > s.at(j, best)) best = i;  // ties keep the lowest index
        gt.labels[j] = best;
    }
    return gt;
}

MovieTrailerPair synth_pair(const SynthConfig& cfg, uint64_t seed) {
    require(cfg.trailer_shots >= 1 && cfg.movie_shots >= cfg.trailer_shots,
            "synth_pair: need I >= J >= 1");
    require(cfg.dim >= 2, "synth_pair: need D >= 2");
    require(cfg.noise >= 0.0, "synth_pair: negative noise");
    require(cfg.clusters >= 1, "synth_pair: need at least one cluster");

    const int I = cfg.movie_shots, J = cfg.trailer_shots, D = cfg.dim;
    const int ncode = std::max(1, D / 2);
    const int ncontent = D - ncode;
    const double code_amp = 10.0;

    // Corpus-wide slot codes, fixed by the rule seed so the selection and
    // ordering rule is shared across all pairs of a corpus.
    std::mt19937_64 rule_rng(cfg.rule_seed);
    Matrix codes = Matrix::randn(J, ncode, 1.0, rule_rng);
    for (int r = 0; r < J; ++r) {
        const double n = codes.row_norm(r);
        for (int c = 0; c < ncode; ++c) codes.at(r, c) = code_amp * codes.at(r, c) / n;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_int_distribution<int> cluster_pick(0, cfg.clusters - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    Matrix centers = Matrix::randn(cfg.clusters, std::max(ncontent, 1), 0.3, rng);
    std::vector<double> cluster_saliency(cfg.clusters);
    for (auto& s : cluster_saliency) s = n01(rng);

    Matrix movie(I, D);
    std::vector<double> saliency(I), key(I);
    for (int i = 0; i < I; ++i) {
        const int c = cluster_pick(rng);
        for (int d = 0; d < ncontent; ++d)
            movie.at(i, ncode + d) = centers.at(c, d) + 0.1 * n01(rng);
        for (int d = 0; d < ncode; ++d) movie.at(i, d) = 0.02 * n01(rng);
        saliency[i] = cluster_saliency[c] + n01(rng);
        key[i] = u01(rng);
    }

    // Select the top-J saliency shots, order them by the narrative key.
    std::vector<int> order(I);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return saliency[a] > saliency[b]; });
    std::vector<int> selected(order.begin(), order.begin() + J);
    std::stable_sort(selected.begin(), selected.end(),
                     [&](int a, int b) { return key[a] < key[b]; });

    for (int r = 0; r < J; ++r)
        for (int d = 0; d < ncode; ++d) movie.at(selected[r], d) += codes.at(r, d);


    Matrix trailer(J, D);
    for (int r = 0; r < J; ++r)
        for (int d = 0; d < D; ++d)
            trailer.at(r, d) = movie.at(selected[r], d) + cfg.noise * n01(rng);

    validate_shot_matrix(movie, "synth movie");
    validate_shot_matrix(trailer, "synth trailer");

    MovieTrailerPair pair;
    pair.id = "synth-" + std::to_string(seed);
    pair.movie = std::move(movie);
    pair.trailer = std::move(trailer);
    pair.planted = std::move(selected);
    pair.truth = ground_truth(pair.movie, pair.trailer);
    return pair;
}

namespace {

constexpr char kFeatureMagic[8] = {'S', 'S', 'M', 'P', 'F', 'E', 'A', 'T'};
constexpr uint32_t kFeatureVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    require(static_cast<bool>(is), "truncated " + what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is, const std::string& what) {
    const uint32_t bits = read_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_features(const std::string& path, const Matrix& m) {
    require(m.rows >= 1 && m.cols >= 1, "save_features: empty matrix");
    require(m.all_finite(), "save_features: non-finite entry");
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "save_features: cannot open " + path);
    os.write(kFeatureMagic, 8);
    write_u32(os, kFeatureVersion);
    write_u32(os, static_cast<uint32_t>(m.rows));
    write_u32(os, static_cast<uint32_t>(m.cols));
    for (double x : m.data) write_f32(os, static_cast<float>(x));
    require(static_cast<bool>(os), "save_features: write failed for " + path);
}

Matrix load_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "load_features: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    require(static_cast<bool>(is) && std::memcmp(magic, kFeatureMagic, 8) == 0,
            "load_features: bad magic in " + path);
    const uint32_t version = read_u32(is, "feature header");
    require(version == kFeatureVersion,
            "load_features: unsupported version " + std::to_string(version));
    const uint32_t rows = read_u32(is, "feature header");
    const uint32_t cols = read_u32(is, "feature header");
    require(rows >= 1 && cols >= 1, "load_features: empty matrix in header");
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (auto& x : m.data) {
        const float v = read_f32(is, "feature payload");
        require(std::isfinite(v), "load_features: non-finite value in " + path);
        x = v;
    }
    is.peek();
    require(is.eof(), "load_features: trailing bytes in " + path);
    return m;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json item{{"id", e.id}, {"movie_path", e.movie_path},
                            {"trailer_path", e.trailer_path}};
        if (!e.shot_durations.empty()) item["shot_durations"] = e.shot_durations;
        if (!e.music_boundaries.empty()) item["music_boundaries"] = e.music_boundaries;
        j.push_back(std::move(item));
    }
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_manifest: cannot open " + path);
    os << j.dump(2) << "\n";
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "load_manifest: cannot open " + path);
    nlohmann::json j;
    is >> j;
    require(j.is_array(), "load_manifest: expected a JSON array");
    std::vector<ManifestEntry> entries;
    for (const auto& item : j) {
        ManifestEntry e;
        e.id = item.at("id").get<std::string>();
        e.movie_path = item.at("movie_path").get<std::string>();
        e.trailer_path = item.at("trailer_path").get<std::string>();
        if (item.contains("shot_durations"))
            e.shot_durations = item["shot_durations"].get<std::vector<double>>();
        if (item.contains("music_boundaries"))
            e.music_boundaries = item["music_boundaries"].get<std::vector<double>>();
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace ssmp
