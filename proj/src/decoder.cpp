#include "ssmp/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ssmp/trainer.hpp"

namespace ssmp {

DecodeMode decode_mode_from_string(const std::string& s) {
    if (s == "self_corrective") return DecodeMode::self_corrective;
    if (s == "greedy") return DecodeMode::greedy;
    throw std::runtime_error("unknown decode mode: " + s);
}

std::string to_string(DecodeMode m) {
    return m == DecodeMode::self_corrective ? "self_corrective" : "greedy";
}

int DecodeState::remaining_positions() const {
    int n = 0;
    for (uint8_t m : masked) n += m;
    return n;
}

void DecodeState::check_invariants() const {
    std::vector<uint8_t> seen(in_pool.size(), 0);
    for (size_t j = 0; j < z.size(); ++j) {
        require((z[j] >= 0) == !masked[j], "DecodeState: z/masked inconsistent");
        if (z[j] >= 0) {
            require(z[j] < static_cast<int>(in_pool.size()), "DecodeState: z out of range");
            require(!seen[z[j]], "DecodeState: duplicate committed shot");
            require(!in_pool[z[j]], "DecodeState: committed shot still in pool");
            seen[z[j]] = 1;
        }
        require(q[j] >= 0.0 && q[j] <= 1.0, "DecodeState: confidence outside [0,1]");
    }
}

DecodeState init_decode_state(int movie_shots, int trailer_shots) {
    require(trailer_shots >= 1 && movie_shots >= trailer_shots, "decode: need 1 <= J <= I");
    DecodeState s;
    s.z.assign(trailer_shots, -1);
    s.q.assign(trailer_shots, 0.0);
    s.masked.assign(trailer_shots, 1);
    s.in_pool.assign(movie_shots, 1);
    return s;
}

Matrix decode_tokens(const DecodeState& state, const Matrix& movie, const Matrix& placeholder) {
    Matrix tokens(static_cast<int>(state.z.size()), movie.cols);
    for (size_t j = 0; j < state.z.size(); ++j)
        for (int c = 0; c < movie.cols; ++c)
            tokens.at(static_cast<int>(j), c) =
                state.masked[j] ? placeholder.at(0, c) : movie.at(state.z[j], c);
    return tokens;
}

Matrix restricted_probs(const Matrix& cosine, const std::vector<uint8_t>& in_pool) {
    require(static_cast<int>(in_pool.size()) == cosine.cols, "restricted_probs: pool mismatch");
    Matrix p(cosine.rows, cosine.cols);
    for (int j = 0; j < cosine.rows; ++j) {
        double mx = -2.0;
        for (int i = 0; i < cosine.cols; ++i)
            if (in_pool[i]) mx = std::max(mx, cosine.at(j, i));
        require(mx > -2.0, "restricted_probs: empty candidate pool");
        double sum = 0.0;
        for (int i = 0; i < cosine.cols; ++i)
            if (in_pool[i]) {
                p.at(j, i) = std::exp(cosine.at(j, i) - mx);
                sum += p.at(j, i);
            }
        for (int i = 0; i < cosine.cols; ++i)
            if (in_pool[i]) p.at(j, i) /= sum;
    }
    return p;
}

void iteration_step(DecodeState& state, const Matrix& probs, std::mt19937_64& rng) {
    state.check_invariants();
    const int J = static_cast<int>(state.z.size());
    require(probs.rows == J && probs.cols == static_cast<int>(state.in_pool.size()),
            "iteration_step: probability shape mismatch");

    std::vector<int> order(J);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return state.q[a] > state.q[b]; });

    std::vector<uint8_t> avail = state.in_pool;  // shrinks as this sweep commits
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j : order) {
        int best = -1;
        for (int i = 0; i < probs.cols; ++i)
            if (avail[i] && (best < 0 || probs.at(j, i) > probs.at(j, best))) best = i;
        if (best < 0) {
            // the sweep's commits drained the pool; only an already-filled
            // position can get here (masked count never exceeds the pool)
            require(!state.masked[j],
                    "iteration_step: no candidate left for masked position " + std::to_string(j));
        } else {
            state.q[j] = std::min(state.q[j] + probs.at(j, best), 1.0);
        }
        const bool keep = u(rng) < state.q[j];
        if (keep) {
            if (state.masked[j]) {
                state.z[j] = best;
                state.masked[j] = 0;
                state.in_pool[best] = 0;
                avail[best] = 0;
            }
            // already-filled positions keep their shot unchanged
        } else if (!state.masked[j]) {
            state.in_pool[state.z[j]] = 1;
            state.z[j] = -1;
            state.masked[j] = 1;
        }
    }
    ++state.iteration;
    state.check_invariants();
}

DecodeResult decode(const ModelParams& params, const Matrix& movie, int trailer_shots,
                    DecodeMode mode, uint64_t seed, int k_max) {
    validate_shot_matrix(movie, "decode movie");
    require(k_max >= 1, "decode: k_max must be positive");
    require(movie.cols == params.cfg.dim, "decode: model width mismatch");
    DecodeState state = init_decode_state(movie.rows, trailer_shots);
    std::mt19937_64 rng(seed);

    DecodeResult result;
    Matrix last_probs;
    while (state.remaining_positions() > 0 && state.iteration < k_max) {
        const Matrix tokens = decode_tokens(state, movie, params.mask_placeholder);
        const auto [vhat, _] = predict_probs(params, movie, tokens);
        const Matrix probs = restricted_probs(cosine_sim(vhat, movie), state.in_pool);
        last_probs = probs;
        if (mode == DecodeMode::self_corrective) {
            iteration_step(state, probs, rng);
        } else {
            // greedy: commit only the single highest-probability masked position
            int best_j = -1, best_i = -1;
            for (int j = 0; j < probs.rows; ++j) {
                if (!state.masked[j]) continue;
                for (int i = 0; i < probs.cols; ++i)
                    if (state.in_pool[i] &&
                        (best_j < 0 || probs.at(j, i) > probs.at(best_j, best_i))) {
                        best_j = j;
                        best_i = i;
                    }
            }
            state.q[best_j] = std::min(state.q[best_j] + probs.at(best_j, best_i), 1.0);
            state.z[best_j] = best_i;
            state.masked[best_j] = 0;
            state.in_pool[best_i] = 0;
            ++state.iteration;
            state.check_invariants();
        }
        result.filled_after_iter.push_back(static_cast<int>(state.z.size()) -
                                           state.remaining_positions());
        result.q_history.push_back(state.q);
        result.z_history.push_back(state.z);
    }

    if (state.remaining_positions() > 0) {
        // k_max guard hit: fill the leftovers by greedy argmax over the pool
        result.force_filled = true;
        for (int j = 0; j < static_cast<int>(state.z.size()); ++j) {
            if (!state.masked[j]) continue;
            int best = -1;
            for (int i = 0; i < last_probs.cols; ++i)
                if (state.in_pool[i] && (best < 0 || last_probs.at(j, i) > last_probs.at(j, best)))
                    best = i;
            state.z[j] = best;
            state.masked[j] = 0;
            state.in_pool[best] = 0;
        }
        state.check_invariants();
    }
    result.iterations = state.iteration;
    result.indices = state.z;
    return result;
}

void save_decode_output(const std::string& path, const DecodeOutput& out) {
    nlohmann::json j{{"movie_id", out.movie_id},
                     {"J", out.trailer_shots},
                     {"mode", to_string(out.mode)},
                     {"seed", out.seed},
                     {"indices", out.indices},
                     {"iterations", out.filled_after_iter}};
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_decode_output: cannot open " + path);
    os << j.dump(2) << "\n";
}

DecodeOutput load_decode_output(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "load_decode_output: cannot open " + path);
    nlohmann::json j;
    is >> j;
    DecodeOutput out;
    out.movie_id = j.at("movie_id").get<std::string>();
    out.trailer_shots = j.at("J").get<int>();
    out.mode = decode_mode_from_string(j.at("mode").get<std::string>());
    out.seed = j.at("seed").get<uint64_t>();
    out.indices = j.at("indices").get<std::vector<int>>();
    out.filled_after_iter = j.at("iterations").get<std::vector<int>>();
    require(static_cast<int>(out.indices.size()) == out.trailer_shots,
            "load_decode_output: index count mismatch");
    return out;
}

}  // namespace ssmp
