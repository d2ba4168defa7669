#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "ssmp/decoder.hpp"
#include "ssmp/trainer.hpp"

using namespace ssmp;

namespace {

EncoderConfig tiny_encoder(uint64_t seed) {
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.heads = 1;
    cfg.dim = 8;
    cfg.ffn_width = 8;
    cfg.seed = seed;
    return cfg;
}

// independent replay of the published decode loop: same model calls, but the
// sweep logic re-derived from its written contract
std::vector<int> replay_self_corrective(const ModelParams& params, const Matrix& movie, int J,
                                        uint64_t seed, int k_max) {
    const int I = movie.rows;
    std::vector<int> z(J, -1);
    std::vector<double> q(J, 0.0);
    std::vector<uint8_t> pool(I, 1);
    std::mt19937_64 rng(seed);
    int iter = 0;
    Matrix last;
    auto remaining = [&] { return static_cast<int>(std::count(z.begin(), z.end(), -1)); };
    while (remaining() > 0 && iter < k_max) {
        Matrix tokens(J, movie.cols);
        for (int j = 0; j < J; ++j)
            for (int c = 0; c < movie.cols; ++c)
                tokens.at(j, c) = z[j] < 0 ? params.mask_placeholder.at(0, c) : movie.at(z[j], c);
        const auto [vhat, unused] = predict_probs(params, movie, tokens);
        const Matrix probs = restricted_probs(cosine_sim(vhat, movie), pool);
        last = probs;
        std::vector<int> order(J);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return q[a] > q[b]; });
        std::vector<uint8_t> avail = pool;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int j : order) {
            int best = -1;
            for (int i = 0; i < I; ++i)
                if (avail[i] && (best < 0 || probs.at(j, i) > probs.at(j, best))) best = i;
            if (best >= 0) q[j] = std::min(q[j] + probs.at(j, best), 1.0);
            if (u(rng) < q[j]) {
                if (z[j] < 0) {
                    z[j] = best;
                    pool[best] = 0;
                    avail[best] = 0;
                }
            } else if (z[j] >= 0) {
                pool[z[j]] = 1;
                z[j] = -1;
            }
        }
        ++iter;
    }
    for (int j = 0; j < J; ++j) {
        if (z[j] >= 0) continue;
        int best = -1;
        for (int i = 0; i < I; ++i)
            if (pool[i] && (best < 0 || last.at(j, i) > last.at(j, best))) best = i;
        z[j] = best;
        pool[best] = 0;
    }
    return z;
}

}  // namespace

TEST_CASE("the initial state is fully masked with a full pool") {
    const DecodeState s = init_decode_state(10, 4);
    CHECK(s.remaining_positions() == 4);
    CHECK(std::count(s.in_pool.begin(), s.in_pool.end(), 1) == 10);
    s.check_invariants();
    CHECK_THROWS(init_decode_state(3, 5));  // more positions than shots
    CHECK_THROWS(init_decode_state(3, 0));
}

TEST_CASE("token assembly reads committed shots and the placeholder") {
    std::mt19937_64 rng(91);
    const Matrix movie = Matrix::randn(5, 3, 1.0, rng);
    const Matrix ph = Matrix::randn(1, 3, 1.0, rng);
    DecodeState s = init_decode_state(5, 2);
    s.z[1] = 4;
    s.masked[1] = 0;
    s.in_pool[4] = 0;
    const Matrix tok = decode_tokens(s, movie, ph);
    for (int c = 0; c < 3; ++c) {
        CHECK(tok.at(0, c) == ph.at(0, c));
        CHECK(tok.at(1, c) == movie.at(4, c));
    }
}

TEST_CASE("restricted softmax is a distribution over the pool only") {
    std::mt19937_64 rng(92);
    const Matrix cosine = Matrix::randn(3, 6, 0.5, rng);
    const std::vector<uint8_t> pool{1, 0, 1, 1, 0, 1};
    const Matrix p = restricted_probs(cosine, pool);
    for (int j = 0; j < 3; ++j) {
        double sum = 0.0;
        for (int i = 0; i < 6; ++i) {
            if (!pool[i]) CHECK(p.at(j, i) == 0.0);
            sum += p.at(j, i);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS(restricted_probs(cosine, std::vector<uint8_t>(6, 0)));
}

TEST_CASE("a certain position commits in a single sweep") {
    DecodeState s = init_decode_state(1, 1);
    const Matrix probs = Matrix::full(1, 1, 1.0);
    std::mt19937_64 rng(93);
    iteration_step(s, probs, rng);
    CHECK(s.z == std::vector<int>{0});
    CHECK(s.remaining_positions() == 0);
}

TEST_CASE("a filled position survives re-masking with its accumulated confidence") {
    // q moves 0.5 -> 0.7 in the sweep, so the keep rate must track 0.7
    std::mt19937_64 rng(94);
    int kept = 0;
    const int trials = 10000;
    for (int trial = 0; trial < trials; ++trial) {
        DecodeState s = init_decode_state(2, 1);
        s.z[0] = 0;
        s.masked[0] = 0;
        s.in_pool[0] = 0;
        s.q[0] = 0.5;
        Matrix probs(1, 2);
        probs.at(0, 1) = 0.2;  // best available candidate
        iteration_step(s, probs, rng);
        kept += s.masked[0] == 0;
        if (s.masked[0] == 0) {
            CHECK(s.z[0] == 0);  // the kept shot is unchanged, not re-argmaxed
        } else {
            CHECK(s.in_pool[0] == 1);  // released shots return to the pool
        }
        CHECK(s.q[0] == doctest::Approx(0.7));
    }
    CHECK(static_cast<double>(kept) / trials == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("higher-confidence positions pick before lower ones") {
    // both positions want shot 0; the higher-q position must win it
    DecodeState s = init_decode_state(2, 2);
    s.q = {0.1, 0.9};
    Matrix probs(2, 2);
    probs.at(0, 0) = 1.0;
    probs.at(1, 0) = 1.0;
    std::mt19937_64 rng(95);
    iteration_step(s, probs, rng);
    if (s.z[1] >= 0) CHECK(s.z[1] == 0);
    if (s.z[0] >= 0 && s.z[1] >= 0) CHECK(s.z[0] == 1);
}

TEST_CASE("decodes terminate with distinct in-range indices") {
    const ModelParams params = init_params(tiny_encoder(96));
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 50; ++trial) {
        const int I = 2 + static_cast<int>(rng() % 11);
        const int J = 1 + static_cast<int>(rng() % std::min(I, 6));
        const Matrix movie = Matrix::randn(I, 8, 1.0, rng);
        for (const auto mode : {DecodeMode::self_corrective, DecodeMode::greedy}) {
            const DecodeResult r = decode(params, movie, J, mode, rng(), 64);
            REQUIRE(static_cast<int>(r.indices.size()) == J);
            std::set<int> uniq(r.indices.begin(), r.indices.end());
            CHECK(static_cast<int>(uniq.size()) == J);
            for (int i : r.indices) {
                CHECK(i >= 0);
                CHECK(i < I);
            }
            CHECK(r.iterations <= 64);
        }
    }
}

TEST_CASE("greedy commits exactly one position per iteration") {
    const ModelParams params = init_params(tiny_encoder(98));
    std::mt19937_64 rng(99);
    const Matrix movie = Matrix::randn(9, 8, 1.0, rng);
    const DecodeResult r = decode(params, movie, 5, DecodeMode::greedy, 7, 64);
    CHECK(r.iterations == 5);
    CHECK(r.force_filled == false);
    REQUIRE(r.filled_after_iter.size() == 5);
    for (int k = 0; k < 5; ++k) CHECK(r.filled_after_iter[k] == k + 1);
}

TEST_CASE("the iterative decode matches an independent replay of its contract") {
    const ModelParams params = init_params(tiny_encoder(100));
    std::mt19937_64 rng(101);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const int I = 6 + static_cast<int>(rng() % 5);
        const int J = 3;
        const Matrix movie = Matrix::randn(I, 8, 1.0, rng);
        const DecodeResult r = decode(params, movie, J, DecodeMode::self_corrective, seed, 16);
        CHECK(r.indices == replay_self_corrective(params, movie, J, seed, 16));
    }
}

TEST_CASE("a tight iteration cap falls back to forced filling") {
    const ModelParams params = init_params(tiny_encoder(102));
    std::mt19937_64 rng(103);
    const Matrix movie = Matrix::randn(8, 8, 1.0, rng);
    const DecodeResult r = decode(params, movie, 4, DecodeMode::greedy, 1, 2);
    CHECK(r.force_filled);
    CHECK(static_cast<int>(r.indices.size()) == 4);
    std::set<int> uniq(r.indices.begin(), r.indices.end());
    CHECK(uniq.size() == 4);
}

TEST_CASE("decode outputs round-trip through their file format") {
    DecodeOutput out;
    out.movie_id = "pair_3";
    out.trailer_shots = 3;
    out.mode = DecodeMode::self_corrective;
    out.seed = 11;
    out.indices = {4, 1, 9};
    out.filled_after_iter = {1, 2, 3};
    const std::string path = "test_decoder_out.json";
    save_decode_output(path, out);
    const DecodeOutput in = load_decode_output(path);
    CHECK(in.movie_id == out.movie_id);
    CHECK(in.trailer_shots == out.trailer_shots);
    CHECK(in.mode == out.mode);
    CHECK(in.seed == out.seed);
    CHECK(in.indices == out.indices);
    CHECK(in.filled_after_iter == out.filled_after_iter);
    std::remove(path.c_str());
}
