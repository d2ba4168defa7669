#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>

#include "ssmp/metrics.hpp"

using namespace ssmp;

namespace {

// exponential-time reference: the textbook recursion
long lev_naive(const IndexSequence& a, const IndexSequence& b, size_t i, size_t j) {
    if (i == a.size()) return static_cast<long>(b.size() - j);
    if (j == b.size()) return static_cast<long>(a.size() - i);
    if (a[i] == b[j]) return lev_naive(a, b, i + 1, j + 1);
    return 1 + std::min({lev_naive(a, b, i + 1, j), lev_naive(a, b, i, j + 1),
                         lev_naive(a, b, i + 1, j + 1)});
}

IndexSequence random_seq(std::mt19937_64& rng, int max_len, int alphabet) {
    IndexSequence s(rng() % (max_len + 1));
    for (auto& v : s) v = 1 + static_cast<int>(rng() % alphabet);
    return s;
}

}  // namespace

TEST_CASE("identical sequences score perfectly") {
    const IndexSequence s{3, 1, 4};
    const PrfResult r = prf(s, s, 0);
    CHECK(r.precision == doctest::Approx(1.0));
    CHECK(r.recall == doctest::Approx(1.0));
    CHECK(r.f1 == doctest::Approx(1.0));
    CHECK(levenshtein(s, s) == 0);
    CHECK(pairwise_agreement(s, s) == doctest::Approx(1.0));
}

TEST_CASE("disjoint sequences score zero") {
    const PrfResult r = prf({1, 2}, {7, 8}, 0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
}

TEST_CASE("half-overlap halves every score") {
    // pred {1,2,3,4} vs truth {3,4,5,6}: P = R = 1/2 so F1 = 1/2 as well
    const PrfResult r = prf({1, 2, 3, 4}, {3, 4, 5, 6}, 0);
    CHECK(r.precision == doctest::Approx(0.5));
    CHECK(r.recall == doctest::Approx(0.5));
    CHECK(r.f1 == doctest::Approx(0.5));
}

TEST_CASE("the radius admits near misses") {
    const PrfResult r0 = prf({4}, {5}, 0);
    const PrfResult r1 = prf({4}, {5}, 1);
    CHECK(r0.f1 == 0.0);
    CHECK(r1.f1 == doctest::Approx(1.0));
}

TEST_CASE("duplicates collapse before matching") {
    const PrfResult r = prf({2, 2, 2}, {2}, 0);
    CHECK(r.precision == doctest::Approx(1.0));
    CHECK(r.recall == doctest::Approx(1.0));
}

TEST_CASE("empty sequences are flagged degenerate") {
    CHECK(prf({}, {1}, 0).degenerate);
    CHECK(prf({1}, {}, 0).degenerate);
    CHECK(prf({}, {1}, 0).f1 == 0.0);
}

TEST_CASE("precision and recall are monotone in the radius") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 300; ++trial) {
        const IndexSequence p = random_seq(rng, 8, 12);
        const IndexSequence t = random_seq(rng, 8, 12);
        if (p.empty() || t.empty()) continue;
        double prev_p = -1.0, prev_r = -1.0;
        for (int radius = 0; radius <= 3; ++radius) {
            const PrfResult r = prf(p, t, radius);
            CHECK(r.precision >= prev_p);
            CHECK(r.recall >= prev_r);
            prev_p = r.precision;
            prev_r = r.recall;
        }
    }
}

TEST_CASE("edit distance matches the naive recursion") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 1000; ++trial) {
        const IndexSequence a = random_seq(rng, 6, 4);
        const IndexSequence b = random_seq(rng, 6, 4);
        CHECK(levenshtein(a, b) == lev_naive(a, b, 0, 0));
    }
}

TEST_CASE("edit distance is a metric on sampled triples") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        const IndexSequence a = random_seq(rng, 5, 3);
        const IndexSequence b = random_seq(rng, 5, 3);
        const IndexSequence c = random_seq(rng, 5, 3);
        CHECK(levenshtein(a, b) == levenshtein(b, a));
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
        CHECK((levenshtein(a, b) == 0) == (a == b));
    }
}

TEST_CASE("edit distance against the empty sequence is the length") {
    CHECK(levenshtein({1, 2, 3}, {}) == 3);
    CHECK(levenshtein({}, {9}) == 1);
}

TEST_CASE("pairwise agreement counts concordant common pairs") {
    // common shots {1,2,3}; pred order 1,3,2 flips one of three pairs
    CHECK(pairwise_agreement({1, 3, 2}, {1, 2, 3}) == doctest::Approx(2.0 / 3.0));
    // full reversal: nothing concordant
    CHECK(pairwise_agreement({3, 2, 1}, {1, 2, 3}) == doctest::Approx(0.0));
    // fewer than two common shots: defined as zero
    CHECK(pairwise_agreement({1, 9}, {1, 5}) == 0.0);
    CHECK(pairwise_agreement({7}, {7}) == 0.0);
}

TEST_CASE("agreement uses first occurrences and ignores non-common shots") {
    CHECK(pairwise_agreement({5, 1, 5, 2}, {9, 1, 2, 8}) == doctest::Approx(1.0));
}

TEST_CASE("agreement is invariant under relabeling the alphabet") {
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 100; ++trial) {
        const IndexSequence p = random_seq(rng, 7, 9);
        const IndexSequence t = random_seq(rng, 7, 9);
        IndexSequence p2 = p, t2 = t;
        for (auto& v : p2) v += 100;
        for (auto& v : t2) v += 100;
        CHECK(pairwise_agreement(p, t) == doctest::Approx(pairwise_agreement(p2, t2)));
    }
}

TEST_CASE("evaluate_pair fills every field and the CSV writer emits the header") {
    const MetricReport r = evaluate_pair("pair_0", {1, 2, 4}, {1, 2, 3}, 0);
    CHECK(r.id == "pair_0");
    CHECK(r.levenshtein == 1);
    CHECK(r.precision == doctest::Approx(2.0 / 3.0));
    const std::string path = "test_metrics_out.csv";
    save_metric_csv(path, {r});
    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    char line[128] = {0};
    REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
    std::fclose(f);
    CHECK(std::string(line) == "id,precision,recall,f1,ld,aa\n");
    std::remove(path.c_str());
}
