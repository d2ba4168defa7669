#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "ssmp/align.hpp"

using namespace ssmp;

namespace {

AlignmentProblem make_problem(int n, int j, std::mt19937_64& rng) {
    AlignmentProblem p;
    p.similarity = Matrix::randn(n, j, 1.0, rng);
    std::uniform_real_distribution<double> dur(0.5, 3.0);
    p.narration_durations.resize(n);
    p.shot_durations.resize(j);
    for (auto& d : p.narration_durations) d = dur(rng);
    for (auto& d : p.shot_durations) d = dur(rng);
    return p;
}

// exhaustive search over strictly increasing feasible assignments; ties on
// score prefer the assignment whose shots are smallest read from the last
// narration backwards (mirrors the documented traceback rule)
struct OracleBest {
    std::vector<int> shots;
    double score = 0.0;
    bool found = false;
};

bool reverse_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    for (size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

void oracle_search(const AlignmentProblem& p, int want, int n, int j_from, double acc,
                   std::vector<int>& shots, OracleBest& best) {
    if (n == want) {
        if (!best.found || acc > best.score ||
            (acc == best.score && reverse_lex_less(shots, best.shots))) {
            best.found = true;
            best.score = acc;
            best.shots = shots;
        }
        return;
    }
    for (int j = j_from; j < p.similarity.cols; ++j) {
        if (p.shot_durations[j] < p.narration_durations[n]) continue;
        shots.push_back(j);
        oracle_search(p, want, n + 1, j + 1, acc + p.similarity.at(n, j), shots, best);
        shots.pop_back();
    }
}

OracleBest oracle(const AlignmentProblem& p) {
    const int n = p.similarity.rows;
    for (int want = n; want >= 1; --want) {
        OracleBest best;
        std::vector<int> shots;
        oracle_search(p, want, 0, 0, 0.0, shots, best);
        if (best.found) return best;
    }
    return {};
}

}  // namespace

TEST_CASE("single narration picks the best admissible shot") {
    AlignmentProblem p;
    p.similarity = Matrix(1, 3);
    p.similarity.at(0, 0) = 0.9;
    p.similarity.at(0, 1) = 0.2;
    p.similarity.at(0, 2) = 0.5;
    p.narration_durations = {2.0};
    p.shot_durations = {1.0, 3.0, 3.0};  // the 0.9 shot is too short
    const Alignment a = align_narrations(p);
    REQUIRE(a.assignments.size() == 1);
    CHECK(a.assignments[0] == std::pair<int, int>(0, 2));
    CHECK(a.score == doctest::Approx(0.5));
}

TEST_CASE("assignments are strictly increasing in the shot index") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const AlignmentProblem p = make_problem(3, 6, rng);
        const Alignment a = align_narrations(p);
        for (size_t i = 0; i + 1 < a.assignments.size(); ++i) {
            CHECK(a.assignments[i + 1].second > a.assignments[i].second);
            CHECK(a.assignments[i + 1].first == a.assignments[i].first + 1);
        }
        for (const auto& [n, j] : a.assignments)
            CHECK(p.shot_durations[j] >= p.narration_durations[n]);
    }
}

TEST_CASE("alignment matches exhaustive enumeration on 500 random problems") {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int j = 1 + static_cast<int>(rng() % 8);
        const AlignmentProblem p = make_problem(n, j, rng);
        const Alignment a = align_narrations(p);
        const OracleBest best = oracle(p);
        if (!best.found) {
            CHECK(a.assignments.empty());
            continue;
        }
        CHECK(a.score == best.score);
        REQUIRE(a.assignments.size() == best.shots.size());
        for (size_t i = 0; i < best.shots.size(); ++i) {
            CHECK(a.assignments[i].first == static_cast<int>(i));
            CHECK(a.assignments[i].second == best.shots[i]);
        }
    }
}

TEST_CASE("a constant shift of the similarity does not change the assignment") {
    std::mt19937_64 rng(63);
    const AlignmentProblem p = make_problem(3, 7, rng);
    AlignmentProblem q = p;
    for (double& v : q.similarity.data) v += 5.0;
    const Alignment a = align_narrations(p);
    const Alignment b = align_narrations(q);
    CHECK(a.assignments == b.assignments);
    CHECK(b.score ==
          doctest::Approx(a.score + 5.0 * a.assignments.size()).epsilon(1e-12));
}

TEST_CASE("an infeasible first narration yields an empty alignment") {
    AlignmentProblem p;
    p.similarity = Matrix::full(2, 3, 1.0);
    p.narration_durations = {10.0, 0.1};
    p.shot_durations = {1.0, 1.0, 1.0};
    const Alignment a = align_narrations(p);
    CHECK(a.assignments.empty());
    CHECK(a.score == 0.0);
}

TEST_CASE("when full assignment is infeasible the longest prefix is aligned") {
    AlignmentProblem p;
    p.similarity = Matrix::full(3, 3, 1.0);
    p.narration_durations = {1.0, 1.0, 10.0};  // third narration fits nowhere
    p.shot_durations = {2.0, 2.0, 2.0};
    const Alignment a = align_narrations(p);
    CHECK(a.assignments.size() == 2);
}

TEST_CASE("validation rejects inconsistent problem shapes") {
    AlignmentProblem p;
    p.similarity = Matrix::full(2, 3, 0.0);
    p.narration_durations = {1.0};  // wrong length
    p.shot_durations = {1.0, 1.0, 1.0};
    CHECK_THROWS(p.validate());
    p.narration_durations = {1.0, -1.0};
    CHECK_THROWS(p.validate());
}

TEST_CASE("segment boundaries imply one more shot than interior cuts") {
    CHECK(trailer_length_from_segments({}) == 1);
    CHECK(trailer_length_from_segments({3.0}) == 2);
    CHECK(trailer_length_from_segments({1.0, 2.5, 7.0}) == 4);
    CHECK_THROWS(trailer_length_from_segments({2.0, 2.0}));  // not strictly increasing
}

TEST_CASE("alignment problems and results round-trip through their files") {
    std::mt19937_64 rng(64);
    const AlignmentProblem p = make_problem(2, 4, rng);
    const std::string ppath = "test_align_problem.json";
    const std::string apath = "test_align_out.json";
    {
        // hand-write the input document the loader expects
        FILE* f = std::fopen(ppath.c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fprintf(f, "{\"C\":[");
        for (int n = 0; n < 2; ++n) {
            std::fprintf(f, n ? ",[" : "[");
            for (int j = 0; j < 4; ++j)
                std::fprintf(f, "%s%.17g", j ? "," : "", p.similarity.at(n, j));
            std::fprintf(f, "]");
        }
        std::fprintf(f, "],\"L_nar\":[%.17g,%.17g],\"L_shot\":[%.17g,%.17g,%.17g,%.17g]}",
                     p.narration_durations[0], p.narration_durations[1], p.shot_durations[0],
                     p.shot_durations[1], p.shot_durations[2], p.shot_durations[3]);
        std::fclose(f);
    }
    const AlignmentProblem q = load_alignment_problem(ppath);
    CHECK(q.similarity.data == p.similarity.data);
    CHECK(q.narration_durations == p.narration_durations);
    CHECK(q.shot_durations == p.shot_durations);
    const Alignment a = align_narrations(q);
    save_alignment(apath, a);
    std::remove(ppath.c_str());
    std::remove(apath.c_str());
}
