#include "ssmp/align.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace ssmp {

void AlignmentProblem::validate() const {
    require(similarity.rows >= 1 && similarity.cols >= 1, "align: empty problem");
    require(static_cast<int>(narration_durations.size()) == similarity.rows,
            "align: narration duration count mismatch");
    require(static_cast<int>(shot_durations.size()) == similarity.cols,
            "align: shot duration count mismatch");
    for (double d : narration_durations) require(d > 0.0, "align: non-positive narration duration");
    for (double d : shot_durations) require(d > 0.0, "align: non-positive shot duration");
    require(similarity.all_finite(), "align: non-finite similarity");
}

Alignment align_narrations(const AlignmentProblem& problem) {
    problem.validate();
    const int N = problem.similarity.rows, J = problem.similarity.cols;
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    // D[n][j]: best score aligning narrations 1..n within shots 1..j.
    std::vector<std::vector<double>> D(N + 1, std::vector<double>(J + 1, neg_inf));
    for (int j = 0; j <= J; ++j) D[0][j] = 0.0;
    for (int n = 1; n <= N; ++n) {
        for (int j = 1; j <= J; ++j) {
            D[n][j] = D[n][j - 1];
            if (problem.shot_durations[j - 1] >= problem.narration_durations[n - 1] &&
                D[n - 1][j - 1] > neg_inf) {
                const double take = D[n - 1][j - 1] + problem.similarity.at(n - 1, j - 1);
                if (take > D[n][j]) D[n][j] = take;
            }
        }
    }

    // Longest feasible prefix, then its best score.
    int n_star = 0;
    for (int n = N; n >= 1; --n)
        if (D[n][J] > neg_inf) {
            n_star = n;
            break;
        }

    Alignment out;
    if (n_star == 0) return out;

    int j = 1;
    double best = D[n_star][J];
    for (int cand = 1; cand <= J; ++cand)
        if (D[n_star][cand] == best) {
            j = cand;
            break;  // smallest shot index among the maxima
        }
    out.score = best;

    int n = n_star;
    while (n >= 1) {
        if (j > 1 && D[n][j] == D[n][j - 1]) {
            --j;  // skip branch preferred on ties
        } else {
            out.assignments.emplace_back(n - 1, j - 1);
            --n;
            --j;
        }
    }
    std::reverse(out.assignments.begin(), out.assignments.end());
    return out;
}

int trailer_length_from_segments(const std::vector<double>& boundaries) {
    for (size_t i = 1; i < boundaries.size(); ++i)
        require(boundaries[i] > boundaries[i - 1],
                "trailer_length_from_segments: boundaries not strictly increasing");
    return static_cast<int>(boundaries.size()) + 1;
}

AlignmentProblem load_alignment_problem(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "load_alignment_problem: cannot open " + path);
    nlohmann::json j;
    is >> j;
    AlignmentProblem p;
    p.narration_durations = j.at("L_nar").get<std::vector<double>>();
    p.shot_durations = j.at("L_shot").get<std::vector<double>>();
    const auto rows = j.at("C").get<std::vector<std::vector<double>>>();
    const int N = static_cast<int>(p.narration_durations.size());
    const int J = static_cast<int>(p.shot_durations.size());
    require(static_cast<int>(rows.size()) == N, "load_alignment_problem: C row count mismatch");
    p.similarity = Matrix(N, J);
    for (int n = 0; n < N; ++n) {
        require(static_cast<int>(rows[n].size()) == J,
                "load_alignment_problem: C row " + std::to_string(n) + " width mismatch");
        for (int col = 0; col < J; ++col) p.similarity.at(n, col) = rows[n][col];
    }
    p.validate();
    return p;
}

void save_alignment(const std::string& path, const Alignment& alignment) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [n, j] : alignment.assignments)
        items.push_back({{"narration", n + 1}, {"shot", j + 1}});
    nlohmann::json out{{"assignments", items}, {"score", alignment.score}};
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_alignment: cannot open " + path);
    os << out.dump(2) << "\n";
}

}  // namespace ssmp
