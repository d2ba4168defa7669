#pragma once

#include <string>
#include <vector>

#include "ssmp/matrix.hpp"

namespace ssmp {

/// Narration-to-shot alignment input: similarity C (N narrations x J shots)
/// and the duration constraint data.
struct AlignmentProblem {
    Matrix similarity;                    // N x J
    std::vector<double> narration_durations;  // N
    std::vector<double> shot_durations;       // J

    void validate() const;
};

struct Alignment {
    /// assignments[n] is the 0-based shot index for narration n, strictly
    /// increasing across assigned narrations; unassigned narrations (only a
    /// suffix can be unassigned) are absent.
    std::vector<std::pair<int, int>> assignments;  // (narration, shot), 0-based
    double score = 0.0;
};

/// Maximizes cumulative similarity over monotone assignments where each
/// narration's duration fits its shot. Take/skip recurrence with
/// D[0][*] = 0 and D[*][0] = -inf; a shot whose duration is too short is
/// skipped. If no full assignment is feasible the longest feasible prefix
/// is returned. Ties prefer the smallest shot index during traceback
/// (later narrations minimized first).
Alignment align_narrations(const AlignmentProblem& problem);

/// Number of music segments delimited by interior cut points.
int trailer_length_from_segments(const std::vector<double>& boundaries);

AlignmentProblem load_alignment_problem(const std::string& path);
void save_alignment(const std::string& path, const Alignment& alignment);

}  // namespace ssmp
