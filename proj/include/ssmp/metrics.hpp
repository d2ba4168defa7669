#pragma once

#include <string>
#include <vector>

namespace ssmp {

/// Shot index sequences are 1-based here (matching the serialized outputs).
using IndexSequence = std::vector<int>;

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // empty pred or truth
};

/// Set-based precision/recall/F1 with an allowable positional deviation
/// radius R: a predicted index matches if it lies within R of some ground
/// truth index. Duplicates are deduplicated on both sides.
PrfResult prf(const IndexSequence& pred, const IndexSequence& truth, int radius);

/// Unit-cost insert/delete/substitute edit distance.
long levenshtein(const IndexSequence& a, const IndexSequence& b);

/// Fraction of unordered pairs of shots common to both sequences (first
/// occurrences) whose relative order agrees. Returns 0 with fewer than two
/// common shots.
double pairwise_agreement(const IndexSequence& pred, const IndexSequence& truth);

struct MetricReport {
    std::string id;
    int radius = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long levenshtein = 0;
    double agreement = 0.0;
};

MetricReport evaluate_pair(const std::string& id, const IndexSequence& pred,
                           const IndexSequence& truth, int radius);

/// Aggregate CSV: header `id,precision,recall,f1,ld,aa`.
void save_metric_csv(const std::string& path, const std::vector<MetricReport>& reports);
void save_metric_json(const std::string& path, const std::vector<MetricReport>& reports);

}  // namespace ssmp
