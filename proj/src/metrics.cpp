#include "ssmp/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ssmp/matrix.hpp"

namespace ssmp {

PrfResult prf(const IndexSequence& pred, const IndexSequence& truth, int radius) {
    require(radius >= 0, "prf: negative radius");
    for (int v : pred) require(v >= 1, "prf: non-positive predicted index");
    for (int v : truth) require(v >= 1, "prf: non-positive truth index");
    PrfResult r;
    if (pred.empty() || truth.empty()) {
        r.degenerate = true;
        return r;
    }
    const std::set<int> ps(pred.begin(), pred.end());
    const std::set<int> ts(truth.begin(), truth.end());
    auto near = [&](int x, const std::set<int>& s) {
        auto it = s.lower_bound(x - radius);
        return it != s.end() && *it <= x + radius;
    };
    int hit_p = 0;
    for (int p : ps) hit_p += near(p, ts);
    int hit_t = 0;
    for (int g : ts) hit_t += near(g, ps);
    r.precision = static_cast<double>(hit_p) / static_cast<double>(ps.size());
    r.recall = static_cast<double>(hit_t) / static_cast<double>(ts.size());
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

long levenshtein(const IndexSequence& a, const IndexSequence& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<long> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<long>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<long>(i);
        for (size_t j = 1; j <= m; ++j) {
            const long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double pairwise_agreement(const IndexSequence& pred, const IndexSequence& truth) {
    // first-occurrence position of every shot present in both sequences
    auto first_pos = [](const IndexSequence& s) {
        std::vector<std::pair<int, int>> pos;  // (shot, first index)
        std::set<int> seen;
        for (size_t i = 0; i < s.size(); ++i)
            if (seen.insert(s[i]).second) pos.emplace_back(s[i], static_cast<int>(i));
        return pos;
    };
    const auto pp = first_pos(pred);
    const auto tp = first_pos(truth);
    std::vector<std::pair<int, int>> common;  // (pred pos, truth pos) per common shot
    for (const auto& [shot, ppos] : pp)
        for (const auto& [tshot, tpos] : tp)
            if (shot == tshot) common.emplace_back(ppos, tpos);
    if (common.size() < 2) return 0.0;
    long concordant = 0, total = 0;
    for (size_t x = 0; x < common.size(); ++x)
        for (size_t y = x + 1; y < common.size(); ++y) {
            ++total;
            const bool p_order = common[x].first < common[y].first;
            const bool t_order = common[x].second < common[y].second;
            if (p_order == t_order) ++concordant;
        }
    return static_cast<double>(concordant) / static_cast<double>(total);
}

MetricReport evaluate_pair(const std::string& id, const IndexSequence& pred,
                           const IndexSequence& truth, int radius) {
    MetricReport r;
    r.id = id;
    r.radius = radius;
    const PrfResult p = prf(pred, truth, radius);
    r.precision = p.precision;
    r.recall = p.recall;
    r.f1 = p.f1;
    r.levenshtein = levenshtein(pred, truth);
    r.agreement = pairwise_agreement(pred, truth);
    return r;
}

void save_metric_csv(const std::string& path, const std::vector<MetricReport>& reports) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_metric_csv: cannot open " + path);
    os << "id,precision,recall,f1,ld,aa\n";
    for (const auto& r : reports)
        os << r.id << "," << r.precision << "," << r.recall << "," << r.f1 << "," << r.levenshtein
           << "," << r.agreement << "\n";
}

void save_metric_json(const std::string& path, const std::vector<MetricReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports)
        j.push_back({{"id", r.id},
                     {"radius", r.radius},
                     {"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"ld", r.levenshtein},
                     {"aa", r.agreement}});
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_metric_json: cannot open " + path);
    os << j.dump(2) << "\n";
}

}  // namespace ssmp
