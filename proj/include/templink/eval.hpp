#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "templink/common.hpp"

namespace templink {

struct AucReport {
    double auc = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    bool had_ties = false;
    // Integer Mann-Whitney tallies: auc = (2*wins + ties) / (2*P*N).
    std::uint64_t wins = 0, ties = 0;
};

// Mann-Whitney rank statistic with half credit for ties, computed by one
// sort; the tallies are exact integers. Throws when a class is absent.
AucReport auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct RankingSubmission {
    std::vector<std::size_t> order;  // pair indices, best first
    std::vector<double> scores;      // aligned with the input, not with `order`
};

// Descending by score, ties broken by ascending pair index. Throws on
// non-finite scores.
RankingSubmission rank_pairs(std::span<const double> scores);

struct ModelComparison {
    struct Entry {
        std::string name;
        AucReport report;
        bool best = false;
    };
    std::vector<Entry> entries;  // sorted by AUC descending
    bool tie_for_best = false;
};

ModelComparison compare_models(const std::vector<std::pair<std::string, AucReport>>& reports);

void write_submission_json(const std::string& path, const RankingSubmission& sub);
std::vector<std::size_t> read_submission_json(const std::string& path);
void write_scores_csv(const std::string& path, std::span<const double> scores,
                      std::span<const std::pair<std::int64_t, std::int64_t>> pairs);
void write_report_json(const std::string& path, const ModelComparison& cmp);

}  // namespace templink
