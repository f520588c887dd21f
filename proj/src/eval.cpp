#include "templink/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace templink {

AucReport auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw Error("auc: scores/labels size mismatch");
    AucReport r;
    for (auto l : labels) (l ? r.n_pos : r.n_neg) += 1;
    if (r.n_pos == 0 || r.n_neg == 0) throw Error("auc: both classes must be present");
    for (double s : scores)
        if (!std::isfinite(s)) throw Error("auc: non-finite score");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sweep ascending; every positive beats the negatives strictly below it,
    // and ties in a score group contribute pos*neg half-credit pairs.
    std::uint64_t neg_below = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        std::uint64_t pos_in = 0, neg_in = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (labels[idx[j]] ? pos_in : neg_in) += 1;
            ++j;
        }
        r.wins += pos_in * neg_below;
        r.ties += pos_in * neg_in;
        neg_below += neg_in;
        i = j;
    }
    r.had_ties = r.ties > 0;
    r.auc = static_cast<double>(2 * r.wins + r.ties) /
            (2.0 * static_cast<double>(r.n_pos) * static_cast<double>(r.n_neg));
    return r;
}

RankingSubmission rank_pairs(std::span<const double> scores) {
    for (double s : scores)
        if (!std::isfinite(s)) throw Error("rank_pairs: non-finite score");
    RankingSubmission sub;
    sub.scores.assign(scores.begin(), scores.end());
    sub.order.resize(scores.size());
    std::iota(sub.order.begin(), sub.order.end(), 0);
    std::sort(sub.order.begin(), sub.order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return sub;
}

ModelComparison compare_models(const std::vector<std::pair<std::string, AucReport>>& reports) {
    if (reports.empty()) throw Error("compare_models: no reports");
    ModelComparison cmp;
    for (const auto& [name, rep] : reports) cmp.entries.push_back({name, rep, false});
    std::stable_sort(cmp.entries.begin(), cmp.entries.end(),
                     [](const auto& a, const auto& b) { return a.report.auc > b.report.auc; });
    const double best = cmp.entries.front().report.auc;
    std::size_t n_best = 0;
    for (auto& e : cmp.entries)
        if (e.report.auc == best) {
            e.best = true;
            ++n_best;
        }
    cmp.tie_for_best = n_best > 1;
    return cmp;
}

void write_submission_json(const std::string& path, const RankingSubmission& sub) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write submission: " + path);
    os << '[';
    for (std::size_t i = 0; i < sub.order.size(); ++i) {
        if (i) os << ',';
        if (i % 64 == 0) os << '\n';
        os << sub.order[i];
    }
    os << "\n]\n";
    if (!os) throw Error("short write on submission: " + path);
}

std::vector<std::size_t> read_submission_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open submission: " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    return j.get<std::vector<std::size_t>>();
}

void write_scores_csv(const std::string& path, std::span<const double> scores,
                      std::span<const std::pair<std::int64_t, std::int64_t>> pairs) {
    if (!pairs.empty() && pairs.size() != scores.size())
        throw Error("write_scores_csv: pairs/scores size mismatch");
    std::ofstream os(path);
    if (!os) throw Error("cannot write scores: " + path);
    os << "pair_index,u,v,score\n";
    os.precision(17);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        os << i << ',';
        if (!pairs.empty())
            os << pairs[i].first << ',' << pairs[i].second << ',';
        else
            os << ",,";
        os << scores[i] << '\n';
    }
}

void write_report_json(const std::string& path, const ModelComparison& cmp) {
    nlohmann::json j;
    j["models"] = nlohmann::json::array();
    for (const auto& e : cmp.entries) {
        j["models"].push_back({{"name", e.name},
                               {"auc", e.report.auc},
                               {"n_pos", e.report.n_pos},
                               {"n_neg", e.report.n_neg},
                               {"had_ties", e.report.had_ties},
                               {"best", e.best}});
    }
    j["tie_for_best"] = cmp.tie_for_best;
    j["tie_handling"] = "half credit per tied positive-negative pair";
    std::ofstream os(path);
    if (!os) throw Error("cannot write report: " + path);
    os << j.dump(2) << '\n';
}

}  // namespace templink
