#include "fedbench/metrics.hpp"

#include "fedbench/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fedbench {

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
    if (scores.size() != labels.size()) {
        throw ComputeError("confusion_at: length mismatch");
    }
    if (scores.empty()) {
        throw ValidationError("confusion_at: empty input");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            predicted ? ++c.tp : ++c.fn;
        } else {
            predicted ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

MetricReport metrics_from(const ConfusionCounts& c) {
    MetricReport r;
    r.n_pos = c.tp + c.fn;
    r.n_neg = c.tn + c.fp;
    const double tp = static_cast<double>(c.tp);
    const double fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn);
    const double fn = static_cast<double>(c.fn);

    const double total = tp + fp + tn + fn;
    if (total > 0.0) {
        r.accuracy = (tp + tn) / total;
    } else {
        r.degenerate = true;
    }
    if (c.tp + c.fn > 0) {
        r.sensitivity = tp / (tp + fn);
    } else {
        r.degenerate = true;
    }
    if (c.tn + c.fp > 0) {
        r.specificity = tn / (tn + fp);
    } else {
        r.degenerate = true;
    }
    if (c.tp + c.fp > 0) {
        r.precision = tp / (tp + fp);
    } else {
        r.degenerate = true;
    }
    if (r.precision + r.sensitivity > 0.0) {
        r.f1 = 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity);
    } else {
        r.degenerate = true;
    }
    r.balanced_accuracy = 0.5 * (r.sensitivity + r.specificity);
    r.youden_j = r.sensitivity + r.specificity - 1.0;
    return r;
}

namespace {

struct ScoredLabel {
    double score;
    int label;
};

std::vector<ScoredLabel> sorted_by_score(std::span<const double> scores,
                                         std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ComputeError("roc: length mismatch");
    }
    std::vector<ScoredLabel> v(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) v[i] = {scores[i], labels[i]};
    std::sort(v.begin(), v.end(),
              [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    return v;
}

}  // namespace

RocResult roc_and_auc(std::span<const double> scores, std::span<const int> labels) {
    auto v = sorted_by_score(scores, labels);
    std::size_t n_pos = 0;
    for (const auto& s : v) n_pos += s.label == 1;
    const std::size_t n_neg = v.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ComputeError("roc_and_auc: AUC undefined for single-class labels");
    }

    // Pair counting over tie groups, ascending: negatives strictly below each
    // positive score a full pair, ties half a pair.
    std::uint64_t pairs_above = 0;
    std::uint64_t pairs_tied = 0;
    std::size_t neg_below = 0;
    // ROC sweep from the high end; collect cumulative counts per unique score.
    RocResult out;
    std::vector<std::pair<std::size_t, std::size_t>> group_counts;  // (pos, neg) per group asc
    std::vector<double> group_scores;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        std::size_t gp = 0, gn = 0;
        while (j < v.size() && v[j].score == v[i].score) {
            v[j].label == 1 ? ++gp : ++gn;
            ++j;
        }
        pairs_above += static_cast<std::uint64_t>(gp) * neg_below;
        pairs_tied += static_cast<std::uint64_t>(gp) * gn;
        neg_below += gn;
        group_counts.emplace_back(gp, gn);
        group_scores.push_back(v[i].score);
        i = j;
    }
    out.auc = (2.0 * static_cast<double>(pairs_above) + static_cast<double>(pairs_tied)) /
              (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));

    out.curve.points.push_back({group_scores.back() + 1.0, 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t g = group_counts.size(); g-- > 0;) {
        tp += group_counts[g].first;
        fp += group_counts[g].second;
        out.curve.points.push_back({group_scores[g],
                                    static_cast<double>(fp) / static_cast<double>(n_neg),
                                    static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    return out;
}

ThresholdChoice optimize_threshold(std::span<const double> scores, std::span<const int> labels,
                                   ThresholdSource source) {
    auto v = sorted_by_score(scores, labels);
    std::size_t n_pos = 0;
    for (const auto& s : v) n_pos += s.label == 1;
    const std::size_t n_neg = v.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ComputeError("optimize_threshold: threshold undefined for single-class labels");
    }

    // Candidates ascending: below the min, midpoints of consecutive unique
    // scores, above the max. Walking upward, crossing a score group moves its
    // members from predicted-positive to predicted-negative.
    std::vector<double> unique_scores;
    std::vector<std::pair<std::size_t, std::size_t>> group_counts;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        std::size_t gp = 0, gn = 0;
        while (j < v.size() && v[j].score == v[i].score) {
            v[j].label == 1 ? ++gp : ++gn;
            ++j;
        }
        unique_scores.push_back(v[i].score);
        group_counts.emplace_back(gp, gn);
        i = j;
    }

    std::size_t tp = n_pos, fp = n_neg;  // everything predicted positive
    ThresholdChoice best;
    best.source = source;
    bool first = true;
    auto consider = [&](double threshold) {
        const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double spec =
            static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
        const double j = sens + spec - 1.0;
        if (first || j > best.achieved_j) {
            best.threshold = threshold;
            best.achieved_j = j;
            first = false;
        }
    };
    consider(unique_scores.front() - 1.0);
    for (std::size_t g = 0; g + 1 < unique_scores.size(); ++g) {
        tp -= group_counts[g].first;
        fp -= group_counts[g].second;
        consider(0.5 * (unique_scores[g] + unique_scores[g + 1]));
    }
    tp = 0;
    fp = 0;
    consider(unique_scores.back() + 1.0);
    return best;
}

}  // namespace fedbench
