#include "fedbench/stats.hpp"

#include "fedbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fedbench {

namespace {

double two_sided_normal_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

// Placement values: for each positive, the fraction of negatives it outranks
// (ties half); for each negative, the fraction of positives above it.
struct Placements {
    std::vector<double> v10;  // per positive, original order
    std::vector<double> v01;  // per negative, original order
    double auc = 0.0;
};

Placements placement_values(std::span<const double> scores, std::span<const int> labels) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    }
    if (pos.empty() || neg.empty()) {
        throw ComputeError("delong_test: both classes required");
    }
    std::vector<double> pos_sorted = pos, neg_sorted = neg;
    std::sort(pos_sorted.begin(), pos_sorted.end());
    std::sort(neg_sorted.begin(), neg_sorted.end());
    const double m = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());

    Placements out;
    out.v10.reserve(pos.size());
    out.v01.reserve(neg.size());
    for (double x : pos) {
        const auto lo = std::lower_bound(neg_sorted.begin(), neg_sorted.end(), x);
        const auto hi = std::upper_bound(neg_sorted.begin(), neg_sorted.end(), x);
        const double less = static_cast<double>(lo - neg_sorted.begin());
        const double tied = static_cast<double>(hi - lo);
        out.v10.push_back((less + 0.5 * tied) / n);
    }
    for (double y : neg) {
        const auto lo = std::lower_bound(pos_sorted.begin(), pos_sorted.end(), y);
        const auto hi = std::upper_bound(pos_sorted.begin(), pos_sorted.end(), y);
        const double greater = static_cast<double>(pos_sorted.end() - hi);
        const double tied = static_cast<double>(hi - lo);
        out.v01.push_back((greater + 0.5 * tied) / m);
    }
    double sum = 0.0;
    for (double v : out.v10) sum += v;
    out.auc = sum / m;
    return out;
}

double sample_cov(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (xs[i] - mx) * (ys[i] - my);
    return acc / static_cast<double>(n - 1);
}

}  // namespace

TestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                       std::span<const int> labels) {
    if (scores_a.size() != labels.size() || scores_b.size() != labels.size()) {
        throw ComputeError("delong_test: length mismatch");
    }
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y == 1;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos < 2 || n_neg < 2) {
        throw ComputeError("delong_test: needs at least 2 examples of each class");
    }

    const Placements pa = placement_values(scores_a, labels);
    const Placements pb = placement_values(scores_b, labels);

    const double m = static_cast<double>(n_pos);
    const double n = static_cast<double>(n_neg);
    const double var = (sample_cov(pa.v10, pa.v10) + sample_cov(pb.v10, pb.v10) -
                        2.0 * sample_cov(pa.v10, pb.v10)) /
                           m +
                       (sample_cov(pa.v01, pa.v01) + sample_cov(pb.v01, pb.v01) -
                        2.0 * sample_cov(pa.v01, pb.v01)) /
                           n;

    TestResult r;
    r.test_name = "delong";
    if (var <= 0.0) {
        if (pa.auc == pb.auc) {
            r.statistic = 0.0;
            r.p_value = 1.0;
            r.degenerate = true;
            r.significant = false;
            return r;
        }
        throw ComputeError("delong_test: degenerate variance with unequal AUCs");
    }
    r.statistic = (pa.auc - pb.auc) / std::sqrt(var);
    r.p_value = two_sided_normal_p(r.statistic);
    r.significant = r.p_value < r.alpha;
    return r;
}

TestResult wilcoxon_signed_rank(const PairedAucSamples& pairs, std::size_t exact_limit) {
    if (pairs.auc_a.size() != pairs.auc_b.size()) {
        throw ComputeError("wilcoxon_signed_rank: length mismatch");
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < pairs.auc_a.size(); ++i) {
        const double d = pairs.auc_a[i] - pairs.auc_b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) {
        throw ComputeError("wilcoxon_signed_rank: all differences are zero (no information)");
    }
    if (diffs.size() < 2) {
        throw ComputeError("wilcoxon_signed_rank: fewer than 2 nonzero differences");
    }
    const std::size_t n = diffs.size();

    // Ranks of |d| with mid-ranks for ties, stored doubled so they stay
    // integers (a mid-rank is always a multiple of 1/2).
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<std::uint64_t> doubled_rank(n, 0);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        // positions i+1 .. j (1-based); mid-rank doubled = (i+1) + j
        const std::uint64_t dr = static_cast<std::uint64_t>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) doubled_rank[order[k]] = dr;
        tie_sizes.push_back(j - i);
        i = j;
    }

    std::uint64_t w_plus2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus2 += doubled_rank[i];
    }
    const std::uint64_t total2 = static_cast<std::uint64_t>(n) * (n + 1);
    const std::uint64_t w_minus2 = total2 - w_plus2;
    const std::uint64_t w2 = std::min(w_plus2, w_minus2);

    TestResult r;
    r.test_name = "wilcoxon";
    r.statistic = static_cast<double>(w2) / 2.0;

    if (n <= exact_limit) {
        // Exact null distribution of W+ (doubled) over all 2^n sign
        // assignments, via subset-sum counting.
        std::vector<std::uint64_t> dist(total2 + 1, 0);
        dist[0] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t dr = doubled_rank[i];
            for (std::uint64_t v = total2; v >= dr; --v) {
                dist[v] += dist[v - dr];
            }
        }
        std::uint64_t count = 0;
        for (std::uint64_t v = 0; v <= total2; ++v) {
            if (std::min(v, total2 - v) <= w2) count += dist[v];
        }
        r.p_value = static_cast<double>(count) / std::pow(2.0, static_cast<double>(n));
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double sigma2 = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
        for (std::size_t t : tie_sizes) {
            const double td = static_cast<double>(t);
            sigma2 -= (td * td * td - td) / 48.0;
        }
        if (sigma2 <= 0.0) {
            throw ComputeError("wilcoxon_signed_rank: zero variance");
        }
        const double w_plus = static_cast<double>(w_plus2) / 2.0;
        // Continuity correction toward the mean.
        double num = w_plus - mean;
        num -= num > 0.0 ? 0.5 : (num < 0.0 ? -0.5 : 0.0);
        const double z = num / std::sqrt(sigma2);
        r.p_value = std::min(1.0, two_sided_normal_p(z));
    }
    r.significant = r.p_value < r.alpha;
    return r;
}

KappaResult weighted_kappa(const RaterLabels& raters) {
    if (raters.categories < 2) {
        throw ValidationError("weighted_kappa: needs at least 2 categories");
    }
    if (raters.a.size() != raters.b.size() || raters.a.empty()) {
        throw ValidationError("weighted_kappa: rater vectors must be equal-length and non-empty");
    }
    const std::size_t c = raters.categories;
    std::vector<double> observed(c * c, 0.0);
    for (std::size_t i = 0; i < raters.a.size(); ++i) {
        const int x = raters.a[i];
        const int y = raters.b[i];
        if (x < 0 || y < 0 || static_cast<std::size_t>(x) >= c ||
            static_cast<std::size_t>(y) >= c) {
            throw ValidationError("weighted_kappa: category index out of range");
        }
        observed[static_cast<std::size_t>(x) * c + static_cast<std::size_t>(y)] += 1.0;
    }
    const double n = static_cast<double>(raters.a.size());
    for (double& o : observed) o /= n;

    std::vector<double> pa(c, 0.0), pb(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            pa[i] += observed[i * c + j];
            pb[j] += observed[i * c + j];
        }
    }

    const double denom_scale = static_cast<double>((c - 1) * (c - 1));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double di = static_cast<double>(i) - static_cast<double>(j);
            const double w = di * di / denom_scale;
            num += w * observed[i * c + j];
            den += w * pa[i] * pb[j];
        }
    }
    if (den == 0.0) {
        return {1.0, true};  // both raters constant and equal
    }
    return {1.0 - num / den, false};
}

std::vector<TestResult> bonferroni(std::vector<TestResult> results, std::size_t family_size) {
    if (family_size < 1) {
        throw ValidationError("bonferroni: family_size must be >= 1");
    }
    for (TestResult& r : results) {
        r.alpha = r.alpha / static_cast<double>(family_size);
        r.corrected = true;
        r.significant = r.p_value < r.alpha;
    }
    return results;
}

namespace {

PairedAucSamples paired_local_auc(const ModelEvaluations& ev, const std::string& key_a,
                                  const std::string& key_b, const std::string& label) {
    auto auc_for = [&](const std::string& key, int client) {
        const std::string tag = key == "ll" ? "ll_" + std::to_string(client) : key;
        const auto model_it = ev.local_validation_auc.find(tag);
        if (model_it == ev.local_validation_auc.end()) {
            throw ValidationError("significance plan '" + label + "': missing evaluation for " +
                                  tag);
        }
        const auto client_it = model_it->second.find(client);
        if (client_it == model_it->second.end()) {
            throw ValidationError("significance plan '" + label + "': model " + tag +
                                  " has no AUC for client " + std::to_string(client));
        }
        return client_it->second;
    };

    // Clients come from the first non-local model's AUC map, or from the
    // ll_* tags when both sides are local.
    std::vector<int> clients;
    const std::string probe = key_a == "ll" ? key_b : key_a;
    if (probe == "ll") {
        throw ValidationError("significance plan '" + label + "': ll vs ll is not a comparison");
    }
    const auto probe_it = ev.local_validation_auc.find(probe);
    if (probe_it == ev.local_validation_auc.end()) {
        throw ValidationError("significance plan '" + label + "': missing evaluation for " +
                              probe);
    }
    for (const auto& [client, auc] : probe_it->second) clients.push_back(client);

    PairedAucSamples pairs;
    for (int client : clients) {
        pairs.auc_a.push_back(auc_for(key_a, client));
        pairs.auc_b.push_back(auc_for(key_b, client));
    }
    return pairs;
}

}  // namespace

SignificanceTable build_significance_table(const ModelEvaluations& evaluations,
                                           const std::vector<PlannedComparison>& plan,
                                           double alpha) {
    SignificanceTable table;
    for (const PlannedComparison& cmp : plan) {
        TestResult result;
        std::string setting;
        if (cmp.kind == ComparisonKind::WilcoxonLocalValidation) {
            setting = "local_validation";
            result = wilcoxon_signed_rank(
                paired_local_auc(evaluations, cmp.model_a, cmp.model_b, cmp.label));
        } else {
            setting = "centralized_test";
            auto scores_for = [&](const std::string& tag) -> const std::vector<double>& {
                const auto it = evaluations.test_scores.find(tag);
                if (it == evaluations.test_scores.end()) {
                    throw ValidationError("significance plan '" + cmp.label +
                                          "': missing test scores for " + tag);
                }
                return it->second;
            };
            result = delong_test(scores_for(cmp.model_a), scores_for(cmp.model_b),
                                 evaluations.test_labels);
        }
        result.alpha = alpha;
        result.significant = result.p_value < result.alpha;
        if (cmp.family_size > 1) {
            result = bonferroni({result}, cmp.family_size).front();
        }
        table.rows.push_back({setting, cmp.label, result, cmp.footnote});
    }
    return table;
}

std::vector<PlannedComparison> standard_comparison_plan(const std::vector<int>& client_ids) {
    std::vector<PlannedComparison> plan;
    plan.push_back({"CL vs LL", ComparisonKind::WilcoxonLocalValidation, "cl", "ll", 3, "*"});
    plan.push_back({"FL vs LL", ComparisonKind::WilcoxonLocalValidation, "fl", "ll", 3, "*"});
    plan.push_back({"CL vs FL", ComparisonKind::WilcoxonLocalValidation, "cl", "fl", 3, "*"});
    plan.push_back({"CL vs FL", ComparisonKind::DeLongPooledTest, "cl", "fl", 1, "†"});
    const std::size_t family = client_ids.size();
    for (int k : client_ids) {
        plan.push_back({"CL vs LL_" + std::to_string(k), ComparisonKind::DeLongPooledTest, "cl",
                        "ll_" + std::to_string(k), family, "‡"});
    }
    for (int k : client_ids) {
        plan.push_back({"FL vs LL_" + std::to_string(k), ComparisonKind::DeLongPooledTest, "fl",
                        "ll_" + std::to_string(k), family, "‡"});
    }
    return plan;
}

}  // namespace fedbench
