#include "fedbench/stats.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/metrics.hpp"
#include "fedbench/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace fedbench;

namespace {

// From-definition DeLong oracle: placement values by double loops, sample
// covariances by the textbook formula. Kept independent of the library path.
struct DelongOracle {
    double auc_a = 0.0, auc_b = 0.0, z = 0.0;
};

DelongOracle delong_oracle(const std::vector<double>& sa, const std::vector<double>& sb,
                           const std::vector<int>& labels) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(i);
    }
    const double m = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());
    auto kernel = [](double x, double y) { return x > y ? 1.0 : (x == y ? 0.5 : 0.0); };

    auto placements = [&](const std::vector<double>& s) {
        std::vector<double> v10(pos.size(), 0.0), v01(neg.size(), 0.0);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            for (std::size_t j = 0; j < neg.size(); ++j) {
                const double k = kernel(s[pos[i]], s[neg[j]]);
                v10[i] += k / n;
                v01[j] += k / m;
            }
        }
        return std::pair{v10, v01};
    };
    auto [v10a, v01a] = placements(sa);
    auto [v10b, v01b] = placements(sb);

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto cov = [&](const std::vector<double>& x, const std::vector<double>& y) {
        const double mx = mean(x), my = mean(y);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
        return s / static_cast<double>(x.size() - 1);
    };

    DelongOracle out;
    out.auc_a = mean(v10a);
    out.auc_b = mean(v10b);
    const double var = (cov(v10a, v10a) + cov(v10b, v10b) - 2.0 * cov(v10a, v10b)) / m +
                       (cov(v01a, v01a) + cov(v01b, v01b) - 2.0 * cov(v01a, v01b)) / n;
    out.z = (out.auc_a - out.auc_b) / std::sqrt(var);
    return out;
}

// Brute-force exact Wilcoxon: enumerate all 2^K sign assignments directly.
double wilcoxon_oracle_p(const std::vector<double>& diffs_in) {
    std::vector<double> diffs;
    for (double d : diffs_in) {
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    // doubled mid-ranks of |d|
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(diffs[a]) < std::abs(diffs[b]);
    });
    std::vector<std::uint64_t> rank2(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = i + 1 + j;
        i = j;
    }
    const std::uint64_t total2 = static_cast<std::uint64_t>(n) * (n + 1);
    std::uint64_t w_plus2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus2 += rank2[i];
    }
    const std::uint64_t w_obs = std::min(w_plus2, total2 - w_plus2);

    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::uint64_t w2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) w2 += rank2[i];
        }
        if (std::min(w2, total2 - w2) <= w_obs) ++count;
    }
    return static_cast<double>(count) / std::pow(2.0, static_cast<double>(n));
}

// Plain unweighted Cohen's kappa for the C = 2 cross-check.
double unweighted_kappa(const RaterLabels& r) {
    const double n = static_cast<double>(r.a.size());
    double agree = 0.0;
    std::vector<double> pa(r.categories, 0.0), pb(r.categories, 0.0);
    for (std::size_t i = 0; i < r.a.size(); ++i) {
        agree += r.a[i] == r.b[i];
        pa[static_cast<std::size_t>(r.a[i])] += 1.0;
        pb[static_cast<std::size_t>(r.b[i])] += 1.0;
    }
    const double po = agree / n;
    double pe = 0.0;
    for (std::size_t c = 0; c < r.categories; ++c) pe += (pa[c] / n) * (pb[c] / n);
    return (po - pe) / (1.0 - pe);
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("delong on identical score vectors is degenerate z=0 p=1") {
    const std::vector<double> scores{0.1, 0.8, 0.3, 0.9, 0.2, 0.7};
    const std::vector<int> labels{0, 1, 0, 1, 0, 1};
    const TestResult r = delong_test(scores, scores, labels);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.degenerate);
    CHECK_FALSE(r.significant);
}

TEST_CASE("delong antisymmetry under model swap") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 20 + rng.uniform_index(80);
        std::vector<double> a(n), b(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = i % 2;
            a[i] = rng.normal(labels[i] == 1 ? 0.8 : 0.0, 1.0);
            b[i] = rng.normal(labels[i] == 1 ? 0.3 : 0.0, 1.0);
        }
        const TestResult ab = delong_test(a, b, labels);
        const TestResult ba = delong_test(b, a, labels);
        CHECK(ab.statistic == -ba.statistic);
        CHECK(ab.p_value == ba.p_value);
    }
}

TEST_CASE("delong matches the from-definition oracle") {
    Rng rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 20 + rng.uniform_index(281);  // up to 300
        std::vector<double> a(n), b(n);
        std::vector<int> labels(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            (labels[i] == 1 ? pos : neg) = true;
            // one well-separated model, one random-score model, some ties
            a[i] = labels[i] == 1 ? rng.normal(1.2, 0.8) : rng.normal(0.0, 0.8);
            b[i] = static_cast<double>(rng.uniform_index(40)) / 40.0;
        }
        if (!pos) labels[0] = 1;
        if (!neg) labels[1] = 0;

        const TestResult r = delong_test(a, b, labels);
        const DelongOracle oracle = delong_oracle(a, b, labels);
        CHECK(std::abs(r.statistic - oracle.z) < 1e-10);

        // placement AUC agrees with the ROC module
        CHECK(std::abs(oracle.auc_a - roc_and_auc(a, labels).auc) < 1e-12);
        CHECK(std::abs(oracle.auc_b - roc_and_auc(b, labels).auc) < 1e-12);
    }
}

TEST_CASE("wilcoxon all-positive K=8 gives the exact minimum p") {
    PairedAucSamples pairs;
    for (int i = 0; i < 8; ++i) {
        pairs.auc_a.push_back(0.8 + 0.01 * i);
        pairs.auc_b.push_back(0.7 + 0.005 * i);
    }
    const TestResult r = wilcoxon_signed_rank(pairs);
    CHECK(r.p_value == 0.0078125);  // 2/256
    CHECK(r.statistic == 0.0);      // W- = 0
}

TEST_CASE("wilcoxon symmetric two-pair case has p = 1") {
    PairedAucSamples pairs;
    pairs.auc_a = {0.6, 0.4};
    pairs.auc_b = {0.5, 0.5};  // differences +0.1, -0.1
    const TestResult r = wilcoxon_signed_rank(pairs);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("wilcoxon drops zeros and errors when nothing remains") {
    PairedAucSamples all_zero;
    all_zero.auc_a = {0.5, 0.6};
    all_zero.auc_b = {0.5, 0.6};
    CHECK_THROWS_AS(wilcoxon_signed_rank(all_zero), ComputeError);

    PairedAucSamples one_left;
    one_left.auc_a = {0.5, 0.7};
    one_left.auc_b = {0.5, 0.6};
    CHECK_THROWS_AS(wilcoxon_signed_rank(one_left), ComputeError);
}

TEST_CASE("wilcoxon exact p equals the enumeration oracle bit for bit") {
    Rng rng(79);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(11);  // K <= 12
        PairedAucSamples pairs;
        std::vector<double> diffs;
        for (std::size_t i = 0; i < k; ++i) {
            // dyadic grid: differences reproduce exactly and tie often
            const double d =
                (static_cast<double>(rng.uniform_index(9)) - 4.0) / 16.0;
            pairs.auc_a.push_back(0.5 + d);
            pairs.auc_b.push_back(0.5);
            diffs.push_back(d);
        }
        std::size_t nonzero = 0;
        for (double d : diffs) nonzero += d != 0.0;
        if (nonzero < 2) continue;
        const TestResult r = wilcoxon_signed_rank(pairs);
        CHECK(r.p_value == wilcoxon_oracle_p(diffs));
        ++checked;
    }
    CHECK(checked > 80);
}

TEST_CASE("wilcoxon p is invariant under negating all differences") {
    Rng rng(83);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 3 + rng.uniform_index(10);
        PairedAucSamples pairs, negated;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = rng.normal(0.05, 0.1);
            pairs.auc_a.push_back(0.5 + d);
            pairs.auc_b.push_back(0.5);
            negated.auc_a.push_back(0.5 - d);
            negated.auc_b.push_back(0.5);
        }
        CHECK(wilcoxon_signed_rank(pairs).p_value ==
              wilcoxon_signed_rank(negated).p_value);
    }
}

TEST_CASE("wilcoxon normal approximation tracks the exact branch at K=15") {
    Rng rng(89);
    for (int trial = 0; trial < 20; ++trial) {
        PairedAucSamples pairs;
        for (int i = 0; i < 15; ++i) {
            pairs.auc_a.push_back(0.5 + rng.normal(0.02, 0.08));
            pairs.auc_b.push_back(0.5);
        }
        const double exact = wilcoxon_signed_rank(pairs, 20).p_value;
        const double approx = wilcoxon_signed_rank(pairs, 0).p_value;
        CHECK(std::abs(exact - approx) < 0.02);
    }
}

TEST_CASE("weighted kappa on identical raters is exactly 1") {
    RaterLabels r;
    r.categories = 4;
    r.a = {0, 1, 2, 3, 1, 2, 0, 3};
    r.b = r.a;
    const KappaResult k = weighted_kappa(r);
    CHECK(k.value == 1.0);
    CHECK_FALSE(k.degenerate);
}

TEST_CASE("weighted kappa matches the hand-built confusion table") {
    // A cycles 0,1,2; B = A+1 mod 3. O has mass 1/3 on (0,1),(1,2),(2,0);
    // quadratic weights 1/4, 1/4, 1 -> num = 1/2. Uniform marginals ->
    // den = sum(w)/9 = 3/9. kappa = 1 - (1/2)/(1/3) = -0.5.
    RaterLabels r;
    r.categories = 3;
    for (int rep = 0; rep < 30; ++rep) {
        for (int c = 0; c < 3; ++c) {
            r.a.push_back(c);
            r.b.push_back((c + 1) % 3);
        }
    }
    const KappaResult k = weighted_kappa(r);
    CHECK(k.value == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("weighted kappa of independent raters tends to zero") {
    Rng rng(97);
    RaterLabels r;
    r.categories = 5;
    for (int i = 0; i < 10000; ++i) {
        r.a.push_back(static_cast<int>(rng.uniform_index(5)));
        r.b.push_back(static_cast<int>(rng.uniform_index(5)));
    }
    CHECK(std::abs(weighted_kappa(r).value) < 0.05);
}

TEST_CASE("quadratic-weighted kappa equals unweighted kappa for C=2") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        RaterLabels r;
        r.categories = 2;
        for (int i = 0; i < 200; ++i) {
            const int truth = rng.uniform() < 0.4 ? 1 : 0;
            r.a.push_back(rng.uniform() < 0.8 ? truth : 1 - truth);
            r.b.push_back(rng.uniform() < 0.7 ? truth : 1 - truth);
        }
        CHECK(weighted_kappa(r).value ==
              doctest::Approx(unweighted_kappa(r)).epsilon(1e-12));
    }
}

TEST_CASE("weighted kappa is at most 1 and degenerates to 1 for constant equal raters") {
    Rng rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        RaterLabels r;
        r.categories = 3;
        for (int i = 0; i < 60; ++i) {
            r.a.push_back(static_cast<int>(rng.uniform_index(3)));
            r.b.push_back(static_cast<int>(rng.uniform_index(3)));
        }
        CHECK(weighted_kappa(r).value <= 1.0);
    }
    RaterLabels constant;
    constant.categories = 3;
    constant.a = {1, 1, 1};
    constant.b = {1, 1, 1};
    const KappaResult k = weighted_kappa(constant);
    CHECK(k.value == 1.0);
    CHECK(k.degenerate);
}

TEST_CASE("bonferroni recomputes significance against alpha/family") {
    TestResult r1;
    r1.test_name = "wilcoxon";
    r1.p_value = 0.0156;
    TestResult r2 = r1;
    r2.p_value = 0.3033;

    const auto fam3 = bonferroni({r1}, 3);
    CHECK(fam3[0].alpha == doctest::Approx(0.05 / 3.0).epsilon(1e-12));
    CHECK(fam3[0].significant);  // 0.0156 < 0.01667
    CHECK(fam3[0].corrected);
    CHECK(fam3[0].p_value == 0.0156);  // p untouched

    const auto fam8 = bonferroni({r2}, 8);
    CHECK_FALSE(fam8[0].significant);

    TestResult r3;
    r3.p_value = 0.03;
    r3.significant = r3.p_value < r3.alpha;
    const auto fam1 = bonferroni({r3}, 1);
    CHECK(fam1[0].significant == r3.significant);
}

TEST_CASE("bonferroni significance is monotone") {
    Rng rng(107);
    for (int trial = 0; trial < 100; ++trial) {
        TestResult r;
        r.p_value = rng.uniform() * 0.1;
        r.significant = r.p_value < r.alpha;
        const auto corrected = bonferroni({r}, 1 + rng.uniform_index(10));
        if (corrected[0].significant) CHECK(r.p_value < 0.05);
    }
}

TEST_CASE("significance table follows the plan") {
    // Synthetic evaluations for 3 clients with clearly ordered models.
    ModelEvaluations ev;
    Rng rng(109);
    const std::vector<int> clients{0, 1, 2};
    for (int k : clients) {
        ev.local_validation_auc["cl"][k] = 0.9 - 0.01 * k;
        ev.local_validation_auc["fl"][k] = 0.8 - 0.01 * k;
        ev.local_validation_auc["ll_" + std::to_string(k)][k] = 0.7 - 0.01 * k;
    }
    const std::size_t n = 60;
    std::vector<int> labels(n);
    std::vector<double> strong(n), weak(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i % 2;
        strong[i] = labels[i] == 1 ? rng.normal(1.5, 0.5) : rng.normal(0.0, 0.5);
        weak[i] = rng.uniform();
    }
    ev.test_labels = labels;
    ev.test_scores["cl"] = strong;
    ev.test_scores["fl"] = weak;
    for (int k : clients) ev.test_scores["ll_" + std::to_string(k)] = weak;

    const auto plan = standard_comparison_plan(clients);
    CHECK(plan.size() == 3 + 1 + 2 * clients.size());
    const SignificanceTable table = build_significance_table(ev, plan);
    CHECK(table.rows.size() == plan.size());
    CHECK(table.rows[0].setting == "local_validation");
    CHECK(table.rows[0].result.test_name == "wilcoxon");
    CHECK(table.rows[3].setting == "centralized_test");
    CHECK(table.rows[3].result.test_name == "delong");
    CHECK_FALSE(table.rows[3].result.corrected);  // primary comparison, uncorrected
    CHECK(table.rows[4].result.corrected);
    CHECK(table.rows[4].result.alpha ==
          doctest::Approx(0.05 / clients.size()).epsilon(1e-12));
    CHECK(table.rows[3].footnote == "†");
    CHECK(table.rows[4].footnote == "‡");
    // identical models compared -> z = 0, p = 1, NO
    ModelEvaluations same = ev;
    same.test_scores["fl"] = strong;
    std::vector<PlannedComparison> one{
        {"CL vs FL", ComparisonKind::DeLongPooledTest, "cl", "fl", 1, ""}};
    const SignificanceTable degenerate = build_significance_table(same, one);
    CHECK(degenerate.rows[0].result.statistic == 0.0);
    CHECK(degenerate.rows[0].result.p_value == 1.0);
    CHECK_FALSE(degenerate.rows[0].result.significant);

    // empty plan -> empty table
    CHECK(build_significance_table(ev, {}).rows.empty());

    // missing evaluation -> plan error naming the comparison
    ModelEvaluations missing = ev;
    missing.test_scores.erase("fl");
    try {
        build_significance_table(missing, one);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("CL vs FL") != std::string::npos);
    }
}

}  // TEST_SUITE
