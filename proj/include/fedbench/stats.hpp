#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fedbench {

// Per-client AUC pairs (auc_a[k], auc_b[k]), paired across clients.
struct PairedAucSamples {
    std::vector<double> auc_a;
    std::vector<double> auc_b;
};

struct TestResult {
    std::string test_name;  // "wilcoxon" | "delong"
    double statistic = 0.0;  // W = min(W+, W-) for Wilcoxon, z for DeLong
    double p_value = 1.0;
    double alpha = 0.05;  // effective alpha (after any correction)
    bool corrected = false;
    bool significant = false;
    bool degenerate = false;
};

// Two equal-length vectors of ordinal category indices in [0, categories).
struct RaterLabels {
    std::size_t categories = 2;
    std::vector<int> a;
    std::vector<int> b;
};

// DeLong's test for two correlated ROC curves scored on the same examples.
// statistic = (AUC_a - AUC_b) / SE from placement-value covariances; p is
// two-sided normal. Identical placements give z = 0, p = 1 with the
// degenerate flag; a zero variance with unequal AUCs throws.
TestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                       std::span<const int> labels);

// Paired Wilcoxon signed-rank on auc_a - auc_b. Zero differences are dropped;
// ties get mid-ranks. Exact two-sided p (enumeration of all sign assignments,
// P[min(W+,W-) <= observed]) for up to exact_limit nonzero differences,
// normal approximation with tie correction beyond that.
TestResult wilcoxon_signed_rank(const PairedAucSamples& pairs, std::size_t exact_limit = 20);

struct KappaResult {
    double value = 0.0;
    bool degenerate = false;  // zero expected disagreement
};

// Quadratic-weighted Cohen's kappa: 1 - sum(w*O) / sum(w*E) with
// w_ij = (i-j)^2 / (C-1)^2.
KappaResult weighted_kappa(const RaterLabels& raters);

// Divides each result's alpha by family_size and recomputes the significance
// flag; p-values are unmodified.
std::vector<TestResult> bonferroni(std::vector<TestResult> results, std::size_t family_size);

// Evaluation data the significance table is built from; decoupled from how
// the models were produced so externally loaded predictions work too.
struct ModelEvaluations {
    // model tag -> client id -> AUC on that client's validation set
    std::map<std::string, std::map<int, double>> local_validation_auc;
    // model tag -> scores on the shared pooled test set
    std::map<std::string, std::vector<double>> test_scores;
    std::vector<int> test_labels;
};

enum class ComparisonKind { WilcoxonLocalValidation, DeLongPooledTest };

struct PlannedComparison {
    std::string label;  // e.g. "CL vs FL"
    ComparisonKind kind;
    // Wilcoxon: paradigm keys ("cl", "fl", "ll" = each client's own model).
    // DeLong: concrete model tags ("cl", "ll_3", ...).
    std::string model_a;
    std::string model_b;
    std::size_t family_size = 1;  // 1 = primary, uncorrected
    std::string footnote;
};

struct SignificanceRow {
    std::string setting;  // "local_validation" | "centralized_test"
    std::string comparison;
    TestResult result;
    std::string footnote;
};

struct SignificanceTable {
    std::vector<SignificanceRow> rows;
};

SignificanceTable build_significance_table(const ModelEvaluations& evaluations,
                                           const std::vector<PlannedComparison>& plan,
                                           double alpha = 0.05);

// The standard comparison plan: three Wilcoxon rows (family 3), the primary
// CL-vs-FL DeLong row (uncorrected), and CL/FL vs every local model (family =
// number of local models each).
std::vector<PlannedComparison> standard_comparison_plan(const std::vector<int>& client_ids);

}  // namespace fedbench
