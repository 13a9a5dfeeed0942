#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedbench {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricReport {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
    double youden_j = 0.0;
    double auc = -1.0;       // unset until an ROC has been computed
    double threshold = -1.0;  // unset until a threshold has been chosen
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    bool degenerate = false;  // a zero-denominator convention was applied
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// Threshold sweep from above the max score (0,0) down to the min score (1,1);
// fpr/tpr are non-decreasing along the sweep.
struct RocCurve {
    std::vector<RocPoint> points;
};

enum class ThresholdSource { LocalTrain, LocalValidation, PooledTrainValidation };

struct ThresholdChoice {
    double threshold = 0.0;
    ThresholdSource source = ThresholdSource::LocalValidation;
    double achieved_j = 0.0;  // Youden's J at threshold on the source data
};

// Prediction is positive iff score >= threshold.
ConfusionCounts confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold);

// Accuracy, sensitivity, specificity, precision, F1, balanced accuracy and
// Youden's J from counts. Zero-denominator cases report 0 and set the
// degenerate flag. auc and threshold are left unset.
MetricReport metrics_from(const ConfusionCounts& counts);

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

// AUC equals the Mann-Whitney statistic P(score+ > score-) + P(tie)/2,
// computed exactly from pair counts (identical to the trapezoidal rule over
// the sweep). Requires both classes.
RocResult roc_and_auc(std::span<const double> scores, std::span<const int> labels);

// Maximizes Youden's J over candidate thresholds: midpoints of consecutive
// sorted unique scores plus one candidate below the min and one above the
// max. Ties break toward the smallest threshold (favoring sensitivity).
ThresholdChoice optimize_threshold(std::span<const double> scores, std::span<const int> labels,
                                   ThresholdSource source = ThresholdSource::LocalValidation);

}  // namespace fedbench
