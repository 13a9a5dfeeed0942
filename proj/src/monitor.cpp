#include "fedbench/monitor.hpp"

#include "fedbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedbench {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Robust z-scores via median/MAD; zero MAD yields zeros for on-median points
// and +-inf otherwise, which a finite z_threshold treats as an extreme.
std::vector<double> robust_z(const std::vector<double>& xs) {
    const double med = median_of(xs);
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = std::abs(xs[i] - med);
    const double mad = median_of(dev);
    const double scale = 1.4826 * mad;
    std::vector<double> z(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - med;
        if (d == 0.0) {
            z[i] = 0.0;
        } else if (scale == 0.0) {
            z[i] = d > 0.0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
        } else {
            z[i] = d / scale;
        }
    }
    return z;
}

}  // namespace

RoundDiagnostics summarize_round(const ParamVector& global_before,
                                 const std::vector<ClientUpdate>& updates, std::size_t round) {
    if (updates.empty()) {
        throw ValidationError("summarize_round: no updates");
    }
    std::vector<const ClientUpdate*> ordered;
    for (const auto& u : updates) ordered.push_back(&u);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ClientUpdate* a, const ClientUpdate* b) {
                         return a->client_id < b->client_id;
                     });

    const std::size_t k = ordered.size();
    std::vector<std::vector<double>> deltas(k);
    RoundDiagnostics out;
    out.similarity.client_ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const ClientUpdate& u = *ordered[i];
        if (!u.params.same_layout(global_before)) {
            throw ComputeError("summarize_round: layout mismatch at client " +
                               std::to_string(u.client_id));
        }
        deltas[i].resize(u.params.values.size());
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < deltas[i].size(); ++j) {
            deltas[i][j] = u.params.values[j] - global_before.values[j];
            norm_sq += deltas[i][j] * deltas[i][j];
        }
        UpdateSummary s;
        s.round = round;
        s.client_id = u.client_id;
        s.update_norm = std::sqrt(norm_sq);
        s.train_loss_end = u.train_loss_trace.empty() ? 0.0 : u.train_loss_trace.back();
        s.val_loss = u.val_loss;
        s.val_accuracy = u.val_accuracy;
        out.summaries.push_back(s);
        out.similarity.client_ids.push_back(u.client_id);
    }

    out.similarity.values.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double ni = out.summaries[i].update_norm;
        for (std::size_t j = i; j < k; ++j) {
            const double nj = out.summaries[j].update_norm;
            double value = 0.0;
            if (ni > 0.0 && nj > 0.0) {
                if (i == j) {
                    value = 1.0;
                } else {
                    double dot = 0.0;
                    for (std::size_t t = 0; t < deltas[i].size(); ++t) {
                        dot += deltas[i][t] * deltas[j][t];
                    }
                    value = std::clamp(dot / (ni * nj), -1.0, 1.0);
                }
            }
            out.similarity.values[i * k + j] = value;
            out.similarity.values[j * k + i] = value;
        }
    }
    return out;
}

std::vector<OutlierFlag> flag_outlier_clients(const std::vector<RoundDiagnostics>& history,
                                              const OutlierPolicy& policy) {
    if (history.size() < 2) {
        throw ValidationError("flag_outlier_clients: needs at least 2 rounds of history");
    }
    const std::vector<int>& clients = history.front().similarity.client_ids;
    if (clients.size() < 3) {
        throw ValidationError("flag_outlier_clients: needs at least 3 clients");
    }
    for (const auto& round : history) {
        if (round.similarity.client_ids != clients) {
            throw ComputeError("flag_outlier_clients: client sets differ across rounds");
        }
    }

    const std::size_t k = clients.size();
    std::vector<double> mean_cosine(k, 0.0);
    std::vector<double> mean_val_acc(k, 0.0);
    for (const auto& round : history) {
        for (std::size_t i = 0; i < k; ++i) {
            double off_diag = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (j != i) off_diag += round.similarity.at(i, j);
            }
            mean_cosine[i] += off_diag / static_cast<double>(k - 1);
            mean_val_acc[i] += round.summaries[i].val_accuracy;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        mean_cosine[i] /= static_cast<double>(history.size());
        mean_val_acc[i] /= static_cast<double>(history.size());
    }

    std::vector<OutlierFlag> flags;
    const auto z_cos = robust_z(mean_cosine);
    const auto z_acc = robust_z(mean_val_acc);
    for (std::size_t i = 0; i < k; ++i) {
        if (z_cos[i] < -policy.z_threshold) {
            flags.push_back({clients[i], "update cosine similarity below cohort median"});
        }
        if (z_acc[i] < -policy.z_threshold) {
            flags.push_back({clients[i], "validation accuracy below cohort median"});
        }
    }
    return flags;
}

JCurve compute_j_curve(const ParamVector& model, const PredictorSpec& spec,
                       const Dataset& validation, std::span<const double> grid, int client_id) {
    if (grid.empty()) {
        throw ValidationError("compute_j_curve: empty threshold grid");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ValidationError("compute_j_curve: grid must be strictly increasing");
        }
    }
    if (validation.positives() == 0 || validation.negatives() == 0) {
        throw ValidationError("compute_j_curve: validation set must contain both classes");
    }

    const auto probs = predict_probabilities(model, spec, validation);
    std::vector<int> labels(validation.size());
    for (std::size_t i = 0; i < validation.size(); ++i) labels[i] = validation.examples[i].label;

    JCurve curve;
    curve.client_id = client_id;
    curve.thresholds.assign(grid.begin(), grid.end());
    curve.j_values.reserve(grid.size());
    for (double t : grid) {
        const MetricReport r = metrics_from(confusion_at(probs, labels, t));
        curve.j_values.push_back(r.youden_j);
    }
    return curve;
}

std::string aggregation_rule_name(AggregationRule rule) {
    switch (rule) {
        case AggregationRule::Mean: return "mean";
        case AggregationRule::Median: return "median";
        case AggregationRule::WorstCase: return "worst_case";
    }
    return "?";
}

ThresholdAggregate aggregate_thresholds(const std::vector<JCurve>& curves,
                                        AggregationRule rule) {
    if (curves.empty()) {
        throw ValidationError("aggregate_thresholds: no curves");
    }
    const std::vector<double>& grid = curves.front().thresholds;
    for (const auto& c : curves) {
        if (c.thresholds != grid || c.j_values.size() != grid.size()) {
            throw ComputeError("aggregate_thresholds: threshold grid mismatch");
        }
    }

    ThresholdAggregate best;
    bool first = true;
    std::vector<double> column(curves.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (std::size_t c = 0; c < curves.size(); ++c) column[c] = curves[c].j_values[g];
        double agg = 0.0;
        switch (rule) {
            case AggregationRule::Mean: {
                for (double v : column) agg += v;
                agg /= static_cast<double>(column.size());
                break;
            }
            case AggregationRule::Median:
                agg = median_of(column);
                break;
            case AggregationRule::WorstCase:
                agg = *std::min_element(column.begin(), column.end());
                break;
        }
        if (first || agg > best.aggregate_j) {
            best.threshold = grid[g];
            best.aggregate_j = agg;
            first = false;
        }
    }
    return best;
}

std::vector<double> default_threshold_grid(std::size_t points) {
    if (points < 1) {
        throw ValidationError("default_threshold_grid: needs at least 1 point");
    }
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = 0.5;
        return grid;
    }
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return grid;
}

}  // namespace fedbench
