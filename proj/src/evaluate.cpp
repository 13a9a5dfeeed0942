#include "fedbench/evaluate.hpp"

#include "fedbench/errors.hpp"

#include <algorithm>

namespace fedbench {

namespace {

std::vector<int> dataset_labels(const Dataset& ds) {
    std::vector<int> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = ds.examples[i].label;
    return labels;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out = a;
    out.examples.insert(out.examples.end(), b.examples.begin(), b.examples.end());
    if (out.dim == 0) out.dim = b.dim;
    return out;
}

// Threshold from calibration data, metrics (including AUC) on eval data.
MetricReport evaluate_with_calibration(const ParamVector& model, const PredictorSpec& spec,
                                       const Dataset& calibration, const Dataset& eval_set,
                                       ThresholdSource source) {
    const auto calib_scores = predict_probabilities(model, spec, calibration);
    const auto calib_labels = dataset_labels(calibration);
    const ThresholdChoice choice = optimize_threshold(calib_scores, calib_labels, source);

    const auto eval_scores = predict_probabilities(model, spec, eval_set);
    const auto eval_labels = dataset_labels(eval_set);
    MetricReport report = metrics_from(confusion_at(eval_scores, eval_labels, choice.threshold));
    report.threshold = choice.threshold;
    report.auc = roc_and_auc(eval_scores, eval_labels).auc;
    return report;
}

}  // namespace

TwoLevelEvaluation two_level_evaluate(const ParadigmModels& models, const SplitLayout& layout,
                                      const Dataset& test) {
    if (models.local.empty()) {
        throw ValidationError("two_level_evaluate: missing model: no local models");
    }
    if (!models.centralized) {
        throw ValidationError("two_level_evaluate: missing model: cl");
    }
    if (!models.federated) {
        throw ValidationError("two_level_evaluate: missing model: fl");
    }
    for (const auto& [client_id, split] : layout.per_client) {
        if (models.local.find(client_id) == models.local.end()) {
            throw ValidationError("two_level_evaluate: missing model: ll_" +
                                  std::to_string(client_id));
        }
    }

    TwoLevelEvaluation out;
    out.local_ll.name = "local_ll";
    out.local_cl.name = "local_cl";
    out.local_fl.name = "local_fl";
    out.pooled_test.name = "pooled_test";

    // Per-client tables: each model scored on the client's validation set with
    // a threshold optimized on that client's local training data.
    for (const auto& [client_id, split] : layout.per_client) {
        const ParamVector& ll = models.local.at(client_id);
        const std::string ll_tag = "ll_" + std::to_string(client_id);

        struct Entry {
            const ParamVector* params;
            std::string tag;
            EvaluationTable* table;
        };
        const Entry entries[] = {
            {&ll, ll_tag, &out.local_ll},
            {&*models.centralized, "cl", &out.local_cl},
            {&*models.federated, "fl", &out.local_fl},
        };
        for (const Entry& e : entries) {
            EvalRow row;
            row.model = e.tag;
            row.client_id = client_id;
            row.metrics = evaluate_with_calibration(*e.params, models.spec, split.train,
                                                    split.validation, ThresholdSource::LocalTrain);
            e.table->rows.push_back(std::move(row));

            out.validation_scores[e.tag][client_id] = {
                predict_probabilities(*e.params, models.spec, split.validation),
                dataset_labels(split.validation)};
        }
    }

    // Pooled-test table: CL and FL calibrate one global threshold on pooled
    // train+validation; each LL_k calibrates on its own train+validation.
    Dataset pooled_calibration;
    for (const auto& [client_id, split] : layout.per_client) {
        pooled_calibration = concat(concat(pooled_calibration, split.train), split.validation);
    }

    auto add_pooled_row = [&](const ParamVector& params, const std::string& tag,
                              const Dataset& calibration, ThresholdSource source) {
        EvalRow row;
        row.model = tag;
        row.client_id = -1;
        row.metrics = evaluate_with_calibration(params, models.spec, calibration, test, source);
        out.pooled_test.rows.push_back(std::move(row));
        out.test_scores[tag] = {predict_probabilities(params, models.spec, test),
                                dataset_labels(test)};
    };

    add_pooled_row(*models.centralized, "cl", pooled_calibration,
                   ThresholdSource::PooledTrainValidation);
    add_pooled_row(*models.federated, "fl", pooled_calibration,
                   ThresholdSource::PooledTrainValidation);
    for (const auto& [client_id, split] : layout.per_client) {
        add_pooled_row(models.local.at(client_id), "ll_" + std::to_string(client_id),
                       concat(split.train, split.validation), ThresholdSource::LocalTrain);
    }
    return out;
}

ModelEvaluations to_model_evaluations(const TwoLevelEvaluation& evaluation) {
    ModelEvaluations out;
    auto collect = [&](const EvaluationTable& table) {
        for (const EvalRow& row : table.rows) {
            out.local_validation_auc[row.model][row.client_id] = row.metrics.auc;
        }
    };
    collect(evaluation.local_ll);
    collect(evaluation.local_cl);
    collect(evaluation.local_fl);
    for (const auto& [tag, scores] : evaluation.test_scores) {
        out.test_scores[tag] = scores.scores;
        if (out.test_labels.empty()) out.test_labels = scores.labels;
    }
    return out;
}

}  // namespace fedbench
