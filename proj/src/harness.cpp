#include "fedbench/harness.hpp"

#include "fedbench/data_fabric.hpp"
#include "fedbench/errors.hpp"
#include "fedbench/monitor.hpp"
#include "fedbench/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace fedbench {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string client_file(int client_id) {
    return "cohort/client_" + std::to_string(client_id) + ".csv";
}

std::map<int, Dataset> load_cohort(const ExperimentConfig& config, const ArtifactSink& sink) {
    std::map<int, Dataset> cohort;
    for (const auto& client : config.cohort.clients) {
        const std::string path = client_file(client.client_id);
        try {
            cohort.emplace(client.client_id, parse_dataset_csv(sink.read_text(path)));
        } catch (const ValidationError& e) {
            throw ValidationError("cmd: missing cohort file " + path +
                                  " (run `synth` first): " + e.what());
        }
    }
    return cohort;
}

ParamVector load_model_checkpoint(const ArtifactSink& sink, const std::string& tag) {
    const std::string path = "checkpoints/" + tag + ".params";
    try {
        return parse_params(sink.read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError("missing model: " + tag + " (" + path + "): " + e.what());
    }
}

PredictorSpec model_spec(const ExperimentConfig& config) {
    PredictorSpec spec = config.model;
    spec.input_dim = config.cohort.dim;
    return spec;
}

}  // namespace

std::map<int, Dataset> make_cohort(const ExperimentConfig& config) {
    const auto specs = resolve_client_specs(config.cohort, config.master_seed);
    return generate_cohort(specs, config.cohort.dim,
                           derive_seed(config.master_seed, "cohort-gen"),
                           config.cohort.cluster_margin);
}

SplitLayout make_layout(const ExperimentConfig& config, const std::map<int, Dataset>& cohort) {
    const Dataset pooled = pool_clients(cohort);
    TestSplit split = stratified_test_split(pooled, config.splits.test_fraction,
                                            derive_seed(config.master_seed, "test-split"));
    const auto remainder = redistribute_by_origin(split.remainder);
    SplitLayout layout = per_client_validation_split(remainder,
                                                     config.splits.validation_total_fraction,
                                                     config.splits.test_fraction,
                                                     derive_seed(config.master_seed, "val-split"));
    layout.test = std::move(split.test);
    return layout;
}

ParadigmSelection parse_paradigm_selection(const std::string& name) {
    if (name == "ll") return ParadigmSelection::Ll;
    if (name == "cl") return ParadigmSelection::Cl;
    if (name == "fl") return ParadigmSelection::Fl;
    if (name == "all") return ParadigmSelection::All;
    throw ValidationError("unknown paradigm '" + name + "' (expected ll|cl|fl|all)");
}

TrainedParadigms train_paradigms(const ExperimentConfig& config, const SplitLayout& layout,
                                 ParadigmSelection selection) {
    const PredictorSpec spec = model_spec(config);
    TrainedParadigms out;
    out.models.spec = spec;

    const bool want_ll = selection == ParadigmSelection::Ll || selection == ParadigmSelection::All;
    const bool want_cl = selection == ParadigmSelection::Cl || selection == ParadigmSelection::All;
    const bool want_fl = selection == ParadigmSelection::Fl || selection == ParadigmSelection::All;

    if (want_ll) {
        for (const auto& [client_id, split] : layout.per_client) {
            const std::uint64_t seed =
                derive_seed(config.master_seed, "ll", static_cast<std::uint64_t>(client_id));
            LocalTrainResult result =
                train_local(split.train, split.validation, spec, config.train, seed);
            out.models.local.emplace(client_id, result.params);
            out.local_results.emplace(client_id, std::move(result));
        }
    }
    if (want_cl) {
        auto [params, record] = train_centralized(layout, spec, config.train,
                                                  derive_seed(config.master_seed, "cl"));
        out.models.centralized = std::move(params);
        out.cl_record = std::move(record);
    }
    if (want_fl) {
        out.fl = run_federated(layout, spec, config.train, config.rounds,
                               derive_seed(config.master_seed, "fl"));
        out.models.federated = out.fl.global;
    }
    return out;
}

void cmd_synth(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out) {
    Stopwatch timer;
    validate_config(config);
    const auto cohort = make_cohort(config);

    std::string summary = "client,n_total,n_neg,n_pos,overlap_pct\n";
    out << "cohort summary (client: neg/pos/total, overlap%)\n";
    for (const auto& [client_id, ds] : cohort) {
        sink.write_text(client_file(client_id), serialize_dataset_csv(ds));
        const std::size_t pos = ds.positives();
        const std::size_t neg = ds.negatives();
        char pct[16];
        std::snprintf(pct, sizeof(pct), "%.1f",
                      100.0 * static_cast<double>(pos) / static_cast<double>(ds.size()));
        summary += std::to_string(client_id) + "," + std::to_string(ds.size()) + "," +
                   std::to_string(neg) + "," + std::to_string(pos) + "," + pct + "\n";
        out << "  client " << client_id << ": " << neg << "/" << pos << "/" << ds.size() << ", "
            << pct << "%\n";
    }
    sink.write_text("cohort/summary.csv", summary);
    sink.write_manifest("synth", config_hash(config), config.master_seed, timer.seconds());
}

void cmd_run(const ExperimentConfig& config, ArtifactSink& sink, ParadigmSelection selection,
             std::ostream& out) {
    Stopwatch timer;
    validate_config(config);
    const auto cohort = load_cohort(config, sink);
    const SplitLayout layout = make_layout(config, cohort);
    const TrainedParadigms trained = train_paradigms(config, layout, selection);

    for (const auto& [client_id, result] : trained.local_results) {
        const std::string tag = "ll_" + std::to_string(client_id);
        sink.write_text("checkpoints/" + tag + ".params", serialize_params(result.params));
        sink.write_text("curves/" + tag + ".csv", serialize_curves_csv(result.curves, "epoch"));
        out << "trained " << tag << ": final val accuracy "
            << fmt_metric(result.curves.val_accuracy.back()) << "\n";
    }
    if (trained.models.centralized) {
        sink.write_text("checkpoints/cl.params", serialize_params(*trained.models.centralized));
        sink.write_text("curves/cl.csv", serialize_curves_csv(trained.cl_record.pooled, "epoch"));
        out << "trained cl: final val accuracy "
            << fmt_metric(trained.cl_record.pooled.val_accuracy.back()) << "\n";
    }
    if (trained.models.federated) {
        const FederatedRunResult& fl = trained.fl;
        sink.write_text("checkpoints/fl.params", serialize_params(fl.global));
        sink.write_text("curves/fl_global.csv",
                        serialize_curves_csv(fl.record.pooled, "round"));
        sink.write_text("curves/fl_clients.csv",
                        serialize_fl_client_curves_csv(fl.record.per_client));

        std::vector<RoundLogEntry> log;
        for (std::size_t round = 0; round < fl.round_updates.size(); ++round) {
            const RoundDiagnostics diag =
                summarize_round(fl.global_before[round], fl.round_updates[round], round);
            sink.write_text("checkpoints/fl_round" + std::to_string(round) + "_global.params",
                            serialize_params(fl.global_before[round]));
            for (std::size_t i = 0; i < diag.summaries.size(); ++i) {
                const UpdateSummary& s = diag.summaries[i];
                const RunCurves& curves = fl.record.per_client.at(s.client_id);
                RoundLogEntry entry;
                entry.round = round;
                entry.client_id = s.client_id;
                entry.n_samples = fl.round_updates[round][i].n_samples;
                entry.train_loss = curves.train_loss[round];
                entry.val_loss = s.val_loss;
                entry.val_accuracy = s.val_accuracy;
                entry.update_norm = s.update_norm;
                log.push_back(entry);
            }
            for (const ClientUpdate& update : fl.round_updates[round]) {
                sink.write_text("checkpoints/fl_round" + std::to_string(round) + "_client" +
                                    std::to_string(update.client_id) + ".params",
                                serialize_params(update.params));
            }
        }
        sink.write_text("logs/roundlog.csv", serialize_round_log(log));
        out << "trained fl: final pooled val accuracy "
            << fmt_metric(fl.record.pooled.val_accuracy.back()) << "\n";
    }
    sink.write_manifest("run", config_hash(config), config.master_seed, timer.seconds());
}

TwoLevelEvaluation cmd_evaluate(const ExperimentConfig& config, ArtifactSink& sink,
                                std::ostream& out) {
    Stopwatch timer;
    validate_config(config);
    const auto cohort = load_cohort(config, sink);
    const SplitLayout layout = make_layout(config, cohort);

    ParadigmModels models;
    models.spec = model_spec(config);
    for (const auto& [client_id, split] : layout.per_client) {
        models.local.emplace(client_id,
                             load_model_checkpoint(sink, "ll_" + std::to_string(client_id)));
    }
    models.centralized = load_model_checkpoint(sink, "cl");
    models.federated = load_model_checkpoint(sink, "fl");

    const TwoLevelEvaluation evaluation = two_level_evaluate(models, layout, layout.test);
    for (const EvaluationTable* table :
         {&evaluation.local_ll, &evaluation.local_cl, &evaluation.local_fl,
          &evaluation.pooled_test}) {
        sink.write_text("tables/" + table->name + ".csv", serialize_evaluation_table(*table));
    }
    for (const auto& [tag, scores] : evaluation.test_scores) {
        sink.write_text("predictions/test_" + tag + ".csv",
                        serialize_predictions_csv(scores.scores, scores.labels));
        sink.write_text("roc/test_" + tag + ".csv",
                        serialize_roc_csv(roc_and_auc(scores.scores, scores.labels).curve));
    }
    for (const auto& [tag, by_client] : evaluation.validation_scores) {
        for (const auto& [client_id, scores] : by_client) {
            sink.write_text("predictions/val_client" + std::to_string(client_id) + "_" + tag +
                                ".csv",
                            serialize_predictions_csv(scores.scores, scores.labels));
        }
    }

    out << "pooled test set (" << layout.test.positives() << " pos / "
        << layout.test.negatives() << " neg)\n";
    for (const auto& row : evaluation.pooled_test.rows) {
        out << "  " << row.model << ": auc " << fmt_metric(row.metrics.auc) << ", threshold "
            << fmt_metric(row.metrics.threshold) << ", accuracy "
            << fmt_metric(row.metrics.accuracy) << "\n";
    }
    sink.write_manifest("evaluate", config_hash(config), config.master_seed, timer.seconds());
    return evaluation;
}

SignificanceTable cmd_stats(const ExperimentConfig& config, ArtifactSink& sink,
                            std::ostream& out) {
    Stopwatch timer;
    validate_config(config);

    std::vector<int> client_ids;
    for (const auto& client : config.cohort.clients) client_ids.push_back(client.client_id);
    std::sort(client_ids.begin(), client_ids.end());

    std::vector<std::string> tags{"cl", "fl"};
    for (int k : client_ids) tags.push_back("ll_" + std::to_string(k));

    ModelEvaluations evaluations;
    for (const std::string& tag : tags) {
        const PredictionFile file =
            load_predictions((sink.root() / ("predictions/test_" + tag + ".csv")).string());
        evaluations.test_scores[tag] = file.scores;
        if (evaluations.test_labels.empty()) evaluations.test_labels = file.labels;
    }
    for (int k : client_ids) {
        for (const std::string& tag : {std::string("cl"), std::string("fl"),
                                       "ll_" + std::to_string(k)}) {
            const PredictionFile file = load_predictions(
                (sink.root() / ("predictions/val_client" + std::to_string(k) + "_" + tag +
                                ".csv"))
                    .string());
            evaluations.local_validation_auc[tag][k] =
                roc_and_auc(file.scores, file.labels).auc;
        }
    }

    const SignificanceTable table =
        build_significance_table(evaluations, standard_comparison_plan(client_ids));
    const std::string csv = serialize_significance_csv(table);
    sink.write_text("tables/significance.csv", csv);
    out << csv;
    sink.write_manifest("stats", config_hash(config), config.master_seed, timer.seconds());
    return table;
}

void cmd_monitor(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out) {
    Stopwatch timer;
    validate_config(config);
    const auto cohort = load_cohort(config, sink);
    const SplitLayout layout = make_layout(config, cohort);
    const PredictorSpec spec = model_spec(config);

    std::vector<RoundLogEntry> log;
    try {
        log = parse_round_log(sink.read_text("logs/roundlog.csv"));
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("cmd_monitor: missing federated round log (run "
                                          "`run --paradigm fl` first): ") +
                              e.what());
    }
    std::map<std::size_t, std::vector<RoundLogEntry>> by_round;
    for (const auto& entry : log) by_round[entry.round].push_back(entry);

    std::vector<RoundDiagnostics> history;
    for (const auto& [round, entries] : by_round) {
        const ParamVector global_before = parse_params(
            sink.read_text("checkpoints/fl_round" + std::to_string(round) + "_global.params"));
        std::vector<ClientUpdate> updates;
        for (const auto& entry : entries) {
            ClientUpdate update;
            update.client_id = entry.client_id;
            update.params = parse_params(
                sink.read_text("checkpoints/fl_round" + std::to_string(round) + "_client" +
                               std::to_string(entry.client_id) + ".params"));
            update.n_samples = entry.n_samples;
            update.train_loss_trace = {entry.train_loss};
            update.val_loss = entry.val_loss;
            update.val_accuracy = entry.val_accuracy;
            updates.push_back(std::move(update));
        }
        history.push_back(summarize_round(global_before, updates, round));
    }

    const auto flags = flag_outlier_clients(history, OutlierPolicy{config.monitor.z_threshold});

    const ParamVector global = load_model_checkpoint(sink, "fl");
    const auto grid = default_threshold_grid(config.eval.threshold_grid_points);
    std::vector<JCurve> curves;
    for (const auto& [client_id, split] : layout.per_client) {
        curves.push_back(compute_j_curve(global, spec, split.validation, grid, client_id));
    }
    std::map<std::string, ThresholdAggregate> thresholds;
    for (AggregationRule rule :
         {AggregationRule::Mean, AggregationRule::Median, AggregationRule::WorstCase}) {
        thresholds[aggregation_rule_name(rule)] = aggregate_thresholds(curves, rule);
    }

    sink.write_text("monitor/jcurves.csv", serialize_jcurves_csv(curves));
    sink.write_text("monitor/diagnostics.txt", serialize_diagnostics(history, flags, thresholds));

    if (flags.empty()) {
        out << "no clients flagged at z_threshold " << fmt_metric(config.monitor.z_threshold)
            << "\n";
    } else {
        for (const auto& f : flags) {
            out << "flagged client " << f.client_id << ": " << f.reason << "\n";
        }
    }
    for (const auto& [rule, agg] : thresholds) {
        out << "global threshold (" << rule << "): " << fmt_metric(agg.threshold)
            << " (aggregate J " << fmt_metric(agg.aggregate_j) << ")\n";
    }
    sink.write_manifest("monitor", config_hash(config), config.master_seed, timer.seconds());
}

BenchOutcome cmd_bench(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out) {
    Stopwatch timer;
    validate_config(config);
    if (config.bench.seeds < 1) {
        throw ValidationError("cmd_bench: bench.seeds must be >= 1");
    }

    BenchOutcome outcome;
    for (std::size_t s = 0; s < config.bench.seeds; ++s) {
        ExperimentConfig seed_config = config;
        seed_config.master_seed = derive_seed(config.master_seed, "bench", s);

        ArtifactSink seed_sink(sink.root() / ("seed_" + std::to_string(s)));
        std::ostringstream quiet;
        cmd_synth(seed_config, seed_sink, quiet);
        cmd_run(seed_config, seed_sink, ParadigmSelection::All, quiet);
        const TwoLevelEvaluation evaluation = cmd_evaluate(seed_config, seed_sink, quiet);

        BenchSeedResult result;
        result.seed = seed_config.master_seed;
        double ll_sum = 0.0;
        std::size_t ll_count = 0;
        for (const auto& row : evaluation.pooled_test.rows) {
            if (row.model == "cl") {
                result.auc_cl = row.metrics.auc;
            } else if (row.model == "fl") {
                result.auc_fl = row.metrics.auc;
            } else {
                ll_sum += row.metrics.auc;
                ++ll_count;
            }
        }
        result.auc_mean_ll = ll_sum / static_cast<double>(ll_count);
        outcome.per_seed.push_back(result);
        out << "seed " << s << ": cl " << fmt_metric(result.auc_cl) << ", fl "
            << fmt_metric(result.auc_fl) << ", mean ll " << fmt_metric(result.auc_mean_ll)
            << "\n";
    }

    std::vector<double> cl, fl, ll;
    for (const auto& r : outcome.per_seed) {
        cl.push_back(r.auc_cl);
        fl.push_back(r.auc_fl);
        ll.push_back(r.auc_mean_ll);
    }
    outcome.median_cl = median_of(cl);
    outcome.median_fl = median_of(fl);
    outcome.median_mean_ll = median_of(ll);
    outcome.pass =
        outcome.median_cl >= outcome.median_fl && outcome.median_fl >= outcome.median_mean_ll;

    std::string csv = "seed_index,auc_cl,auc_fl,auc_mean_ll\n";
    for (std::size_t s = 0; s < outcome.per_seed.size(); ++s) {
        const auto& r = outcome.per_seed[s];
        csv += std::to_string(s) + "," + fmt_metric(r.auc_cl) + "," + fmt_metric(r.auc_fl) +
               "," + fmt_metric(r.auc_mean_ll) + "\n";
    }
    csv += "median," + fmt_metric(outcome.median_cl) + "," + fmt_metric(outcome.median_fl) +
           "," + fmt_metric(outcome.median_mean_ll) + "\n";
    sink.write_text("bench_summary.csv", csv);

    out << "median pooled-test AUC: cl " << fmt_metric(outcome.median_cl) << ", fl "
        << fmt_metric(outcome.median_fl) << ", mean ll " << fmt_metric(outcome.median_mean_ll)
        << "\n";
    out << "ordering cl >= fl >= mean-ll: " << (outcome.pass ? "PASS" : "FAIL") << " (cl - "
        << "mean-ll gap " << fmt_metric(outcome.median_cl - outcome.median_mean_ll) << ")\n";
    sink.write_manifest("bench", config_hash(config), config.master_seed, timer.seconds());
    return outcome;
}

}  // namespace fedbench
