#pragma once

#include "fedbench/dataset.hpp"
#include "fedbench/evaluate.hpp"
#include "fedbench/metrics.hpp"
#include "fedbench/model.hpp"
#include "fedbench/monitor.hpp"
#include "fedbench/paradigms.hpp"
#include "fedbench/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fedbench {

// Number formatting used in emitted files: full precision for values that
// must round-trip, 12 significant digits for table metrics, 4 significant
// digits in scientific notation for p-values.
std::string fmt_exact(double x);
std::string fmt_metric(double x);
std::string fmt_p(double x);

// Parameter checkpoints: versioned text, exact round-trip.
std::string serialize_params(const ParamVector& params);
ParamVector parse_params(const std::string& text);
void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

// Per-client dataset files: id,client,label,f0..f{d-1}; exact round-trip.
std::string serialize_dataset_csv(const Dataset& ds);
Dataset parse_dataset_csv(const std::string& text);
Dataset load_dataset_csv(const std::filesystem::path& path);

std::string serialize_evaluation_table(const EvaluationTable& table);
std::string serialize_roc_csv(const RocCurve& curve);
std::string serialize_predictions_csv(std::span<const double> scores,
                                      std::span<const int> labels);
std::string serialize_curves_csv(const RunCurves& curves, const std::string& index_name);
std::string serialize_fl_client_curves_csv(const std::map<int, RunCurves>& per_client);
std::string serialize_significance_csv(const SignificanceTable& table);

struct RoundLogEntry {
    std::size_t round = 0;
    int client_id = -1;
    std::size_t n_samples = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double update_norm = 0.0;
};

std::string serialize_round_log(const std::vector<RoundLogEntry>& entries);
std::vector<RoundLogEntry> parse_round_log(const std::string& text);

std::string serialize_jcurves_csv(const std::vector<JCurve>& curves);
std::string serialize_diagnostics(const std::vector<RoundDiagnostics>& rounds,
                                  const std::vector<OutlierFlag>& flags,
                                  const std::map<std::string, ThresholdAggregate>& thresholds);

// Collects every file a command writes so the manifest can list them all with
// content hashes. Paths are relative to the root.
class ArtifactSink {
public:
    explicit ArtifactSink(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    void write_text(const std::string& relative_path, const std::string& content);
    std::string read_text(const std::string& relative_path) const;

    // manifest_<command>.json with config hash, seed, artifact list, timings.
    void write_manifest(const std::string& command, std::uint64_t config_hash,
                        std::uint64_t seed, double elapsed_seconds);

private:
    struct Entry {
        std::string path;
        std::uint64_t hash = 0;
        std::size_t bytes = 0;
    };
    std::filesystem::path root_;
    std::vector<Entry> entries_;
};

}  // namespace fedbench
