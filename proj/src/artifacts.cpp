#include "fedbench/artifacts.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/rng.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fedbench {

namespace {

std::string formatted(const char* fmt, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, x);
    return buf;
}

double parse_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ParseError("expected a number, got '" + s + "'", line);
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << content;
}

constexpr const char* kParamsHeader = "fedbench-params v1";

}  // namespace

std::string fmt_exact(double x) { return formatted("%.17g", x); }
std::string fmt_metric(double x) { return formatted("%.12g", x); }
std::string fmt_p(double x) { return formatted("%.3e", x); }

std::string serialize_params(const ParamVector& params) {
    std::ostringstream out;
    out << kParamsHeader << "\n";
    out << "blocks " << params.layout.size() << "\n";
    for (const auto& block : params.layout) {
        out << block.name << " " << block.offset << " " << block.shape.size();
        for (std::size_t s : block.shape) out << " " << s;
        out << "\n";
    }
    out << "values " << params.values.size() << "\n";
    for (double v : params.values) out << fmt_exact(v) << "\n";
    return out.str();
}

ParamVector parse_params(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) {
            throw ParseError("params: unexpected end of file", line_no);
        }
        ++line_no;
    };

    next_line();
    if (line != kParamsHeader) {
        throw ParseError("params: unsupported version header '" + line + "'", line_no);
    }
    next_line();
    std::size_t n_blocks = 0;
    if (std::sscanf(line.c_str(), "blocks %zu", &n_blocks) != 1) {
        throw ParseError("params: expected 'blocks <n>'", line_no);
    }
    ParamVector p;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        next_line();
        std::istringstream ls(line);
        ParamBlock block;
        std::size_t n_dims = 0;
        if (!(ls >> block.name >> block.offset >> n_dims)) {
            throw ParseError("params: malformed block descriptor", line_no);
        }
        block.shape.resize(n_dims);
        for (std::size_t d = 0; d < n_dims; ++d) {
            if (!(ls >> block.shape[d])) {
                throw ParseError("params: malformed block shape", line_no);
            }
        }
        p.layout.push_back(std::move(block));
    }
    next_line();
    std::size_t n_values = 0;
    if (std::sscanf(line.c_str(), "values %zu", &n_values) != 1) {
        throw ParseError("params: expected 'values <n>'", line_no);
    }
    p.values.reserve(n_values);
    for (std::size_t i = 0; i < n_values; ++i) {
        next_line();
        p.values.push_back(parse_double(line, line_no));
    }
    std::size_t expected = 0;
    for (const auto& block : p.layout) expected += block.count();
    if (expected != p.values.size()) {
        throw ParseError("params: layout covers " + std::to_string(expected) +
                         " values but file has " + std::to_string(p.values.size()));
    }
    return p;
}

void save_params(const std::filesystem::path& path, const ParamVector& params) {
    write_file(path, serialize_params(params));
}

ParamVector load_params(const std::filesystem::path& path) {
    return parse_params(read_file(path));
}

std::string serialize_dataset_csv(const Dataset& ds) {
    std::ostringstream out;
    out << "id,client,label";
    for (std::size_t d = 0; d < ds.dim; ++d) out << ",f" << d;
    out << "\n";
    for (const auto& e : ds.examples) {
        out << e.id << "," << e.origin_client << "," << e.label;
        for (double f : e.features) out << "," << fmt_exact(f);
        out << "\n";
    }
    return out.str();
}

Dataset parse_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("dataset: empty file");
    }
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "client" ||
        header[2] != "label") {
        throw ParseError("dataset: malformed header", line_no);
    }
    Dataset ds;
    ds.dim = header.size() - 3;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != ds.dim + 3) {
            throw ParseError("dataset: wrong field count", line_no);
        }
        Example e;
        e.id = static_cast<std::int64_t>(parse_double(fields[0], line_no));
        e.origin_client = static_cast<int>(parse_double(fields[1], line_no));
        e.label = static_cast<int>(parse_double(fields[2], line_no));
        e.features.resize(ds.dim);
        for (std::size_t d = 0; d < ds.dim; ++d) {
            e.features[d] = parse_double(fields[d + 3], line_no);
        }
        ds.examples.push_back(std::move(e));
    }
    validate_dataset(ds);
    return ds;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    return parse_dataset_csv(read_file(path));
}

std::string serialize_evaluation_table(const EvaluationTable& table) {
    std::ostringstream out;
    out << "model,n_pos/n_neg,threshold,accuracy,sensitivity,specificity,f1,auc,youden_j,"
           "balanced_accuracy\n";
    for (const auto& row : table.rows) {
        std::string label = row.model;
        if (row.client_id >= 0) label += "@client_" + std::to_string(row.client_id);
        const MetricReport& m = row.metrics;
        out << label << "," << m.n_pos << "/" << m.n_neg << "," << fmt_metric(m.threshold) << ","
            << fmt_metric(m.accuracy) << "," << fmt_metric(m.sensitivity) << ","
            << fmt_metric(m.specificity) << "," << fmt_metric(m.f1) << "," << fmt_metric(m.auc)
            << "," << fmt_metric(m.youden_j) << "," << fmt_metric(m.balanced_accuracy) << "\n";
    }
    return out.str();
}

std::string serialize_roc_csv(const RocCurve& curve) {
    std::ostringstream out;
    out << "fpr,tpr,threshold\n";
    for (const auto& p : curve.points) {
        out << fmt_metric(p.fpr) << "," << fmt_metric(p.tpr) << "," << fmt_metric(p.threshold)
            << "\n";
    }
    return out.str();
}

std::string serialize_predictions_csv(std::span<const double> scores,
                                      std::span<const int> labels) {
    std::ostringstream out;
    out << "score,label\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out << fmt_exact(scores[i]) << "," << labels[i] << "\n";
    }
    return out.str();
}

std::string serialize_curves_csv(const RunCurves& curves, const std::string& index_name) {
    std::ostringstream out;
    out << index_name << ",train_loss,val_loss,val_accuracy\n";
    for (std::size_t i = 0; i < curves.train_loss.size(); ++i) {
        out << i << "," << fmt_metric(curves.train_loss[i]) << ","
            << fmt_metric(curves.val_loss[i]) << "," << fmt_metric(curves.val_accuracy[i])
            << "\n";
    }
    return out.str();
}

std::string serialize_fl_client_curves_csv(const std::map<int, RunCurves>& per_client) {
    std::ostringstream out;
    out << "round,client_id,train_loss,val_loss,val_accuracy\n";
    if (per_client.empty()) return out.str();
    const std::size_t rounds = per_client.begin()->second.train_loss.size();
    for (std::size_t r = 0; r < rounds; ++r) {
        for (const auto& [client_id, curves] : per_client) {
            out << r << "," << client_id << "," << fmt_metric(curves.train_loss[r]) << ","
                << fmt_metric(curves.val_loss[r]) << "," << fmt_metric(curves.val_accuracy[r])
                << "\n";
        }
    }
    return out.str();
}

std::string serialize_significance_csv(const SignificanceTable& table) {
    std::ostringstream out;
    out << "setting,comparison,test,statistic,p_value,significant,footnote\n";
    for (const auto& row : table.rows) {
        out << row.setting << "," << row.comparison << "," << row.result.test_name << ","
            << fmt_metric(row.result.statistic) << "," << fmt_p(row.result.p_value) << ","
            << (row.result.significant ? "YES" : "NO") << "," << row.footnote << "\n";
    }
    return out.str();
}

std::string serialize_round_log(const std::vector<RoundLogEntry>& entries) {
    std::ostringstream out;
    out << "round,client_id,n_samples,train_loss,val_loss,val_accuracy,update_norm\n";
    for (const auto& e : entries) {
        out << e.round << "," << e.client_id << "," << e.n_samples << ","
            << fmt_metric(e.train_loss) << "," << fmt_metric(e.val_loss) << ","
            << fmt_metric(e.val_accuracy) << "," << fmt_metric(e.update_norm) << "\n";
    }
    return out.str();
}

std::vector<RoundLogEntry> parse_round_log(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("round log: empty file");
    }
    ++line_no;
    std::vector<RoundLogEntry> entries;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 7) {
            throw ParseError("round log: wrong field count", line_no);
        }
        RoundLogEntry e;
        e.round = static_cast<std::size_t>(parse_double(fields[0], line_no));
        e.client_id = static_cast<int>(parse_double(fields[1], line_no));
        e.n_samples = static_cast<std::size_t>(parse_double(fields[2], line_no));
        e.train_loss = parse_double(fields[3], line_no);
        e.val_loss = parse_double(fields[4], line_no);
        e.val_accuracy = parse_double(fields[5], line_no);
        e.update_norm = parse_double(fields[6], line_no);
        entries.push_back(e);
    }
    return entries;
}

std::string serialize_jcurves_csv(const std::vector<JCurve>& curves) {
    std::ostringstream out;
    out << "client_id,grid_id,threshold,j\n";
    for (const auto& c : curves) {
        const std::uint64_t grid_id =
            fnv1a64(c.thresholds.data(), c.thresholds.size() * sizeof(double));
        char grid_hex[32];
        std::snprintf(grid_hex, sizeof(grid_hex), "%016" PRIx64, grid_id);
        for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
            out << c.client_id << "," << grid_hex << "," << fmt_metric(c.thresholds[i]) << ","
                << fmt_metric(c.j_values[i]) << "\n";
        }
    }
    return out.str();
}

std::string serialize_diagnostics(const std::vector<RoundDiagnostics>& rounds,
                                  const std::vector<OutlierFlag>& flags,
                                  const std::map<std::string, ThresholdAggregate>& thresholds) {
    std::ostringstream out;
    out << "federated diagnostics report\n";
    out << "============================\n\n";
    for (const auto& round : rounds) {
        const std::size_t r = round.summaries.empty() ? 0 : round.summaries.front().round;
        out << "round " << r << "\n";
        out << "  client  update_norm  train_loss  val_loss  val_accuracy\n";
        for (const auto& s : round.summaries) {
            out << "  " << s.client_id << "  " << fmt_metric(s.update_norm) << "  "
                << fmt_metric(s.train_loss_end) << "  " << fmt_metric(s.val_loss) << "  "
                << fmt_metric(s.val_accuracy) << "\n";
        }
        out << "  cosine similarity (rows/cols in client order";
        for (int id : round.similarity.client_ids) out << " " << id;
        out << ")\n";
        const std::size_t k = round.similarity.client_ids.size();
        for (std::size_t i = 0; i < k; ++i) {
            out << "   ";
            for (std::size_t j = 0; j < k; ++j) {
                out << " " << formatted("%.4f", round.similarity.at(i, j));
            }
            out << "\n";
        }
        out << "\n";
    }
    out << "flags\n";
    if (flags.empty()) {
        out << "  none\n";
    } else {
        for (const auto& f : flags) {
            out << "  client " << f.client_id << ": " << f.reason << "\n";
        }
    }
    out << "\nglobal threshold by aggregation rule\n";
    for (const auto& [rule, agg] : thresholds) {
        out << "  " << rule << ": threshold " << fmt_metric(agg.threshold) << " (aggregate J "
            << fmt_metric(agg.aggregate_j) << ")\n";
    }
    return out.str();
}

ArtifactSink::ArtifactSink(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

void ArtifactSink::write_text(const std::string& relative_path, const std::string& content) {
    write_file(root_ / relative_path, content);
    entries_.push_back({relative_path, fnv1a64(content.data(), content.size()), content.size()});
}

std::string ArtifactSink::read_text(const std::string& relative_path) const {
    return read_file(root_ / relative_path);
}

void ArtifactSink::write_manifest(const std::string& command, std::uint64_t config_hash,
                                  std::uint64_t seed, double elapsed_seconds) {
    nlohmann::json artifacts = nlohmann::json::array();
    std::vector<Entry> sorted = entries_;
    std::sort(sorted.begin(), sorted.end(),
              [](const Entry& a, const Entry& b) { return a.path < b.path; });
    for (const auto& e : sorted) {
        char hash_hex[32];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016" PRIx64, e.hash);
        artifacts.push_back({{"path", e.path}, {"fnv1a64", hash_hex}, {"bytes", e.bytes}});
    }
    char cfg_hex[32];
    std::snprintf(cfg_hex, sizeof(cfg_hex), "%016" PRIx64, config_hash);
    nlohmann::json manifest{{"format", "fedbench-manifest v1"},
                            {"command", command},
                            {"config_hash", cfg_hex},
                            {"seed", seed},
                            {"artifacts", artifacts},
                            {"elapsed_seconds", elapsed_seconds}};
    write_file(root_ / ("manifest_" + command + ".json"), manifest.dump(2) + "\n");
}

}  // namespace fedbench
