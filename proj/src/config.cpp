#include "fedbench/config.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fedbench {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (allowed.find(key) == allowed.end()) {
            throw ValidationError("config: unknown key '" + section + key + "'");
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& section, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: field '" + section + key + "' has the wrong type");
    }
}

json cohort_to_json(const CohortConfig& c) {
    json clients = json::array();
    for (const auto& spec : c.clients) {
        json entry{{"client_id", spec.client_id},
                   {"n_total", spec.n_total},
                   {"overlap_fraction", spec.overlap_fraction},
                   {"label_noise_rate", spec.label_noise_rate}};
        if (!spec.feature_shift.empty()) {
            entry["feature_shift"] = spec.feature_shift;
        } else {
            entry["feature_shift_scale"] = spec.feature_shift_scale;
        }
        clients.push_back(std::move(entry));
    }
    return json{{"dim", c.dim}, {"cluster_margin", c.cluster_margin}, {"clients", clients}};
}

CohortConfig cohort_from_json(const json& obj) {
    check_keys(obj, "cohort.", {"dim", "cluster_margin", "clients"});
    CohortConfig c;
    c.dim = get_or<std::size_t>(obj, "cohort.", "dim", c.dim);
    c.cluster_margin = get_or<double>(obj, "cohort.", "cluster_margin", c.cluster_margin);
    if (obj.contains("clients")) {
        if (!obj.at("clients").is_array()) {
            throw ValidationError("config: field 'cohort.clients' must be an array");
        }
        std::size_t index = 0;
        for (const auto& entry : obj.at("clients")) {
            const std::string section = "cohort.clients[" + std::to_string(index) + "].";
            check_keys(entry, section,
                       {"client_id", "n_total", "overlap_fraction", "feature_shift",
                        "feature_shift_scale", "label_noise_rate"});
            ClientSpecConfig spec;
            spec.client_id = get_or<int>(entry, section, "client_id", static_cast<int>(index));
            if (!entry.contains("n_total")) {
                throw ValidationError("config: field '" + section + "n_total' is required");
            }
            spec.n_total = get_or<std::size_t>(entry, section, "n_total", 0);
            spec.overlap_fraction = get_or<double>(entry, section, "overlap_fraction", 0.0);
            spec.feature_shift =
                get_or<std::vector<double>>(entry, section, "feature_shift", {});
            spec.feature_shift_scale =
                get_or<double>(entry, section, "feature_shift_scale", 0.0);
            spec.label_noise_rate = get_or<double>(entry, section, "label_noise_rate", 0.0);
            c.clients.push_back(std::move(spec));
            ++index;
        }
    }
    return c;
}

json model_to_json(const PredictorSpec& m) {
    return json{{"kind", m.kind == PredictorKind::Logistic ? "logistic" : "mlp"},
                {"hidden_sizes", m.hidden_sizes}};
}

PredictorSpec model_from_json(const json& obj) {
    check_keys(obj, "model.", {"kind", "hidden_sizes"});
    PredictorSpec m;
    const std::string kind = get_or<std::string>(obj, "model.", "kind", "logistic");
    if (kind == "logistic") {
        m.kind = PredictorKind::Logistic;
    } else if (kind == "mlp") {
        m.kind = PredictorKind::Mlp;
    } else {
        throw ValidationError("config: field 'model.kind' must be 'logistic' or 'mlp'");
    }
    m.hidden_sizes = get_or<std::vector<std::size_t>>(obj, "model.", "hidden_sizes", {});
    return m;
}

json train_to_json(const TrainConfig& t) {
    return json{{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"epsilon", t.epsilon},
                {"rebalance",
                 json{{"enabled", t.rebalance.enabled},
                      {"regenerate_every", t.rebalance.regenerate_every},
                      {"jitter_scale", t.rebalance.jitter_scale}}}};
}

TrainConfig train_from_json(const json& obj) {
    check_keys(obj, "train.",
               {"epochs", "batch_size", "lr", "weight_decay", "beta1", "beta2", "epsilon",
                "rebalance"});
    TrainConfig t;
    t.epochs = get_or<std::size_t>(obj, "train.", "epochs", t.epochs);
    t.batch_size = get_or<std::size_t>(obj, "train.", "batch_size", t.batch_size);
    t.lr = get_or<double>(obj, "train.", "lr", t.lr);
    t.weight_decay = get_or<double>(obj, "train.", "weight_decay", t.weight_decay);
    t.beta1 = get_or<double>(obj, "train.", "beta1", t.beta1);
    t.beta2 = get_or<double>(obj, "train.", "beta2", t.beta2);
    t.epsilon = get_or<double>(obj, "train.", "epsilon", t.epsilon);
    if (obj.contains("rebalance")) {
        const json& r = obj.at("rebalance");
        check_keys(r, "train.rebalance.", {"enabled", "regenerate_every", "jitter_scale"});
        t.rebalance.enabled = get_or<bool>(r, "train.rebalance.", "enabled", true);
        t.rebalance.regenerate_every =
            get_or<std::size_t>(r, "train.rebalance.", "regenerate_every", 2);
        t.rebalance.jitter_scale = get_or<double>(r, "train.rebalance.", "jitter_scale", 0.1);
    }
    return t;
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

std::string serialize_config(const ExperimentConfig& c) {
    json j{{"master_seed", c.master_seed},
           {"output_dir", c.output_dir},
           {"cohort", cohort_to_json(c.cohort)},
           {"model", model_to_json(c.model)},
           {"train", train_to_json(c.train)},
           {"rounds",
            json{{"rounds", c.rounds.rounds},
                 {"local_epochs", c.rounds.local_epochs},
                 {"drop_failed_clients", c.rounds.drop_failed_clients}}},
           {"splits",
            json{{"test_fraction", c.splits.test_fraction},
                 {"validation_total_fraction", c.splits.validation_total_fraction}}},
           {"eval", json{{"threshold_grid_points", c.eval.threshold_grid_points}}},
           {"monitor", json{{"z_threshold", c.monitor.z_threshold}}},
           {"bench", json{{"seeds", c.bench.seeds}}}};
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    check_keys(j, "",
               {"master_seed", "output_dir", "cohort", "model", "train", "rounds", "splits",
                "eval", "monitor", "bench"});
    ExperimentConfig c;
    c.master_seed = get_or<std::uint64_t>(j, "", "master_seed", c.master_seed);
    c.output_dir = get_or<std::string>(j, "", "output_dir", c.output_dir);
    if (j.contains("cohort")) c.cohort = cohort_from_json(j.at("cohort"));
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
    if (j.contains("rounds")) {
        const json& r = j.at("rounds");
        check_keys(r, "rounds.", {"rounds", "local_epochs", "drop_failed_clients"});
        c.rounds.rounds = get_or<std::size_t>(r, "rounds.", "rounds", c.rounds.rounds);
        c.rounds.local_epochs =
            get_or<std::size_t>(r, "rounds.", "local_epochs", c.rounds.local_epochs);
        c.rounds.drop_failed_clients =
            get_or<bool>(r, "rounds.", "drop_failed_clients", c.rounds.drop_failed_clients);
    }
    if (j.contains("splits")) {
        const json& s = j.at("splits");
        check_keys(s, "splits.", {"test_fraction", "validation_total_fraction"});
        c.splits.test_fraction =
            get_or<double>(s, "splits.", "test_fraction", c.splits.test_fraction);
        c.splits.validation_total_fraction = get_or<double>(
            s, "splits.", "validation_total_fraction", c.splits.validation_total_fraction);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, "eval.", {"threshold_grid_points"});
        c.eval.threshold_grid_points =
            get_or<std::size_t>(e, "eval.", "threshold_grid_points",
                                c.eval.threshold_grid_points);
    }
    if (j.contains("monitor")) {
        const json& m = j.at("monitor");
        check_keys(m, "monitor.", {"z_threshold"});
        c.monitor.z_threshold = get_or<double>(m, "monitor.", "z_threshold",
                                               c.monitor.z_threshold);
    }
    if (j.contains("bench")) {
        const json& b = j.at("bench");
        check_keys(b, "bench.", {"seeds"});
        c.bench.seeds = get_or<std::size_t>(b, "bench.", "seeds", c.bench.seeds);
    }
    c.model.input_dim = c.cohort.dim;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("config: cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void validate_config(const ExperimentConfig& c) {
    if (c.cohort.dim < 2) {
        throw ValidationError("config: field 'cohort.dim' must be >= 2");
    }
    if (c.cohort.clients.empty()) {
        throw ValidationError("config: field 'cohort.clients' must list at least one client");
    }
    std::set<int> ids;
    for (std::size_t i = 0; i < c.cohort.clients.size(); ++i) {
        const auto& cl = c.cohort.clients[i];
        const std::string field = "cohort.clients[" + std::to_string(i) + "]";
        if (!ids.insert(cl.client_id).second) {
            throw ValidationError("config: " + field + " duplicates client_id " +
                                  std::to_string(cl.client_id));
        }
        if (cl.n_total == 0) {
            throw ValidationError("config: " + field + ".n_total must be positive");
        }
        if (cl.overlap_fraction < 0.0 || cl.overlap_fraction > 1.0) {
            throw ValidationError("config: " + field + ".overlap_fraction must be in [0,1]");
        }
        if (cl.label_noise_rate < 0.0 || cl.label_noise_rate >= 0.5) {
            throw ValidationError("config: " + field + ".label_noise_rate must be in [0,0.5)");
        }
        if (!cl.feature_shift.empty() && cl.feature_shift.size() != c.cohort.dim) {
            throw ValidationError("config: " + field + ".feature_shift must have cohort.dim " +
                                  "entries");
        }
        if (cl.feature_shift_scale < 0.0) {
            throw ValidationError("config: " + field + ".feature_shift_scale must be >= 0");
        }
    }
    PredictorSpec model = c.model;
    model.input_dim = c.cohort.dim;
    validate_spec(model);
    validate_train_config(c.train);
    validate_round_config(c.rounds);
    if (!(c.splits.test_fraction > 0.0 && c.splits.test_fraction < 1.0)) {
        throw ValidationError("config: field 'splits.test_fraction' must be in (0,1)");
    }
    if (!(c.splits.validation_total_fraction > 0.0 &&
          c.splits.validation_total_fraction < 1.0 - c.splits.test_fraction)) {
        throw ValidationError(
            "config: field 'splits.validation_total_fraction' must be in (0, 1 - test_fraction)");
    }
    if (c.eval.threshold_grid_points < 1) {
        throw ValidationError("config: field 'eval.threshold_grid_points' must be >= 1");
    }
    if (c.monitor.z_threshold <= 0.0) {
        throw ValidationError("config: field 'monitor.z_threshold' must be positive");
    }
    if (c.rounds.rounds * c.rounds.local_epochs != c.train.epochs) {
        std::cerr << "warning: rounds*local_epochs (" << c.rounds.rounds * c.rounds.local_epochs
                  << ") differs from train.epochs (" << c.train.epochs
                  << "); the paradigm comparison will not be budget-matched\n";
    }
}

std::vector<ClientSpec> resolve_client_specs(const CohortConfig& cohort,
                                             std::uint64_t master_seed) {
    std::vector<ClientSpec> specs;
    specs.reserve(cohort.clients.size());
    for (const auto& c : cohort.clients) {
        ClientSpec spec;
        spec.client_id = c.client_id;
        spec.n_total = c.n_total;
        spec.overlap_fraction = c.overlap_fraction;
        spec.label_noise_rate = c.label_noise_rate;
        if (!c.feature_shift.empty()) {
            spec.feature_shift = c.feature_shift;
        } else if (c.feature_shift_scale > 0.0) {
            Rng rng(derive_seed(master_seed, "shift", static_cast<std::uint64_t>(c.client_id)));
            spec.feature_shift.resize(cohort.dim);
            for (double& s : spec.feature_shift) s = rng.normal(0.0, c.feature_shift_scale);
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    return fnv1a64(serialize_config(config));
}

}  // namespace fedbench
