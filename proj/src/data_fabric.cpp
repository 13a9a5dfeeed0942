#include "fedbench/data_fabric.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fedbench {

namespace {

// Ids in this range mark augmented copies produced by rebalance_minority.
constexpr std::int64_t kAugmentedIdBase = std::int64_t{1} << 32;

// Picks `take` distinct indices out of {0..n-1} by partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t take, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    return idx;
}

}  // namespace

std::size_t Dataset::count_label(int label) const {
    std::size_t n = 0;
    for (const auto& e : examples) {
        if (e.label == label) ++n;
    }
    return n;
}

void validate_dataset(const Dataset& ds) {
    for (const auto& e : ds.examples) {
        if (e.features.size() != ds.dim) {
            throw ValidationError("dataset: example " + std::to_string(e.id) +
                                  " has dimension " + std::to_string(e.features.size()) +
                                  ", expected " + std::to_string(ds.dim));
        }
        if (e.label != 0 && e.label != 1) {
            throw ValidationError("dataset: example " + std::to_string(e.id) +
                                  " has label outside {0,1}");
        }
        for (double f : e.features) {
            if (!std::isfinite(f)) {
                throw ValidationError("dataset: example " + std::to_string(e.id) +
                                      " has a non-finite feature");
            }
        }
    }
}

std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(x < 0 ? std::ceil(x - 0.5) : std::floor(x + 0.5));
}

std::map<int, Dataset> generate_cohort(const std::vector<ClientSpec>& specs, std::size_t dim,
                                       std::uint64_t seed, double cluster_margin) {
    if (dim < 2) {
        throw ValidationError("generate_cohort: dim must be >= 2");
    }
    if (specs.empty()) {
        throw ValidationError("generate_cohort: no client specs");
    }
    std::map<int, const ClientSpec*> by_id;
    for (const auto& s : specs) {
        if (!by_id.emplace(s.client_id, &s).second) {
            throw ValidationError("generate_cohort: duplicate client id " +
                                  std::to_string(s.client_id));
        }
        if (s.n_total == 0) {
            throw ValidationError("generate_cohort: client " + std::to_string(s.client_id) +
                                  " has n_total = 0");
        }
        if (s.overlap_fraction < 0.0 || s.overlap_fraction > 1.0) {
            throw ValidationError("generate_cohort: client " + std::to_string(s.client_id) +
                                  " overlap_fraction outside [0,1]");
        }
        if (s.label_noise_rate < 0.0 || s.label_noise_rate >= 0.5) {
            throw ValidationError("generate_cohort: client " + std::to_string(s.client_id) +
                                  " label_noise_rate outside [0,0.5)");
        }
        if (!s.feature_shift.empty() && s.feature_shift.size() != dim) {
            throw ValidationError("generate_cohort: client " + std::to_string(s.client_id) +
                                  " feature_shift dimension mismatch");
        }
    }

    // Class means sit +-margin/2 apart along the all-ones direction.
    const double offset = cluster_margin / (2.0 * std::sqrt(static_cast<double>(dim)));

    std::map<int, Dataset> cohort;
    std::int64_t next_id = 0;
    for (const auto& [client_id, spec] : by_id) {
        Rng rng(derive_seed(seed, "cohort", static_cast<std::uint64_t>(client_id)));
        const std::size_t n = spec->n_total;
        const auto n_pos =
            static_cast<std::size_t>(round_half_away(static_cast<double>(n) * spec->overlap_fraction));
        const std::size_t n_neg = n - n_pos;

        const auto n_noisy =
            static_cast<std::size_t>(round_half_away(static_cast<double>(n) * spec->label_noise_rate));
        std::vector<char> noisy(n, 0);
        for (std::size_t i : sample_without_replacement(n, n_noisy, rng)) noisy[i] = 1;

        Dataset ds;
        ds.dim = dim;
        ds.examples.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            Example e;
            e.id = next_id++;
            e.label = i < n_neg ? 0 : 1;
            e.origin_client = client_id;
            const int cluster = noisy[i] ? 1 - e.label : e.label;
            const double mean = cluster == 1 ? offset : -offset;
            e.features.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                double shift = spec->feature_shift.empty() ? 0.0 : spec->feature_shift[d];
                e.features[d] = mean + rng.normal() + shift;
            }
            ds.examples.push_back(std::move(e));
        }
        cohort.emplace(client_id, std::move(ds));
    }
    return cohort;
}

Dataset pool_clients(const std::map<int, Dataset>& clients) {
    Dataset pooled;
    for (const auto& [client_id, ds] : clients) {
        if (pooled.dim == 0) pooled.dim = ds.dim;
        if (ds.dim != pooled.dim) {
            throw ValidationError("pool_clients: dimension mismatch at client " +
                                  std::to_string(client_id));
        }
        for (Example e : ds.examples) {
            e.origin_client = client_id;
            pooled.examples.push_back(std::move(e));
        }
    }
    return pooled;
}

std::map<int, Dataset> redistribute_by_origin(const Dataset& pooled) {
    std::map<int, Dataset> out;
    for (const auto& e : pooled.examples) {
        if (e.origin_client < 0) {
            throw ValidationError("redistribute_by_origin: example " + std::to_string(e.id) +
                                  " has no origin tag");
        }
        Dataset& ds = out[e.origin_client];
        ds.dim = pooled.dim;
        ds.examples.push_back(e);
    }
    return out;
}

TestSplit stratified_test_split(const Dataset& pooled, double fraction, std::uint64_t seed,
                                bool allow_unstratified) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ValidationError("stratified_test_split: fraction must be in (0,1)");
    }
    if (pooled.empty()) {
        throw ValidationError("stratified_test_split: empty dataset");
    }

    std::vector<std::size_t> neg_idx, pos_idx;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        (pooled.examples[i].label == 1 ? pos_idx : neg_idx).push_back(i);
    }

    std::vector<char> in_test(pooled.size(), 0);
    if (neg_idx.empty() || pos_idx.empty()) {
        if (!allow_unstratified) {
            throw ValidationError(
                "stratified_test_split: single-class input (stratification infeasible); "
                "pass allow_unstratified to sample anyway");
        }
        Rng rng(derive_seed(seed, "test-split", 2));
        const auto take = static_cast<std::size_t>(
            round_half_away(fraction * static_cast<double>(pooled.size())));
        for (std::size_t i : sample_without_replacement(pooled.size(), take, rng)) in_test[i] = 1;
    } else {
        for (int label = 0; label <= 1; ++label) {
            const auto& idx = label == 1 ? pos_idx : neg_idx;
            const auto take = static_cast<std::size_t>(
                round_half_away(fraction * static_cast<double>(idx.size())));
            if (take < 1) {
                throw ValidationError(
                    "stratified_test_split: class " + std::to_string(label) +
                    " expects fewer than 1 test example (stratification infeasible)");
            }
            Rng rng(derive_seed(seed, "test-split", static_cast<std::uint64_t>(label)));
            for (std::size_t pick : sample_without_replacement(idx.size(), take, rng)) {
                in_test[idx[pick]] = 1;
            }
        }
    }

    TestSplit out;
    out.test.dim = pooled.dim;
    out.remainder.dim = pooled.dim;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        (in_test[i] ? out.test : out.remainder).examples.push_back(pooled.examples[i]);
    }
    return out;
}

SplitLayout per_client_validation_split(const std::map<int, Dataset>& remainder,
                                        double target_total_fraction, double test_fraction,
                                        std::uint64_t seed) {
    if (!(target_total_fraction > 0.0 && target_total_fraction < 1.0)) {
        throw ValidationError("per_client_validation_split: target fraction must be in (0,1)");
    }
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ValidationError("per_client_validation_split: test fraction must be in [0,1)");
    }
    const double f = target_total_fraction / (1.0 - test_fraction);

    SplitLayout layout;
    for (const auto& [client_id, ds] : remainder) {
        std::vector<std::size_t> neg_idx, pos_idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            (ds.examples[i].label == 1 ? pos_idx : neg_idx).push_back(i);
        }
        if (neg_idx.size() < 2 || pos_idx.size() < 2) {
            throw ValidationError("per_client_validation_split: client " +
                                  std::to_string(client_id) +
                                  " has fewer than 2 examples of a class (infeasible)");
        }

        std::vector<char> in_val(ds.size(), 0);
        for (int label = 0; label <= 1; ++label) {
            const auto& idx = label == 1 ? pos_idx : neg_idx;
            auto take = round_half_away(f * static_cast<double>(idx.size()));
            take = std::clamp<std::int64_t>(take, 1, static_cast<std::int64_t>(idx.size()) - 1);
            Rng rng(derive_seed(seed, "val-split", static_cast<std::uint64_t>(client_id),
                                static_cast<std::uint64_t>(label)));
            for (std::size_t pick :
                 sample_without_replacement(idx.size(), static_cast<std::size_t>(take), rng)) {
                in_val[idx[pick]] = 1;
            }
        }

        ClientSplit split;
        split.train.dim = ds.dim;
        split.validation.dim = ds.dim;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            (in_val[i] ? split.validation : split.train).examples.push_back(ds.examples[i]);
        }
        layout.per_client.emplace(client_id, std::move(split));
    }
    return layout;
}

Dataset rebalance_minority(const Dataset& train, const RebalancePolicy& policy,
                           std::size_t epoch_index, std::uint64_t base_seed) {
    if (!policy.enabled) {
        throw ValidationError("rebalance_minority: policy is disabled");
    }
    if (policy.regenerate_every < 1) {
        throw ValidationError("rebalance_minority: regenerate_every must be >= 1");
    }
    const std::size_t n_pos = train.positives();
    const std::size_t n_neg = train.negatives();
    if (n_pos == 0 || n_neg == 0) {
        throw ValidationError("rebalance_minority: single-class input (infeasible)");
    }

    Dataset out = train;
    if (n_pos == n_neg) return out;

    const int minority_label = n_pos < n_neg ? 1 : 0;
    std::vector<std::size_t> minority_idx;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.examples[i].label == minority_label) minority_idx.push_back(i);
    }

    const std::size_t n_add = n_pos < n_neg ? n_neg - n_pos : n_pos - n_neg;
    const std::uint64_t regeneration_index = epoch_index / policy.regenerate_every;
    out.examples.reserve(train.size() + n_add);
    for (std::size_t item = 0; item < n_add; ++item) {
        Rng rng(derive_seed(base_seed, "rebalance", regeneration_index, item));
        Example copy = train.examples[minority_idx[rng.uniform_index(minority_idx.size())]];
        copy.id = kAugmentedIdBase + static_cast<std::int64_t>(item);
        for (double& f : copy.features) f += rng.normal(0.0, policy.jitter_scale);
        out.examples.push_back(std::move(copy));
    }
    return out;
}

PredictionFile load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("load_predictions: cannot open " + path);
    }
    PredictionFile out;
    out.model_tag = std::filesystem::path(path).stem().string();

    std::string line;
    std::size_t line_no = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_data && (line == "score,label" || line == "logit,label")) {
            out.logit_scores = line == "logit,label";
            saw_data = true;  // header consumed; only the first line may be one
            continue;
        }
        saw_data = true;

        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError("load_predictions: expected exactly two comma-separated fields",
                             line_no);
        }
        const std::string score_str = line.substr(0, comma);
        const std::string label_str = line.substr(comma + 1);

        char* end = nullptr;
        const double score = std::strtod(score_str.c_str(), &end);
        if (end == score_str.c_str() || *end != '\0' || !std::isfinite(score)) {
            throw ParseError("load_predictions: non-numeric score '" + score_str + "'", line_no);
        }
        if (label_str == "0") {
            out.labels.push_back(0);
        } else if (label_str == "1") {
            out.labels.push_back(1);
        } else {
            throw ParseError("load_predictions: unknown label value '" + label_str + "'",
                             line_no);
        }
        out.scores.push_back(score);
    }
    if (out.scores.empty()) {
        throw ParseError("load_predictions: no data rows in " + path);
    }
    return out;
}

}  // namespace fedbench
