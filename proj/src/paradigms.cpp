#include "fedbench/paradigms.hpp"

#include "fedbench/data_fabric.hpp"
#include "fedbench/errors.hpp"
#include "fedbench/optimizer.hpp"
#include "fedbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace fedbench {

std::string paradigm_name(Paradigm p) {
    switch (p) {
        case Paradigm::Local: return "ll";
        case Paradigm::Centralized: return "cl";
        case Paradigm::Federated: return "fl";
    }
    return "?";
}

void validate_train_config(const TrainConfig& config) {
    if (config.epochs < 1) {
        throw ValidationError("train config: epochs must be >= 1");
    }
    if (config.batch_size < 1) {
        throw ValidationError("train config: batch_size must be >= 1");
    }
    if (!(config.lr > 0.0) || !std::isfinite(config.lr)) {
        throw ValidationError("train config: lr must be positive and finite");
    }
    if (config.weight_decay < 0.0) {
        throw ValidationError("train config: weight_decay must be >= 0");
    }
    if (config.rebalance.enabled && config.rebalance.regenerate_every < 1) {
        throw ValidationError("train config: rebalance.regenerate_every must be >= 1");
    }
}

void validate_round_config(const RoundConfig& config) {
    if (config.rounds < 1) {
        throw ValidationError("round config: rounds must be >= 1");
    }
    if (config.local_epochs < 1) {
        throw ValidationError("round config: local_epochs must be >= 1");
    }
}

namespace {

struct ValidationPoint {
    double loss = 0.0;
    double accuracy = 0.0;
};

ValidationPoint validate_at_half(const ParamVector& params, const PredictorSpec& spec,
                                 const Dataset& validation) {
    const Batch batch = full_batch(validation);
    const auto logits = forward_logits(params, spec, batch);
    ValidationPoint out;
    out.loss = bce_with_logits(logits, batch.labels).loss;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const bool predicted = sigmoid(logits[i]) >= 0.5;
        correct += predicted == (batch.labels[i] == 1);
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(logits.size());
    return out;
}

}  // namespace

LocalTrainResult train_from(const ParamVector& start, const Dataset& train,
                            const Dataset& validation, const PredictorSpec& spec,
                            const TrainConfig& config, std::uint64_t seed) {
    validate_train_config(config);
    validate_spec(spec);
    if (train.empty() || validation.empty()) {
        throw ValidationError("train_from: train and validation sets must be non-empty");
    }
    if (!config.rebalance.enabled && (train.positives() == 0 || train.negatives() == 0)) {
        throw ValidationError("train_from: training set must contain both classes");
    }

    LocalTrainResult result;
    result.params = start;
    OptimizerState opt = make_optimizer_state(start.values.size(), config.lr,
                                              config.weight_decay, config.beta1, config.beta2,
                                              config.epsilon);
    const std::uint64_t rebalance_seed = derive_seed(seed, "rebalance");

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Dataset rebalanced;
        const Dataset* epoch_data = &train;
        if (config.rebalance.enabled) {
            rebalanced = rebalance_minority(train, config.rebalance, epoch, rebalance_seed);
            epoch_data = &rebalanced;
        }

        std::vector<std::size_t> order(epoch_data->size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(derive_seed(seed, "shuffle", epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;  // example-weighted
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, order.size());
            const Batch batch =
                make_batch(*epoch_data, std::span<const std::size_t>(order).subspan(
                                            begin, end - begin));
            const auto lg = loss_and_gradient(result.params, spec, batch);
            if (!std::isfinite(lg.loss)) {
                throw ComputeError("training diverged at epoch " + std::to_string(epoch) +
                                   ": non-finite loss");
            }
            adamw_step(opt, result.params, lg.gradient);
            result.batch_loss_trace.push_back(lg.loss);
            loss_sum += lg.loss * static_cast<double>(batch.rows);
        }

        const ValidationPoint val = validate_at_half(result.params, spec, validation);
        result.curves.train_loss.push_back(loss_sum / static_cast<double>(epoch_data->size()));
        result.curves.val_loss.push_back(val.loss);
        result.curves.val_accuracy.push_back(val.accuracy);
    }
    return result;
}

LocalTrainResult train_local(const Dataset& train, const Dataset& validation,
                             const PredictorSpec& spec, const TrainConfig& config,
                             std::uint64_t seed) {
    const ParamVector start = init_params(spec, derive_seed(seed, "init"));
    return train_from(start, train, validation, spec, config, seed);
}

std::pair<ParamVector, TrainingRunRecord> train_centralized(const SplitLayout& layout,
                                                            const PredictorSpec& spec,
                                                            const TrainConfig& config,
                                                            std::uint64_t seed) {
    if (layout.per_client.empty()) {
        throw ValidationError("train_centralized: layout has no clients");
    }
    Dataset pooled_train, pooled_val;
    for (const auto& [client_id, split] : layout.per_client) {
        if (pooled_train.dim == 0) {
            pooled_train.dim = split.train.dim;
            pooled_val.dim = split.validation.dim;
        }
        pooled_train.examples.insert(pooled_train.examples.end(), split.train.examples.begin(),
                                     split.train.examples.end());
        pooled_val.examples.insert(pooled_val.examples.end(), split.validation.examples.begin(),
                                   split.validation.examples.end());
    }

    LocalTrainResult result = train_local(pooled_train, pooled_val, spec, config, seed);
    TrainingRunRecord record;
    record.paradigm = Paradigm::Centralized;
    record.pooled = std::move(result.curves);
    return {std::move(result.params), std::move(record)};
}

ParamVector fedavg_aggregate(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) {
        throw ValidationError("fedavg_aggregate: no updates");
    }
    std::vector<const ClientUpdate*> ordered;
    ordered.reserve(updates.size());
    for (const auto& u : updates) ordered.push_back(&u);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ClientUpdate* a, const ClientUpdate* b) {
                         return a->client_id < b->client_id;
                     });

    double total = 0.0;
    for (const auto* u : ordered) {
        if (u->n_samples == 0) {
            throw ValidationError("fedavg_aggregate: client " + std::to_string(u->client_id) +
                                  " has zero samples");
        }
        if (!u->params.same_layout(ordered.front()->params)) {
            throw ComputeError("fedavg_aggregate: parameter layout mismatch at client " +
                               std::to_string(u->client_id));
        }
        total += static_cast<double>(u->n_samples);
    }

    ParamVector out;
    out.layout = ordered.front()->params.layout;
    out.values.assign(ordered.front()->params.values.size(), 0.0);
    for (const auto* u : ordered) {
        const double w = static_cast<double>(u->n_samples) / total;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] += w * u->params.values[i];
        }
    }
    return out;
}

FederatedRunResult run_federated(const SplitLayout& layout, const PredictorSpec& spec,
                                 const TrainConfig& config, const RoundConfig& rounds,
                                 std::uint64_t seed) {
    validate_train_config(config);
    validate_round_config(rounds);
    if (layout.per_client.empty()) {
        throw ValidationError("run_federated: layout has no clients");
    }
    if (layout.per_client.size() == 1) {
        std::cerr << "warning: federated run with a single client degenerates to local learning\n";
    }

    TrainConfig local_config = config;
    local_config.epochs = rounds.local_epochs;

    FederatedRunResult result;
    result.record.paradigm = Paradigm::Federated;
    result.global = init_params(spec, derive_seed(seed, "fl-init"));

    Dataset pooled_val;
    for (const auto& [client_id, split] : layout.per_client) {
        if (pooled_val.dim == 0) pooled_val.dim = split.validation.dim;
        pooled_val.examples.insert(pooled_val.examples.end(), split.validation.examples.begin(),
                                   split.validation.examples.end());
    }

    for (std::size_t round = 0; round < rounds.rounds; ++round) {
        result.global_before.push_back(result.global);

        std::vector<ClientUpdate> updates;
        for (const auto& [client_id, split] : layout.per_client) {
            const std::uint64_t client_seed =
                derive_seed(seed, "fl-client", static_cast<std::uint64_t>(client_id), round);
            try {
                LocalTrainResult local = train_from(result.global, split.train,
                                                    split.validation, spec, local_config,
                                                    client_seed);
                ClientUpdate update;
                update.client_id = client_id;
                update.params = std::move(local.params);
                update.n_samples = split.train.size();
                update.train_loss_trace = std::move(local.batch_loss_trace);
                update.val_loss = local.curves.val_loss.back();
                update.val_accuracy = local.curves.val_accuracy.back();

                RunCurves& curves = result.record.per_client[client_id];
                double mean_epoch_loss = 0.0;
                for (double l : local.curves.train_loss) mean_epoch_loss += l;
                mean_epoch_loss /= static_cast<double>(local.curves.train_loss.size());
                curves.train_loss.push_back(mean_epoch_loss);
                curves.val_loss.push_back(update.val_loss);
                curves.val_accuracy.push_back(update.val_accuracy);

                updates.push_back(std::move(update));
            } catch (const std::exception& e) {
                if (!rounds.drop_failed_clients) {
                    throw ComputeError("federated round " + std::to_string(round) + ": client " +
                                       std::to_string(client_id) + " failed: " + e.what());
                }
                std::cerr << "warning: dropping client " << client_id << " in round " << round
                          << ": " << e.what() << "\n";
            }
        }
        if (updates.empty()) {
            throw ComputeError("federated round " + std::to_string(round) +
                               ": no client updates to aggregate");
        }

        result.global = fedavg_aggregate(updates);

        // Global-model curves on the pooled validation set; train loss is the
        // sample-weighted mean of the clients' epoch losses this round.
        double weighted_loss = 0.0, total = 0.0;
        for (const auto& u : updates) {
            const RunCurves& c = result.record.per_client[u.client_id];
            weighted_loss += c.train_loss.back() * static_cast<double>(u.n_samples);
            total += static_cast<double>(u.n_samples);
        }
        const ValidationPoint val = validate_at_half(result.global, spec, pooled_val);
        result.record.pooled.train_loss.push_back(weighted_loss / total);
        result.record.pooled.val_loss.push_back(val.loss);
        result.record.pooled.val_accuracy.push_back(val.accuracy);

        result.round_updates.push_back(std::move(updates));
    }
    return result;
}

}  // namespace fedbench
