#pragma once

#include "fedbench/dataset.hpp"
#include "fedbench/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fedbench {

enum class Paradigm { Local, Centralized, Federated };

std::string paradigm_name(Paradigm p);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    RebalancePolicy rebalance;
};

void validate_train_config(const TrainConfig& config);

struct RoundConfig {
    std::size_t rounds = 5;
    std::size_t local_epochs = 2;
    // All clients participate every round. When a client fails mid-round the
    // default is to abort; this flag switches to drop-and-renormalize.
    bool drop_failed_clients = false;
};

void validate_round_config(const RoundConfig& config);

// One client's contribution to a federated round.
struct ClientUpdate {
    int client_id = -1;
    ParamVector params;          // weights after local training
    std::size_t n_samples = 0;   // original (pre-rebalance) training count
    std::vector<double> train_loss_trace;  // one entry per batch
    double val_loss = 0.0;       // local model on the client's own validation
    double val_accuracy = 0.0;   // at the fixed 0.5 probability threshold
};

// Loss/accuracy curves indexed by epoch (LL/CL) or round (FL).
struct RunCurves {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
};

struct TrainingRunRecord {
    Paradigm paradigm = Paradigm::Local;
    RunCurves pooled;                     // LL/CL curves; FL: global model per round
    std::map<int, RunCurves> per_client;  // FL: client-local curves per round
};

struct LocalTrainResult {
    ParamVector params;
    RunCurves curves;                      // per epoch
    std::vector<double> batch_loss_trace;  // per optimization step
};

// Mini-batch AdamW training with per-policy rebalancing, starting from the
// given parameters. All randomness (shuffling, rebalance jitter) derives from
// seed. Validation loss/accuracy are recorded each epoch at threshold 0.5.
LocalTrainResult train_from(const ParamVector& start, const Dataset& train,
                            const Dataset& validation, const PredictorSpec& spec,
                            const TrainConfig& config, std::uint64_t seed);

// Fresh-initialization variant: Local Learning for one client.
LocalTrainResult train_local(const Dataset& train, const Dataset& validation,
                             const PredictorSpec& spec, const TrainConfig& config,
                             std::uint64_t seed);

// Pools all client train splits, rebalances the pool, and trains one model;
// validation is the union of the per-client validation sets.
std::pair<ParamVector, TrainingRunRecord> train_centralized(const SplitLayout& layout,
                                                            const PredictorSpec& spec,
                                                            const TrainConfig& config,
                                                            std::uint64_t seed);

// Sample-weighted average of client parameters with weights n_k / sum(n_k).
// Updates are summed in ascending client-id order, so the result does not
// depend on the order updates are supplied in.
ParamVector fedavg_aggregate(const std::vector<ClientUpdate>& updates);

struct FederatedRunResult {
    ParamVector global;
    TrainingRunRecord record;
    std::vector<std::vector<ClientUpdate>> round_updates;  // per round, for monitoring
    std::vector<ParamVector> global_before;                // global weights entering each round
};

// Rounds-based federated training: broadcast the global weights, train every
// client locally for local_epochs (rebalanced sets regenerate each round),
// aggregate with fedavg_aggregate. Per-client RNG streams are keyed by
// (seed, client_id, round), so results do not depend on execution order.
FederatedRunResult run_federated(const SplitLayout& layout, const PredictorSpec& spec,
                                 const TrainConfig& config, const RoundConfig& rounds,
                                 std::uint64_t seed);

}  // namespace fedbench
