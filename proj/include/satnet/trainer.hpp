#pragma once

#include <string>
#include <vector>

#include "satnet/model.hpp"

namespace satnet {

/// Raises the allocator's mmap/trim thresholds so per-epoch tape buffers are
/// reused instead of being returned to the OS. Call once at process start of
/// training-heavy binaries; no-op where unsupported.
void tune_allocator();

/// Adam with optional coupled L2 weight decay (applied only to parameters
/// flagged for decay).
class Adam {
public:
    Adam(const std::vector<ad::Parameter*>& params, double lr, double weight_decay,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(const std::vector<ad::Parameter*>& params);

private:
    double lr_, weight_decay_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct EpochStats {
    double loss_task = 0.0;
    double loss_mf = 0.0;
    double val_acc = 0.0;
    double train_acc = 0.0;
};

struct Metrics {
    std::vector<EpochStats> per_epoch;
    double test_acc = 0.0;
    double cluster_acc = 0.0;
    double seconds = 0.0;   ///< wall clock; the only nondeterministic field
    std::uint64_t seed = 0;
    int best_epoch = 0;     ///< 0 = initialization
    double best_val_acc = 0.0;
    std::int64_t parameter_count = 0;
};

/// Row-argmax class predictions; ties break to the lowest class index.
std::vector<int> argmax_predictions(const Tensor& logits);
double accuracy(const Tensor& logits, const std::vector<int>& labels,
                const std::vector<int>& indices);

/// Optimizes cross-entropy on the training split (plus the embedding
/// reconstruction term when active), tracks the best validation epoch, and
/// evaluates test and all-node clustering accuracy at that checkpoint.
/// Deterministic given config.seed. Throws ContractError with a diagnostic
/// dump if the loss turns non-finite.
Metrics train(Model& model, const Graph& g, const TrainConfig& cfg);

/// Test-split accuracy of the current model state.
double evaluate_classification(Model& model, const Graph& g);

/// All-node accuracy of argmax assignments against ground-truth labels; the
/// label-supervised clustering protocol (no permutation matching).
double evaluate_clustering(Model& model, const Graph& g);

struct AblationRow {
    std::string name;
    TrainConfig cfg;
    std::vector<double> test_accs;
    std::vector<double> cluster_accs;
    double mean_test_acc = 0.0;
    double mean_cluster_acc = 0.0;
};

/// Trains the standard variant family — plain attention baseline, single
/// dissimilarity variants (*-F, *-P) and the combined models — once per seed
/// and reports mean accuracies.
std::vector<AblationRow> run_ablation(const TrainConfig& base, const Graph& g,
                                      const std::vector<std::uint64_t>& seeds);

/// metrics.json payload: config, per-epoch losses/accuracies, final metrics.
std::string metrics_to_json(const Metrics& m, const TrainConfig& cfg);
void write_metrics_json(const std::string& path, const Metrics& m, const TrainConfig& cfg);

} // namespace satnet
