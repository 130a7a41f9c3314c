#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "satnet/sa_layer.hpp"

namespace satnet {

/// Full run configuration: architecture, optimization, data handling.
struct TrainConfig {
    std::string dataset;            ///< bundle directory (CLI only)
    Strategy strategy = Strategy::contractive;
    double beta = 1.0;
    DissimMode dissim = DissimMode::both;
    int heads = 8;                  ///< hidden-layer attention heads
    int out_heads = 1;              ///< output-layer attention heads
    int hidden = 8;                 ///< hidden dimension per head
    double lr = 0.005;
    double weight_decay = 5e-4;
    double dropout = 0.6;
    int epochs = 1000;
    std::uint64_t seed = 0;
    double mf_weight = 1.0;         ///< weight of the embedding loss term
    int mf_exact_threshold = 5000;
    int mf_negative_ratio = 5;
    int reduce_dim = 512;           ///< pre-layer output dimension
    int reduce_threshold = 4096;    ///< pre-layer activates when feature dim exceeds this
    int split_index = 0;
    bool restore_best = true;       ///< evaluate at the best-validation checkpoint

    void validate() const;          ///< throws ConfigError
    std::string to_json_string() const;
    static TrainConfig from_json_string(const std::string& text);
};

/// Two-layer selective-attention network: optional linear pre-layer, hidden
/// layer (multi-head, concat, ELU), output layer (mean heads, raw logits).
class Model {
public:
    Model(const TrainConfig& cfg, const Graph& g);

    struct ForwardResult {
        ad::Tape tape;
        ad::Var logits;                       ///< (N, C)
        ad::Var mf;                           ///< invalid when the embedding is unused
        std::vector<EdgeAttention> output_attention;  ///< per output head
        int subtractive_fallbacks = 0;
    };

    /// Builds one forward tape. `rng` drives dropout (training) and non-edge
    /// sampling (large graphs); `with_mf` adds the embedding loss node.
    ForwardResult forward(const Graph& g, bool training, Rng* rng, bool with_mf);

    /// Evaluation-mode logits.
    Tensor predict(const Graph& g);

    bool uses_structure() const;
    const TrainConfig& config() const { return cfg_; }
    const PreLayerPlan& pre_layer_plan() const { return pre_plan_; }

    std::vector<ad::Parameter*> parameters();
    std::int64_t parameter_count();
    void zero_grad();

    SaLayer& hidden_layer() { return *hidden_; }
    SaLayer& output_layer() { return *output_; }
    ad::Parameter* pre_layer() { return pre_W_ ? &*pre_W_ : nullptr; }
    StructuralEmbedding* structural_embedding() { return embedding_ ? &*embedding_ : nullptr; }

    std::vector<Tensor> snapshot_values();
    void restore_values(const std::vector<Tensor>& values);

private:
    TrainConfig cfg_;
    PreLayerPlan pre_plan_;
    std::optional<ad::Parameter> pre_W_;
    std::optional<StructuralEmbedding> embedding_;
    std::unique_ptr<SaLayer> hidden_;
    std::unique_ptr<SaLayer> output_;
};

/// Validates the config against the graph and assembles the network.
Model build_model(const TrainConfig& cfg, const Graph& g);

} // namespace satnet
