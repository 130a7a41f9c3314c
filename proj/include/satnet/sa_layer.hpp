#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "satnet/autodiff.hpp"
#include "satnet/dissimilarity.hpp"
#include "satnet/types.hpp"

namespace satnet {

/// Static configuration shared by all heads of one layer.
struct SaLayerConfig {
    int in_dim = 0;
    int out_dim = 0;
    int heads = 1;
    Strategy strategy = Strategy::none;
    DissimMode dissim = DissimMode::both;
    double beta = 1.0;         ///< in (0, 1] when a strategy is active
    double attn_slope = 0.2;   ///< LeakyReLU slope of the correlation logits
    double dropout = 0.0;      ///< input and attention dropout (training only)
    bool concat_heads = true;  ///< concat + ELU (hidden) vs mean, no activation (output)

    void validate() const;
};

/// Tape handles of one head's attention pipeline, kept for inspection:
/// f — normalized feature correlations, S — dissimilarity, T — its
/// neighborhood normalization (subtractive only), alpha — final coefficients
/// before attention dropout.
struct EdgeAttention {
    ad::Var f;
    ad::Var S;
    ad::Var T;
    ad::Var alpha;
};

/// Layer input: dense tape tensor or raw (possibly sparse) node features.
struct LayerInput {
    std::shared_ptr<const FeatureMatrix> raw;  ///< set for the first layer
    ad::Var dense;                             ///< set for stacked layers

    static LayerInput features(const Graph& g);
    static LayerInput var(ad::Var v);
};

// --- attention building blocks ---------------------------------------------

/// f_ij: segment softmax over N_i of LeakyReLU(aᵀ [Wh_i || Wh_j]).
/// `attn_vec` is the (2*out_dim, 1) attention vector.
ad::Var feature_correlation(ad::Tape& tape, ad::Var wh, ad::Var attn_vec, double slope,
                            const Graph& g);

/// alpha ∝ f · exp(-beta S), normalized per neighborhood. Evaluated in log
/// space (log f - beta S, then a stable segment softmax).
ad::Var contractive_scores(ad::Tape& tape, ad::Var f, ad::Var S, double beta, const Graph& g);

/// alpha ∝ f (1 - beta T), normalized per neighborhood. A fully suppressed
/// neighborhood (zero denominator) falls back to f and is counted.
ad::Var subtractive_scores(ad::Tape& tape, ad::Var f, ad::Var T, double beta, const Graph& g,
                           int* fallback_count = nullptr);

/// h'_i = Σ_j alpha_ij Wh_j plus, when eps is given, eps/|N_i| · Wh_i.
ad::Var aggregate(ad::Tape& tape, ad::Var alpha, ad::Var wh, std::optional<ad::Var> eps,
                  const Graph& g);

// --- layer -----------------------------------------------------------------

class SaHead {
public:
    SaHead(const std::string& prefix, const SaLayerConfig& cfg, Rng& rng);

    /// attn_in feeds the correlations and the aggregation; clean_in feeds the
    /// dissimilarity (identical outside training).
    ad::Var forward(ad::Tape& tape, const LayerInput& attn_in, const LayerInput& clean_in,
                    StructuralEmbedding* embedding, const Graph& g, bool training,
                    Rng* rng, EdgeAttention* attention, int* fallback_count);

    ad::Parameter& weight() { return W_; }
    ad::Parameter& attn_vec() { return a_; }
    ad::Parameter* eps_raw() { return eps_raw_ ? &*eps_raw_ : nullptr; }
    DissimilarityMix* mix() { return mix_ ? &*mix_ : nullptr; }
    void collect_parameters(std::vector<ad::Parameter*>& out);

private:
    ad::Var project(ad::Tape& tape, const LayerInput& in, ad::Var w) const;

    const SaLayerConfig* cfg_;
    ad::Parameter W_;  // in_dim x out_dim
    ad::Parameter a_;  // 2*out_dim x 1
    std::optional<ad::Parameter> eps_raw_;  // absent when strategy none (eps fixed at 0)
    std::optional<DissimilarityMix> mix_;   // only for the combined dissimilarity
};

class SaLayer {
public:
    SaLayer(const std::string& prefix, SaLayerConfig cfg, Rng& rng);

    /// Multi-head forward; per-head outputs are concatenated and passed
    /// through ELU, or averaged without activation, per config.
    ad::Var forward(ad::Tape& tape, const LayerInput& input, StructuralEmbedding* embedding,
                    const Graph& g, bool training, Rng* rng,
                    std::vector<EdgeAttention>* attention = nullptr,
                    int* fallback_count = nullptr);

    const SaLayerConfig& config() const { return cfg_; }
    std::vector<SaHead>& heads() { return heads_; }
    void collect_parameters(std::vector<ad::Parameter*>& out);

private:
    SaLayerConfig cfg_;
    std::vector<SaHead> heads_;
};

} // namespace satnet
