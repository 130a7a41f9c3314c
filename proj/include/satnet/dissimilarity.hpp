#pragma once

#include <optional>

#include "satnet/autodiff.hpp"
#include "satnet/types.hpp"

namespace satnet {

/// N x C node embedding trained so that P Pᵀ reconstructs the adjacency
/// matrix. Shared across heads and layers.
struct StructuralEmbedding {
    ad::Parameter P;

    StructuralEmbedding(int num_nodes, int num_classes, Rng& rng)
        : P("P", Tensor::normal(num_nodes, num_classes, 0.0, 0.1, rng)) {}
};

/// Two raw logits producing the simplex pair (r_f, r_p) through a softmax,
/// so r_f + r_p = 1 by construction. One per head.
struct DissimilarityMix {
    ad::Parameter logits;

    explicit DissimilarityMix(const std::string& name)
        : logits(name, Tensor(1, 2), /*apply_decay=*/false) {}

    /// (1, 2) tape tensor of the current mixing weights.
    ad::Var weights(ad::Tape& tape) { return tape.row_softmax(tape.leaf(logits)); }
};

/// Per directed edge: S_ij = r_f ||Wh_i - Wh_j||^2 + r_p ||p_i - p_j||^2,
/// restricted by `mode`. S_ii = 0. `embedding`/`mix_weights` are required
/// only when the mode uses them.
ad::Var edge_dissimilarity(ad::Tape& tape, ad::Var projected_feats,
                           std::optional<ad::Var> embedding,
                           std::optional<ad::Var> mix_weights, DissimMode mode,
                           const Graph& g);

/// T_ij: softmax of S over each destination neighborhood.
ad::Var normalize_T(ad::Tape& tape, ad::Var S, const Graph& g);

struct MfConfig {
    int exact_threshold = 5000;  ///< exact full sum for N <= this
    int negative_ratio = 5;      ///< sampled non-edges per edge above it
};

/// Adjacency reconstruction loss Σ_{i,j} (A_ij - [PPᵀ]_ij)², A without
/// self-loops. Exact below the node threshold; otherwise all edge terms plus
/// uniformly sampled non-edge terms scaled so the expectation equals the
/// exact sum (sampler required, negative_ratio >= 1).
ad::Var mf_loss(ad::Tape& tape, ad::Var embedding, const Graph& g,
                const MfConfig& cfg, Rng* sampler = nullptr);

} // namespace satnet
