#include "satnet/dissimilarity.hpp"

#include "satnet/error.hpp"

namespace satnet {

ad::Var edge_dissimilarity(ad::Tape& tape, ad::Var projected_feats,
                           std::optional<ad::Var> embedding,
                           std::optional<ad::Var> mix_weights, DissimMode mode,
                           const Graph& g) {
    switch (mode) {
    case DissimMode::feature_only:
        return tape.edge_sqdist(projected_feats, g);
    case DissimMode::structure_only:
        if (!embedding) throw ConfigError("edge_dissimilarity: structure mode needs an embedding");
        return tape.edge_sqdist(*embedding, g);
    case DissimMode::both:
        if (!embedding || !mix_weights)
            throw ConfigError("edge_dissimilarity: combined mode needs embedding and mix weights");
        return tape.mix2(*mix_weights, tape.edge_sqdist(projected_feats, g),
                         tape.edge_sqdist(*embedding, g));
    }
    throw ConfigError("edge_dissimilarity: unknown mode");
}

ad::Var normalize_T(ad::Tape& tape, ad::Var S, const Graph& g) {
    return tape.edge_segment_softmax(S, g);
}

namespace {

// 1.0 on every non-self directed edge, 0.0 on self-loops.
Tensor adjacency_edge_mask(const Graph& g) {
    Tensor mask(g.num_edges(), 1);
    for (int i = 0; i < g.num_nodes; ++i)
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
            mask.data[e] = g.col[e] == i ? 0.0 : 1.0;
    return mask;
}

// Exact Σ_{i,j}(A_ij - [PPᵀ]_ij)² via nnz(A) - 2 Σ_edges p_i·p_j + ||PᵀP||².
ad::Var mf_loss_exact(ad::Tape& tape, ad::Var p, const Graph& g) {
    const double nnz = static_cast<double>(g.num_edges() - g.num_nodes);
    ad::Var mask = tape.constant(adjacency_edge_mask(g));
    ad::Var ap = tape.edge_weighted_aggregate(mask, p, g);
    ad::Var cross = tape.sum(tape.mul(p, ap));
    ad::Var frob = tape.sum_squares(tape.matmul(tape.transpose(p), p));
    return tape.add(tape.affine(cross, -2.0, nnz), frob);
}

ad::Var mf_loss_sampled(ad::Tape& tape, ad::Var p, const Graph& g, const MfConfig& cfg,
                        Rng& sampler) {
    if (cfg.negative_ratio < 1)
        throw ConfigError("mf_loss: negative_ratio must be >= 1 in sampled mode");
    const std::int64_t n = g.num_nodes;
    const std::int64_t nnz = g.num_edges() - g.num_nodes;

    // Edge terms, exact: Σ_edges (1 - p_i·p_j)².
    ad::Var mask = tape.constant(adjacency_edge_mask(g));
    ad::Var residual = tape.mul(mask, tape.affine(tape.edge_pair_dot(p, g), -1.0, 1.0));
    ad::Var edge_part = tape.sum(tape.mul(residual, residual));

    // Non-edge terms, uniformly sampled with replacement and rescaled.
    const std::int64_t num_non_edges = n * n - nnz;
    const std::int64_t samples = static_cast<std::int64_t>(cfg.negative_ratio) * nnz;
    auto pairs = std::make_shared<std::vector<std::pair<int, int>>>();
    pairs->reserve(samples);
    while (static_cast<std::int64_t>(pairs->size()) < samples) {
        const int i = static_cast<int>(sampler.uniform_int(n));
        const int j = static_cast<int>(sampler.uniform_int(n));
        if (i != j && g.has_edge(i, j)) continue;
        pairs->emplace_back(i, j);
    }
    ad::Var dots = tape.pair_dot(p, pairs);
    ad::Var neg_part = tape.scale(tape.sum(tape.mul(dots, dots)),
                                  static_cast<double>(num_non_edges) / static_cast<double>(samples));
    return tape.add(edge_part, neg_part);
}

} // namespace

ad::Var mf_loss(ad::Tape& tape, ad::Var embedding, const Graph& g, const MfConfig& cfg,
                Rng* sampler) {
    if (g.num_nodes <= cfg.exact_threshold) return mf_loss_exact(tape, embedding, g);
    if (!sampler) throw ConfigError("mf_loss: sampled mode requires a sampler");
    return mf_loss_sampled(tape, embedding, g, cfg, *sampler);
}

} // namespace satnet
