#include "satnet/sa_layer.hpp"

#include "satnet/error.hpp"

namespace satnet {

void SaLayerConfig::validate() const {
    if (in_dim <= 0 || out_dim <= 0) throw ConfigError("layer dimensions must be positive");
    if (heads < 1) throw ConfigError("head count must be >= 1");
    if (strategy != Strategy::none && (beta <= 0.0 || beta > 1.0))
        throw ConfigError("beta must be in (0, 1]");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

LayerInput LayerInput::features(const Graph& g) {
    LayerInput in;
    // Aliasing pointer; the graph owns the features and outlives the tape.
    in.raw = std::shared_ptr<const FeatureMatrix>(std::shared_ptr<void>(), &g.features);
    return in;
}

LayerInput LayerInput::var(ad::Var v) {
    LayerInput in;
    in.dense = v;
    return in;
}

ad::Var feature_correlation(ad::Tape& tape, ad::Var wh, ad::Var attn_vec, double slope,
                            const Graph& g) {
    const int d = tape.value(wh).cols;
    if (tape.value(attn_vec).rows != 2 * d || tape.value(attn_vec).cols != 1)
        throw DimensionError("feature_correlation: attention vector must be (2*out_dim, 1)");
    ad::Var a_dst = tape.slice_rows(attn_vec, 0, d);
    ad::Var a_src = tape.slice_rows(attn_vec, d, 2 * d);
    ad::Var logits = tape.edge_logits(tape.matmul(wh, a_dst), tape.matmul(wh, a_src), g);
    return tape.edge_segment_softmax(tape.leaky_relu(logits, slope), g);
}

ad::Var contractive_scores(ad::Tape& tape, ad::Var f, ad::Var S, double beta, const Graph& g) {
    if (beta <= 0.0 || beta > 1.0) throw ConfigError("contractive_scores: beta must be in (0, 1]");
    return tape.edge_segment_softmax(tape.sub(tape.log(f), tape.scale(S, beta)), g);
}

ad::Var subtractive_scores(ad::Tape& tape, ad::Var f, ad::Var T, double beta, const Graph& g,
                           int* fallback_count) {
    if (beta <= 0.0 || beta > 1.0) throw ConfigError("subtractive_scores: beta must be in (0, 1]");
    ad::Var pre = tape.mul(f, tape.affine(T, -beta, 1.0));
    return tape.edge_segment_normalize(pre, f, g, fallback_count);
}

ad::Var aggregate(ad::Tape& tape, ad::Var alpha, ad::Var wh, std::optional<ad::Var> eps,
                  const Graph& g) {
    ad::Var out = tape.edge_weighted_aggregate(alpha, wh, g);
    if (eps) out = tape.add(out, tape.epsilon_self_term(wh, *eps, g));
    return out;
}

SaHead::SaHead(const std::string& prefix, const SaLayerConfig& cfg, Rng& rng)
    : cfg_(&cfg),
      W_(prefix + ".W", Tensor::glorot(cfg.in_dim, cfg.out_dim, rng)),
      a_(prefix + ".a", Tensor::glorot(2 * cfg.out_dim, 1, rng)) {
    if (cfg.strategy != Strategy::none) {
        eps_raw_.emplace(prefix + ".eps", Tensor::scalar(0.0), /*apply_decay=*/false);
        if (cfg.dissim == DissimMode::both) mix_.emplace(prefix + ".mix");
    }
}

ad::Var SaHead::project(ad::Tape& tape, const LayerInput& in, ad::Var w) const {
    if (in.raw) return tape.input_matmul(in.raw, w);
    if (!in.dense.valid()) throw ContractError("SaHead: empty layer input");
    return tape.matmul(in.dense, w);
}

ad::Var SaHead::forward(ad::Tape& tape, const LayerInput& attn_in, const LayerInput& clean_in,
                        StructuralEmbedding* embedding, const Graph& g, bool training,
                        Rng* rng, EdgeAttention* attention, int* fallback_count) {
    ad::Var w = tape.leaf(W_);
    ad::Var wh = project(tape, attn_in, w);
    ad::Var f = feature_correlation(tape, wh, tape.leaf(a_), cfg_->attn_slope, g);

    EdgeAttention attn;
    attn.f = f;
    ad::Var alpha = f;
    if (cfg_->strategy != Strategy::none) {
        const bool dropped_input = training && cfg_->dropout > 0.0;
        ad::Var wh_clean = dropped_input ? project(tape, clean_in, w) : wh;
        std::optional<ad::Var> p_var;
        if (cfg_->dissim != DissimMode::feature_only) {
            if (!embedding) throw ContractError("SaHead: structural dissimilarity without embedding");
            p_var = tape.leaf(embedding->P);
        }
        std::optional<ad::Var> r;
        if (mix_) r = mix_->weights(tape);
        attn.S = edge_dissimilarity(tape, wh_clean, p_var, r, cfg_->dissim, g);
        if (cfg_->strategy == Strategy::contractive) {
            alpha = contractive_scores(tape, f, attn.S, cfg_->beta, g);
        } else {
            attn.T = normalize_T(tape, attn.S, g);
            alpha = subtractive_scores(tape, f, attn.T, cfg_->beta, g, fallback_count);
        }
    }
    attn.alpha = alpha;
    if (attention) *attention = attn;

    if (training && cfg_->dropout > 0.0) alpha = tape.dropout(alpha, cfg_->dropout, *rng);
    std::optional<ad::Var> eps;
    if (eps_raw_) eps = tape.sigmoid(tape.leaf(*eps_raw_));
    return aggregate(tape, alpha, wh, eps, g);
}

void SaHead::collect_parameters(std::vector<ad::Parameter*>& out) {
    out.push_back(&W_);
    out.push_back(&a_);
    if (eps_raw_) out.push_back(&*eps_raw_);
    if (mix_) out.push_back(&mix_->logits);
}

SaLayer::SaLayer(const std::string& prefix, SaLayerConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    heads_.reserve(cfg_.heads);
    for (int h = 0; h < cfg_.heads; ++h)
        heads_.emplace_back(prefix + ".h" + std::to_string(h), cfg_, rng);
}

ad::Var SaLayer::forward(ad::Tape& tape, const LayerInput& input, StructuralEmbedding* embedding,
                         const Graph& g, bool training, Rng* rng,
                         std::vector<EdgeAttention>* attention, int* fallback_count) {
    if (training && cfg_.dropout > 0.0 && !rng)
        throw ContractError("SaLayer: training forward needs an rng for dropout");

    // Input dropout once per layer, shared by all heads.
    LayerInput attn_in = input;
    if (training && cfg_.dropout > 0.0) {
        if (input.raw)
            attn_in.raw = std::make_shared<FeatureMatrix>(input.raw->dropout(cfg_.dropout, *rng));
        else
            attn_in.dense = tape.dropout(input.dense, cfg_.dropout, *rng);
    }

    std::vector<ad::Var> outs;
    outs.reserve(heads_.size());
    if (attention) attention->clear();
    for (SaHead& head : heads_) {
        EdgeAttention attn;
        outs.push_back(head.forward(tape, attn_in, input, embedding, g, training, rng,
                                    attention ? &attn : nullptr, fallback_count));
        if (attention) attention->push_back(attn);
    }
    if (cfg_.concat_heads)
        return tape.elu(outs.size() == 1 ? outs[0] : tape.concat_cols(outs));
    return outs.size() == 1 ? outs[0] : tape.mean_of(outs);
}

void SaLayer::collect_parameters(std::vector<ad::Parameter*>& out) {
    for (SaHead& h : heads_) h.collect_parameters(out);
}

} // namespace satnet
