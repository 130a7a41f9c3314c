#include "satnet/model.hpp"

#include <json.hpp>

#include "satnet/error.hpp"

namespace satnet {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (strategy != Strategy::none && (beta <= 0.0 || beta > 1.0))
        throw ConfigError("beta must be in (0, 1]");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    if (heads < 1 || out_heads < 1) throw ConfigError("head counts must be >= 1");
    if (hidden < 1) throw ConfigError("hidden dimension must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
    if (mf_weight < 0.0) throw ConfigError("mf weight must be >= 0");
    if (mf_negative_ratio < 1) throw ConfigError("mf negative ratio must be >= 1");
    if (reduce_dim < 1) throw ConfigError("reduce dim must be >= 1");
    if (split_index < 0) throw ConfigError("split index must be >= 0");
}

std::string TrainConfig::to_json_string() const {
    nlohmann::json j{
        {"dataset", dataset},
        {"strategy", to_string(strategy)},
        {"beta", beta},
        {"dissim", to_string(dissim)},
        {"heads", heads},
        {"out_heads", out_heads},
        {"hidden", hidden},
        {"lr", lr},
        {"weight_decay", weight_decay},
        {"dropout", dropout},
        {"epochs", epochs},
        {"seed", seed},
        {"mf_weight", mf_weight},
        {"mf_exact_threshold", mf_exact_threshold},
        {"mf_negative_ratio", mf_negative_ratio},
        {"reduce_dim", reduce_dim},
        {"reduce_threshold", reduce_threshold},
        {"split_index", split_index},
        {"restore_best", restore_best},
    };
    return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("TrainConfig: ") + e.what());
    }
    TrainConfig c;
    c.dataset = j.value("dataset", c.dataset);
    c.strategy = strategy_from_string(j.value("strategy", to_string(c.strategy)));
    c.beta = j.value("beta", c.beta);
    c.dissim = dissim_from_string(j.value("dissim", to_string(c.dissim)));
    c.heads = j.value("heads", c.heads);
    c.out_heads = j.value("out_heads", c.out_heads);
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.dropout = j.value("dropout", c.dropout);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.mf_weight = j.value("mf_weight", c.mf_weight);
    c.mf_exact_threshold = j.value("mf_exact_threshold", c.mf_exact_threshold);
    c.mf_negative_ratio = j.value("mf_negative_ratio", c.mf_negative_ratio);
    c.reduce_dim = j.value("reduce_dim", c.reduce_dim);
    c.reduce_threshold = j.value("reduce_threshold", c.reduce_threshold);
    c.split_index = j.value("split_index", c.split_index);
    c.restore_best = j.value("restore_best", c.restore_best);
    return c;
}

Model::Model(const TrainConfig& cfg, const Graph& g) : cfg_(cfg) {
    cfg_.validate();
    if (g.num_nodes < 1 || g.num_classes < 1)
        throw ConfigError("Model: graph has no nodes or classes");

    Rng rng(cfg_.seed);

    pre_plan_ = g.feature_dim() > cfg_.reduce_threshold ? reduce_features(g, cfg_.reduce_dim)
                                                        : PreLayerPlan{false, g.feature_dim(),
                                                                       g.feature_dim()};
    if (pre_plan_.active)
        pre_W_.emplace("pre.W", Tensor::glorot(pre_plan_.in_dim, pre_plan_.out_dim, rng));

    SaLayerConfig h;
    h.in_dim = pre_plan_.active ? pre_plan_.out_dim : g.feature_dim();
    h.out_dim = cfg_.hidden;
    h.heads = cfg_.heads;
    h.strategy = cfg_.strategy;
    h.dissim = cfg_.dissim;
    h.beta = cfg_.beta;
    h.dropout = cfg_.dropout;
    h.concat_heads = true;
    hidden_ = std::make_unique<SaLayer>("l1", h, rng);

    SaLayerConfig o = h;
    o.in_dim = cfg_.hidden * cfg_.heads;
    o.out_dim = g.num_classes;
    o.heads = cfg_.out_heads;
    o.concat_heads = false;
    output_ = std::make_unique<SaLayer>("l2", o, rng);

    if (uses_structure()) embedding_.emplace(g.num_nodes, g.num_classes, rng);
}

bool Model::uses_structure() const {
    return cfg_.strategy != Strategy::none && cfg_.dissim != DissimMode::feature_only;
}

Model::ForwardResult Model::forward(const Graph& g, bool training, Rng* rng, bool with_mf) {
    ForwardResult r;
    LayerInput input = LayerInput::features(g);
    if (pre_W_) input = LayerInput::var(r.tape.input_matmul(input.raw, r.tape.leaf(*pre_W_)));

    ad::Var h1 = hidden_->forward(r.tape, input, structural_embedding(), g, training, rng,
                                  nullptr, &r.subtractive_fallbacks);
    r.logits = output_->forward(r.tape, LayerInput::var(h1), structural_embedding(), g, training,
                                rng, &r.output_attention, &r.subtractive_fallbacks);
    if (with_mf && uses_structure()) {
        MfConfig mf{cfg_.mf_exact_threshold, cfg_.mf_negative_ratio};
        r.mf = mf_loss(r.tape, r.tape.leaf(embedding_->P), g, mf, rng);
    }
    return r;
}

Tensor Model::predict(const Graph& g) {
    ForwardResult r = forward(g, /*training=*/false, nullptr, /*with_mf=*/false);
    return r.tape.value(r.logits);
}

std::vector<ad::Parameter*> Model::parameters() {
    std::vector<ad::Parameter*> out;
    if (pre_W_) out.push_back(&*pre_W_);
    hidden_->collect_parameters(out);
    output_->collect_parameters(out);
    if (embedding_) out.push_back(&embedding_->P);
    return out;
}

std::int64_t Model::parameter_count() {
    std::int64_t n = 0;
    for (const ad::Parameter* p : parameters()) n += p->value.size();
    return n;
}

void Model::zero_grad() {
    for (ad::Parameter* p : parameters()) p->zero_grad();
}

std::vector<Tensor> Model::snapshot_values() {
    std::vector<Tensor> out;
    for (ad::Parameter* p : parameters()) out.push_back(p->value);
    return out;
}

void Model::restore_values(const std::vector<Tensor>& values) {
    auto params = parameters();
    if (values.size() != params.size())
        throw ContractError("Model::restore_values: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->value.same_shape(values[i]))
            throw ContractError("Model::restore_values: shape mismatch");
        params[i]->value = values[i];
    }
}

Model build_model(const TrainConfig& cfg, const Graph& g) { return Model(cfg, g); }

} // namespace satnet
