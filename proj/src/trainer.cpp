#include "satnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "satnet/error.hpp"

namespace satnet {

void tune_allocator() {
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

Adam::Adam(const std::vector<ad::Parameter*>& params, double lr, double weight_decay,
           double beta1, double beta2, double eps)
    : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const ad::Parameter* p : params) {
        m_.emplace_back(p->value.rows, p->value.cols);
        v_.emplace_back(p->value.rows, p->value.cols);
    }
}

void Adam::step(const std::vector<ad::Parameter*>& params) {
    if (params.size() != m_.size()) throw ContractError("Adam::step: parameter set changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
        ad::Parameter& p = *params[k];
        const double wd = p.decay ? weight_decay_ : 0.0;
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double g = p.grad.data[i] + wd * p.value.data[i];
            double& m = m_[k].data[i];
            double& v = v_[k].data[i];
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g * g;
            p.value.data[i] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        }
    }
}

std::vector<int> argmax_predictions(const Tensor& logits) {
    std::vector<int> pred(logits.rows);
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = logits.row(i);
        int best = 0;
        for (int c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        pred[i] = best;
    }
    return pred;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels,
                const std::vector<int>& indices) {
    if (indices.empty()) return 0.0;
    const std::vector<int> pred = argmax_predictions(logits);
    std::int64_t correct = 0;
    for (int idx : indices) correct += pred[idx] == labels[idx];
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

namespace {

const Split& active_split(const Graph& g, const TrainConfig& cfg) {
    if (cfg.split_index >= static_cast<int>(g.splits.size()))
        throw ConfigError("split index " + std::to_string(cfg.split_index) + " out of range (" +
                          std::to_string(g.splits.size()) + " splits)");
    return g.splits[cfg.split_index];
}

std::string divergence_dump(int epoch, double task, double mf, Model& model) {
    std::ostringstream out;
    out << "training diverged at epoch " << epoch << ": loss_task=" << task
        << " loss_mf=" << mf << "; parameter norms:";
    for (const ad::Parameter* p : model.parameters())
        out << " " << p->name << "=" << std::sqrt(p->value.sq_norm());
    return out.str();
}

} // namespace

Metrics train(Model& model, const Graph& g, const TrainConfig& cfg) {
    cfg.validate();
    const Split& split = active_split(g, cfg);
    if (split.train.empty()) throw ConfigError("train: empty training split");

    const auto t0 = std::chrono::steady_clock::now();
    Rng run_rng = Rng(cfg.seed).fork();  // independent of the init stream

    Metrics metrics;
    metrics.seed = cfg.seed;
    metrics.parameter_count = model.parameter_count();
    metrics.per_epoch.reserve(cfg.epochs);

    Adam adam(model.parameters(), cfg.lr, cfg.weight_decay);
    std::vector<Tensor> best_values = model.snapshot_values();
    {
        const Tensor logits = model.predict(g);
        metrics.best_val_acc = accuracy(logits, g.labels, split.val);
    }
    metrics.best_epoch = 0;

    const bool with_mf = model.uses_structure() && cfg.mf_weight > 0.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto fwd = model.forward(g, /*training=*/true, &run_rng, with_mf);
        ad::Var task = fwd.tape.softmax_cross_entropy(fwd.logits, split.train, g.labels);
        ad::Var loss = task;
        double mf_value = 0.0;
        if (with_mf) {
            mf_value = fwd.tape.value(fwd.mf).item();
            loss = fwd.tape.add(task, fwd.tape.scale(fwd.mf, cfg.mf_weight));
        }
        const double task_value = fwd.tape.value(task).item();
        if (!std::isfinite(fwd.tape.value(loss).item()))
            throw ContractError(divergence_dump(epoch, task_value, mf_value, model));

        model.zero_grad();
        fwd.tape.backward(loss);
        adam.step(model.parameters());

        const Tensor logits = model.predict(g);
        EpochStats stats;
        stats.loss_task = task_value;
        stats.loss_mf = mf_value;
        stats.train_acc = accuracy(logits, g.labels, split.train);
        stats.val_acc = accuracy(logits, g.labels, split.val);
        metrics.per_epoch.push_back(stats);

        if (stats.val_acc > metrics.best_val_acc) {
            metrics.best_val_acc = stats.val_acc;
            metrics.best_epoch = epoch;
            best_values = model.snapshot_values();
        }
    }

    if (cfg.restore_best && cfg.epochs > 0) model.restore_values(best_values);
    const Tensor logits = model.predict(g);
    metrics.test_acc = accuracy(logits, g.labels, split.test);
    std::vector<int> all(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) all[i] = i;
    metrics.cluster_acc = accuracy(logits, g.labels, all);
    metrics.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return metrics;
}

double evaluate_classification(Model& model, const Graph& g) {
    const TrainConfig& cfg = model.config();
    return accuracy(model.predict(g), g.labels, active_split(g, cfg).test);
}

double evaluate_clustering(Model& model, const Graph& g) {
    std::vector<int> all(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) all[i] = i;
    return accuracy(model.predict(g), g.labels, all);
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const Graph& g,
                                      const std::vector<std::uint64_t>& seeds) {
    const double c_beta = base.strategy == Strategy::contractive ? base.beta : 1.0;
    const double s_beta = base.strategy == Strategy::subtractive ? base.beta : 0.5;

    struct Variant {
        const char* name;
        Strategy strategy;
        DissimMode dissim;
        double beta;
    };
    const Variant variants[] = {
        {"baseline", Strategy::none, DissimMode::both, 1.0},
        {"C-F", Strategy::contractive, DissimMode::feature_only, c_beta},
        {"C-P", Strategy::contractive, DissimMode::structure_only, c_beta},
        {"S-F", Strategy::subtractive, DissimMode::feature_only, s_beta},
        {"S-P", Strategy::subtractive, DissimMode::structure_only, s_beta},
        {"SAT-C", Strategy::contractive, DissimMode::both, c_beta},
        {"SAT-S", Strategy::subtractive, DissimMode::both, s_beta},
    };

    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        AblationRow row;
        row.name = v.name;
        row.cfg = base;
        row.cfg.strategy = v.strategy;
        row.cfg.dissim = v.dissim;
        row.cfg.beta = v.beta;
        for (std::uint64_t seed : seeds) {
            TrainConfig run = row.cfg;
            run.seed = seed;
            Model model = build_model(run, g);
            const Metrics m = train(model, g, run);
            row.test_accs.push_back(m.test_acc);
            row.cluster_accs.push_back(m.cluster_acc);
            row.mean_test_acc += m.test_acc;
            row.mean_cluster_acc += m.cluster_acc;
        }
        row.mean_test_acc /= static_cast<double>(seeds.size());
        row.mean_cluster_acc /= static_cast<double>(seeds.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string metrics_to_json(const Metrics& m, const TrainConfig& cfg) {
    nlohmann::json per_epoch = nlohmann::json::array();
    for (const EpochStats& e : m.per_epoch)
        per_epoch.push_back({{"loss_task", e.loss_task},
                             {"loss_mf", e.loss_mf},
                             {"val_acc", e.val_acc},
                             {"train_acc", e.train_acc}});
    nlohmann::json j{
        {"config", nlohmann::json::parse(cfg.to_json_string())},
        {"per_epoch", std::move(per_epoch)},
        {"test_acc", m.test_acc},
        {"cluster_acc", m.cluster_acc},
        {"seconds", m.seconds},
        {"seed", m.seed},
        {"best_epoch", m.best_epoch},
        {"best_val_acc", m.best_val_acc},
        {"parameter_count", m.parameter_count},
    };
    return j.dump(1);
}

void write_metrics_json(const std::string& path, const Metrics& m, const TrainConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << metrics_to_json(m, cfg) << '\n';
}

} // namespace satnet
