// satnet command-line interface: training runs, attention-score export,
// beta sweeps, connected-pair irrelevance statistics and the multiset
// expressivity harness. All outputs are UTF-8 CSV/JSON.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satnet/error.hpp"

#include "satnet/analysis.hpp"
#include "satnet/checkpoint.hpp"
#include "satnet/expressivity.hpp"
#include "satnet/trainer.hpp"

namespace {

struct CliOptions {
    satnet::TrainConfig cfg;
    std::string strategy = "contractive";
    std::string dissim = "both";
    std::string out;
    std::string checkpoint;
    std::string config_path;
    CLI::App* cmd = nullptr;
};

void add_train_options(CLI::App* cmd, CliOptions& o) {
    o.cmd = cmd;
    cmd->add_option("--dataset", o.cfg.dataset, "Dataset bundle directory");
    cmd->add_option("--strategy", o.strategy, "Attention strategy: contractive|subtractive|none");
    cmd->add_option("--beta", o.cfg.beta, "Dissimilarity significance, in (0, 1]");
    cmd->add_option("--dissim", o.dissim, "Dissimilarity terms: both|feature|structure");
    cmd->add_option("--heads", o.cfg.heads, "Hidden-layer attention heads");
    cmd->add_option("--out-heads", o.cfg.out_heads, "Output-layer attention heads");
    cmd->add_option("--hidden", o.cfg.hidden, "Hidden dimension per head");
    cmd->add_option("--lr", o.cfg.lr, "Learning rate");
    cmd->add_option("--weight-decay", o.cfg.weight_decay, "L2 weight decay");
    cmd->add_option("--dropout", o.cfg.dropout, "Dropout probability, in [0, 1)");
    cmd->add_option("--epochs", o.cfg.epochs, "Training epochs");
    cmd->add_option("--seed", o.cfg.seed, "Random seed");
    cmd->add_option("--mf-weight", o.cfg.mf_weight, "Weight of the embedding loss term");
    cmd->add_option("--mf-negative-ratio", o.cfg.mf_negative_ratio,
                    "Sampled non-edges per edge (large graphs)");
    cmd->add_option("--mf-exact-threshold", o.cfg.mf_exact_threshold,
                    "Exact embedding loss for graphs up to this many nodes");
    cmd->add_option("--reduce-dim", o.cfg.reduce_dim, "Pre-layer output dimension");
    cmd->add_option("--reduce-threshold", o.cfg.reduce_threshold,
                    "Pre-layer activates above this feature dimension");
    cmd->add_option("--split-index", o.cfg.split_index, "Which stored split to train on");
    cmd->add_option("--config", o.config_path, "key=value config file; flags override it");
}

// Applies config-file entries to options the command line left untouched.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw satnet::ValidationError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw satnet::ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(first, eq - first);
        const std::string value = line.substr(eq + 1);
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt)
            throw satnet::ConfigError(path + ":" + std::to_string(lineno) + ": unknown key \"" +
                                      key + "\"");
        if (opt->count() > 0) continue;  // explicit flag wins
        opt->add_result(value);
        opt->run_callback();
    }
}

void finalize(CliOptions& o, bool dataset_required = true) {
    if (!o.config_path.empty()) apply_config_file(o.cmd, o.config_path);
    if (dataset_required && o.cfg.dataset.empty())
        throw satnet::ConfigError("--dataset is required (flag or config file)");
    o.cfg.strategy = satnet::strategy_from_string(o.strategy);
    o.cfg.dissim = satnet::dissim_from_string(o.dissim);
    o.cfg.validate();
}

int cmd_train(CliOptions& o) {
    finalize(o);
    const satnet::Graph graph = satnet::load_bundle(o.cfg.dataset);
    satnet::Model model = satnet::build_model(o.cfg, graph);
    const satnet::Metrics metrics = satnet::train(model, graph, o.cfg);

    const std::string out = o.out.empty() ? "metrics.json" : o.out;
    satnet::write_metrics_json(out, metrics, o.cfg);
    const std::string ckpt = o.checkpoint.empty()
        ? (std::filesystem::path(out).replace_extension(".ckpt").string())
        : o.checkpoint;
    satnet::save_checkpoint(ckpt, model);

    std::cout << "epochs=" << metrics.per_epoch.size() << " best_epoch=" << metrics.best_epoch
              << " val_acc=" << metrics.best_val_acc << " test_acc=" << metrics.test_acc
              << " cluster_acc=" << metrics.cluster_acc << " seconds=" << metrics.seconds
              << "\nmetrics: " << out << "\ncheckpoint: " << ckpt << "\n";
    return 0;
}

int cmd_attn_stats(const std::string& checkpoint, const std::string& dataset, double threshold,
                   const std::string& out_prefix) {
    const satnet::Graph graph = satnet::load_bundle(dataset);
    satnet::Model model = satnet::load_checkpoint(checkpoint, graph);
    const satnet::AttentionDump dump = satnet::attention_stats(model, graph, threshold);

    satnet::write_alpha_csv(dump, out_prefix + "alpha.csv");
    satnet::write_alpha_histogram_csv(dump, out_prefix + "alpha_hist.csv");
    std::cout << "{\"threshold\": " << dump.threshold << ", \"low_count\": " << dump.low_count
              << ", \"low_fraction\": " << dump.low_fraction
              << ", \"edges\": " << dump.rows.size() << "}\n";
    return 0;
}

int cmd_beta_sweep(CliOptions& o, const std::vector<double>& betas, double threshold) {
    finalize(o);
    if (o.cfg.strategy == satnet::Strategy::none)
        throw satnet::ConfigError("beta-sweep needs an active strategy");
    const satnet::Graph graph = satnet::load_bundle(o.cfg.dataset);
    const auto rows = satnet::beta_sweep(o.cfg, graph, betas, threshold);
    const std::string out = o.out.empty() ? "beta_sweep.csv" : o.out;
    satnet::write_beta_sweep_csv(rows, out);
    for (const auto& r : rows)
        std::cout << "beta=" << r.beta << " test_acc=" << r.test_acc
                  << " low_count=" << r.low_count << " low_fraction=" << r.low_fraction << "\n";
    std::cout << "table: " << out << "\n";
    return 0;
}

int cmd_irrelevance(const std::string& dataset, const std::string& out_prefix) {
    const satnet::Graph graph = satnet::load_bundle(dataset);
    const satnet::IrrelevanceReport report = satnet::irrelevance_stats(graph);
    satnet::write_distance_histogram_csv(report, out_prefix + "feature_distance.csv");
    satnet::write_common_neighbors_csv(report, out_prefix + "common_neighbors.csv");
    std::cout << "{\"edges\": " << report.edge_count
              << ", \"distance_above_0.7\": " << report.fraction_distance_above(0.7)
              << ", \"zero_common_neighbors\": " << report.fraction_common_neighbors_exactly(0)
              << ", \"at_most_2_common_neighbors\": "
              << report.fraction_common_neighbors_at_most(2) << "}\n";
    return 0;
}

int cmd_ablation(CliOptions& o, int seeds) {
    finalize(o);
    const satnet::Graph graph = satnet::load_bundle(o.cfg.dataset);
    std::vector<std::uint64_t> seed_list;
    for (int s = 0; s < seeds; ++s) seed_list.push_back(o.cfg.seed + s);
    const auto rows = satnet::run_ablation(o.cfg, graph, seed_list);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw satnet::ValidationError("cannot write " + o.out);
        out = &file;
    }
    *out << "variant,strategy,dissim,beta,mean_test_acc,mean_cluster_acc\n";
    for (const auto& r : rows)
        *out << r.name << ',' << satnet::to_string(r.cfg.strategy) << ','
             << satnet::to_string(r.cfg.dissim) << ',' << r.cfg.beta << ',' << r.mean_test_acc
             << ',' << r.mean_cluster_acc << '\n';
    return 0;
}

int cmd_expressivity(const std::string& strategy, int pairs, double epsilon, std::uint64_t seed,
                     const std::string& out) {
    namespace ex = satnet::expressivity;
    const satnet::Strategy s = satnet::strategy_from_string(strategy);
    const ex::HarnessSummary summary = ex::run_harness(s, pairs, epsilon, seed);
    const std::string json = ex::harness_summary_to_json(summary, s, epsilon);
    if (!out.empty()) {
        std::ofstream file(out);
        if (!file) throw satnet::ValidationError("cannot write " + out);
        file << json << "\n";
    }
    std::cout << json << "\n";
    return summary.collisions_confirmed == summary.pairs_tested &&
                   summary.separations_confirmed == summary.pairs_tested
               ? 0
               : 1;
}

} // namespace

int main(int argc, char** argv) {
    satnet::tune_allocator();
    CLI::App app{"Graph selective-attention networks: training and analysis"};
    app.require_subcommand(1);

    CliOptions train_o;
    auto* train = app.add_subcommand("train", "Train a model and write metrics + checkpoint");
    add_train_options(train, train_o);
    train->add_option("--out", train_o.out, "metrics.json path (default metrics.json)");
    train->add_option("--checkpoint", train_o.checkpoint, "Checkpoint path (default <out>.ckpt)");

    std::string as_checkpoint, as_dataset, as_prefix;
    double as_threshold = 0.05;
    auto* attn = app.add_subcommand("attn-stats",
                                    "Export output-layer attention coefficients of a checkpoint");
    attn->add_option("--checkpoint", as_checkpoint, "Checkpoint file")->required();
    attn->add_option("--dataset", as_dataset, "Dataset bundle directory")->required();
    attn->add_option("--threshold", as_threshold, "Low-attention threshold");
    attn->add_option("--out", as_prefix, "Output file prefix");

    CliOptions sweep_o;
    std::vector<double> betas{0.1, 0.5, 0.75, 1.0};
    double sweep_threshold = 0.05;
    auto* sweep = app.add_subcommand("beta-sweep", "Train across beta values, tabulate accuracy "
                                                   "and low-attention edge counts");
    add_train_options(sweep, sweep_o);
    sweep->add_option("--betas", betas, "Beta values to sweep");
    sweep->add_option("--threshold", sweep_threshold, "Low-attention threshold");
    sweep->add_option("--out", sweep_o.out, "Output CSV path");

    std::string ir_dataset, ir_prefix;
    auto* irrel = app.add_subcommand("irrelevance", "Connected-pair feature-distance and "
                                                    "common-neighbor statistics");
    irrel->add_option("--dataset", ir_dataset, "Dataset bundle directory")->required();
    irrel->add_option("--out", ir_prefix, "Output file prefix");

    CliOptions abl_o;
    int abl_seeds = 3;
    auto* abl = app.add_subcommand("ablation", "Train the variant family and tabulate accuracy");
    add_train_options(abl, abl_o);
    abl->add_option("--seeds", abl_seeds, "Seeds per variant");
    abl->add_option("--out", abl_o.out, "Output CSV path (default stdout)");

    std::string ex_strategy = "contractive", ex_out;
    int ex_pairs = 100;
    double ex_epsilon = 0.5;
    std::uint64_t ex_seed = 0;
    auto* expr = app.add_subcommand("expressivity", "Multiset collision/separation harness, "
                                                    "JSON report");
    expr->add_option("--strategy", ex_strategy, "contractive|subtractive");
    expr->add_option("--pairs", ex_pairs, "Collision pairs to test");
    expr->add_option("--epsilon", ex_epsilon, "Self-augmentation weight, in (0, 1)");
    expr->add_option("--seed", ex_seed, "Base seed");
    expr->add_option("--out", ex_out, "Also write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_o);
        if (attn->parsed()) return cmd_attn_stats(as_checkpoint, as_dataset, as_threshold, as_prefix);
        if (sweep->parsed()) return cmd_beta_sweep(sweep_o, betas, sweep_threshold);
        if (irrel->parsed()) return cmd_irrelevance(ir_dataset, ir_prefix);
        if (abl->parsed()) return cmd_ablation(abl_o, abl_seeds);
        if (expr->parsed()) return cmd_expressivity(ex_strategy, ex_pairs, ex_epsilon, ex_seed, ex_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
