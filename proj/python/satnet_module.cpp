// Python bindings for the satnet core: bundle loading, training, attention
// analysis and the expressivity harness.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "satnet/analysis.hpp"
#include "satnet/error.hpp"
#include "satnet/checkpoint.hpp"
#include "satnet/expressivity.hpp"
#include "satnet/trainer.hpp"

namespace py = pybind11;

namespace {

satnet::TrainConfig config_from_kwargs(const py::dict& kwargs) {
    satnet::TrainConfig cfg;
    for (auto item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "dataset") cfg.dataset = py::cast<std::string>(item.second);
        else if (key == "strategy") cfg.strategy = satnet::strategy_from_string(py::cast<std::string>(item.second));
        else if (key == "beta") cfg.beta = py::cast<double>(item.second);
        else if (key == "dissim") cfg.dissim = satnet::dissim_from_string(py::cast<std::string>(item.second));
        else if (key == "heads") cfg.heads = py::cast<int>(item.second);
        else if (key == "out_heads") cfg.out_heads = py::cast<int>(item.second);
        else if (key == "hidden") cfg.hidden = py::cast<int>(item.second);
        else if (key == "lr") cfg.lr = py::cast<double>(item.second);
        else if (key == "weight_decay") cfg.weight_decay = py::cast<double>(item.second);
        else if (key == "dropout") cfg.dropout = py::cast<double>(item.second);
        else if (key == "epochs") cfg.epochs = py::cast<int>(item.second);
        else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(item.second);
        else if (key == "mf_weight") cfg.mf_weight = py::cast<double>(item.second);
        else if (key == "mf_negative_ratio") cfg.mf_negative_ratio = py::cast<int>(item.second);
        else if (key == "mf_exact_threshold") cfg.mf_exact_threshold = py::cast<int>(item.second);
        else if (key == "reduce_dim") cfg.reduce_dim = py::cast<int>(item.second);
        else if (key == "reduce_threshold") cfg.reduce_threshold = py::cast<int>(item.second);
        else if (key == "split_index") cfg.split_index = py::cast<int>(item.second);
        else if (key == "restore_best") cfg.restore_best = py::cast<bool>(item.second);
        else throw satnet::ConfigError("unknown config key \"" + key + "\"");
    }
    return cfg;
}

py::dict metrics_to_dict(const satnet::Metrics& m) {
    py::dict d;
    py::list per_epoch;
    for (const auto& e : m.per_epoch) {
        py::dict row;
        row["loss_task"] = e.loss_task;
        row["loss_mf"] = e.loss_mf;
        row["val_acc"] = e.val_acc;
        row["train_acc"] = e.train_acc;
        per_epoch.append(row);
    }
    d["per_epoch"] = per_epoch;
    d["test_acc"] = m.test_acc;
    d["cluster_acc"] = m.cluster_acc;
    d["seconds"] = m.seconds;
    d["seed"] = m.seed;
    d["best_epoch"] = m.best_epoch;
    d["best_val_acc"] = m.best_val_acc;
    d["parameter_count"] = m.parameter_count;
    return d;
}

} // namespace

PYBIND11_MODULE(satnet, m) {
    m.doc() = "Graph selective-attention networks (C++ core bindings)";

    py::class_<satnet::Graph>(m, "Graph")
        .def_readonly("num_nodes", &satnet::Graph::num_nodes)
        .def_readonly("num_classes", &satnet::Graph::num_classes)
        .def_property_readonly("num_edges", &satnet::Graph::num_edges)
        .def_property_readonly("num_undirected_edges", &satnet::Graph::num_undirected_edges)
        .def_property_readonly("feature_dim", &satnet::Graph::feature_dim)
        .def_readonly("labels", &satnet::Graph::labels)
        .def("degree", &satnet::Graph::degree, py::arg("node"));

    m.def("load_bundle", &satnet::load_bundle, py::arg("path"),
          "Load a dataset bundle directory (edges.tsv, features.csv, labels.txt, splits.json)");

    m.def(
        "train",
        [](const py::kwargs& kwargs) {
            const satnet::TrainConfig cfg = config_from_kwargs(kwargs);
            cfg.validate();
            if (cfg.dataset.empty()) throw satnet::ConfigError("train: dataset is required");
            const satnet::Graph g = satnet::load_bundle(cfg.dataset);
            satnet::Model model = satnet::build_model(cfg, g);
            const satnet::Metrics metrics = satnet::train(model, g, cfg);
            return metrics_to_dict(metrics);
        },
        "Train a model; keyword arguments mirror the CLI flags");

    m.def(
        "common_neighbor_counts",
        [](const satnet::Graph& g) { return satnet::common_neighbor_counts(g); },
        py::arg("graph"), "Common-neighbor count per undirected edge");

    m.def(
        "feature_distance_stats",
        [](const satnet::Graph& g) { return satnet::feature_distance_stats(g); },
        py::arg("graph"), "Normalized feature distance per undirected edge");

    m.def(
        "attn_stats",
        [](const std::string& checkpoint, const std::string& dataset, double threshold) {
            const satnet::Graph g = satnet::load_bundle(dataset);
            satnet::Model model = satnet::load_checkpoint(checkpoint, g);
            const satnet::AttentionDump dump = satnet::attention_stats(model, g, threshold);
            py::dict d;
            d["threshold"] = dump.threshold;
            d["low_count"] = dump.low_count;
            d["low_fraction"] = dump.low_fraction;
            py::list alphas;
            for (const auto& row : dump.rows)
                alphas.append(py::make_tuple(row.src, row.dst, row.alpha, row.self_loop));
            d["edges"] = alphas;
            return d;
        },
        py::arg("checkpoint"), py::arg("dataset"), py::arg("threshold") = 0.05,
        "Output-layer attention coefficients and low-attention counts");

    m.def(
        "expressivity_report",
        [](const std::string& strategy, int pairs, double epsilon, std::uint64_t seed) {
            namespace ex = satnet::expressivity;
            const auto s = ex::run_harness(satnet::strategy_from_string(strategy), pairs, epsilon,
                                           seed);
            py::dict d;
            d["pairs_tested"] = s.pairs_tested;
            d["collisions_confirmed"] = s.collisions_confirmed;
            d["separations_confirmed"] = s.separations_confirmed;
            d["min_separation"] = s.min_separation;
            return d;
        },
        py::arg("strategy") = "contractive", py::arg("pairs") = 100, py::arg("epsilon") = 0.5,
        py::arg("seed") = 0, "Multiset collision/separation harness summary");

    m.def(
        "wl_refinement",
        [](const satnet::Graph& g, int rounds) { return satnet::expressivity::wl_refinement(g, rounds); },
        py::arg("graph"), py::arg("rounds") = 1, "1-WL color refinement classes");
}
