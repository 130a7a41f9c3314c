// Acceptance suite. Runs the numbered verification criteria and prints one
// PASS/FAIL line each. Criteria 1-4 are self-contained properties; 5-9
// reproduce the published benchmark numbers and require dataset bundles
// under --data-dir (cora, cite). Exit code is nonzero if any selected
// criterion fails.
//
//   acceptance [--criteria 1-4|5-9|all|N,M,...] [--data-dir DIR] [--jobs N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "satnet/analysis.hpp"
#include "satnet/error.hpp"
#include "satnet/expressivity.hpp"
#include "satnet/trainer.hpp"
#include "testutil.hpp"

using namespace satnet;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::set<int> criteria;
    std::string data_dir = "data";
    int jobs = std::max(2u, std::thread::hardware_concurrency());
};

struct Outcome {
    int id = 0;
    std::string label;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;

    Outcome() = default;
    Outcome(int i, std::string l) : id(i), label(std::move(l)) {}
};

std::set<int> parse_criteria(const std::string& spec) {
    std::set<int> out;
    if (spec == "all") {
        for (int c = 1; c <= 9; ++c) out.insert(c);
        return out;
    }
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto dash = token.find('-');
        if (dash == std::string::npos) {
            out.insert(std::stoi(token));
        } else {
            const int lo = std::stoi(token.substr(0, dash));
            const int hi = std::stoi(token.substr(dash + 1));
            for (int c = lo; c <= hi; ++c) out.insert(c);
        }
    }
    return out;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Benchmark run machinery shared by criteria 5, 6 and 9.

TrainConfig paper_defaults(const std::string& dataset_dir) {
    TrainConfig cfg;
    cfg.dataset = dataset_dir;
    cfg.strategy = Strategy::contractive;
    cfg.beta = 1.0;
    cfg.dissim = DissimMode::both;
    cfg.heads = 8;
    cfg.hidden = 8;
    cfg.lr = 0.005;
    cfg.weight_decay = 5e-4;
    cfg.dropout = 0.6;
    cfg.epochs = 1000;
    return cfg;
}

std::vector<Metrics> run_seeds(const TrainConfig& base, const Graph& g,
                               const std::vector<std::uint64_t>& seeds, int jobs) {
    std::vector<Metrics> results(seeds.size());
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= seeds.size()) return;
                k = next++;
            }
            TrainConfig cfg = base;
            cfg.seed = seeds[k];
            Model model = build_model(cfg, g);
            results[k] = train(model, g, cfg);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

struct BenchCache {
    std::optional<Graph> cora, cite;
    std::map<std::string, std::vector<Metrics>> runs;  // variant key -> per-seed metrics
    std::string load_error;

    bool load(const std::string& data_dir) {
        if (cora) return true;
        if (!load_error.empty()) return false;
        try {
            cora = load_bundle((fs::path(data_dir) / "cora").string());
            cite = load_bundle((fs::path(data_dir) / "cite").string());
        } catch (const std::exception& e) {
            load_error = e.what();
            return false;
        }
        return true;
    }

    const std::vector<Metrics>& get(const std::string& key, const TrainConfig& cfg,
                                    const Graph& g, int seeds, int jobs) {
        auto it = runs.find(key);
        if (it != runs.end()) return it->second;
        std::vector<std::uint64_t> seed_list;
        for (int s = 0; s < seeds; ++s) seed_list.push_back(s);
        auto metrics = run_seeds(cfg, g, seed_list, jobs);
        return runs.emplace(key, std::move(metrics)).first->second;
    }

    std::vector<double> test_accs(const std::string& key) const {
        std::vector<double> out;
        for (const Metrics& m : runs.at(key)) out.push_back(m.test_acc);
        return out;
    }
    std::vector<double> cluster_accs(const std::string& key) const {
        std::vector<double> out;
        for (const Metrics& m : runs.at(key)) out.push_back(m.cluster_acc);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients against central finite differences.

Outcome criterion_gradients() {
    Outcome o{1, "gradient-correctness"};
    Rng rng(2027);
    Graph g = testutil::random_graph(rng, 8, 0.5, 5, 3);
    g.splits[0].train = {0, 2, 5};

    double worst = 0.0;
    std::string worst_at = "-";
    auto track = [&](const std::string& where, double err) {
        if (err > worst) {
            worst = err;
            worst_at = where;
        }
    };

    // single layers, every strategy
    for (Strategy strategy : {Strategy::none, Strategy::contractive, Strategy::subtractive}) {
        SaLayerConfig cfg;
        cfg.in_dim = 5;
        cfg.out_dim = 3;
        cfg.heads = 2;
        cfg.strategy = strategy;
        cfg.dissim = DissimMode::both;
        cfg.beta = 0.8;
        Rng init(1);
        SaLayer layer("l", cfg, init);
        StructuralEmbedding emb(8, 3, init);
        StructuralEmbedding* embp = strategy == Strategy::none ? nullptr : &emb;

        auto loss = [&] {
            ad::Tape t;
            return t
                .value(t.sum_squares(
                    layer.forward(t, LayerInput::features(g), embp, g, false, nullptr)))
                .item();
        };
        std::vector<ad::Parameter*> params;
        layer.collect_parameters(params);
        if (embp) params.push_back(&emb.P);
        for (ad::Parameter* p : params) {
            p->zero_grad();
            {
                ad::Tape t;
                t.backward(t.sum_squares(
                    layer.forward(t, LayerInput::features(g), embp, g, false, nullptr)));
            }
            track("layer/" + to_string(strategy) + "/" + p->name,
                  ad::finite_difference_check(*p, loss, p->grad));
        }
    }

    // full two-layer model with the combined training loss
    for (Strategy strategy : {Strategy::contractive, Strategy::subtractive}) {
        TrainConfig cfg;
        cfg.strategy = strategy;
        cfg.beta = 0.7;
        cfg.heads = 2;
        cfg.hidden = 4;
        cfg.dropout = 0.0;
        cfg.seed = 3;
        Model model = build_model(cfg, g);

        auto loss = [&] {
            auto fwd = model.forward(g, false, nullptr, true);
            ad::Var task = fwd.tape.softmax_cross_entropy(fwd.logits, g.splits[0].train, g.labels);
            ad::Var total = fwd.mf.valid() ? fwd.tape.add(task, fwd.mf) : task;
            return fwd.tape.value(total).item();
        };
        for (ad::Parameter* p : model.parameters()) {
            model.zero_grad();
            {
                auto fwd = model.forward(g, false, nullptr, true);
                ad::Var task =
                    fwd.tape.softmax_cross_entropy(fwd.logits, g.splits[0].train, g.labels);
                ad::Var total = fwd.mf.valid() ? fwd.tape.add(task, fwd.mf) : task;
                fwd.tape.backward(total);
            }
            track("model/" + to_string(strategy) + "/" + p->name,
                  ad::finite_difference_check(*p, loss, p->grad));
        }
    }

    o.pass = worst < 1e-4;
    std::ostringstream d;
    d << "max rel err " << worst << " at " << worst_at;
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: normalization and positivity across 1000 random configs.

Outcome criterion_normalization() {
    Outcome o{2, "normalization-positivity"};
    Rng rng(515);
    long checked = 0;
    double worst_sum_err = 0.0;
    for (int round = 0; round < 1000; ++round) {
        const int n = 1 + static_cast<int>(rng.uniform_int(11));
        Graph g = testutil::random_graph(rng, n, 0.4, 3, 2);
        const Strategy strategy =
            rng.uniform() < 0.5 ? Strategy::contractive : Strategy::subtractive;

        SaLayerConfig cfg;
        cfg.in_dim = 3;
        cfg.out_dim = 2;
        cfg.heads = 1;
        cfg.strategy = strategy;
        cfg.dissim = round % 3 == 0 ? DissimMode::feature_only : DissimMode::both;
        cfg.beta = round % 7 == 0 ? 1.0 : 0.01 + 0.99 * rng.uniform();
        cfg.concat_heads = false;
        Rng init(round);
        SaLayer layer("l", cfg, init);
        StructuralEmbedding emb(n, 2, init);
        StructuralEmbedding* embp = cfg.dissim == DissimMode::both ? &emb : nullptr;

        ad::Tape tape;
        std::vector<EdgeAttention> attn;
        (void)layer.forward(tape, LayerInput::features(g), embp, g, false, nullptr, &attn);
        const Tensor& alpha = tape.value(attn[0].alpha);
        const Tensor* T = attn[0].T.valid() ? &tape.value(attn[0].T) : nullptr;

        for (int i = 0; i < g.num_nodes; ++i) {
            double sum = 0.0;
            for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
                const double a = alpha.data[e];
                if (strategy == Strategy::contractive && a <= 0.0) {
                    o.detail = "contractive alpha not strictly positive";
                    return o;
                }
                if (a < 0.0) {
                    o.detail = "negative alpha";
                    return o;
                }
                if (strategy == Strategy::subtractive && a == 0.0) {
                    if (!T || std::abs(cfg.beta * T->data[e] - 1.0) > 1e-12) {
                        o.detail = "subtractive zero without beta*T == 1";
                        return o;
                    }
                }
                sum += a;
            }
            worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));
            ++checked;
        }
    }
    o.pass = worst_sum_err <= 1e-9;
    std::ostringstream d;
    d << checked << " neighborhoods, max |sum-1| = " << worst_sum_err;
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 3: plain strategy equals the feature-correlation-only baseline.

Outcome criterion_gat_equivalence() {
    Outcome o{3, "plain-attention-equivalence"};
    Rng rng(99);
    double worst = 0.0;
    for (int round = 0; round < 20; ++round) {
        const int n = 5 + static_cast<int>(rng.uniform_int(6));
        Graph g = testutil::random_graph(rng, n, 0.5, 4, 3);
        TrainConfig cfg;
        cfg.strategy = Strategy::none;
        cfg.heads = 2;
        cfg.hidden = 3;
        cfg.dropout = 0.0;
        cfg.seed = 1000 + round;
        Model model = build_model(cfg, g);

        const Tensor got = model.predict(g);

        // independent dense reference of the whole two-layer network
        const Tensor x = g.features.to_dense();
        Tensor h1(n, 6);
        for (int h = 0; h < 2; ++h) {
            testutil::DenseHeadParams p;
            p.W = model.hidden_layer().heads()[h].weight().value;
            p.a = model.hidden_layer().heads()[h].attn_vec().value;
            p.strategy = Strategy::none;
            const Tensor head = testutil::dense_head_reference(g, x, p);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < 3; ++c) {
                    const double v = head(i, c);
                    h1(i, c + 3 * h) = v > 0 ? v : std::expm1(v);
                }
        }
        testutil::DenseHeadParams out;
        out.W = model.output_layer().heads()[0].weight().value;
        out.a = model.output_layer().heads()[0].attn_vec().value;
        out.strategy = Strategy::none;
        const Tensor expect = testutil::dense_head_reference(g, h1, out);
        worst = std::max(worst, max_abs_diff(got, expect));
    }
    o.pass = worst < 1e-12;
    std::ostringstream d;
    d << "max |model - baseline| = " << worst << " over 20 random graphs";
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 4: multiset collision/separation harness.

Outcome criterion_expressivity() {
    Outcome o{4, "expressivity"};
    namespace ex = expressivity;
    std::ostringstream d;
    bool ok = true;
    for (Strategy strategy : {Strategy::contractive, Strategy::subtractive}) {
        const ex::HarnessSummary s = ex::run_harness(strategy, 100, 0.5, 7);
        ok = ok && s.collisions_confirmed == 100 && s.separations_confirmed == 100 &&
             s.min_separation > 1e-6;
        d << to_string(strategy) << ": " << s.collisions_confirmed << "/100 collisions, "
          << s.separations_confirmed << "/100 separations, min sep " << s.min_separation << "; ";
    }
    o.pass = ok;
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------------------
// Criteria 5-9: benchmark reproduction.

Outcome criterion_classification(BenchCache& cache, const Options& opt) {
    Outcome o{5, "classification-accuracy"};
    if (!cache.load(opt.data_dir)) {
        o.detail = "dataset bundles unavailable: " + cache.load_error;
        return o;
    }
    (void)cache.get("cora/SAT-C", paper_defaults(""), *cache.cora, 10, opt.jobs);
    TrainConfig none = paper_defaults("");
    none.strategy = Strategy::none;
    (void)cache.get("cora/none", none, *cache.cora, 10, opt.jobs);
    (void)cache.get("cite/SAT-C", paper_defaults(""), *cache.cite, 10, opt.jobs);

    const double cora_sat = mean(cache.test_accs("cora/SAT-C"));
    const double cora_none = mean(cache.test_accs("cora/none"));
    const double cite_sat = mean(cache.test_accs("cite/SAT-C"));

    o.pass = cora_sat >= 0.830 && cora_sat > cora_none && cite_sat >= 0.705;
    std::ostringstream d;
    d << "cora SAT-C mean " << cora_sat << " (>= 0.830), baseline " << cora_none
      << " (must be below), cite SAT-C mean " << cite_sat << " (>= 0.705), 10 seeds each";
    o.detail = d.str();
    return o;
}

Outcome criterion_clustering(BenchCache& cache, const Options& opt) {
    Outcome o{6, "clustering-accuracy"};
    if (!cache.load(opt.data_dir)) {
        o.detail = "dataset bundles unavailable: " + cache.load_error;
        return o;
    }
    (void)cache.get("cora/SAT-C", paper_defaults(""), *cache.cora, 10, opt.jobs);
    const double cluster = mean(cache.cluster_accs("cora/SAT-C"));
    o.pass = cluster >= 0.795;
    std::ostringstream d;
    d << "cora SAT-C all-node accuracy mean " << cluster << " (>= 0.795), 10 seeds";
    o.detail = d.str();
    return o;
}

Outcome criterion_beta_sweep(BenchCache& cache, const Options& opt) {
    Outcome o{7, "beta-sweep-monotonicity"};
    if (!cache.load(opt.data_dir)) {
        o.detail = "dataset bundles unavailable: " + cache.load_error;
        return o;
    }
    TrainConfig cfg = paper_defaults("");
    cfg.seed = 0;
    const auto rows = beta_sweep(cfg, *cache.cora, {0.1, 0.5, 0.75, 1.0}, 0.05);
    bool monotone = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
        monotone = monotone && rows[k].low_count >= rows[k - 1].low_count;
    const double frac1 = rows.back().low_fraction;
    o.pass = monotone && frac1 >= 0.10 && frac1 <= 0.35;
    std::ostringstream d;
    d << "low-attention counts";
    for (const auto& r : rows) d << " " << r.low_count;
    d << (monotone ? " (nondecreasing)" : " (NOT monotone)") << ", beta=1 fraction " << frac1
      << " in [0.10, 0.35]";
    o.detail = d.str();
    return o;
}

Outcome criterion_irrelevance(BenchCache& cache, const Options& opt) {
    Outcome o{8, "connected-pair-statistics"};
    if (!cache.load(opt.data_dir)) {
        o.detail = "dataset bundles unavailable: " + cache.load_error;
        return o;
    }
    const IrrelevanceReport r = irrelevance_stats(*cache.cora);
    const double far = r.fraction_distance_above(0.7);
    const double zero_cn = r.fraction_common_neighbors_exactly(0);
    o.pass = far >= 0.60 && zero_cn >= 0.40 && zero_cn <= 0.60;
    std::ostringstream d;
    d << "cora: distance>0.7 fraction " << far << " (>= 0.60), zero-common-neighbor fraction "
      << zero_cn << " (in [0.40, 0.60])";
    o.detail = d.str();
    return o;
}

Outcome criterion_ablation(BenchCache& cache, const Options& opt) {
    Outcome o{9, "ablation-ordering"};
    if (!cache.load(opt.data_dir)) {
        o.detail = "dataset bundles unavailable: " + cache.load_error;
        return o;
    }
    TrainConfig base = paper_defaults("");
    (void)cache.get("cora/SAT-C", base, *cache.cora, 10, opt.jobs);
    TrainConfig none = base;
    none.strategy = Strategy::none;
    (void)cache.get("cora/none", none, *cache.cora, 10, opt.jobs);

    TrainConfig sat_s = base;
    sat_s.strategy = Strategy::subtractive;
    sat_s.beta = 0.5;
    (void)cache.get("cora/SAT-S", sat_s, *cache.cora, 5, opt.jobs);
    TrainConfig cf = base;
    cf.dissim = DissimMode::feature_only;
    (void)cache.get("cora/C-F", cf, *cache.cora, 5, opt.jobs);
    TrainConfig cp = base;
    cp.dissim = DissimMode::structure_only;
    (void)cache.get("cora/C-P", cp, *cache.cora, 5, opt.jobs);

    const double none_m = mean(cache.test_accs("cora/none"));
    const double sat_c_m = mean(cache.test_accs("cora/SAT-C"));
    const double sat_s_m = mean(cache.test_accs("cora/SAT-S"));
    const double cf_m = mean(cache.test_accs("cora/C-F"));
    const double cp_m = mean(cache.test_accs("cora/C-P"));

    o.pass = sat_c_m >= none_m && sat_s_m >= none_m && cf_m >= none_m - 0.005 &&
             cp_m >= none_m - 0.005;
    std::ostringstream d;
    d << "baseline " << none_m << ", SAT-C " << sat_c_m << ", SAT-S " << sat_s_m << ", C-F "
      << cf_m << ", C-P " << cp_m;
    o.detail = d.str();
    return o;
}

// Optional large-bundle smoke: load and run one epoch when a bundle exists.
void bundle_smoke(const Options& opt) {
    for (const char* name : {"pubmed", "wiki", "uai", "coauthorcs"}) {
        const fs::path dir = fs::path(opt.data_dir) / name;
        if (!fs::is_directory(dir)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Graph g = load_bundle(dir.string());
            TrainConfig cfg = paper_defaults(dir.string());
            cfg.hidden = g.feature_dim() > 4096 ? 32 : 8;
            cfg.epochs = 1;
            Model model = build_model(cfg, g);
            const Metrics m = train(model, g, cfg);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("bundle smoke [%s]: PASS (N=%d, D=%d, pre-layer %s, 1 epoch, %.1fs)\n",
                        name, g.num_nodes, g.feature_dim(),
                        model.pre_layer() ? "active" : "off", secs);
        } catch (const std::exception& e) {
            std::printf("bundle smoke [%s]: FAIL (%s)\n", name, e.what());
        }
        return;
    }
    std::printf("bundle smoke: SKIP (no large bundle present under %s)\n", opt.data_dir.c_str());
}

} // namespace

int main(int argc, char** argv) {
    tune_allocator();
    Options opt;
    opt.criteria = parse_criteria("all");
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criteria" && i + 1 < argc) {
            opt.criteria = parse_criteria(argv[++i]);
        } else if (arg == "--data-dir" && i + 1 < argc) {
            opt.data_dir = argv[++i];
        } else if (arg == "--jobs" && i + 1 < argc) {
            opt.jobs = std::stoi(argv[++i]);
        } else {
            std::fprintf(stderr,
                         "usage: acceptance [--criteria SPEC] [--data-dir DIR] [--jobs N]\n");
            return 2;
        }
    }

    BenchCache cache;
    bool all_pass = true;
    for (int id : opt.criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        switch (id) {
        case 1: o = criterion_gradients(); break;
        case 2: o = criterion_normalization(); break;
        case 3: o = criterion_gat_equivalence(); break;
        case 4: o = criterion_expressivity(); break;
        case 5: o = criterion_classification(cache, opt); break;
        case 6: o = criterion_clustering(cache, opt); break;
        case 7: o = criterion_beta_sweep(cache, opt); break;
        case 8: o = criterion_irrelevance(cache, opt); break;
        case 9: o = criterion_ablation(cache, opt); break;
        default:
            std::fprintf(stderr, "unknown criterion %d\n", id);
            return 2;
        }
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // runtime bounds stated alongside the criteria
        if (id == 1 && o.seconds >= 10.0) {
            o.pass = false;
            o.detail += " [over the 10s budget]";
        }
        if (id == 4 && o.seconds >= 5.0) {
            o.pass = false;
            o.detail += " [over the 5s budget]";
        }
        if (id == 5 && o.seconds >= 1800.0) {
            o.pass = false;
            o.detail += " [over the 30min budget]";
        }

        std::printf("criterion %d [%s]: %s (%s; %.1fs)\n", o.id, o.label.c_str(),
                    o.pass ? "PASS" : "FAIL", o.detail.c_str(), o.seconds);
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }

    if (opt.criteria.count(5) || opt.criteria.count(9)) bundle_smoke(opt);
    return all_pass ? 0 : 1;
}
