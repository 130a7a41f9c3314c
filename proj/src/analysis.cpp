#include "satnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "satnet/error.hpp"

namespace satnet {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    return out;
}

int clamp_bin(double v, int bins) {
    int b = static_cast<int>(v * bins);
    return std::clamp(b, 0, bins - 1);
}

} // namespace

AttentionDump attention_stats(Model& model, const Graph& g, double threshold) {
    auto fwd = model.forward(g, /*training=*/false, nullptr, /*with_mf=*/false);
    if (fwd.output_attention.empty()) throw ContractError("attention_stats: no output attention");
    const Tensor& alpha = fwd.tape.value(fwd.output_attention[0].alpha);

    AttentionDump dump;
    dump.threshold = threshold;
    dump.strategy = model.config().strategy;
    dump.beta = model.config().beta;
    dump.rows.reserve(g.num_edges());

    std::int64_t non_self = 0;
    for (int i = 0; i < g.num_nodes; ++i) {
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            AttentionDump::Row row;
            row.src = g.col[e];
            row.dst = i;
            row.alpha = alpha.data[e];
            row.self_loop = g.col[e] == i;
            dump.rows.push_back(row);
            if (row.self_loop) continue;
            ++non_self;
            ++dump.histogram[clamp_bin(row.alpha, AttentionDump::kBins)];
            if (row.alpha <= threshold) ++dump.low_count;
        }
    }
    dump.low_fraction = non_self > 0 ? static_cast<double>(dump.low_count) / non_self : 0.0;
    return dump;
}

void write_alpha_csv(const AttentionDump& dump, const std::string& path) {
    auto out = open_out(path);
    out << "src,dst,alpha,self_loop\n";
    for (const auto& r : dump.rows)
        out << r.src << ',' << r.dst << ',' << r.alpha << ',' << (r.self_loop ? 1 : 0) << '\n';
}

void write_alpha_histogram_csv(const AttentionDump& dump, const std::string& path) {
    auto out = open_out(path);
    out << "bin_low,bin_high,count\n";
    const double w = 1.0 / AttentionDump::kBins;
    for (int b = 0; b < AttentionDump::kBins; ++b)
        out << b * w << ',' << (b + 1) * w << ',' << dump.histogram[b] << '\n';
}

double IrrelevanceReport::fraction_distance_above(double threshold) const {
    if (edge_count == 0) return 0.0;
    std::int64_t above = 0;
    for (int b = 0; b < kBins; ++b)
        if ((b + 1.0) / kBins > threshold + 1e-12) above += distance_histogram[b];
    return static_cast<double>(above) / static_cast<double>(edge_count);
}

double IrrelevanceReport::fraction_common_neighbors_at_most(int k) const {
    if (edge_count == 0) return 0.0;
    std::int64_t n = 0;
    for (const auto& [count, freq] : common_neighbor_counts)
        if (count <= k) n += freq;
    return static_cast<double>(n) / static_cast<double>(edge_count);
}

double IrrelevanceReport::fraction_common_neighbors_exactly(int k) const {
    if (edge_count == 0) return 0.0;
    auto it = common_neighbor_counts.find(k);
    if (it == common_neighbor_counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(edge_count);
}

IrrelevanceReport irrelevance_stats(const Graph& g) {
    IrrelevanceReport r;
    const auto distances = feature_distance_stats(g);
    const auto cn = common_neighbor_counts(g);
    r.edge_count = static_cast<std::int64_t>(distances.size());
    for (double d : distances) ++r.distance_histogram[clamp_bin(d, IrrelevanceReport::kBins)];
    for (int c : cn) ++r.common_neighbor_counts[c];
    return r;
}

void write_distance_histogram_csv(const IrrelevanceReport& r, const std::string& path) {
    auto out = open_out(path);
    out << "bin_low,bin_high,count,cumulative_fraction\n";
    const double w = 1.0 / IrrelevanceReport::kBins;
    std::int64_t running = 0;
    for (int b = 0; b < IrrelevanceReport::kBins; ++b) {
        running += r.distance_histogram[b];
        const double frac = r.edge_count ? static_cast<double>(running) / r.edge_count : 0.0;
        out << b * w << ',' << (b + 1) * w << ',' << r.distance_histogram[b] << ',' << frac << '\n';
    }
}

void write_common_neighbors_csv(const IrrelevanceReport& r, const std::string& path) {
    auto out = open_out(path);
    out << "common_neighbors,count,cumulative_fraction\n";
    std::int64_t running = 0;
    for (const auto& [count, freq] : r.common_neighbor_counts) {
        running += freq;
        const double frac = r.edge_count ? static_cast<double>(running) / r.edge_count : 0.0;
        out << count << ',' << freq << ',' << frac << '\n';
    }
}

std::vector<BetaSweepRow> beta_sweep(const TrainConfig& base, const Graph& g,
                                     const std::vector<double>& betas, double threshold) {
    std::vector<BetaSweepRow> rows;
    for (double beta : betas) {
        TrainConfig cfg = base;
        cfg.beta = beta;
        Model model = build_model(cfg, g);
        const Metrics m = train(model, g, cfg);
        const AttentionDump dump = attention_stats(model, g, threshold);
        BetaSweepRow row;
        row.beta = beta;
        row.test_acc = m.test_acc;
        row.cluster_acc = m.cluster_acc;
        row.low_count = dump.low_count;
        row.low_fraction = dump.low_fraction;
        rows.push_back(row);
    }
    return rows;
}

void write_beta_sweep_csv(const std::vector<BetaSweepRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "beta,test_acc,cluster_acc,low_count,low_fraction\n";
    for (const auto& r : rows)
        out << r.beta << ',' << r.test_acc << ',' << r.cluster_acc << ',' << r.low_count << ','
            << r.low_fraction << '\n';
}

} // namespace satnet
