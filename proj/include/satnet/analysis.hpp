#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "satnet/model.hpp"
#include "satnet/trainer.hpp"

namespace satnet {

/// Output-layer attention coefficients (first output head) over all directed
/// edges, with a fixed-width histogram and a low-coefficient count. Counts,
/// fractions and the histogram cover non-self edges only; the per-edge rows
/// keep self-loops, flagged.
struct AttentionDump {
    struct Row {
        int src = 0;
        int dst = 0;
        double alpha = 0.0;
        bool self_loop = false;
    };
    static constexpr int kBins = 50;

    std::vector<Row> rows;
    std::array<std::int64_t, kBins> histogram{};  ///< over [0, 1], non-self edges
    double threshold = 0.05;
    std::int64_t low_count = 0;   ///< non-self edges with alpha <= threshold
    double low_fraction = 0.0;    ///< low_count / non-self edge count
    Strategy strategy = Strategy::none;
    double beta = 1.0;
};

AttentionDump attention_stats(Model& model, const Graph& g, double threshold);
void write_alpha_csv(const AttentionDump& dump, const std::string& path);
void write_alpha_histogram_csv(const AttentionDump& dump, const std::string& path);

/// Connected-pair irrelevance statistics over undirected non-self edges:
/// cumulative histogram of normalized feature distances and of common
/// neighbor counts.
struct IrrelevanceReport {
    std::int64_t edge_count = 0;
    static constexpr int kBins = 50;
    std::array<std::int64_t, kBins> distance_histogram{};  ///< over [0, 1]
    std::map<int, std::int64_t> common_neighbor_counts;

    double fraction_distance_above(double threshold) const;
    double fraction_common_neighbors_at_most(int k) const;
    double fraction_common_neighbors_exactly(int k) const;
};

IrrelevanceReport irrelevance_stats(const Graph& g);
void write_distance_histogram_csv(const IrrelevanceReport& r, const std::string& path);
void write_common_neighbors_csv(const IrrelevanceReport& r, const std::string& path);

struct BetaSweepRow {
    double beta = 0.0;
    double test_acc = 0.0;
    double cluster_acc = 0.0;
    std::int64_t low_count = 0;
    double low_fraction = 0.0;
};

/// Trains one model per beta (same seed/config otherwise) and reports
/// accuracy plus the low-attention edge count at the given threshold.
std::vector<BetaSweepRow> beta_sweep(const TrainConfig& base, const Graph& g,
                                     const std::vector<double>& betas, double threshold);

void write_beta_sweep_csv(const std::vector<BetaSweepRow>& rows, const std::string& path);

} // namespace satnet
