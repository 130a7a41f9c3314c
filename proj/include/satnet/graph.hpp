#pragma once

#include <string>
#include <utility>
#include <vector>

#include "satnet/rng.hpp"
#include "satnet/tensor.hpp"

namespace satnet {

/// Node index sets for one semi-supervised split.
struct Split {
    std::vector<int> train, val, test;
};

/// Node feature storage, either dense or CSR sparse. Sparse inputs stay
/// sparse so the first-layer projection can skip the zeros.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    static FeatureMatrix dense(Tensor t);
    static FeatureMatrix sparse(int rows, int cols, std::vector<int> row_ptr,
                                std::vector<int> col, std::vector<double> val);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool is_sparse() const { return sparse_; }
    std::int64_t nonzeros() const;

    Tensor to_dense() const;
    double at(int r, int c) const;

    double row_sq_norm(int r) const;
    double row_dot(int r_a, int r_b) const;  ///< dot product of two rows

    /// Inverted dropout on stored values (zeros stay zero); keep prob 1-p.
    FeatureMatrix dropout(double p, Rng& rng) const;

    /// out = X * w, with w of shape (cols x k).
    void matmul_into(const Tensor& w, Tensor& out) const;
    /// dw += X^T * g, with g of shape (rows x k).
    void matmul_transposed_accum(const Tensor& g, Tensor& dw) const;

    bool operator==(const FeatureMatrix& o) const;

private:
    bool sparse_ = false;
    int rows_ = 0, cols_ = 0;
    Tensor dense_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
};

/// Immutable undirected graph with one self-loop per node, CSR over directed
/// edges grouped by destination node (column entries sorted), plus features,
/// labels and data splits. N_i of a node always contains the node itself.
struct Graph {
    int num_nodes = 0;
    int num_classes = 0;
    std::vector<int> row_ptr;  ///< size num_nodes+1
    std::vector<int> col;      ///< source node of each directed edge
    FeatureMatrix features;
    std::vector<int> labels;
    std::vector<Split> splits;

    int num_edges() const { return static_cast<int>(col.size()); }  ///< directed, incl. self-loops
    int num_undirected_edges() const { return (num_edges() - num_nodes) / 2; }
    int degree(int i) const { return row_ptr[i + 1] - row_ptr[i]; }  ///< |N_i|, self-inclusive
    int feature_dim() const { return features.cols(); }

    int edge_index(int dst, int src) const;  ///< position in col, or -1
    bool has_edge(int dst, int src) const { return edge_index(dst, src) >= 0; }

    bool operator==(const Graph& o) const;
};

/// Symmetrizes, deduplicates, adds self-loops, validates. Shared by the
/// bundle loader and test fixtures.
Graph build_graph(int num_nodes, const std::vector<std::pair<int, int>>& edges,
                  FeatureMatrix features, std::vector<int> labels,
                  std::vector<Split> splits);

/// Loads a dataset bundle directory: edges.tsv, features.csv, labels.txt,
/// splits.json. See data/README.md for the exact formats.
Graph load_bundle(const std::string& dir);

/// Writes a graph back out in bundle form; load_bundle(save_bundle(g)) == g.
void save_bundle(const Graph& g, const std::string& dir);

/// Undirected non-self edges as (i, j) with i < j, in row-major CSR order.
/// Index space shared by common_neighbor_counts and feature_distance_stats.
std::vector<std::pair<int, int>> undirected_edges(const Graph& g);

/// |N_i ∩ N_j| per undirected edge, excluding self-loops and the endpoints.
std::vector<int> common_neighbor_counts(const Graph& g);

/// Euclidean feature distance per undirected edge, normalized by the maximum
/// over edges to [0, 1]. Distances are taken on features as loaded.
std::vector<double> feature_distance_stats(const Graph& g);

/// Dimension-reduction pre-layer plan: a trainable linear map applied ahead
/// of the first attention layer when the raw feature dimension is large.
struct PreLayerPlan {
    bool active = false;
    int in_dim = 0;
    int out_dim = 0;
};

/// Plans the pre-layer. Inactive (with a warning on stderr) when target_dim
/// is not smaller than the feature dimension.
PreLayerPlan reduce_features(const Graph& g, int target_dim);

} // namespace satnet
