#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "satnet/graph.hpp"
#include "satnet/rng.hpp"
#include "satnet/tensor.hpp"

namespace satnet::ad {

/// Trainable tensor living outside any tape. Gradients accumulate across
/// backward() calls until zero_grad().
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool decay = true;  ///< weight decay applies to this parameter

    Parameter(std::string n, Tensor v, bool apply_decay = true)
        : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols),
          decay(apply_decay) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Handle to a node of the computation tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense tensors and per-edge value vectors.
/// Per-edge quantities are (E, 1) tensors aligned with the graph's directed
/// CSR edge order. Ops append nodes in topological order; backward() sweeps
/// the tape once in reverse, so every node's closure runs exactly once.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;           ///< allocated on first gradient arrival
        bool needs_grad = false;
        bool touched = false;  ///< gradient mass ever reached this node
        std::function<void(Tape&, Node&)> back;
    };

    /// Entry point for a trainable parameter; copies the current value in and
    /// routes gradients back to p.grad.
    Var leaf(Parameter& p);
    /// Non-trainable input.
    Var constant(Tensor t);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v);  ///< zeros if no gradient reached v
    int size() const { return static_cast<int>(nodes_.size()); }

    /// When enabled, every op verifies its output is finite.
    void set_check_finite(bool on) { check_finite_ = on; }
    /// Multiply-accumulate count of all forward work so far.
    std::int64_t mac_count() const { return macs_; }

    // --- dense ops -----------------------------------------------------
    Var matmul(Var a, Var b);
    /// x * w for a (possibly sparse) feature matrix held outside the tape;
    /// no gradient flows to x.
    Var input_matmul(std::shared_ptr<const FeatureMatrix> x, Var w);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                 ///< elementwise
    Var scale(Var a, double k);
    Var affine(Var a, double k, double c); ///< k*a + c elementwise
    Var exp(Var a);
    Var log(Var a);
    Var leaky_relu(Var a, double slope);
    Var elu(Var a);
    Var sigmoid(Var a);
    Var row_softmax(Var a);                ///< softmax over each row
    Var dropout(Var a, double p, Rng& rng);
    Var slice_rows(Var a, int begin, int end);
    Var concat_cols(const std::vector<Var>& vs);
    Var mean_of(const std::vector<Var>& vs);
    Var sum(Var a);                        ///< scalar
    Var sum_squares(Var a);                ///< scalar, Σ aᵢ²
    Var transpose(Var a);
    /// r(1,2) mixing two same-shape tensors: r[0]*a + r[1]*b.
    Var mix2(Var r, Var a, Var b);

    // --- graph edge ops --------------------------------------------------
    /// Per directed edge (dst i, src j): s_dst[i] + s_src[j]. Inputs (N, 1).
    Var edge_logits(Var s_dst, Var s_src, const Graph& g);
    /// Softmax within each destination segment, max-subtracted.
    Var edge_segment_softmax(Var logits, const Graph& g);
    /// Plain per-segment normalization w / Σ_seg w. A segment whose sum is
    /// exactly zero falls back to the values of `fallback` (gradient routed
    /// there); such segments are counted into *fallback_count if given.
    Var edge_segment_normalize(Var w, Var fallback, const Graph& g, int* fallback_count = nullptr);
    /// out[i] = Σ_{e in seg(i)} weights[e] * feats[src(e)].
    Var edge_weighted_aggregate(Var weights, Var feats, const Graph& g);
    /// Per directed edge: ||feats[dst] - feats[src]||². Zero on self-loops.
    Var edge_sqdist(Var feats, const Graph& g);
    /// Per directed edge: feats[dst] · feats[src].
    Var edge_pair_dot(Var feats, const Graph& g);
    /// Row dot products for an arbitrary list of (i, j) pairs; output (m, 1).
    Var pair_dot(Var feats, std::shared_ptr<const std::vector<std::pair<int, int>>> pairs);
    /// Row i of feats scaled by eps/|N_i| (eps a 1x1 var); the learnable
    /// self-augmentation term of the aggregation rule.
    Var epsilon_self_term(Var feats, Var eps, const Graph& g);

    // --- losses ----------------------------------------------------------
    /// Mean cross-entropy of row-softmax(logits) against labels, over `rows`.
    Var softmax_cross_entropy(Var logits, const std::vector<int>& rows,
                              const std::vector<int>& labels);

    /// Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. Loss must be 1x1.
    void backward(Var loss);

private:
    Var push(Tensor value, bool needs_grad, std::function<void(Tape&, Node&)> back);
    Tensor& grad_slot(int id);  ///< node's grad, allocated and marked touched
    void accumulate(int id, const Tensor& g);
    void accumulate_at(int id, std::int64_t flat_index, double g);
    friend struct TapeAccess;

    std::vector<Node> nodes_;
    std::vector<Parameter*> leaf_params_;  // aligned with nodes_, null for non-leaves
    bool check_finite_ = false;
    std::int64_t macs_ = 0;
};

/// Guarded relative-error comparison of an analytic gradient against central
/// finite differences of `f` at `p`. Returns the max relative error over all
/// parameter entries. `f` must be deterministic.
double finite_difference_check(Parameter& p, const std::function<double()>& f,
                               const Tensor& analytic, double step = 1e-5);

} // namespace satnet::ad
