#include "satnet/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "satnet/error.hpp"

namespace satnet::ad {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw DimensionError(msg);
}

void require_edge_vector(const Tensor& t, const Graph& g, const char* who) {
    if (t.cols != 1 || t.rows != g.num_edges())
        throw DimensionError(std::string(who) + ": expected a per-edge (E, 1) vector");
}

} // namespace

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, Node&)> back) {
    if (check_finite_ && !value.all_finite())
        throw ContractError("non-finite value produced on the tape");
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    leaf_params_.push_back(nullptr);
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_slot(int id) {
    Node& n = nodes_[id];
    if (n.grad.rows != n.value.rows || n.grad.cols != n.value.cols)
        n.grad = Tensor(n.value.rows, n.value.cols);
    n.touched = true;
    return n.grad;
}

const Tensor& Tape::grad(Var v) { return grad_slot(v.id); }

void Tape::accumulate(int id, const Tensor& g) {
    Tensor& dst = grad_slot(id);
    if (!dst.same_shape(g)) throw DimensionError("gradient shape mismatch");
    for (std::size_t i = 0; i < g.data.size(); ++i) dst.data[i] += g.data[i];
}

void Tape::accumulate_at(int id, std::int64_t flat_index, double g) {
    grad_slot(id).data[flat_index] += g;
}

Var Tape::leaf(Parameter& p) {
    Var v = push(p.value, true, [](Tape& t, Node& self) {
        // resolved through leaf_params_ below
        (void)t;
        (void)self;
    });
    leaf_params_[v.id] = &p;
    return v;
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.cols == B.rows, "matmul: inner dimension mismatch");
    Tensor out(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        double* o = out.row(i);
        const double* ar = A.row(i);
        for (int k = 0; k < A.cols; ++k) {
            const double x = ar[k];
            if (x == 0.0) continue;
            const double* br = B.row(k);
            for (int j = 0; j < B.cols; ++j) o[j] += x * br[j];
        }
    }
    macs_ += static_cast<std::int64_t>(A.rows) * A.cols * B.cols;
    return push(std::move(out), true, [a, b](Tape& t, Node& self) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        const Tensor& G = self.grad;
        Tensor da(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i) {
            const double* gr = G.row(i);
            double* dr = da.row(i);
            for (int k = 0; k < A.cols; ++k) {
                const double* br = B.row(k);
                double s = 0.0;
                for (int j = 0; j < B.cols; ++j) s += gr[j] * br[j];
                dr[k] = s;
            }
        }
        t.accumulate(a.id, da);
        Tensor db(B.rows, B.cols);
        for (int i = 0; i < A.rows; ++i) {
            const double* gr = G.row(i);
            const double* ar = A.row(i);
            for (int k = 0; k < A.cols; ++k) {
                const double x = ar[k];
                if (x == 0.0) continue;
                double* dr = db.row(k);
                for (int j = 0; j < B.cols; ++j) dr[j] += x * gr[j];
            }
        }
        t.accumulate(b.id, db);
    });
}

Var Tape::input_matmul(std::shared_ptr<const FeatureMatrix> x, Var w) {
    const Tensor& W = value(w);
    Tensor out;
    x->matmul_into(W, out);
    macs_ += x->nonzeros() * W.cols;
    return push(std::move(out), true, [x, w](Tape& t, Node& self) {
        Tensor dw(t.value(w).rows, t.value(w).cols);
        x->matmul_transposed_accum(self.grad, dw);
        t.accumulate(w.id, dw);
    });
}

Var Tape::add(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.same_shape(B), "add: shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
    return push(std::move(out), true, [a, b](Tape& t, Node& self) {
        t.accumulate(a.id, self.grad);
        t.accumulate(b.id, self.grad);
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.same_shape(B), "sub: shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= B.data[i];
    return push(std::move(out), true, [a, b](Tape& t, Node& self) {
        t.accumulate(a.id, self.grad);
        Tensor neg = self.grad;
        for (auto& v : neg.data) v = -v;
        t.accumulate(b.id, neg);
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.same_shape(B), "mul: shape mismatch");
    Tensor out = A;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
    macs_ += out.size();
    return push(std::move(out), true, [a, b](Tape& t, Node& self) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= B.data[i];
        t.accumulate(a.id, da);
        Tensor db = self.grad;
        for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] *= A.data[i];
        t.accumulate(b.id, db);
    });
}

Var Tape::scale(Var a, double k) { return affine(a, k, 0.0); }

Var Tape::affine(Var a, double k, double c) {
    Tensor out = value(a);
    for (auto& v : out.data) v = k * v + c;
    macs_ += out.size();
    return push(std::move(out), true, [a, k](Tape& t, Node& self) {
        Tensor da = self.grad;
        for (auto& v : da.data) v *= k;
        t.accumulate(a.id, da);
    });
}

Var Tape::exp(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::exp(v);
    macs_ += out.size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= self.value.data[i];
        t.accumulate(a.id, da);
    });
}

Var Tape::log(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::log(v);
    macs_ += out.size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        const Tensor& A = t.value(a);
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] /= A.data[i];
        t.accumulate(a.id, da);
    });
}

Var Tape::leaky_relu(Var a, double slope) {
    Tensor out = value(a);
    for (auto& v : out.data)
        if (v < 0.0) v *= slope;
    macs_ += out.size();
    return push(std::move(out), true, [a, slope](Tape& t, Node& self) {
        const Tensor& A = t.value(a);
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i)
            if (A.data[i] < 0.0) da.data[i] *= slope;
        t.accumulate(a.id, da);
    });
}

Var Tape::elu(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data)
        if (v < 0.0) v = std::expm1(v);
    macs_ += out.size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        const Tensor& A = t.value(a);
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i)
            if (A.data[i] < 0.0) da.data[i] *= self.value.data[i] + 1.0;
        t.accumulate(a.id, da);
    });
}

Var Tape::sigmoid(Var a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    macs_ += out.size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i) {
            const double y = self.value.data[i];
            da.data[i] *= y * (1.0 - y);
        }
        t.accumulate(a.id, da);
    });
}

Var Tape::row_softmax(Var a) {
    Tensor out = value(a);
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        double m = r[0];
        for (int j = 1; j < out.cols; ++j) m = std::max(m, r[j]);
        double s = 0.0;
        for (int j = 0; j < out.cols; ++j) s += (r[j] = std::exp(r[j] - m));
        for (int j = 0; j < out.cols; ++j) r[j] /= s;
    }
    macs_ += 2 * out.size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        const Tensor& Y = self.value;
        Tensor da(Y.rows, Y.cols);
        for (int i = 0; i < Y.rows; ++i) {
            const double* y = Y.row(i);
            const double* g = self.grad.row(i);
            double dot = 0.0;
            for (int j = 0; j < Y.cols; ++j) dot += y[j] * g[j];
            double* d = da.row(i);
            for (int j = 0; j < Y.cols; ++j) d[j] = y[j] * (g[j] - dot);
        }
        t.accumulate(a.id, da);
    });
}

Var Tape::dropout(Var a, double p, Rng& rng) {
    if (p == 0.0) return a;
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
    const double keep = 1.0 - p;
    const double inv = 1.0 / keep;
    Tensor out = value(a);
    auto mult = std::make_shared<std::vector<double>>(out.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double m = rng.uniform() < keep ? inv : 0.0;
        (*mult)[i] = m;
        out.data[i] *= m;
    }
    macs_ += out.size();
    return push(std::move(out), true, [a, mult](Tape& t, Node& self) {
        Tensor da = self.grad;
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= (*mult)[i];
        t.accumulate(a.id, da);
    });
}

Var Tape::slice_rows(Var a, int begin, int end) {
    const Tensor& A = value(a);
    require(0 <= begin && begin < end && end <= A.rows, "slice_rows: bad range");
    Tensor out(end - begin, A.cols);
    std::copy(A.row(begin), A.row(begin) + out.size(), out.data.begin());
    return push(std::move(out), true, [a, begin](Tape& t, Node& self) {
        Tensor& dst = t.grad_slot(a.id);
        const std::int64_t off = static_cast<std::int64_t>(begin) * dst.cols;
        for (std::int64_t i = 0; i < self.grad.size(); ++i)
            dst.data[off + i] += self.grad.data[i];
    });
}

Var Tape::concat_cols(const std::vector<Var>& vs) {
    require(!vs.empty(), "concat_cols: empty input");
    const int rows = value(vs[0]).rows;
    int cols = 0;
    for (Var v : vs) {
        require(value(v).rows == rows, "concat_cols: row mismatch");
        cols += value(v).cols;
    }
    Tensor out(rows, cols);
    int at = 0;
    for (Var v : vs) {
        const Tensor& piece = value(v);
        for (int i = 0; i < rows; ++i)
            std::copy(piece.row(i), piece.row(i) + piece.cols, out.row(i) + at);
        at += piece.cols;
    }
    auto parts = vs;
    return push(std::move(out), true, [parts](Tape& t, Node& self) {
        int at = 0;
        for (Var v : parts) {
            Tensor& dst = t.grad_slot(v.id);
            for (int i = 0; i < dst.rows; ++i) {
                const double* g = self.grad.row(i) + at;
                double* d = dst.row(i);
                for (int j = 0; j < dst.cols; ++j) d[j] += g[j];
            }
            at += dst.cols;
        }
    });
}

Var Tape::mean_of(const std::vector<Var>& vs) {
    require(!vs.empty(), "mean_of: empty input");
    Tensor out = value(vs[0]);
    for (std::size_t k = 1; k < vs.size(); ++k) {
        const Tensor& v = value(vs[k]);
        require(v.same_shape(out), "mean_of: shape mismatch");
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += v.data[i];
    }
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (auto& v : out.data) v *= inv;
    macs_ += out.size() * static_cast<std::int64_t>(vs.size());
    auto parts = vs;
    return push(std::move(out), true, [parts, inv](Tape& t, Node& self) {
        Tensor share = self.grad;
        for (auto& v : share.data) v *= inv;
        for (Var v : parts) t.accumulate(v.id, share);
    });
}

Var Tape::sum(Var a) {
    Tensor out = Tensor::scalar(value(a).sum());
    macs_ += value(a).size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        const double g = self.grad.data[0];
        for (auto& v : t.grad_slot(a.id).data) v += g;
    });
}

Var Tape::sum_squares(Var a) {
    Tensor out = Tensor::scalar(value(a).sq_norm());
    macs_ += value(a).size();
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        const double g = self.grad.data[0];
        const Tensor& A = t.value(a);
        Tensor& dst = t.grad_slot(a.id);
        for (std::size_t i = 0; i < A.data.size(); ++i) dst.data[i] += 2.0 * g * A.data[i];
    });
}

Var Tape::transpose(Var a) {
    const Tensor& A = value(a);
    Tensor out(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
    return push(std::move(out), true, [a](Tape& t, Node& self) {
        Tensor& dst = t.grad_slot(a.id);
        const Tensor& G = self.grad;
        for (int i = 0; i < G.rows; ++i)
            for (int j = 0; j < G.cols; ++j) dst(j, i) += G(i, j);
    });
}

Var Tape::mix2(Var r, Var a, Var b) {
    const Tensor& R = value(r);
    require(R.rows == 1 && R.cols == 2, "mix2: r must be 1x2");
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.same_shape(B), "mix2: operand shape mismatch");
    Tensor out = A;
    const double r0 = R.data[0], r1 = R.data[1];
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = r0 * out.data[i] + r1 * B.data[i];
    macs_ += 2 * out.size();
    return push(std::move(out), true, [r, a, b](Tape& t, Node& self) {
        const Tensor& R = t.value(r);
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        const Tensor& G = self.grad;
        Tensor dr(1, 2);
        Tensor da = G, db = G;
        for (std::size_t i = 0; i < G.data.size(); ++i) {
            dr.data[0] += G.data[i] * A.data[i];
            dr.data[1] += G.data[i] * B.data[i];
            da.data[i] *= R.data[0];
            db.data[i] *= R.data[1];
        }
        t.accumulate(r.id, dr);
        t.accumulate(a.id, da);
        t.accumulate(b.id, db);
    });
}

// ---------------------------------------------------------------------------
// Graph edge ops

Var Tape::edge_logits(Var s_dst, Var s_src, const Graph& g) {
    const Tensor& D = value(s_dst);
    const Tensor& S = value(s_src);
    require(D.rows == g.num_nodes && D.cols == 1, "edge_logits: s_dst must be (N, 1)");
    require(S.rows == g.num_nodes && S.cols == 1, "edge_logits: s_src must be (N, 1)");
    Tensor out(g.num_edges(), 1);
    for (int i = 0; i < g.num_nodes; ++i)
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
            out.data[e] = D.data[i] + S.data[g.col[e]];
    macs_ += g.num_edges();
    const Graph* gp = &g;
    return push(std::move(out), true, [s_dst, s_src, gp](Tape& t, Node& self) {
        Tensor& nd = t.grad_slot(s_dst.id);
        Tensor& ns = t.grad_slot(s_src.id);
        for (int i = 0; i < gp->num_nodes; ++i)
            for (int e = gp->row_ptr[i]; e < gp->row_ptr[i + 1]; ++e) {
                const double ge = self.grad.data[e];
                nd.data[i] += ge;
                ns.data[gp->col[e]] += ge;
            }
    });
}

Var Tape::edge_segment_softmax(Var logits, const Graph& g) {
    require_edge_vector(value(logits), g, "edge_segment_softmax");
    Tensor out = value(logits);
    for (int i = 0; i < g.num_nodes; ++i) {
        const int b = g.row_ptr[i], e = g.row_ptr[i + 1];
        double m = out.data[b];
        for (int k = b + 1; k < e; ++k) m = std::max(m, out.data[k]);
        double s = 0.0;
        for (int k = b; k < e; ++k) s += (out.data[k] = std::exp(out.data[k] - m));
        for (int k = b; k < e; ++k) out.data[k] /= s;
    }
    macs_ += 2 * g.num_edges();
    const Graph* gp = &g;
    return push(std::move(out), true, [logits, gp](Tape& t, Node& self) {
        const Tensor& Y = self.value;
        Tensor da(Y.rows, 1);
        for (int i = 0; i < gp->num_nodes; ++i) {
            const int b = gp->row_ptr[i], e = gp->row_ptr[i + 1];
            double dot = 0.0;
            for (int k = b; k < e; ++k) dot += Y.data[k] * self.grad.data[k];
            for (int k = b; k < e; ++k) da.data[k] = Y.data[k] * (self.grad.data[k] - dot);
        }
        t.accumulate(logits.id, da);
    });
}

Var Tape::edge_segment_normalize(Var w, Var fallback, const Graph& g, int* fallback_count) {
    require_edge_vector(value(w), g, "edge_segment_normalize");
    require_edge_vector(value(fallback), g, "edge_segment_normalize");
    Tensor out = value(w);
    const Tensor& F = value(fallback);
    auto sums = std::make_shared<std::vector<double>>(g.num_nodes);
    int fallbacks = 0;
    for (int i = 0; i < g.num_nodes; ++i) {
        const int b = g.row_ptr[i], e = g.row_ptr[i + 1];
        double s = 0.0;
        for (int k = b; k < e; ++k) s += out.data[k];
        (*sums)[i] = s;
        if (s == 0.0) {
            ++fallbacks;
            for (int k = b; k < e; ++k) out.data[k] = F.data[k];
        } else {
            for (int k = b; k < e; ++k) out.data[k] /= s;
        }
    }
    if (fallback_count) *fallback_count += fallbacks;
    macs_ += 2 * g.num_edges();
    const Graph* gp = &g;
    return push(std::move(out), true, [w, fallback, gp, sums](Tape& t, Node& self) {
        const Tensor& Y = self.value;
        Tensor& nw = t.grad_slot(w.id);
        Tensor& nf = t.grad_slot(fallback.id);
        for (int i = 0; i < gp->num_nodes; ++i) {
            const int b = gp->row_ptr[i], e = gp->row_ptr[i + 1];
            const double s = (*sums)[i];
            if (s == 0.0) {
                for (int k = b; k < e; ++k) nf.data[k] += self.grad.data[k];
                continue;
            }
            double dot = 0.0;
            for (int k = b; k < e; ++k) dot += Y.data[k] * self.grad.data[k];
            for (int k = b; k < e; ++k) nw.data[k] += (self.grad.data[k] - dot) / s;
        }
    });
}

Var Tape::edge_weighted_aggregate(Var weights, Var feats, const Graph& g) {
    require_edge_vector(value(weights), g, "edge_weighted_aggregate");
    const Tensor& H = value(feats);
    require(H.rows == g.num_nodes, "edge_weighted_aggregate: feature rows != N");
    const Tensor& W = value(weights);
    Tensor out(g.num_nodes, H.cols);
    for (int i = 0; i < g.num_nodes; ++i) {
        double* o = out.row(i);
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const double we = W.data[e];
            const double* hr = H.row(g.col[e]);
            for (int c = 0; c < H.cols; ++c) o[c] += we * hr[c];
        }
    }
    macs_ += static_cast<std::int64_t>(g.num_edges()) * H.cols;
    const Graph* gp = &g;
    return push(std::move(out), true, [weights, feats, gp](Tape& t, Node& self) {
        const Tensor& W = t.value(weights);
        const Tensor& H = t.value(feats);
        Tensor& nw = t.grad_slot(weights.id);
        Tensor& nh = t.grad_slot(feats.id);
        const int cols = H.cols;
        for (int i = 0; i < gp->num_nodes; ++i) {
            const double* gr = self.grad.row(i);
            for (int e = gp->row_ptr[i]; e < gp->row_ptr[i + 1]; ++e) {
                const int j = gp->col[e];
                const double* hr = H.row(j);
                double* dh = nh.row(j);
                const double we = W.data[e];
                double s = 0.0;
                for (int c = 0; c < cols; ++c) {
                    s += gr[c] * hr[c];
                    dh[c] += we * gr[c];
                }
                nw.data[e] += s;
            }
        }
    });
}

Var Tape::edge_sqdist(Var feats, const Graph& g) {
    const Tensor& H = value(feats);
    require(H.rows == g.num_nodes, "edge_sqdist: feature rows != N");
    Tensor out(g.num_edges(), 1);
    for (int i = 0; i < g.num_nodes; ++i) {
        const double* hi = H.row(i);
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int j = g.col[e];
            if (j == i) continue;  // exact zero on self-loops
            const double* hj = H.row(j);
            double s = 0.0;
            for (int c = 0; c < H.cols; ++c) {
                const double d = hi[c] - hj[c];
                s += d * d;
            }
            out.data[e] = s;
        }
    }
    macs_ += static_cast<std::int64_t>(g.num_edges()) * H.cols * 2;
    const Graph* gp = &g;
    return push(std::move(out), true, [feats, gp](Tape& t, Node& self) {
        const Tensor& H = t.value(feats);
        Tensor& nh = t.grad_slot(feats.id);
        for (int i = 0; i < gp->num_nodes; ++i) {
            const double* hi = H.row(i);
            double* di = nh.row(i);
            for (int e = gp->row_ptr[i]; e < gp->row_ptr[i + 1]; ++e) {
                const int j = gp->col[e];
                if (j == i) continue;
                const double two_g = 2.0 * self.grad.data[e];
                if (two_g == 0.0) continue;
                const double* hj = H.row(j);
                double* dj = nh.row(j);
                for (int c = 0; c < H.cols; ++c) {
                    const double d = two_g * (hi[c] - hj[c]);
                    di[c] += d;
                    dj[c] -= d;
                }
            }
        }
    });
}

Var Tape::edge_pair_dot(Var feats, const Graph& g) {
    const Tensor& H = value(feats);
    require(H.rows == g.num_nodes, "edge_pair_dot: feature rows != N");
    Tensor out(g.num_edges(), 1);
    for (int i = 0; i < g.num_nodes; ++i) {
        const double* hi = H.row(i);
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const double* hj = H.row(g.col[e]);
            double s = 0.0;
            for (int c = 0; c < H.cols; ++c) s += hi[c] * hj[c];
            out.data[e] = s;
        }
    }
    macs_ += static_cast<std::int64_t>(g.num_edges()) * H.cols;
    const Graph* gp = &g;
    return push(std::move(out), true, [feats, gp](Tape& t, Node& self) {
        const Tensor& H = t.value(feats);
        Tensor& nh = t.grad_slot(feats.id);
        for (int i = 0; i < gp->num_nodes; ++i) {
            const double* hi = H.row(i);
            double* di = nh.row(i);
            for (int e = gp->row_ptr[i]; e < gp->row_ptr[i + 1]; ++e) {
                const int j = gp->col[e];
                const double ge = self.grad.data[e];
                if (ge == 0.0) continue;
                const double* hj = H.row(j);
                double* dj = nh.row(j);
                for (int c = 0; c < H.cols; ++c) {
                    di[c] += ge * hj[c];
                    dj[c] += ge * hi[c];
                }
            }
        }
    });
}

Var Tape::pair_dot(Var feats, std::shared_ptr<const std::vector<std::pair<int, int>>> pairs) {
    const Tensor& H = value(feats);
    Tensor out(static_cast<int>(pairs->size()), 1);
    for (std::size_t k = 0; k < pairs->size(); ++k) {
        const auto [i, j] = (*pairs)[k];
        const double* hi = H.row(i);
        const double* hj = H.row(j);
        double s = 0.0;
        for (int c = 0; c < H.cols; ++c) s += hi[c] * hj[c];
        out.data[k] = s;
    }
    macs_ += static_cast<std::int64_t>(pairs->size()) * H.cols;
    return push(std::move(out), true, [feats, pairs](Tape& t, Node& self) {
        const Tensor& H = t.value(feats);
        Tensor& nh = t.grad_slot(feats.id);
        for (std::size_t k = 0; k < pairs->size(); ++k) {
            const auto [i, j] = (*pairs)[k];
            const double g = self.grad.data[k];
            if (g == 0.0) continue;
            const double* hi = H.row(i);
            const double* hj = H.row(j);
            double* di = nh.row(i);
            double* dj = nh.row(j);
            for (int c = 0; c < H.cols; ++c) {
                di[c] += g * hj[c];
                dj[c] += g * hi[c];
            }
        }
    });
}

Var Tape::epsilon_self_term(Var feats, Var eps, const Graph& g) {
    const Tensor& H = value(feats);
    require(H.rows == g.num_nodes, "epsilon_self_term: feature rows != N");
    require(value(eps).is_scalar(), "epsilon_self_term: eps must be 1x1");
    const double e = value(eps).data[0];
    Tensor out(H.rows, H.cols);
    for (int i = 0; i < g.num_nodes; ++i) {
        const double k = e / g.degree(i);
        const double* hr = H.row(i);
        double* o = out.row(i);
        for (int c = 0; c < H.cols; ++c) o[c] = k * hr[c];
    }
    macs_ += H.size();
    const Graph* gp = &g;
    return push(std::move(out), true, [feats, eps, gp](Tape& t, Node& self) {
        const Tensor& H = t.value(feats);
        const double e = t.value(eps).data[0];
        Tensor& nh = t.grad_slot(feats.id);
        double de = 0.0;
        for (int i = 0; i < gp->num_nodes; ++i) {
            const double inv_deg = 1.0 / gp->degree(i);
            const double* gr = self.grad.row(i);
            const double* hr = H.row(i);
            double* dh = nh.row(i);
            double dot = 0.0;
            for (int c = 0; c < H.cols; ++c) {
                dot += gr[c] * hr[c];
                dh[c] += e * inv_deg * gr[c];
            }
            de += inv_deg * dot;
        }
        t.accumulate_at(eps.id, 0, de);
    });
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& rows,
                                const std::vector<int>& labels) {
    const Tensor& L = value(logits);
    require(!rows.empty(), "softmax_cross_entropy: empty row set");
    double loss = 0.0;
    for (int r : rows) {
        const double* row = L.row(r);
        double m = row[0];
        for (int c = 1; c < L.cols; ++c) m = std::max(m, row[c]);
        double s = 0.0;
        for (int c = 0; c < L.cols; ++c) s += std::exp(row[c] - m);
        loss += m + std::log(s) - row[labels[r]];
    }
    loss /= static_cast<double>(rows.size());
    macs_ += static_cast<std::int64_t>(rows.size()) * L.cols * 2;
    auto rows_copy = std::make_shared<std::vector<int>>(rows);
    auto labels_ptr = std::make_shared<std::vector<int>>(labels);
    return push(Tensor::scalar(loss), true, [logits, rows_copy, labels_ptr](Tape& t, Node& self) {
        const Tensor& L = t.value(logits);
        Tensor& nl = t.grad_slot(logits.id);
        const double g = self.grad.data[0] / static_cast<double>(rows_copy->size());
        for (int r : *rows_copy) {
            const double* row = L.row(r);
            double* drow = nl.row(r);
            double m = row[0];
            for (int c = 1; c < L.cols; ++c) m = std::max(m, row[c]);
            double s = 0.0;
            for (int c = 0; c < L.cols; ++c) s += std::exp(row[c] - m);
            for (int c = 0; c < L.cols; ++c) {
                const double p = std::exp(row[c] - m) / s;
                drow[c] += g * (p - ((*labels_ptr)[r] == c ? 1.0 : 0.0));
            }
        }
    });
}

void Tape::backward(Var loss) {
    if (!loss.valid() || loss.id >= size())
        throw ContractError("backward: invalid loss handle");
    if (!nodes_[loss.id].value.is_scalar())
        throw ContractError("backward: loss must be a scalar");
    grad_slot(loss.id).data[0] += 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.touched || !n.needs_grad) continue;
        if (Parameter* p = leaf_params_[id]) {
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) p->grad.data[i] += n.grad.data[i];
        } else if (n.back) {
            n.back(*this, n);
        }
    }
}

double finite_difference_check(Parameter& p, const std::function<double()>& f,
                               const Tensor& analytic, double step) {
    if (!analytic.same_shape(p.value))
        throw DimensionError("finite_difference_check: gradient shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
        const double saved = p.value.data[i];
        const double h = step * std::max(1.0, std::abs(saved));
        p.value.data[i] = saved + h;
        const double up = f();
        p.value.data[i] = saved - h;
        const double down = f();
        p.value.data[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic.data[i];
        const double rel = std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-6});
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace satnet::ad
