#include "satnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "satnet/error.hpp"

namespace satnet {

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix FeatureMatrix::dense(Tensor t) {
    FeatureMatrix f;
    f.sparse_ = false;
    f.rows_ = t.rows;
    f.cols_ = t.cols;
    f.dense_ = std::move(t);
    return f;
}

FeatureMatrix FeatureMatrix::sparse(int rows, int cols, std::vector<int> row_ptr,
                                    std::vector<int> col, std::vector<double> val) {
    if (static_cast<int>(row_ptr.size()) != rows + 1)
        throw DimensionError("FeatureMatrix::sparse: row_ptr size mismatch");
    if (col.size() != val.size())
        throw DimensionError("FeatureMatrix::sparse: col/val size mismatch");
    FeatureMatrix f;
    f.sparse_ = true;
    f.rows_ = rows;
    f.cols_ = cols;
    f.row_ptr_ = std::move(row_ptr);
    f.col_ = std::move(col);
    f.val_ = std::move(val);
    return f;
}

std::int64_t FeatureMatrix::nonzeros() const {
    if (sparse_) return static_cast<std::int64_t>(val_.size());
    std::int64_t n = 0;
    for (double v : dense_.data) n += v != 0.0;
    return n;
}

Tensor FeatureMatrix::to_dense() const {
    if (!sparse_) return dense_;
    Tensor t(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            t(i, col_[k]) = val_[k];
    return t;
}

double FeatureMatrix::at(int r, int c) const {
    if (!sparse_) return dense_(r, c);
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (col_[k] == c) return val_[k];
    return 0.0;
}

double FeatureMatrix::row_sq_norm(int r) const {
    double s = 0.0;
    if (sparse_) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * val_[k];
    } else {
        const double* p = dense_.row(r);
        for (int c = 0; c < cols_; ++c) s += p[c] * p[c];
    }
    return s;
}

double FeatureMatrix::row_dot(int r_a, int r_b) const {
    double s = 0.0;
    if (sparse_) {
        int ka = row_ptr_[r_a], kb = row_ptr_[r_b];
        const int ea = row_ptr_[r_a + 1], eb = row_ptr_[r_b + 1];
        while (ka < ea && kb < eb) {
            if (col_[ka] == col_[kb]) {
                s += val_[ka] * val_[kb];
                ++ka;
                ++kb;
            } else if (col_[ka] < col_[kb]) {
                ++ka;
            } else {
                ++kb;
            }
        }
    } else {
        const double* a = dense_.row(r_a);
        const double* b = dense_.row(r_b);
        for (int c = 0; c < cols_; ++c) s += a[c] * b[c];
    }
    return s;
}

FeatureMatrix FeatureMatrix::dropout(double p, Rng& rng) const {
    if (p <= 0.0) return *this;
    const double keep = 1.0 - p;
    const double scale = 1.0 / keep;
    FeatureMatrix out = *this;
    if (sparse_) {
        for (auto& v : out.val_) v = rng.uniform() < keep ? v * scale : 0.0;
    } else {
        for (auto& v : out.dense_.data) v = rng.uniform() < keep ? v * scale : 0.0;
    }
    return out;
}

void FeatureMatrix::matmul_into(const Tensor& w, Tensor& out) const {
    if (w.rows != cols_)
        throw DimensionError("FeatureMatrix::matmul_into: inner dimension mismatch");
    out = Tensor(rows_, w.cols);
    const int k = w.cols;
    if (sparse_) {
        for (int i = 0; i < rows_; ++i) {
            double* o = out.row(i);
            for (int e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
                const double x = val_[e];
                const double* wr = w.row(col_[e]);
                for (int c = 0; c < k; ++c) o[c] += x * wr[c];
            }
        }
    } else {
        for (int i = 0; i < rows_; ++i) {
            double* o = out.row(i);
            const double* xr = dense_.row(i);
            for (int j = 0; j < cols_; ++j) {
                const double x = xr[j];
                if (x == 0.0) continue;
                const double* wr = w.row(j);
                for (int c = 0; c < k; ++c) o[c] += x * wr[c];
            }
        }
    }
}

void FeatureMatrix::matmul_transposed_accum(const Tensor& g, Tensor& dw) const {
    if (g.rows != rows_ || dw.rows != cols_ || dw.cols != g.cols)
        throw DimensionError("FeatureMatrix::matmul_transposed_accum: shape mismatch");
    const int k = g.cols;
    if (sparse_) {
        for (int i = 0; i < rows_; ++i) {
            const double* gr = g.row(i);
            for (int e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
                const double x = val_[e];
                double* dwr = dw.row(col_[e]);
                for (int c = 0; c < k; ++c) dwr[c] += x * gr[c];
            }
        }
    } else {
        for (int i = 0; i < rows_; ++i) {
            const double* gr = g.row(i);
            const double* xr = dense_.row(i);
            for (int j = 0; j < cols_; ++j) {
                const double x = xr[j];
                if (x == 0.0) continue;
                double* dwr = dw.row(j);
                for (int c = 0; c < k; ++c) dwr[c] += x * gr[c];
            }
        }
    }
}

bool FeatureMatrix::operator==(const FeatureMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    if (sparse_ == o.sparse_) {
        if (sparse_) return row_ptr_ == o.row_ptr_ && col_ == o.col_ && val_ == o.val_;
        return dense_ == o.dense_;
    }
    return to_dense() == o.to_dense();
}

// ---------------------------------------------------------------------------
// Graph

int Graph::edge_index(int dst, int src) const {
    const int* first = col.data() + row_ptr[dst];
    const int* last = col.data() + row_ptr[dst + 1];
    const int* it = std::lower_bound(first, last, src);
    if (it != last && *it == src) return static_cast<int>(it - col.data());
    return -1;
}

bool Graph::operator==(const Graph& o) const {
    return num_nodes == o.num_nodes && num_classes == o.num_classes &&
           row_ptr == o.row_ptr && col == o.col && labels == o.labels &&
           features == o.features &&
           [&] {
               if (splits.size() != o.splits.size()) return false;
               for (std::size_t s = 0; s < splits.size(); ++s)
                   if (splits[s].train != o.splits[s].train || splits[s].val != o.splits[s].val ||
                       splits[s].test != o.splits[s].test)
                       return false;
               return true;
           }();
}

Graph build_graph(int num_nodes, const std::vector<std::pair<int, int>>& edges,
                  FeatureMatrix features, std::vector<int> labels,
                  std::vector<Split> splits) {
    if (features.rows() != num_nodes)
        throw ValidationError("build_graph: feature row count != node count");
    if (static_cast<int>(labels.size()) != num_nodes)
        throw ValidationError("build_graph: label count != node count");

    std::vector<std::set<int>> adj(num_nodes);
    for (auto [a, b] : edges) {
        if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes)
            throw ValidationError("build_graph: edge endpoint out of range: (" +
                                  std::to_string(a) + ", " + std::to_string(b) + ")");
        adj[a].insert(b);
        adj[b].insert(a);
    }
    for (int i = 0; i < num_nodes; ++i) adj[i].insert(i);  // exactly one self-loop

    Graph g;
    g.num_nodes = num_nodes;
    g.row_ptr.assign(num_nodes + 1, 0);
    for (int i = 0; i < num_nodes; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + static_cast<int>(adj[i].size());
    g.col.reserve(g.row_ptr[num_nodes]);
    for (int i = 0; i < num_nodes; ++i) g.col.insert(g.col.end(), adj[i].begin(), adj[i].end());

    int num_classes = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0)
            throw ValidationError("build_graph: negative label for node " + std::to_string(i));
        num_classes = std::max(num_classes, labels[i] + 1);
    }
    g.num_classes = num_classes;
    g.features = std::move(features);
    g.labels = std::move(labels);

    for (const Split& s : splits) {
        std::set<int> seen;
        for (const auto* part : {&s.train, &s.val, &s.test}) {
            for (int idx : *part) {
                if (idx < 0 || idx >= num_nodes)
                    throw ValidationError("build_graph: split index out of range: " + std::to_string(idx));
                if (!seen.insert(idx).second)
                    throw ValidationError("build_graph: split sets overlap at node " + std::to_string(idx));
            }
        }
    }
    g.splits = std::move(splits);
    return g;
}

// ---------------------------------------------------------------------------
// Bundle I/O

namespace {

std::vector<std::pair<int, int>> read_edges(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::pair<int, int>> edges;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        long a, b;
        if (!(ss >> a >> b))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected \"src<TAB>dst\"");
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    return edges;
}

FeatureMatrix read_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(path + ": empty feature file");

    // Sparse rows are space-separated "idx:val" tokens; a colon in the first
    // non-empty line selects the format for the whole file.
    bool sparse = false;
    for (const auto& l : lines) {
        if (l.empty()) continue;
        sparse = l.find(':') != std::string::npos;
        break;
    }

    const int n = static_cast<int>(lines.size());
    if (sparse) {
        std::vector<int> row_ptr(n + 1, 0), cols;
        std::vector<double> vals;
        int dim = 0;
        for (int i = 0; i < n; ++i) {
            std::istringstream ss(lines[i]);
            std::string tok;
            std::vector<std::pair<int, double>> entries;
            while (ss >> tok) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw ParseError(path + ":" + std::to_string(i + 1) + ": expected idx:val, got \"" + tok + "\"");
                try {
                    const int idx = std::stoi(tok.substr(0, colon));
                    const double v = std::stod(tok.substr(colon + 1));
                    if (idx < 0) throw std::invalid_argument("negative");
                    entries.emplace_back(idx, v);
                    dim = std::max(dim, idx + 1);
                } catch (const std::exception&) {
                    throw ParseError(path + ":" + std::to_string(i + 1) + ": bad token \"" + tok + "\"");
                }
            }
            std::sort(entries.begin(), entries.end());
            for (auto [c, v] : entries) {
                cols.push_back(c);
                vals.push_back(v);
            }
            row_ptr[i + 1] = static_cast<int>(cols.size());
        }
        return FeatureMatrix::sparse(n, dim, std::move(row_ptr), std::move(cols), std::move(vals));
    }

    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    std::size_t dim = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row;
        std::string cell;
        std::istringstream ss(lines[i]);
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(i + 1) + ": bad number \"" + cell + "\"");
            }
        }
        if (row.empty())
            throw ParseError(path + ":" + std::to_string(i + 1) + ": empty feature row");
        if (i == 0)
            dim = row.size();
        else if (row.size() != dim)
            throw ParseError(path + ":" + std::to_string(i + 1) + ": expected " + std::to_string(dim) +
                             " columns, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    Tensor t(n, static_cast<int>(dim));
    for (int i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) t(i, static_cast<int>(j)) = rows[i][j];
    return FeatureMatrix::dense(std::move(t));
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<int> labels;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad label \"" + line + "\"");
        }
    }
    return labels;
}

Split split_from_json(const nlohmann::json& j, const std::string& path) {
    Split s;
    for (auto [key, dst] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
        if (!j.contains(key) || !j[key].is_array())
            throw ParseError(path + ": split object missing integer array \"" + std::string(key) + "\"");
        for (const auto& v : j[key]) dst->push_back(v.get<int>());
    }
    return s;
}

std::vector<Split> read_splits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    std::vector<Split> splits;
    if (j.contains("splits")) {
        for (const auto& s : j["splits"]) splits.push_back(split_from_json(s, path));
    } else {
        splits.push_back(split_from_json(j, path));
    }
    if (splits.empty()) throw ParseError(path + ": no splits defined");
    return splits;
}

} // namespace

Graph load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root))
        throw ValidationError("load_bundle: not a directory: " + dir);

    auto edges = read_edges((root / "edges.tsv").string());
    auto features = read_features((root / "features.csv").string());
    auto labels = read_labels((root / "labels.txt").string());
    auto splits = read_splits((root / "splits.json").string());
    return build_graph(features.rows(), edges, std::move(features), std::move(labels),
                       std::move(splits));
}

void save_bundle(const Graph& g, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);

    {
        std::ofstream out(root / "edges.tsv");
        for (auto [i, j] : undirected_edges(g)) out << i << '\t' << j << '\n';
    }
    {
        // Always written in the sparse form; it round-trips both storages.
        std::ofstream out(root / "features.csv");
        char buf[64];
        const Tensor dense = g.features.to_dense();
        for (int i = 0; i < g.num_nodes; ++i) {
            bool first = true;
            for (int c = 0; c < dense.cols; ++c) {
                const double v = dense(i, c);
                if (v == 0.0) continue;
                std::snprintf(buf, sizeof buf, "%d:%.17g", c, v);
                if (!first) out << ' ';
                out << buf;
                first = false;
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(root / "labels.txt");
        for (int l : g.labels) out << l << '\n';
    }
    {
        nlohmann::json j;
        auto one = [](const Split& s) {
            return nlohmann::json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
        };
        if (g.splits.size() == 1) {
            j = one(g.splits[0]);
        } else {
            j["splits"] = nlohmann::json::array();
            for (const Split& s : g.splits) j["splits"].push_back(one(s));
        }
        std::ofstream out(root / "splits.json");
        out << j.dump(1) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Edge statistics

std::vector<std::pair<int, int>> undirected_edges(const Graph& g) {
    std::vector<std::pair<int, int>> out;
    out.reserve(g.num_undirected_edges());
    for (int i = 0; i < g.num_nodes; ++i)
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
            if (i < g.col[e]) out.emplace_back(i, g.col[e]);
    return out;
}

std::vector<int> common_neighbor_counts(const Graph& g) {
    std::vector<int> counts;
    counts.reserve(g.num_undirected_edges());
    for (auto [i, j] : undirected_edges(g)) {
        int ka = g.row_ptr[i], kb = g.row_ptr[j];
        const int ea = g.row_ptr[i + 1], eb = g.row_ptr[j + 1];
        int shared = 0;
        while (ka < ea && kb < eb) {
            const int a = g.col[ka], b = g.col[kb];
            if (a == b) {
                if (a != i && a != j) ++shared;
                ++ka;
                ++kb;
            } else if (a < b) {
                ++ka;
            } else {
                ++kb;
            }
        }
        counts.push_back(shared);
    }
    return counts;
}

std::vector<double> feature_distance_stats(const Graph& g) {
    std::vector<double> dist;
    dist.reserve(g.num_undirected_edges());
    double max_d = 0.0;
    for (auto [i, j] : undirected_edges(g)) {
        const double sq = g.features.row_sq_norm(i) + g.features.row_sq_norm(j) -
                          2.0 * g.features.row_dot(i, j);
        const double d = std::sqrt(std::max(sq, 0.0));
        dist.push_back(d);
        max_d = std::max(max_d, d);
    }
    if (max_d == 0.0) {
        if (!dist.empty())
            std::cerr << "warning: all connected feature rows identical; distances are all 0\n";
        return dist;
    }
    for (double& d : dist) d /= max_d;
    return dist;
}

PreLayerPlan reduce_features(const Graph& g, int target_dim) {
    PreLayerPlan plan;
    plan.in_dim = g.feature_dim();
    if (target_dim >= g.feature_dim()) {
        std::cerr << "warning: reduce_features target " << target_dim
                  << " >= feature dim " << g.feature_dim() << "; pre-layer disabled\n";
        plan.out_dim = g.feature_dim();
        return plan;
    }
    plan.active = true;
    plan.out_dim = target_dim;
    return plan;
}

} // namespace satnet
