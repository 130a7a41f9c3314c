#include "satnet/expressivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "satnet/error.hpp"
#include "satnet/rng.hpp"

namespace satnet::expressivity {

int Multiset::total_size() const {
    int n = 0;
    for (const auto& e : elements) n += e.multiplicity;
    return n;
}

namespace {

std::vector<double> apply_map(const std::optional<Tensor>& map, const std::vector<double>& x) {
    if (!map) return x;
    if (map->cols != static_cast<int>(x.size()))
        throw DimensionError("aggregate_multiset: feature map width mismatch");
    std::vector<double> out(map->rows, 0.0);
    for (int r = 0; r < map->rows; ++r) {
        const double* row = map->row(r);
        for (int c = 0; c < map->cols; ++c) out[r] += row[c] * x[c];
    }
    return out;
}

int central_index(const Multiset& m) {
    for (std::size_t k = 0; k < m.elements.size(); ++k)
        if (m.elements[k].feature == m.central) return static_cast<int>(k);
    return -1;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

std::vector<double> attention_masses(const AggregatorSpec& spec, const Multiset& m) {
    const std::size_t n = m.elements.size();
    if (spec.correlations.size() != n)
        throw DimensionError("attention_masses: one correlation per distinct element required");
    if (spec.strategy == Strategy::none)
        throw ConfigError("attention_masses: strategy must be contractive or subtractive");
    if (spec.beta <= 0.0 || spec.beta > 1.0)
        throw ConfigError("attention_masses: beta must be in (0, 1]");

    // Feature-correlation mass per distinct element: mu(x) exp(m_cx) / Z over
    // the flattened multiset.
    std::vector<double> mass(n);
    if (spec.strategy == Strategy::contractive) {
        // f exp(-beta S), normalized; evaluated as one stable softmax.
        double top = -1e300;
        for (std::size_t k = 0; k < n; ++k)
            top = std::max(top, spec.correlations[k] - spec.beta * m.elements[k].dissimilarity);
        double z = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double s = spec.correlations[k] - spec.beta * m.elements[k].dissimilarity;
            mass[k] = m.elements[k].multiplicity * std::exp(s - top);
            z += mass[k];
        }
        for (double& v : mass) v /= z;
        return mass;
    }

    // Subtractive: per-instance T is the softmax of S over the flattened
    // multiset; alpha ∝ f (1 - beta T).
    double top_m = -1e300, top_s = -1e300;
    for (std::size_t k = 0; k < n; ++k) {
        top_m = std::max(top_m, spec.correlations[k]);
        top_s = std::max(top_s, m.elements[k].dissimilarity);
    }
    double zf = 0.0, zs = 0.0;
    std::vector<double> f(n), es(n);
    for (std::size_t k = 0; k < n; ++k) {
        f[k] = m.elements[k].multiplicity * std::exp(spec.correlations[k] - top_m);
        es[k] = std::exp(m.elements[k].dissimilarity - top_s);
        zf += f[k];
        zs += m.elements[k].multiplicity * es[k];
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mass[k] = (f[k] / zf) * (1.0 - spec.beta * es[k] / zs);
        denom += mass[k];
    }
    if (denom == 0.0) {
        // Fully suppressed neighborhood: fall back to the correlation masses.
        for (std::size_t k = 0; k < n; ++k) mass[k] = f[k] / zf;
        return mass;
    }
    for (double& v : mass) v /= denom;
    return mass;
}

std::vector<double> aggregate_multiset(const AggregatorSpec& spec, const Multiset& m) {
    const std::vector<double> mass = attention_masses(spec, m);
    std::vector<double> out;
    for (std::size_t k = 0; k < m.elements.size(); ++k) {
        const std::vector<double> gx = apply_map(spec.feature_map, m.elements[k].feature);
        if (out.empty()) out.assign(gx.size(), 0.0);
        for (std::size_t c = 0; c < gx.size(); ++c) out[c] += mass[k] * gx[c];
    }
    if (spec.epsilon > 0.0) {
        const int cc = central_index(m);
        if (cc >= 0) {
            const std::vector<double> gc = apply_map(spec.feature_map, m.central);
            const double k = spec.epsilon / m.total_size() * mass[cc];
            for (std::size_t c = 0; c < gc.size(); ++c) out[c] += k * gc[c];
        }
    }
    return out;
}

CollisionPair build_collision_pair(Strategy strategy, std::uint64_t seed) {
    if (strategy == Strategy::none)
        throw ConfigError("build_collision_pair: strategy must be contractive or subtractive");
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 12345);

    const int dim = 1 + static_cast<int>(rng.uniform_int(3));
    const int distinct = 2 + static_cast<int>(rng.uniform_int(3));
    const double shared_s = rng.uniform(0.0, 2.0);

    CollisionPair pair;
    pair.spec.strategy = strategy;
    pair.spec.beta = 0.25 + 0.75 * rng.uniform();
    pair.spec.epsilon = 0.0;

    for (int k = 0; k < distinct; ++k) {
        Multiset::Element e;
        e.feature.resize(dim);
        // Element 0 doubles as the center; keep it away from zero so the
        // identity map has g(c) != 0.
        for (double& v : e.feature)
            v = k == 0 ? rng.uniform(0.5, 1.5) : rng.uniform(-2.0, 2.0);
        e.multiplicity = 1 + static_cast<int>(rng.uniform_int(3));
        e.dissimilarity = shared_s;
        pair.x1.elements.push_back(e);
        pair.spec.correlations.push_back(rng.uniform(-1.0, 1.0));
    }
    pair.x1.central = pair.x1.elements[0].feature;

    const int scale = 2 + static_cast<int>(rng.uniform_int(2));
    pair.x2 = pair.x1;
    for (auto& e : pair.x2.elements) e.multiplicity *= scale;
    return pair;
}

SeparationReport verify_separation(const CollisionPair& pair, double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("verify_separation: epsilon must be positive");
    SeparationReport report;

    AggregatorSpec plain = pair.spec;
    plain.epsilon = 0.0;
    const auto h1 = aggregate_multiset(plain, pair.x1);
    const auto h2 = aggregate_multiset(plain, pair.x2);
    std::vector<double> diff(h1.size());
    for (std::size_t i = 0; i < h1.size(); ++i) diff[i] = h1[i] - h2[i];
    report.plain_diff = l2(diff);
    report.collision_ok = report.plain_diff < 1e-12;

    AggregatorSpec augmented = pair.spec;
    augmented.epsilon = epsilon;
    const auto a1 = aggregate_multiset(augmented, pair.x1);
    const auto a2 = aggregate_multiset(augmented, pair.x2);
    for (std::size_t i = 0; i < a1.size(); ++i) diff[i] = a1[i] - a2[i];
    report.augmented_diff = l2(diff);

    const int cc = central_index(pair.x1);
    if (cc < 0) throw ContractError("verify_separation: center not an element of the multiset");
    report.alpha_cc = attention_masses(plain, pair.x1)[cc];
    report.g_center_norm = l2(apply_map(pair.spec.feature_map, pair.x1.central));
    report.degenerate = report.g_center_norm == 0.0;
    report.predicted_separation =
        epsilon *
        std::abs(1.0 / pair.x1.total_size() - 1.0 / pair.x2.total_size()) *
        report.alpha_cc * report.g_center_norm;
    report.separation_ok = !report.degenerate && report.augmented_diff > 1e-6 &&
                           std::abs(report.augmented_diff - report.predicted_separation) < 1e-10;
    return report;
}

HarnessSummary run_harness(Strategy strategy, int pairs, double epsilon, std::uint64_t seed) {
    HarnessSummary s;
    s.pairs_tested = pairs;
    s.min_separation = 1e300;
    for (int k = 0; k < pairs; ++k) {
        const CollisionPair pair = build_collision_pair(strategy, seed + k);
        const SeparationReport r = verify_separation(pair, epsilon);
        s.collisions_confirmed += r.collision_ok;
        s.separations_confirmed += r.separation_ok;
        s.min_separation = std::min(s.min_separation, r.augmented_diff);
    }
    if (pairs == 0) s.min_separation = 0.0;
    return s;
}

std::string harness_summary_to_json(const HarnessSummary& s, Strategy strategy, double epsilon) {
    std::ostringstream out;
    out << "{\"strategy\": \"" << to_string(strategy) << "\", \"epsilon\": " << epsilon
        << ", \"pairs_tested\": " << s.pairs_tested
        << ", \"collisions_confirmed\": " << s.collisions_confirmed
        << ", \"separations_confirmed\": " << s.separations_confirmed
        << ", \"min_separation\": " << s.min_separation << "}";
    return out.str();
}

std::vector<int> wl_refinement(const Graph& g, int rounds) {
    if (rounds < 1) throw ConfigError("wl_refinement: rounds must be >= 1");

    std::vector<int> color(g.num_nodes);
    {
        std::map<std::vector<double>, int> ids;
        for (int i = 0; i < g.num_nodes; ++i) {
            std::vector<double> row(g.feature_dim());
            for (int c = 0; c < g.feature_dim(); ++c) row[c] = g.features.at(i, c);
            color[i] = ids.emplace(std::move(row), static_cast<int>(ids.size())).first->second;
        }
    }
    for (int round = 0; round < rounds; ++round) {
        std::map<std::pair<int, std::vector<int>>, int> ids;
        std::vector<int> next(g.num_nodes);
        for (int i = 0; i < g.num_nodes; ++i) {
            std::vector<int> neighborhood;
            for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
                if (g.col[e] != i) neighborhood.push_back(color[g.col[e]]);
            std::sort(neighborhood.begin(), neighborhood.end());
            next[i] = ids.emplace(std::make_pair(color[i], std::move(neighborhood)),
                                  static_cast<int>(ids.size()))
                          .first->second;
        }
        color = std::move(next);
    }
    return color;
}

} // namespace satnet::expressivity
