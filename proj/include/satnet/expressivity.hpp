#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satnet/graph.hpp"
#include "satnet/tensor.hpp"
#include "satnet/types.hpp"

namespace satnet::expressivity {

/// Labeled feature multiset (M, mu) around a central feature, with the
/// dissimilarity of every distinct element to the center.
struct Multiset {
    std::vector<double> central;
    struct Element {
        std::vector<double> feature;
        int multiplicity = 1;
        double dissimilarity = 0.0;  ///< S between center and this element
    };
    std::vector<Element> elements;  ///< distinct features

    int total_size() const;  ///< Σ multiplicities
};

/// Aggregator instantiation used by the harness. Correlation logits stand in
/// for the learned feature-correlation scores, aligned with the multiset's
/// distinct elements. epsilon == 0 is the plain (unaugmented) aggregator.
struct AggregatorSpec {
    Strategy strategy = Strategy::contractive;
    double beta = 1.0;
    double epsilon = 0.0;
    std::optional<Tensor> feature_map;  ///< g as a linear map; identity if absent
    std::vector<double> correlations;   ///< per distinct element
};

/// h(c, X) = Σ_x alpha_cx g(x) over the flattened multiset, plus the
/// epsilon/|X| · alpha_cc · g(c) self correction when epsilon > 0 and the
/// central feature is an element. alpha_cc is the attention mass on the
/// central feature.
std::vector<double> aggregate_multiset(const AggregatorSpec& spec, const Multiset& m);

/// Attention mass assigned to each distinct element (sums to 1).
std::vector<double> attention_masses(const AggregatorSpec& spec, const Multiset& m);

/// Two multisets with identical center, identical underlying set, equal
/// per-element dissimilarity and proportional multiplicities, so the plain
/// aggregations provably coincide while the multiset sizes differ.
struct CollisionPair {
    Multiset x1, x2;
    AggregatorSpec spec;  ///< epsilon == 0
};

CollisionPair build_collision_pair(Strategy strategy, std::uint64_t seed);

struct SeparationReport {
    double plain_diff = 0.0;            ///< ||h(c,X1) - h(c,X2)||, epsilon = 0
    double augmented_diff = 0.0;        ///< same with epsilon > 0
    double predicted_separation = 0.0;  ///< epsilon |1/|X1| - 1/|X2|| alpha_cc ||g(c)||
    double alpha_cc = 0.0;
    double g_center_norm = 0.0;
    bool collision_ok = false;    ///< plain_diff < 1e-12
    bool separation_ok = false;   ///< augmented_diff > 1e-6 and matches prediction to 1e-10
    bool degenerate = false;      ///< g(c) = 0, separation necessarily vanishes
};

SeparationReport verify_separation(const CollisionPair& pair, double epsilon);

struct HarnessSummary {
    int pairs_tested = 0;
    int collisions_confirmed = 0;
    int separations_confirmed = 0;
    double min_separation = 0.0;
};

/// Sweeps `pairs` seeded collision pairs for one strategy.
HarnessSummary run_harness(Strategy strategy, int pairs, double epsilon, std::uint64_t seed);
std::string harness_summary_to_json(const HarnessSummary& s, Strategy strategy, double epsilon);

/// Standard 1-WL color refinement from feature-hash initial colors; returns
/// one color id per node after the given number of rounds.
std::vector<int> wl_refinement(const Graph& g, int rounds);

} // namespace satnet::expressivity
