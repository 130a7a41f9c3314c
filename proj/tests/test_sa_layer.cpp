#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "satnet/error.hpp"
#include "satnet/sa_layer.hpp"
#include "testutil.hpp"

using namespace satnet;
using testutil::dense_head_reference;
using testutil::DenseHeadParams;
using testutil::make_graph;

namespace {

Graph path3() { return make_graph(3, {{0, 1}, {1, 2}}, Tensor::zeros(3, 1), {0, 0, 0}); }

// Per-edge vector with chosen values in node 1's segment of a path3 graph
// and valid distributions elsewhere.
Tensor path3_segment_values(const Graph& g, double v0, double v1, double v2) {
    Tensor t(g.num_edges(), 1);
    t.data[g.edge_index(0, 0)] = 0.5;
    t.data[g.edge_index(0, 1)] = 0.5;
    t.data[g.edge_index(1, 0)] = v0;
    t.data[g.edge_index(1, 1)] = v1;
    t.data[g.edge_index(1, 2)] = v2;
    t.data[g.edge_index(2, 1)] = 0.5;
    t.data[g.edge_index(2, 2)] = 0.5;
    return t;
}

} // namespace

TEST_CASE("feature correlation") {
    SUBCASE("self-loop-only node gets weight one") {
        Graph iso = make_graph(1, {}, Tensor::from({{1.0, 2.0}}), {0});
        Rng rng(0);
        ad::Tape tape;
        ad::Var wh = tape.constant(Tensor::normal(1, 3, 0.0, 1.0, rng));
        ad::Var a = tape.constant(Tensor::normal(6, 1, 0.0, 1.0, rng));
        CHECK(tape.value(feature_correlation(tape, wh, a, 0.2, iso)).item() == 1.0);
    }

    SUBCASE("identical neighbor features make the segment uniform") {
        Graph g = make_graph(3, {{0, 1}, {0, 2}}, Tensor::zeros(3, 2), {0, 0, 0});
        Rng rng(1);
        Tensor same_row = Tensor::normal(1, 2, 0.0, 1.0, rng);
        Tensor wh(3, 2);
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < 2; ++c) wh(i, c) = same_row(0, c);
        ad::Tape tape;
        ad::Var f = feature_correlation(tape, tape.constant(wh),
                                        tape.constant(Tensor::normal(4, 1, 0.0, 1.0, rng)), 0.2, g);
        for (int e = g.row_ptr[0]; e < g.row_ptr[1]; ++e)
            CHECK(tape.value(f).data[e] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    }

    SUBCASE("three-node toy matches the dense softmax oracle") {
        Rng rng(5);
        Graph g = make_graph(3, {{0, 1}, {1, 2}}, Tensor::normal(3, 4, 0.0, 1.0, rng), {0, 0, 0});
        Tensor W = Tensor::normal(4, 3, 0.0, 1.0, rng);
        Tensor a = Tensor::normal(6, 1, 0.0, 1.0, rng);

        ad::Tape tape;
        ad::Var wh = tape.matmul(tape.constant(g.features.to_dense()), tape.constant(W));
        ad::Var f = feature_correlation(tape, wh, tape.constant(a), 0.2, g);

        const Tensor whv = tape.value(wh);
        const auto nbr = testutil::neighbor_lists(g);
        for (int i = 0; i < 3; ++i) {
            std::vector<long double> e;
            for (int j : nbr[i]) {
                long double v = 0.0L;
                for (int c = 0; c < 3; ++c)
                    v += (long double)a(c, 0) * whv(i, c) + (long double)a(3 + c, 0) * whv(j, c);
                e.push_back(v >= 0 ? v : 0.2L * v);
            }
            long double z = 0.0L;
            for (long double v : e) z += std::exp(v);
            for (std::size_t k = 0; k < nbr[i].size(); ++k)
                CHECK(tape.value(f).data[g.edge_index(i, nbr[i][k])] ==
                      doctest::Approx((double)(std::exp(e[k]) / z)).epsilon(1e-12));
        }
    }
}

TEST_CASE("contractive scores") {
    Graph g = path3();

    SUBCASE("equal dissimilarity cancels out") {
        Rng rng(3);
        ad::Tape tape;
        ad::Var f = tape.edge_segment_softmax(
            tape.constant(Tensor::normal(g.num_edges(), 1, 0.0, 1.0, rng)), g);
        ad::Var s = tape.constant(Tensor::full(g.num_edges(), 1, 1.7));
        ad::Var alpha = contractive_scores(tape, f, s, 1.0, g);
        CHECK(max_abs_diff(tape.value(alpha), tape.value(f)) < 1e-14);
    }

    SUBCASE("beta to zero recovers the correlations") {
        Rng rng(4);
        ad::Tape tape;
        ad::Var f = tape.edge_segment_softmax(
            tape.constant(Tensor::normal(g.num_edges(), 1, 0.0, 1.0, rng)), g);
        ad::Var s = tape.constant(Tensor::normal(g.num_edges(), 1, 1.0, 0.5, rng));
        ad::Var alpha = contractive_scores(tape, f, s, 1e-9, g);
        CHECK(max_abs_diff(tape.value(alpha), tape.value(f)) < 1e-8);
    }

    SUBCASE("frozen oracle triple") {
        ad::Tape tape;
        ad::Var f = tape.constant(path3_segment_values(g, 0.5, 0.3, 0.2));
        ad::Var s = tape.constant(path3_segment_values(g, 0.0, 1.0, 2.0));
        const Tensor& alpha = tape.value(contractive_scores(tape, f, s, 1.0, g));

        const long double w[3] = {0.5L * std::exp(0.0L), 0.3L * std::exp(-1.0L),
                                  0.2L * std::exp(-2.0L)};
        const long double z = w[0] + w[1] + w[2];
        CHECK(alpha.data[g.edge_index(1, 0)] == doctest::Approx((double)(w[0] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 1)] == doctest::Approx((double)(w[1] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 2)] == doctest::Approx((double)(w[2] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 0)] == doctest::Approx(0.78440).epsilon(1e-4));
        CHECK(alpha.data[g.edge_index(1, 1)] == doctest::Approx(0.17314).epsilon(1e-4));
        CHECK(alpha.data[g.edge_index(1, 2)] == doctest::Approx(0.04246).epsilon(1e-3));
    }

    SUBCASE("log-space path survives huge dissimilarities") {
        ad::Tape tape;
        tape.set_check_finite(true);
        ad::Var f = tape.constant(path3_segment_values(g, 0.5, 0.3, 0.2));
        ad::Var s = tape.constant(path3_segment_values(g, 0.0, 5000.0, 10000.0));
        const Tensor& alpha = tape.value(contractive_scores(tape, f, s, 1.0, g));
        CHECK(alpha.data[g.edge_index(1, 0)] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(alpha.all_finite());
    }

    SUBCASE("beta outside (0,1] rejected") {
        ad::Tape tape;
        ad::Var f = tape.constant(path3_segment_values(g, 0.4, 0.4, 0.2));
        CHECK_THROWS_AS((void)contractive_scores(tape, f, f, 0.0, g), ConfigError);
        CHECK_THROWS_AS((void)contractive_scores(tape, f, f, 1.5, g), ConfigError);
    }
}

TEST_CASE("subtractive scores") {
    Graph g = path3();

    SUBCASE("single self-loop segment gives one for any beta") {
        Graph iso = make_graph(1, {}, Tensor::zeros(1, 1), {0});
        for (double beta : {0.25, 0.5, 1.0}) {
            ad::Tape tape;
            ad::Var f = tape.constant(Tensor::column({1.0}));
            ad::Var T = tape.constant(Tensor::column({1.0}));
            int fallbacks = 0;
            ad::Var alpha = subtractive_scores(tape, f, T, beta, iso, &fallbacks);
            CHECK(tape.value(alpha).item() == 1.0);
            CHECK(fallbacks == (beta == 1.0 ? 1 : 0));  // beta=1 fully suppresses the segment
        }
    }

    SUBCASE("uniform T cancels") {
        Rng rng(6);
        ad::Tape tape;
        ad::Var f = tape.edge_segment_softmax(
            tape.constant(Tensor::normal(g.num_edges(), 1, 0.0, 1.0, rng)), g);
        ad::Var T = normalize_T(tape, tape.constant(Tensor::full(g.num_edges(), 1, 3.0)), g);
        ad::Var alpha = subtractive_scores(tape, f, T, 0.7, g);
        CHECK(max_abs_diff(tape.value(alpha), tape.value(f)) < 1e-14);
    }

    SUBCASE("frozen oracle triple via T = softmax(S)") {
        ad::Tape tape;
        ad::Var f = tape.constant(path3_segment_values(g, 0.5, 0.3, 0.2));
        ad::Var S = tape.constant(path3_segment_values(g, 0.0, 1.0, 2.0));
        ad::Var T = normalize_T(tape, S, g);
        const Tensor& alpha = tape.value(subtractive_scores(tape, f, T, 0.5, g));

        long double zt = std::exp(0.0L) + std::exp(1.0L) + std::exp(2.0L);
        const long double t[3] = {std::exp(0.0L) / zt, std::exp(1.0L) / zt, std::exp(2.0L) / zt};
        const long double w[3] = {0.5L * (1 - 0.5L * t[0]), 0.3L * (1 - 0.5L * t[1]),
                                  0.2L * (1 - 0.5L * t[2])};
        const long double z = w[0] + w[1] + w[2];
        CHECK(alpha.data[g.edge_index(1, 0)] == doctest::Approx((double)(w[0] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 1)] == doctest::Approx((double)(w[1] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 2)] == doctest::Approx((double)(w[2] / z)).epsilon(1e-13));
        CHECK(alpha.data[g.edge_index(1, 0)] == doctest::Approx(0.54617).epsilon(1e-4));
        CHECK(alpha.data[g.edge_index(1, 1)] == doctest::Approx(0.30116).epsilon(1e-4));
        CHECK(alpha.data[g.edge_index(1, 2)] == doctest::Approx(0.15268).epsilon(1e-3));
    }

    SUBCASE("pre-normalization weights stay nonnegative for beta <= 1") {
        Rng rng(8);
        for (int round = 0; round < 20; ++round) {
            Graph gr = testutil::random_graph(rng, 6, 0.5, 2, 2);
            ad::Tape tape;
            ad::Var f = tape.edge_segment_softmax(
                tape.constant(Tensor::normal(gr.num_edges(), 1, 0.0, 2.0, rng)), gr);
            ad::Var T = normalize_T(
                tape, tape.constant(Tensor::normal(gr.num_edges(), 1, 0.0, 2.0, rng)), gr);
            const double beta = 0.05 + 0.95 * rng.uniform();
            ad::Var pre = tape.mul(f, tape.affine(T, -beta, 1.0));
            for (double v : tape.value(pre).data) CHECK(v >= 0.0);
            ad::Var alpha = subtractive_scores(tape, f, T, beta, gr);
            for (double v : tape.value(alpha).data) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("aggregate") {
    SUBCASE("isolated node with eps gives (1 + eps) Wh") {
        Graph iso = make_graph(1, {}, Tensor::zeros(1, 1), {0});
        Rng rng(9);
        Tensor whv = Tensor::normal(1, 3, 0.0, 1.0, rng);
        ad::Tape tape;
        ad::Var wh = tape.constant(whv);
        ad::Var alpha = tape.constant(Tensor::column({1.0}));
        ad::Var eps = tape.constant(Tensor::scalar(0.37));
        const Tensor& out = tape.value(aggregate(tape, alpha, wh, eps, iso));
        for (int c = 0; c < 3; ++c)
            CHECK(out(0, c) == doctest::Approx(1.37 * whv(0, c)).epsilon(1e-14));
    }

    SUBCASE("no eps term is plain attention aggregation") {
        Rng rng(10);
        Graph g = testutil::random_graph(rng, 5, 0.5, 2, 2);
        ad::Tape tape;
        ad::Var wh = tape.constant(Tensor::normal(5, 2, 0.0, 1.0, rng));
        ad::Var alpha = tape.edge_segment_softmax(
            tape.constant(Tensor::normal(g.num_edges(), 1, 0.0, 1.0, rng)), g);
        const Tensor plain = tape.value(tape.edge_weighted_aggregate(alpha, wh, g));
        CHECK(tape.value(aggregate(tape, alpha, wh, std::nullopt, g)) == plain);
    }

    SUBCASE("six-node graph matches the dense oracle with the eps diagonal") {
        Rng rng(11);
        Graph g = testutil::random_graph(rng, 6, 0.5, 3, 2);
        Tensor whv = Tensor::normal(6, 3, 0.0, 1.0, rng);
        Tensor logits = Tensor::normal(g.num_edges(), 1, 0.0, 1.0, rng);
        const double eps = 0.42;

        ad::Tape tape;
        ad::Var wh = tape.constant(whv);
        ad::Var alpha = tape.edge_segment_softmax(tape.constant(logits), g);
        const Tensor& out =
            tape.value(aggregate(tape, alpha, wh, tape.constant(Tensor::scalar(eps)), g));

        const Tensor& a = tape.value(alpha);
        for (int i = 0; i < 6; ++i)
            for (int c = 0; c < 3; ++c) {
                long double expect = (long double)eps / g.degree(i) * whv(i, c);
                for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
                    expect += (long double)a.data[e] * whv(g.col[e], c);
                CHECK(out(i, c) == doctest::Approx((double)expect).epsilon(1e-12));
            }
    }
}

TEST_CASE("multi-head composition") {
    Rng rng(13);
    Graph g = testutil::random_graph(rng, 7, 0.4, 5, 3);

    SUBCASE("one head with mean combine is the head output unchanged, no activation") {
        SaLayerConfig cfg;
        cfg.in_dim = 5;
        cfg.out_dim = 4;
        cfg.heads = 1;
        cfg.concat_heads = false;
        Rng init(1);
        SaLayer layer("l", cfg, init);
        ad::Tape tape;
        ad::Var out = layer.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr);
        CHECK(tape.value(out).rows == 7);
        CHECK(tape.value(out).cols == 4);

        // raw head output, no activation applied
        DenseHeadParams p;
        p.W = layer.heads()[0].weight().value;
        p.a = layer.heads()[0].attn_vec().value;
        p.strategy = Strategy::none;
        CHECK(max_abs_diff(tape.value(out), dense_head_reference(g, g.features.to_dense(), p)) <
              1e-12);
    }

    SUBCASE("eight heads of width eight concatenate to 64") {
        SaLayerConfig cfg;
        cfg.in_dim = 5;
        cfg.out_dim = 8;
        cfg.heads = 8;
        cfg.concat_heads = true;
        Rng init(2);
        SaLayer layer("l", cfg, init);
        ad::Tape tape;
        ad::Var out = layer.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr);
        CHECK(tape.value(out).cols == 64);
    }

    SUBCASE("mean of two identical heads equals either head") {
        SaLayerConfig cfg;
        cfg.in_dim = 5;
        cfg.out_dim = 3;
        cfg.heads = 2;
        cfg.concat_heads = false;
        Rng init(3);
        SaLayer layer("l", cfg, init);
        layer.heads()[1].weight().value = layer.heads()[0].weight().value;
        layer.heads()[1].attn_vec().value = layer.heads()[0].attn_vec().value;

        SaLayerConfig one = cfg;
        one.heads = 1;
        Rng init2(3);
        SaLayer single("l", one, init2);  // same init stream: identical first head

        ad::Tape tape;
        ad::Var both = layer.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr);
        ad::Var lone = single.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr);
        CHECK(max_abs_diff(tape.value(both), tape.value(lone)) < 1e-15);
    }
}

TEST_CASE("plain-strategy layer equals the dense attention baseline to 1e-12") {
    Rng rng(17);
    for (int round = 0; round < 10; ++round) {
        const int n = 4 + (int)rng.uniform_int(6);
        Graph g = testutil::random_graph(rng, n, 0.5, 4, 2);
        SaLayerConfig cfg;
        cfg.in_dim = 4;
        cfg.out_dim = 3;
        cfg.heads = 2;
        cfg.strategy = Strategy::none;  // eps fixed at zero
        cfg.concat_heads = true;
        Rng init(round);
        SaLayer layer("l", cfg, init);

        ad::Tape tape;
        ad::Var out = layer.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr);

        const Tensor x = g.features.to_dense();
        Tensor expect(n, 6);
        for (int h = 0; h < 2; ++h) {
            DenseHeadParams p;
            p.W = layer.heads()[h].weight().value;
            p.a = layer.heads()[h].attn_vec().value;
            p.strategy = Strategy::none;
            Tensor head = dense_head_reference(g, x, p);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < 3; ++c) {
                    double v = head(i, c);
                    expect(i, c + 3 * h) = v > 0 ? v : std::expm1(v);  // ELU after concat
                }
        }
        CHECK(max_abs_diff(tape.value(out), expect) < 1e-12);
    }
}

TEST_CASE("selective layers match the dense oracle end to end") {
    Rng rng(19);
    for (Strategy strategy : {Strategy::contractive, Strategy::subtractive}) {
        Graph g = testutil::random_graph(rng, 8, 0.5, 4, 3);
        SaLayerConfig cfg;
        cfg.in_dim = 4;
        cfg.out_dim = 3;
        cfg.heads = 1;
        cfg.strategy = strategy;
        cfg.dissim = DissimMode::both;
        cfg.beta = 0.8;
        cfg.concat_heads = false;
        Rng init(7);
        SaLayer layer("l", cfg, init);
        StructuralEmbedding emb(8, 3, init);

        ad::Tape tape;
        ad::Var out = layer.forward(tape, LayerInput::features(g), &emb, g, false, nullptr);

        DenseHeadParams p;
        p.W = layer.heads()[0].weight().value;
        p.a = layer.heads()[0].attn_vec().value;
        p.strategy = strategy;
        p.beta = 0.8;
        p.eps = 0.5;  // sigmoid(0)
        p.r_f = 0.5;  // zero-initialized mixing logits
        p.r_p = 0.5;
        p.P = &emb.P.value;
        const Tensor expect = dense_head_reference(g, g.features.to_dense(), p);
        CHECK(max_abs_diff(tape.value(out), expect) < 1e-11);
    }
}

TEST_CASE("monotonicity: higher dissimilarity, lower attention at equal correlation") {
    Graph g = path3();
    ad::Tape tape;
    ad::Var f = tape.constant(path3_segment_values(g, 1.0 / 3, 1.0 / 3, 1.0 / 3));
    ad::Var S = tape.constant(path3_segment_values(g, 0.0, 1.0, 2.0));

    ad::Var ac = contractive_scores(tape, f, S, 0.9, g);
    CHECK(tape.value(ac).data[g.edge_index(1, 0)] > tape.value(ac).data[g.edge_index(1, 1)]);
    CHECK(tape.value(ac).data[g.edge_index(1, 1)] > tape.value(ac).data[g.edge_index(1, 2)]);

    ad::Var T = normalize_T(tape, S, g);
    ad::Var as = subtractive_scores(tape, f, T, 0.9, g);
    CHECK(tape.value(as).data[g.edge_index(1, 0)] > tape.value(as).data[g.edge_index(1, 1)]);
    CHECK(tape.value(as).data[g.edge_index(1, 1)] > tape.value(as).data[g.edge_index(1, 2)]);
}

TEST_CASE("attention rows normalize to one across random configurations") {
    Rng rng(23);
    for (int round = 0; round < 50; ++round) {
        Graph g = testutil::random_graph(rng, 2 + (int)rng.uniform_int(9), 0.5, 3, 2);
        SaLayerConfig cfg;
        cfg.in_dim = 3;
        cfg.out_dim = 2;
        cfg.heads = 1;
        cfg.strategy = rng.uniform() < 0.5 ? Strategy::contractive : Strategy::subtractive;
        cfg.dissim = DissimMode::feature_only;
        cfg.beta = 0.01 + 0.99 * rng.uniform();
        cfg.concat_heads = false;
        Rng init(round);
        SaLayer layer("l", cfg, init);
        ad::Tape tape;
        std::vector<EdgeAttention> attn;
        (void)layer.forward(tape, LayerInput::features(g), nullptr, g, false, nullptr, &attn);
        const Tensor& alpha = tape.value(attn[0].alpha);
        for (int i = 0; i < g.num_nodes; ++i) {
            double s = 0.0;
            for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
                CHECK(alpha.data[e] >= 0.0);
                s += alpha.data[e];
            }
            CHECK(std::abs(s - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("full layer gradient check against finite differences") {
    Rng rng(29);
    Graph g = testutil::random_graph(rng, 8, 0.5, 4, 3);

    for (Strategy strategy : {Strategy::contractive, Strategy::subtractive}) {
        CAPTURE(to_string(strategy));
        SaLayerConfig cfg;
        cfg.in_dim = 4;
        cfg.out_dim = 3;
        cfg.heads = 2;
        cfg.strategy = strategy;
        cfg.dissim = DissimMode::both;
        cfg.beta = 0.7;
        cfg.concat_heads = true;
        Rng init(31);
        SaLayer layer("l", cfg, init);
        StructuralEmbedding emb(8, 3, init);

        auto loss = [&] {
            ad::Tape t;
            return t
                .value(t.sum_squares(
                    layer.forward(t, LayerInput::features(g), &emb, g, false, nullptr)))
                .item();
        };
        auto run_backward = [&] {
            ad::Tape t;
            t.backward(
                t.sum_squares(layer.forward(t, LayerInput::features(g), &emb, g, false, nullptr)));
        };

        std::vector<ad::Parameter*> params;
        layer.collect_parameters(params);
        params.push_back(&emb.P);
        for (ad::Parameter* p : params) {
            p->zero_grad();
            run_backward();
            CAPTURE(p->name);
            CHECK(ad::finite_difference_check(*p, loss, p->grad) < 1e-4);
            p->zero_grad();
        }
    }
}

TEST_CASE("op counts follow the layer cost model") {
    Rng rng(37);
    Graph g = testutil::random_graph(rng, 12, 0.4, 6, 3);
    const std::int64_t N = g.num_nodes, E = g.num_edges(), nnz = g.features.nonzeros();
    const std::int64_t dout = 4, K = 3, C = 3;

    SaLayerConfig cfg;
    cfg.in_dim = 6;
    cfg.out_dim = (int)dout;
    cfg.heads = (int)K;
    cfg.strategy = Strategy::none;
    cfg.concat_heads = true;

    std::int64_t plain_macs;
    {
        Rng init(5);
        SaLayer layer("l", cfg, init);
        ad::Tape t;
        (void)layer.forward(t, LayerInput::features(g), nullptr, g, false, nullptr);
        plain_macs = t.mac_count();
    }
    // per head: projection + two score products + logits + LeakyReLU +
    // segment softmax + weighted aggregation; then one ELU over the concat.
    const std::int64_t expected_plain =
        K * (nnz * dout + 2 * N * dout + E + E + 2 * E + E * dout) + N * K * dout;
    CHECK(plain_macs == expected_plain);

    cfg.strategy = Strategy::contractive;
    cfg.dissim = DissimMode::both;
    std::int64_t selective_macs;
    {
        Rng init(5);
        SaLayer layer("l", cfg, init);
        StructuralEmbedding emb((int)N, (int)C, init);
        ad::Tape t;
        (void)layer.forward(t, LayerInput::features(g), &emb, g, false, nullptr);
        selective_macs = t.mac_count();
    }
    // marginal cost of selective attention per head: the two squared-distance
    // passes (features and embedding), the mixing, the contracted softmax and
    // the eps self term; dominated by the E*(dout + C) per-edge work.
    const std::int64_t expected_marginal =
        K * (2 * E * dout + 2 * E * C + 4 + 2 * E + 4 * E + 1 + N * dout);
    CHECK(selective_macs - plain_macs == expected_marginal);
}
