#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csiloc/channel.hpp"
#include "csiloc/posnet.hpp"
#include "csiloc/reference.hpp"
#include "csiloc/rng.hpp"

using namespace csiloc;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void zero(Parameter& p) { p.value.fill(0.0); }

NetworkConfig toy_config(int hw = 16) {
    NetworkConfig cfg;
    cfg.input_h = hw;
    cfg.input_w = hw;
    cfg.channels = 8;
    cfg.deep_blocks = 3;
    cfg.stages = 2;
    return cfg;
}

AttnParams random_attn(int ci, int nq, int nv, int H, int W, Rng& rng) {
    AttnParams a;
    a.q = {Parameter{random_tensor({1, 1, ci, nq}, rng), "q.w"},
           Parameter{random_tensor({nq}, rng), "q.b"}};
    a.k = {Parameter{random_tensor({1, 1, ci, nq}, rng), "k.w"},
           Parameter{random_tensor({nq}, rng), "k.b"}};
    a.v = {Parameter{random_tensor({1, 1, ci, nv}, rng), "v.w"},
           Parameter{random_tensor({nv}, rng), "v.b"}};
    a.rel_h = Parameter{random_tensor({2 * H - 1, nq}, rng), "rel_h"};
    a.rel_w = Parameter{random_tensor({2 * W - 1, nq}, rng), "rel_w"};
    return a;
}

}  // namespace

TEST_CASE("rb_forward: skip identity, shape, manual composition") {
    Rng rng(1);
    SUBCASE("zero conv weights make the block an identity") {
        RbParams p;
        p.c1 = {Parameter{Tensor({3, 3, 8, 8}), "c1.w"}, Parameter{Tensor({8}), "c1.b"}};
        p.c2 = {Parameter{Tensor({3, 3, 8, 8}), "c2.w"}, Parameter{Tensor({8}), "c2.b"}};
        Tensor x = random_tensor({4, 4, 8}, rng);
        Tape t;
        const Tensor& y = t.value(rb_forward(t, t.input(x), p));
        CHECK(max_abs_diff(y, x) == 0.0);
    }
    SUBCASE("shape is preserved") {
        RbParams p;
        p.c1 = {Parameter{random_tensor({5, 5, 32, 32}, rng), "w"},
                Parameter{random_tensor({32}, rng), "b"}};
        p.c2 = {Parameter{random_tensor({5, 5, 32, 32}, rng), "w"},
                Parameter{random_tensor({32}, rng), "b"}};
        Tensor x = random_tensor({4, 4, 32}, rng);
        Tape t;
        CHECK(t.value(rb_forward(t, t.input(x), p)).shape == std::vector<int>{4, 4, 32});
    }
    SUBCASE("matches hand composition conv-act-conv-add") {
        RbParams p;
        p.c1 = {Parameter{random_tensor({1, 1, 2, 2}, rng), "w"},
                Parameter{random_tensor({2}, rng), "b"}};
        p.c2 = {Parameter{random_tensor({1, 1, 2, 2}, rng), "w"},
                Parameter{random_tensor({2}, rng), "b"}};
        Tensor x = random_tensor({2, 2, 2}, rng);
        Tape t;
        const Tensor& got = t.value(rb_forward(t, t.input(x), p));
        Tensor h1({2, 2, 2}), h2({2, 2, 2}), h3({2, 2, 2});
        ref::conv2d(x.data.data(), 2, 2, 2, p.c1.w.value.data.data(), 1, 2,
                    p.c1.b.value.data.data(), h1.data.data());
        for (int64_t i = 0; i < h1.size(); ++i) h2[i] = h1[i] >= 0 ? h1[i] : 0.01 * h1[i];
        ref::conv2d(h2.data.data(), 2, 2, 2, p.c2.w.value.data.data(), 1, 2,
                    p.c2.b.value.data.data(), h3.data.data());
        for (int64_t i = 0; i < h3.size(); ++i) h3[i] += x[i];
        CHECK(max_abs_diff(got, h3) <= 1e-12);
    }
}

TEST_CASE("pb_forward: shapes, pooling equivalence, zero weights") {
    Rng rng(2);
    SUBCASE("shape contract with internal channel doubling") {
        PbParams p;
        p.expand = {Parameter{random_tensor({5, 5, 32, 64}, rng), "w"},
                    Parameter{random_tensor({64}, rng), "b"}};
        p.reduce = {Parameter{random_tensor({5, 5, 64, 32}, rng), "w"},
                    Parameter{random_tensor({32}, rng), "b"}};
        Tensor x = random_tensor({8, 8, 32}, rng);
        Tape t;
        Var h = t.conv2d(t.input(x), t.param(p.expand.w), t.param(p.expand.b));
        CHECK(t.value(h).shape == std::vector<int>{8, 8, 64});
        Tape t2;
        CHECK(t2.value(pb_forward(t2, t2.input(x), p, 2, 2)).shape ==
              std::vector<int>{4, 4, 32});
    }
    SUBCASE("constructed 1x1 weights reduce to plain average pooling") {
        // expand duplicates the channel pair, reduce averages the two copies
        const int C = 2;
        PbParams p;
        p.expand = {Parameter{Tensor({1, 1, C, 2 * C}), "w"}, Parameter{Tensor({2 * C}), "b"}};
        p.reduce = {Parameter{Tensor({1, 1, 2 * C, C}), "w"}, Parameter{Tensor({C}), "b"}};
        for (int c = 0; c < C; ++c) {
            p.expand.w.value.at(0, 0, c, c) = 1.0;
            p.expand.w.value.at(0, 0, c, C + c) = 1.0;
            p.reduce.w.value.at(0, 0, c, c) = 0.5;
            p.reduce.w.value.at(0, 0, C + c, c) = 0.5;
        }
        Tensor x = random_tensor({4, 6, C}, rng);
        Tape t;
        const Tensor& got = t.value(pb_forward(t, t.input(x), p, 2, 2));
        const Tensor& plain = t.value(t.avg_pool(t.input(x), 2, 2));
        CHECK(max_abs_diff(got, plain) <= 1e-12);
    }
    SUBCASE("all-zero weights give all-zero output") {
        PbParams p;
        p.expand = {Parameter{Tensor({3, 3, 4, 8}), "w"}, Parameter{Tensor({8}), "b"}};
        p.reduce = {Parameter{Tensor({3, 3, 8, 4}), "w"}, Parameter{Tensor({4}), "b"}};
        Tensor x = random_tensor({4, 4, 4}, rng);
        Tape t;
        const Tensor& y = t.value(pb_forward(t, t.input(x), p, 2, 2));
        for (int64_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0);
    }
}

TEST_CASE("aaconv_forward: single pixel, uniform weights, nested-loop oracle") {
    Rng rng(3);
    SUBCASE("1x1 spatial input returns V exactly") {
        AttnParams p = random_attn(3, 2, 4, 1, 1, rng);
        Tensor x = random_tensor({1, 1, 3}, rng);
        Tape t;
        Var xin = t.input(x);
        const Tensor& got = t.value(aaconv_forward(t, xin, p));
        const Tensor& v = t.value(t.conv2d(xin, t.param(p.v.w), t.param(p.v.b)));
        CHECK(max_abs_diff(got, v) <= 1e-15);
    }
    SUBCASE("zero queries and encodings give uniform attention = mean of V") {
        AttnParams p = random_attn(3, 2, 4, 3, 4, rng);
        zero(p.q.w);
        zero(p.q.b);
        zero(p.rel_h);
        zero(p.rel_w);
        Tensor x = random_tensor({3, 4, 3}, rng);
        Tape t;
        Var xin = t.input(x);
        const Tensor& got = t.value(aaconv_forward(t, xin, p));
        const Tensor& v = t.value(t.conv2d(xin, t.param(p.v.w), t.param(p.v.b)));
        for (int c = 0; c < 4; ++c) {
            double mean = 0.0;
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 4; ++n) mean += v.at(m, n, c);
            mean /= 12.0;
            for (int h = 0; h < 3; ++h)
                for (int w = 0; w < 4; ++w)
                    CHECK(got.at(h, w, c) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
    SUBCASE("matches the nested-loop formula oracle") {
        for (int trial = 0; trial < 10; ++trial) {
            const int H = 2, W = 3, Nq = 2, Nv = 2, Ci = 2;
            AttnParams p = random_attn(Ci, Nq, Nv, H, W, rng);
            Tensor x = random_tensor({H, W, Ci}, rng);
            Tape t;
            Var xin = t.input(x);
            const Tensor& got = t.value(aaconv_forward(t, xin, p));
            // independent path: reference conv then reference attention
            Tensor q({H, W, Nq}), k({H, W, Nq}), v({H, W, Nv}), want({H, W, Nv});
            ref::conv2d(x.data.data(), H, W, Ci, p.q.w.value.data.data(), 1, Nq,
                        p.q.b.value.data.data(), q.data.data());
            ref::conv2d(x.data.data(), H, W, Ci, p.k.w.value.data.data(), 1, Nq,
                        p.k.b.value.data.data(), k.data.data());
            ref::conv2d(x.data.data(), H, W, Ci, p.v.w.value.data.data(), 1, Nv,
                        p.v.b.value.data.data(), v.data.data());
            ref::attention(q.data.data(), k.data.data(), v.data.data(),
                           p.rel_h.value.data.data(), p.rel_w.value.data.data(), H, W, Nq, Nv,
                           want.data.data());
            CHECK(max_abs_diff(got, want) <= 1e-12);
        }
    }
}

TEST_CASE("attention weight rows sum to one") {
    Rng rng(4);
    const int H = 4, W = 4, Nq = 4, Nv = 4;
    Tensor q = random_tensor({H, W, Nq}, rng);
    Tensor k = random_tensor({H, W, Nq}, rng);
    Tensor v = random_tensor({H, W, Nv}, rng);
    Tensor rh = random_tensor({2 * H - 1, Nq}, rng);
    Tensor rw = random_tensor({2 * W - 1, Nq}, rng);
    Tape t;
    Var att = t.attention(t.input(q), t.input(k), t.input(v), t.input(rh), t.input(rw));
    (void)att;
    // recompute weights through the reference path and check normalization
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Nq));
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            std::vector<double> logits(static_cast<size_t>(H) * W);
            for (int m = 0; m < H; ++m)
                for (int n = 0; n < W; ++n) {
                    double acc = 0.0;
                    for (int c = 0; c < Nq; ++c)
                        acc += q.at(h, w, c) *
                               (k.at(m, n, c) + rh.at(m - h + H - 1, c) + rw.at(n - w + W - 1, c));
                    logits[static_cast<size_t>(m) * W + n] = acc * inv_sqrt;
                }
            const auto wgt = ref::softmax2d(logits.data(), H * W);
            double sum = 0.0;
            for (double x : wgt) sum += x;
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
}

TEST_CASE("attention permutation equivariance with and without encodings") {
    Rng rng(5);
    const int H = 3, W = 3, Nq = 3, Nv = 3;
    Tensor q = random_tensor({H, W, Nq}, rng);
    Tensor k = random_tensor({H, W, Nq}, rng);
    Tensor v = random_tensor({H, W, Nv}, rng);
    Tensor rh_zero({2 * H - 1, Nq});
    Tensor rw_zero({2 * W - 1, Nq});
    // permutation: swap pixels (0,0) and (1,2)
    auto permute = [&](const Tensor& x) {
        Tensor y = x;
        const int C = x.dim(2);
        for (int c = 0; c < C; ++c) {
            std::swap(y.at(0, 0, c), y.at(1, 2, c));
        }
        return y;
    };
    Tape t;
    const Tensor base = t.value(t.attention(t.input(q), t.input(k), t.input(v),
                                            t.input(rh_zero), t.input(rw_zero)));
    const Tensor perm = t.value(t.attention(t.input(permute(q)), t.input(permute(k)),
                                            t.input(permute(v)), t.input(rh_zero),
                                            t.input(rw_zero)));
    CHECK(max_abs_diff(permute(base), perm) <= 1e-10);

    Tensor rh = random_tensor({2 * H - 1, Nq}, rng);
    Tensor rw = random_tensor({2 * W - 1, Nq}, rng);
    const Tensor base_enc =
        t.value(t.attention(t.input(q), t.input(k), t.input(v), t.input(rh), t.input(rw)));
    const Tensor perm_enc =
        t.value(t.attention(t.input(permute(q)), t.input(permute(k)), t.input(permute(v)),
                            t.input(rh), t.input(rw)));
    CHECK(max_abs_diff(permute(base_enc), perm_enc) > 1e-6);
}

TEST_CASE("aarb_forward: skip identity, concat width, composition oracle") {
    Rng rng(6);
    SUBCASE("zero second conv leaves the input unchanged") {
        const int C = 8, Nv = 4;
        AarbParams p;
        p.c1 = {Parameter{random_tensor({3, 3, C, C}, rng), "w"},
                Parameter{random_tensor({C}, rng), "b"}};
        p.attn = random_attn(C, 4, Nv, 4, 4, rng);
        p.c2 = {Parameter{Tensor({3, 3, C + Nv, C}), "w"}, Parameter{Tensor({C}), "b"}};
        Tensor x = random_tensor({4, 4, C}, rng);
        Tape t;
        CHECK(max_abs_diff(t.value(aarb_forward(t, t.input(x), p)), x) == 0.0);
    }
    SUBCASE("internal concat width is C + Nv") {
        const int C = 32, Nv = 4;
        Rng r2(7);
        AarbParams p;
        p.c1 = {Parameter{random_tensor({5, 5, C, C}, r2), "w"},
                Parameter{random_tensor({C}, r2), "b"}};
        p.attn = random_attn(C, 4, Nv, 4, 4, r2);
        p.c2 = {Parameter{random_tensor({5, 5, C + Nv, C}, r2), "w"},
                Parameter{random_tensor({C}, r2), "b"}};
        Tensor x = random_tensor({4, 4, C}, r2);
        Tape t;
        Var conv_branch = t.conv2d(t.input(x), t.param(p.c1.w), t.param(p.c1.b));
        Var attn_branch = aaconv_forward(t, t.input(x), p.attn);
        Var cat = t.concat_channels(conv_branch, attn_branch);
        CHECK(t.value(cat).shape == std::vector<int>{4, 4, 36});
        Tape t2;
        CHECK(t2.value(aarb_forward(t2, t2.input(x), p)).shape == std::vector<int>{4, 4, C});
    }
    SUBCASE("matches manual branch-and-concat composition") {
        const int C = 2, Nq = 2, Nv = 2, H = 2, W = 2;
        AarbParams p;
        p.c1 = {Parameter{random_tensor({1, 1, C, C}, rng), "w"},
                Parameter{random_tensor({C}, rng), "b"}};
        p.attn = random_attn(C, Nq, Nv, H, W, rng);
        p.c2 = {Parameter{random_tensor({1, 1, C + Nv, C}, rng), "w"},
                Parameter{random_tensor({C}, rng), "b"}};
        Tensor x = random_tensor({H, W, C}, rng);
        Tape t;
        const Tensor& got = t.value(aarb_forward(t, t.input(x), p));

        Tensor conv_b({H, W, C}), q({H, W, Nq}), k({H, W, Nq}), v({H, W, Nv}), att({H, W, Nv});
        ref::conv2d(x.data.data(), H, W, C, p.c1.w.value.data.data(), 1, C,
                    p.c1.b.value.data.data(), conv_b.data.data());
        ref::conv2d(x.data.data(), H, W, C, p.attn.q.w.value.data.data(), 1, Nq,
                    p.attn.q.b.value.data.data(), q.data.data());
        ref::conv2d(x.data.data(), H, W, C, p.attn.k.w.value.data.data(), 1, Nq,
                    p.attn.k.b.value.data.data(), k.data.data());
        ref::conv2d(x.data.data(), H, W, C, p.attn.v.w.value.data.data(), 1, Nv,
                    p.attn.v.b.value.data.data(), v.data.data());
        ref::attention(q.data.data(), k.data.data(), v.data.data(), p.attn.rel_h.value.data.data(),
                       p.attn.rel_w.value.data.data(), H, W, Nq, Nv, att.data.data());
        Tensor cat({H, W, C + Nv});
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                for (int c = 0; c < C; ++c) cat.at(h, w, c) = conv_b.at(h, w, c);
                for (int c = 0; c < Nv; ++c) cat.at(h, w, C + c) = att.at(h, w, c);
            }
        for (auto& val : cat.data) val = val >= 0 ? val : 0.01 * val;
        Tensor out({H, W, C});
        ref::conv2d(cat.data.data(), H, W, C + Nv, p.c2.w.value.data.data(), 1, C,
                    p.c2.b.value.data.data(), out.data.data());
        for (int64_t i = 0; i < out.size(); ++i) out[i] += x[i];
        CHECK(max_abs_diff(got, out) <= 1e-12);
    }
}

TEST_CASE("net_forward: deep spatial size and block pattern") {
    SUBCASE("16x16 input with two 2x2 pool stages flattens from 4x4") {
        NetworkConfig cfg = toy_config();
        CHECK(cfg.deep_h() == 4);
        CHECK(cfg.deep_w() == 4);
        PositionModel m = init_position_model(cfg, 1);
        Rng rng(8);
        Tensor csi = random_tensor({16, 16, 2}, rng);
        Tape t;
        const Tensor& out = t.value(net_forward(t, m, t.input(csi)));
        CHECK(out.shape == std::vector<int>{2});
    }
    SUBCASE("z=1 makes every deep block attention-augmented") {
        NetworkConfig cfg = toy_config();
        cfg.deep_blocks = 7;
        cfg.aarb_period = 1;
        for (int m = 1; m <= 7; ++m) CHECK(cfg.block_is_attention(m));
        PositionModel model = init_position_model(cfg, 1);
        for (const auto& block : model.deep)
            CHECK(std::holds_alternative<AarbParams>(block));
    }
    SUBCASE("z=3, M=7 puts attention at blocks 1, 4, 7") {
        NetworkConfig cfg = toy_config();
        cfg.deep_blocks = 7;
        cfg.aarb_period = 3;
        std::vector<int> attn_blocks;
        for (int m = 1; m <= 7; ++m)
            if (cfg.block_is_attention(m)) attn_blocks.push_back(m);
        CHECK(attn_blocks == std::vector<int>{1, 4, 7});
    }
    SUBCASE("mismatched input shape rejected") {
        NetworkConfig cfg = toy_config();
        PositionModel m = init_position_model(cfg, 1);
        Rng rng(9);
        Tensor bad = random_tensor({8, 16, 2}, rng);
        Tape t;
        CHECK_THROWS_AS(net_forward(t, m, t.input(bad)), std::invalid_argument);
    }
}

TEST_CASE("normalize_csi bounds inputs by one") {
    Rng rng(10);
    Tensor csi = random_tensor({4, 4, 2}, rng, -7.0, 7.0);
    const Tensor out = normalize_csi(csi);
    CHECK(out.max_abs() == doctest::Approx(1.0));
    Tensor zeros({4, 4, 2});
    const Tensor z = normalize_csi(zeros);
    CHECK(z.max_abs() == 0.0);
}

TEST_CASE("full toy network gradient check (reduced size)") {
    NetworkConfig cfg;
    cfg.input_h = 8;
    cfg.input_w = 8;
    cfg.channels = 4;
    cfg.kernel = 3;
    cfg.stages = 1;
    cfg.deep_blocks = 2;
    cfg.fcn1 = 8;
    cfg.fcn2 = 4;
    PositionModel model = init_position_model(cfg, 3);
    Rng rng(11);
    Tensor csi = random_tensor({8, 8, 2}, rng);
    Tensor target = Tensor::from({2}, {0.4, 0.9});
    auto loss_fn = [&]() {
        Tape t;
        Var pred = net_forward(t, model, t.input(csi));
        return t.value(t.sum_sq(t.sub(pred, t.input(target))))[0];
    };
    Tape t;
    Var pred = net_forward(t, model, t.input(csi));
    t.backward(t.sum_sq(t.sub(pred, t.input(target))));
    auto params = model.all_params();
    std::vector<Tensor> analytic;
    for (const Parameter* p : params) analytic.push_back(t.grad_of(*p));
    CHECK(grad_check(params, analytic, loss_fn, 1e-5, 8, 12) <= 1e-4);
}

TEST_CASE("flops_estimate matches the closed formulas") {
    SUBCASE("pooling") {
        const OpCost c = flops_estimate(OpKind::kAveP, 4, 4, 32, 0, 0, 0);
        CHECK(c.params == 0);
        CHECK(c.flops == 512);
    }
    SUBCASE("convolution") {
        const OpCost c = flops_estimate(OpKind::kConv, 4, 4, 32, 5, 0, 0);
        CHECK(c.params == 25600);
        CHECK(c.flops == 819200);
    }
    SUBCASE("attention") {
        const OpCost c = flops_estimate(OpKind::kAAConv, 4, 4, 32, 0, 4, 4);
        CHECK(c.params == 400);
        CHECK(c.flops == 20480);
    }
    SUBCASE("unknown kind rejected") {
        CHECK_THROWS_AS(parse_op_kind("maxpool"), std::invalid_argument);
        CHECK(parse_op_kind("avep") == OpKind::kAveP);
        CHECK(parse_op_kind("conv") == OpKind::kConv);
        CHECK(parse_op_kind("aaconv") == OpKind::kAAConv);
    }
    SUBCASE("cost table covers the configured blocks") {
        const auto rows = network_cost_table(toy_config());
        CHECK(rows.size() > 8);
        int64_t total = 0;
        for (const auto& r : rows) total += r.cost.flops;
        CHECK(total > 0);
    }
}

TEST_CASE("training fits a constant-location dataset") {
    NetworkConfig cfg;
    cfg.input_h = 8;
    cfg.input_w = 8;
    cfg.channels = 4;
    cfg.kernel = 3;
    cfg.stages = 1;
    cfg.deep_blocks = 1;
    cfg.fcn1 = 8;
    cfg.fcn2 = 4;
    ChannelConfig ch;
    ch.num_antennas = 8;
    ch.num_subcarriers = 8;
    ch.num_paths = 3;
    ch.subcarrier_freqs = default_subcarriers(8, 0.125, 2.0e7);
    const Environment env = build_environment(ch, Rect{0, 0, 1.25, 1.25}, 5);
    const Vec2 target{0.6, 0.7};
    std::vector<CsiSample> train;
    Rng rng(13);
    for (int i = 0; i < 16; ++i) {
        const Vec2 loc{rng.uniform(0.0, 1.25), rng.uniform(0.0, 1.25)};
        train.push_back({csi_at(env, loc), target});  // every label is the same point
    }
    TrainHyper hyper;
    hyper.epochs = 600;
    hyper.batch_size = 16;
    hyper.lr = 1e-2;
    hyper.seed = 2;
    const PositionModel model = train_position_net(cfg, train, train, hyper);
    for (int i = 0; i < 4; ++i) {
        const Vec2 pred = predict(model, train[static_cast<size_t>(i)].csi);
        CHECK(norm(pred - target) <= 1e-3);
    }
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run bit for bit") {
    NetworkConfig cfg;
    cfg.input_h = 8;
    cfg.input_w = 8;
    cfg.channels = 2;
    cfg.kernel = 3;
    cfg.stages = 1;
    cfg.deep_blocks = 1;
    cfg.fcn1 = 4;
    cfg.fcn2 = 4;
    ChannelConfig ch;
    ch.num_antennas = 8;
    ch.num_subcarriers = 8;
    ch.num_paths = 2;
    ch.subcarrier_freqs = default_subcarriers(8, 0.125, 2.0e7);
    const Environment env = build_environment(ch, Rect{0, 0, 1.25, 1.25}, 6);
    const auto data = sample_dataset(env, 24, 3);
    const std::vector<CsiSample> train(data.begin(), data.begin() + 20);
    const std::vector<CsiSample> val(data.begin() + 20, data.end());
    TrainHyper hyper;
    hyper.epochs = 6;
    hyper.batch_size = 8;
    hyper.seed = 4;

    TrainState straight = init_train_state(cfg, hyper);
    train_epochs(straight, train, val, hyper, 6);

    TrainState split = init_train_state(cfg, hyper);
    train_epochs(split, train, val, hyper, 3);
    // mimic save/restore via a value copy, then continue
    TrainState resumed = split;
    train_epochs(resumed, train, val, hyper, 6);

    const auto a = straight.model.all_params();
    const auto b = resumed.model.all_params();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value.data == b[i]->value.data);
    CHECK(straight.best_val == resumed.best_val);
}
