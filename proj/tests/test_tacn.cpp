#include "gradcheck_util.hpp"
#include "tsn/errors.hpp"
#include "tsn/fingerca.hpp"
#include "tsn/ops.hpp"
#include "tsn/tacn.hpp"

#include <doctest.h>

#include <random>

using namespace tsn;

namespace {

tacn::TacnConfig tiny_tacn() {
    tacn::TacnConfig cfg;
    cfg.num_inputs = 8;
    cfg.num_channels = {8, 12};
    cfg.kernel = 4;
    cfg.dropout = 0.0f;
    cfg.heads = 2;
    return cfg;
}

} // namespace

TEST_CASE("zero conv weights make the residual block an identity") {
    std::mt19937 rng(81);
    tacn::TacnConfig cfg = tiny_tacn();
    ParamSet p;
    tacn::init_params(p, "tcn", cfg, rng);
    // Zero the first block's kernels and biases (channels match: 8 -> 8).
    for (const char* name : {"tcn.block0.conv1.v", "tcn.block0.conv1.b",
                             "tcn.block0.conv2.v", "tcn.block0.conv2.b"}) {
        Tensor& t = p.at(name);
        std::fill(t.data().begin(), t.data().end(), 0.0f);
    }
    Tensor x = Tensor::uniform({8, 10}, 1.0f, rng);
    nn::RunCtx ctx;
    Tensor out = tacn::residual_block(x, p, "tcn.block0", 1, ctx);
    CHECK(out.data() == x.data());
}

TEST_CASE("hand-traced single-channel residual block, k=2, d=1") {
    // y = relu(W2 * relu(W1 * x + b1) + b2) + x with scalar taps.
    ParamSet p;
    p.add("b.conv1.v", Tensor({1, 1, 2}, {1.0f, 1.0f})); // taps (lag0, lag1)
    p.add("b.conv1.g", Tensor({1}, {std::sqrt(2.0f)}));  // ||v|| = sqrt(2)
    p.add("b.conv1.b", Tensor({1}, {0.0f}));
    p.add("b.conv2.v", Tensor({1, 1, 2}, {2.0f, 0.0f})); // lag-0 tap only
    p.add("b.conv2.g", Tensor({1}, {2.0f}));             // w2 = (2, 0)
    p.add("b.conv2.b", Tensor({1}, {-1.0f}));

    Tensor x({1, 4}, {1, 2, 3, 4});
    nn::RunCtx ctx;
    Tensor out = tacn::residual_block(x, p, "b", 1, ctx);
    // conv1 (weight-normed to taps (1,1)): h = [1,3,5,7]; relu keeps it.
    // conv2 (taps (0,2)): 2h = [2,6,10,14]; +b2 = [1,5,9,13]; relu same.
    // residual: [1+1, 5+2, 9+3, 13+4].
    const std::vector<float> want{2, 7, 12, 17};
    for (int i = 0; i < 4; ++i)
        CHECK(out.data()[i] == doctest::Approx(want[i]).epsilon(1e-5));
}

TEST_CASE("tacn forward: shapes and dilation schedule") {
    std::mt19937 rng(82);
    tacn::TacnConfig cfg = tiny_tacn();
    ParamSet p;
    tacn::init_params(p, "tcn", cfg, rng);
    Tensor x = Tensor::uniform({32, 8}, 1.0f, rng);
    nn::RunCtx ctx;
    Tensor out = tacn::forward(x, p, "tcn", cfg, ctx);
    CHECK(out.shape() == Shape{32, 12});

    Tensor bad = Tensor::uniform({32, 5}, 1.0f, rng);
    CHECK_THROWS(tacn::forward(bad, p, "tcn", cfg, ctx));
}

TEST_CASE("convolutional stage is causal; attention fusion is not") {
    std::mt19937 rng(83);
    tacn::TacnConfig cfg = tiny_tacn();
    ParamSet p;
    tacn::init_params(p, "tcn", cfg, rng);
    nn::RunCtx ctx;

    std::uniform_real_distribution<float> d(-1, 1);
    std::vector<float> base(20 * 8);
    for (auto& v : base) v = d(rng);

    tacn::TacnConfig conv_only = cfg;
    conv_only.attention = false;
    const std::size_t t0 = 12;
    auto ref = tacn::forward(Tensor({20, 8}, base), p, "tcn", conv_only, ctx).data();
    auto pert = base;
    for (int c = 0; c < 8; ++c) pert[t0 * 8 + c] += 5.0f;
    auto out = tacn::forward(Tensor({20, 8}, pert), p, "tcn", conv_only, ctx).data();
    for (std::size_t t = 0; t < t0; ++t)
        for (int c = 0; c < 12; ++c)
            CHECK(out[t * 12 + c] == ref[t * 12 + c]); // exact

    // With attention on, earlier outputs change (bidirectional by design).
    auto ref_a = tacn::forward(Tensor({20, 8}, base), p, "tcn", cfg, ctx).data();
    auto out_a = tacn::forward(Tensor({20, 8}, pert), p, "tcn", cfg, ctx).data();
    bool early_changed = false;
    for (std::size_t t = 0; t < t0 && !early_changed; ++t)
        for (int c = 0; c < 12; ++c)
            if (out_a[t * 12 + c] != ref_a[t * 12 + c]) early_changed = true;
    CHECK(early_changed);
}

TEST_CASE("receptive field of two k=4 blocks is exactly 19") {
    std::mt19937 rng(84);
    tacn::TacnConfig cfg;
    cfg.num_inputs = 1;
    cfg.num_channels = {1, 1};
    cfg.kernel = 4;
    cfg.dropout = 0.0f;
    cfg.attention = false;
    ParamSet p;
    tacn::init_params(p, "tcn", cfg, rng);
    // Make every tap contribute: positive kernels, zero bias, so the
    // pre-activation stays positive and relu never gates a path.
    for (auto& [name, t] : p.items()) {
        for (auto& v : t.data()) v = name.find(".v") != std::string::npos ||
                                     name.find(".g") != std::string::npos
                                         ? 0.3f
                                         : 0.0f;
    }
    nn::RunCtx ctx;

    const std::size_t L = 40, last = L - 1;
    std::vector<float> base(L, 1.0f);
    auto ref = tacn::forward(Tensor({L, 1}, base), p, "tcn", cfg, ctx).data();
    auto probe = [&](std::size_t lag) {
        auto pert = base;
        pert[last - lag] += 1.0f;
        auto out = tacn::forward(Tensor({L, 1}, pert), p, "tcn", cfg, ctx).data();
        return out[last] != ref[last];
    };
    // Receptive field 1 + 2*(k-1)*1 + 2*(k-1)*2 = 19: lags 0..18 reach the
    // last output, lag 19 (20 steps back) does not.
    CHECK(probe(0));
    CHECK(probe(18));
    CHECK_FALSE(probe(19));
    CHECK_FALSE(probe(25));
}

TEST_CASE("mha fusion: uniform attention reduces to the temporal mean") {
    std::mt19937 rng(85);
    const std::size_t C = 4, L = 6;
    ParamSet p;
    nn::init_mha(p, "fusion", C, 1, rng);
    // Zero Q/K makes all logits 0 -> uniform attention; V/O as identity.
    std::vector<float> eye(C * C, 0.0f);
    for (std::size_t i = 0; i < C; ++i) eye[i * C + i] = 1.0f;
    p.set("fusion.h0.wq", Tensor({C, C}, std::vector<float>(C * C, 0.0f)));
    p.set("fusion.h0.wk", Tensor({C, C}, std::vector<float>(C * C, 0.0f)));
    p.set("fusion.h0.wv", Tensor({C, C}, eye));
    p.set("fusion.wo", Tensor({C, C}, eye));
    p.set("fusion.bo", Tensor({C}, std::vector<float>(C, 0.0f)));

    Tensor h = Tensor::uniform({L, C}, 1.0f, rng);
    Tensor fused = tacn::mha_fusion(h, p, "fusion", 1);
    Tensor mean = ops::mean_axis(h, 0);
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t c = 0; c < C; ++c)
            CHECK(fused.data()[t * C + c] ==
                  doctest::Approx(h.data()[t * C + c] + mean.data()[c])
                      .epsilon(1e-5));

    ParamSet bad;
    nn::init_mha(bad, "f", 6, 3, rng);
    Tensor odd = Tensor::uniform({4, 6}, 1.0f, rng);
    CHECK_THROWS_AS(tacn::mha_fusion(odd, bad, "f", 4), ConfigError);
}

TEST_CASE("tacn gradients agree with finite differences on a toy") {
    std::mt19937 rng(86);
    tacn::TacnConfig cfg;
    cfg.num_inputs = 3;
    cfg.num_channels = {3, 4};
    cfg.kernel = 2;
    cfg.dropout = 0.0f;
    cfg.heads = 2;
    cfg.attention = false;
    ParamSet p;
    tacn::init_params(p, "tcn", cfg, rng);
    // Push biases away from zero so no relu pre-activation sits on the kink
    // (finite differences are meaningless across it).
    for (auto& [name, t] : p.items())
        if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0)
            for (std::size_t i = 0; i < t.size(); ++i)
                t.data()[i] = 0.35f + 0.1f * static_cast<float>(i);
    Tensor x = Tensor::uniform({6, 3}, 1.0f, rng, true);

    std::vector<Tensor> leaves{x};
    for (auto& [name, t] : p.items()) leaves.push_back(t);
    nn::RunCtx ctx;
    auto r = gradcheck::check(leaves, [&] {
        return ops::mean(ops::mul(tacn::forward(x, p, "tcn", cfg, ctx),
                                  tacn::forward(x, p, "tcn", cfg, ctx)));
    });
    CHECK_MESSAGE(r.max_rel_err < 2e-3, r.worst);
}

TEST_CASE("fingerca: descriptor, gating, equivariance") {
    Tensor x({2, 2}, {1, 3, 2, 4});
    CHECK(fingerca::channel_descriptor(x).data() == std::vector<float>{1.5f, 3.5f});
    CHECK(fingerca::channel_descriptor(ops::scale(x, 2.0f)).data() ==
          std::vector<float>{3.0f, 7.0f});
    Tensor constant({3, 2}, {7, -1, 7, -1, 7, -1});
    CHECK(fingerca::channel_descriptor(constant).data() ==
          std::vector<float>{7.0f, -1.0f});

    std::mt19937 rng(87);
    fingerca::FingerCAConfig cfg;
    cfg.channels = 4;
    cfg.reduction = 2;
    ParamSet p;
    fingerca::init_params(p, "ca", cfg, rng);

    Tensor feats = Tensor::uniform({5, 4}, 1.0f, rng);
    Tensor alpha = fingerca::gate(feats, p, "ca");
    for (float v : alpha.data()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    Tensor out = fingerca::recalibrate(feats, p, "ca");
    // alpha is time-independent: ratio out/x is constant down each column.
    for (std::size_t c = 0; c < 4; ++c) {
        const float ratio = out.data()[c] / feats.data()[c];
        CHECK(ratio == doctest::Approx(alpha.data()[c]).epsilon(1e-5));
        for (std::size_t t = 1; t < 5; ++t)
            CHECK(out.data()[t * 4 + c] / feats.data()[t * 4 + c] ==
                  doctest::Approx(ratio).epsilon(1e-4));
    }

    // Forcing the gate toward 1 makes recalibration the identity (approx).
    ParamSet idp;
    fingerca::init_params(idp, "ca", cfg, rng);
    for (auto& [name, t] : idp.items())
        for (auto& v : t.data()) v = 0.0f;
    idp.at("ca.b2").data().assign(4, 30.0f); // sigmoid(30) ~ 1
    Tensor near_id = fingerca::recalibrate(feats, idp, "ca");
    for (std::size_t i = 0; i < feats.size(); ++i)
        CHECK(near_id.data()[i] == doctest::Approx(feats.data()[i]).epsilon(1e-5));
}

TEST_CASE("fingerca full path passes a finite-difference check") {
    std::mt19937 rng(88);
    fingerca::FingerCAConfig cfg;
    cfg.channels = 4;
    cfg.reduction = 2;
    ParamSet p;
    fingerca::init_params(p, "ca", cfg, rng);
    Tensor x = Tensor::uniform({4, 4}, 1.0f, rng, true);
    std::vector<Tensor> leaves{x};
    for (auto& [name, t] : p.items()) leaves.push_back(t);
    auto r = gradcheck::check(leaves, [&] {
        return ops::mean(fingerca::recalibrate(x, p, "ca"));
    });
    CHECK_MESSAGE(r.max_rel_err < 1e-3, r.worst);
}
