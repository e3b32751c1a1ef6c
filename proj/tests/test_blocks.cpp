#include "tsn/blocks.hpp"
#include "tsn/ops.hpp"

#include <doctest.h>

#include <random>

using namespace tsn;

TEST_CASE("mha attention rows sum to 1 and output keeps the query shape") {
    std::mt19937 rng(31);
    const std::size_t m = 8, heads = 2;
    ParamSet p;
    nn::init_mha(p, "attn", m, heads, rng);

    Tensor q = Tensor::uniform({5, m}, 1.0f, rng);
    Tensor kv = Tensor::uniform({3, m}, 1.0f, rng);
    std::vector<Tensor> attn;
    Tensor out = nn::mha(q, kv, p, "attn", heads, &attn);
    CHECK(out.shape() == Shape{5, m});
    CHECK(attn.size() == heads);
    for (const Tensor& a : attn) {
        CHECK(a.shape() == Shape{5, 3});
        for (int r = 0; r < 5; ++r) {
            double sum = 0;
            for (int c = 0; c < 3; ++c) sum += a.data()[r * 3 + c];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("single key gives attention weight exactly 1") {
    std::mt19937 rng(32);
    ParamSet p;
    nn::init_mha(p, "attn", 4, 1, rng);
    Tensor q = Tensor::uniform({3, 4}, 1.0f, rng);
    Tensor kv = Tensor::uniform({1, 4}, 1.0f, rng);
    std::vector<Tensor> attn;
    nn::mha(q, kv, p, "attn", 1, &attn);
    for (float v : attn[0].data()) CHECK(v == 1.0f);
}

TEST_CASE("encoder stack: shape, determinism in eval, dropout stochastic in train") {
    std::mt19937 rng(33);
    const std::size_t m = 8, heads = 2, layers = 2;
    ParamSet p;
    nn::init_encoder(p, "enc", layers, m, heads, 16, rng);
    Tensor x = Tensor::uniform({4, m}, 1.0f, rng);

    nn::RunCtx eval_ctx; // train=false
    Tensor a = nn::encoder_stack(x, p, "enc", layers, heads, eval_ctx);
    Tensor b = nn::encoder_stack(x, p, "enc", layers, heads, eval_ctx);
    CHECK(a.shape() == Shape{4, m});
    CHECK(a.data() == b.data());

    std::mt19937 drop_rng(1);
    nn::RunCtx train_ctx{true, 0.5f, &drop_rng};
    Tensor c = nn::encoder_stack(x, p, "enc", layers, heads, train_ctx);
    CHECK(c.data() != a.data());
}

TEST_CASE("encoder is permutation-equivariant when positions move with rows") {
    // Self-attention plus rowwise layers has no positional bias of its own,
    // so permuting input rows permutes output rows identically.
    std::mt19937 rng(34);
    const std::size_t m = 8, heads = 2, layers = 2;
    ParamSet p;
    nn::init_encoder(p, "enc", layers, m, heads, 16, rng);
    Tensor x = Tensor::uniform({3, m}, 1.0f, rng);
    nn::RunCtx ctx;

    Tensor out = nn::encoder_stack(x, p, "enc", layers, heads, ctx);
    const std::vector<std::size_t> perm{2, 0, 1};
    Tensor xp = ops::gather_rows(x, perm);
    Tensor outp = nn::encoder_stack(xp, p, "enc", layers, heads, ctx);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < m; ++c)
            CHECK(outp.data()[r * m + c] ==
                  doctest::Approx(out.data()[perm[r] * m + c]).epsilon(1e-5));
}

TEST_CASE("cross stack refines queries against a fixed context") {
    std::mt19937 rng(35);
    const std::size_t m = 8, heads = 2, layers = 2;
    ParamSet p;
    nn::init_cross_stack(p, "reg", layers, m, heads, 16, rng);
    Tensor queries = Tensor::uniform({2, m}, 1.0f, rng);
    Tensor context = Tensor::uniform({5, m}, 1.0f, rng);
    nn::RunCtx ctx;
    Tensor out = nn::cross_stack(queries, context, p, "reg", layers, heads, ctx);
    CHECK(out.shape() == Shape{2, m});

    Tensor empty_ctx;
    CHECK_THROWS(nn::cross_stack(queries, Tensor({0, m}, {}), p, "reg", layers,
                                 heads, ctx));
}
