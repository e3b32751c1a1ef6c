#include "tsn/ops.hpp"
#include "tsn/tokenizer.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tsn;
using namespace tsn::tokenizer;

TEST_CASE("window projection shapes: d = T_pad / sigma") {
    std::mt19937 rng(41);
    WindowConfig cfg; // sigma 8, m 64, C 5, K 192
    ParamSet p;
    init_params(p, "tok", cfg, rng);
    CHECK(p.at("tok.win_proj.w").shape() == Shape{cfg.sigma * cfg.channels, cfg.embed_dim});
    CHECK(p.at("tok.codebook.w").shape() == Shape{cfg.embed_dim, cfg.vocab});

    Tensor x = Tensor::uniform({24, cfg.channels}, 1.0f, rng);
    CHECK(window_project(x, cfg, p, "tok").shape() == Shape{3, cfg.embed_dim});
    Tensor x2 = Tensor::uniform({48, cfg.channels}, 1.0f, rng);
    CHECK(window_project(x2, cfg, p, "tok").dim(0) == 6); // doubling T doubles d

    Tensor bad = Tensor::uniform({10, cfg.channels}, 1.0f, rng);
    CHECK_THROWS(window_project(bad, cfg, p, "tok"));
}

TEST_CASE("sigma=1 identity projection reproduces the input") {
    WindowConfig cfg;
    cfg.sigma = 1;
    cfg.channels = 4;
    cfg.embed_dim = 4;
    cfg.vocab = 4;
    ParamSet p;
    std::mt19937 rng(42);
    init_params(p, "tok", cfg, rng);
    // Overwrite with identity weights and zero bias.
    std::vector<float> eye(16, 0.0f);
    for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
    p.set("tok.win_proj.w", Tensor({4, 4}, eye));
    p.set("tok.win_proj.b", Tensor({4}, {0, 0, 0, 0}));

    Tensor x = Tensor::uniform({6, 4}, 1.0f, rng);
    Tensor z = window_project(x, cfg, p, "tok");
    CHECK(z.data() == x.data());
}

TEST_CASE("token logits: identity codebook and row-sum contract") {
    WindowConfig cfg;
    cfg.embed_dim = 3;
    cfg.vocab = 3;
    ParamSet p;
    std::mt19937 rng(43);
    init_params(p, "tok", cfg, rng);
    std::vector<float> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
    p.set("tok.codebook.w", Tensor({3, 3}, eye));
    p.set("tok.codebook.b", Tensor({3}, {0, 0, 0}));

    Tensor z({2, 3}, {5, 0, 0, 0, 0, 5}); // one-hot-ish rows
    auto probs = token_logits(z, p, "tok");
    auto ids = hard_tokens(probs);
    CHECK(ids == std::vector<std::size_t>{0, 2});
    for (int r = 0; r < 2; ++r) {
        double sum = 0;
        for (int c = 0; c < 3; ++c) sum += probs.data()[r * 3 + c];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }

    // Brute-force softmax oracle on a random case.
    Tensor zr = Tensor::uniform({4, 3}, 2.0f, rng);
    auto logits = codebook_logits(zr, p, "tok");
    auto soft = token_logits(zr, p, "tok");
    for (int r = 0; r < 4; ++r) {
        double denom = 0;
        for (int c = 0; c < 3; ++c) denom += std::exp(logits.data()[r * 3 + c]);
        for (int c = 0; c < 3; ++c)
            CHECK(soft.data()[r * 3 + c] ==
                  doctest::Approx(std::exp(logits.data()[r * 3 + c]) / denom)
                      .epsilon(1e-5));
    }
}

TEST_CASE("hard_tokens: argmax with lowest-index tie break") {
    CHECK(hard_tokens(Tensor({1, 3}, {0.1f, 0.9f, 0.0f})) ==
          std::vector<std::size_t>{1});
    CHECK(hard_tokens(Tensor({1, 2}, {0.5f, 0.5f})) == std::vector<std::size_t>{0});

    std::mt19937 rng(44);
    Tensor r = Tensor::uniform({10, 7}, 3.0f, rng);
    auto ids = hard_tokens(r);
    for (int row = 0; row < 10; ++row) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 7; ++c)
            if (r.data()[row * 7 + c] > r.data()[row * 7 + best]) best = c;
        CHECK(ids[row] == best);
    }

    // Scaling logits by a positive factor never changes the argmax.
    Tensor scaled = ops::scale(r, 3.7f);
    CHECK(hard_tokens(scaled) == ids);
}

TEST_CASE("gumbel softmax: formula reductions and straight-through") {
    std::mt19937 rng(45);
    Tensor logits = Tensor::uniform({3, 5}, 2.0f, rng, true);

    CHECK_THROWS(gumbel_softmax_sample(logits, 0.0f, rng, false));
    CHECK_THROWS(gumbel_softmax_sample(logits, -1.0f, rng, false));

    // Noise disabled: equals softmax(logits / tau).
    Tensor soft = gumbel_softmax_sample(logits, 2.0f, rng, false, 0.0f);
    Tensor want = ops::softmax(ops::scale(logits, 0.5f), 1);
    for (std::size_t i = 0; i < soft.size(); ++i)
        CHECK(soft.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-5));

    // Noise disabled, tiny tau: one-hot at argmax(logits).
    Tensor frozen = gumbel_softmax_sample(logits, 0.01f, rng, true, 0.0f);
    auto ids = hard_tokens(logits.detach());
    for (int r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(frozen.data()[r * 5 + c] == (c == ids[r] ? 1.0f : 0.0f));

    // Hard samples always have exactly one 1 per row; soft rows sum to 1.
    for (int trial = 0; trial < 20; ++trial) {
        Tensor hard = gumbel_softmax_sample(logits, 1.0f, rng, true);
        for (int r = 0; r < 3; ++r) {
            int ones = 0;
            double sum = 0;
            for (int c = 0; c < 5; ++c) {
                const float v = hard.data()[r * 5 + c];
                CHECK((v == 0.0f || v == 1.0f));
                ones += v == 1.0f;
                sum += v;
            }
            CHECK(ones == 1);
            CHECK(sum == doctest::Approx(1.0));
        }
        Tensor softs = gumbel_softmax_sample(logits, 1.0f, rng, false);
        for (int r = 0; r < 3; ++r) {
            double sum = 0;
            for (int c = 0; c < 5; ++c) sum += softs.data()[r * 5 + c];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }

    // Straight-through: gradients flow to the logits despite one-hot forward.
    logits.zero_grad();
    Tensor hard = gumbel_softmax_sample(logits, 1.0f, rng, true, 0.0f);
    backward(ops::mean(ops::mul(hard, hard)));
    bool any = false;
    for (float gv : logits.grad()) any |= gv != 0.0f;
    CHECK(any);
}
