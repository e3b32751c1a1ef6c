#include "tsn/dataio.hpp"
#include "tsn/errors.hpp"
#include "tsn/ops.hpp"
#include "tsn/synthgen.hpp"
#include "tsn/tmae.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace tsn;
using namespace tsn::tmae;

namespace {

TmaeConfig tiny_config() {
    TmaeConfig cfg;
    cfg.win.sigma = 4;
    cfg.win.embed_dim = 8;
    cfg.win.vocab = 16;
    cfg.enc_layers = 2;
    cfg.heads = 2;
    cfg.reg_layers = 2;
    cfg.ff_hidden = 16;
    cfg.dropout = 0.1f;
    cfg.batch = 4;
    cfg.epochs = 2;
    return cfg;
}

dataio::ProcessedSample tiny_sample(std::uint64_t seed, std::size_t T = 40) {
    auto profile = synthgen::gen_user(seed, 0, 4, 1.0f);
    return dataio::preprocess(synthgen::gen_sample(profile, T, 0), 4);
}

} // namespace

TEST_CASE("positional encoding values and range") {
    Tensor pe = positional_encoding(5, 8);
    CHECK(pe.shape() == Shape{5, 8});
    // pos=0 row alternates 0, 1 (sin 0 / cos 0).
    for (int i = 0; i < 8; ++i)
        CHECK(pe.data()[i] == (i % 2 ? 1.0f : 0.0f));
    CHECK(pe.data()[8] == doctest::Approx(std::sin(1.0)).epsilon(1e-5));
    for (float v : pe.data()) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("mask split: rounding rule, guards, partition") {
    std::mt19937 rng(71);
    std::vector<bool> all_valid(10, true);

    auto split = split_visible_masked(10, all_valid, 0.4f, rng);
    CHECK(split.m_index.size() == 4);
    CHECK(split.v_index.size() == 6);

    auto tiny = split_visible_masked(10, all_valid, 0.01f, rng);
    CHECK(tiny.m_index.size() == 1); // floor guard

    auto huge = split_visible_masked(10, all_valid, 0.99f, rng);
    CHECK(huge.v_index.size() >= 1); // at least one window stays visible

    CHECK_THROWS(split_visible_masked(10, all_valid, 0.0f, rng));
    CHECK_THROWS(split_visible_masked(10, all_valid, 1.0f, rng));
    std::vector<bool> one_valid{true, false, false};
    CHECK_THROWS_AS(split_visible_masked(3, one_valid, 0.4f, rng), DataError);

    // Partition property over many random splits.
    for (int trial = 0; trial < 200; ++trial) {
        auto s = split_visible_masked(10, all_valid, 0.37f, rng);
        std::set<std::size_t> seen(s.v_index.begin(), s.v_index.end());
        for (auto i : s.m_index) CHECK(seen.insert(i).second); // disjoint
        CHECK(seen.size() == 10);
        CHECK(s.v_index.size() + s.m_index.size() == 10);
    }
}

TEST_CASE("masked indices avoid padding windows") {
    std::mt19937 rng(72);
    std::vector<bool> valid{true, false, true, true, false, true};
    for (int trial = 0; trial < 100; ++trial) {
        auto s = split_visible_masked(6, valid, 0.5f, rng);
        for (auto i : s.m_index) CHECK(valid[i]);
    }
}

TEST_CASE("EMA update: exact values and drift bound") {
    std::mt19937 rng(73);
    ParamSet theta_m, theta_e;
    theta_m.add("enc.w", Tensor::full({3}, 1.0f));
    theta_e.add("enc.w", Tensor::full({3}, 0.0f));

    momentum_update(theta_m, theta_e, 0.99f);
    for (float v : theta_m.at("enc.w").data()) CHECK(v == doctest::Approx(0.99f));
    momentum_update(theta_m, theta_e, 0.99f);
    for (float v : theta_m.at("enc.w").data())
        CHECK(v == doctest::Approx(0.9801f).epsilon(1e-6));

    ParamSet frozen;
    frozen.add("enc.w", Tensor::full({3}, 1.0f));
    momentum_update(frozen, theta_e, 1.0f);
    for (float v : frozen.at("enc.w").data()) CHECK(v == 1.0f);

    // ||theta_m - theta_e|| after n steps = mu^n * initial, per element.
    for (float mu : {0.9f, 0.99f, 1.0f}) {
        ParamSet m2, e2;
        m2.add("w", Tensor({2}, {2.0f, -1.0f}));
        e2.add("w", Tensor({2}, {0.5f, 0.5f}));
        const std::vector<float> init{1.5f, -1.5f};
        for (int n = 1; n <= 20; ++n) {
            momentum_update(m2, e2, mu);
            for (int i = 0; i < 2; ++i) {
                const double want = std::pow(mu, n) * init[i];
                const double got = m2.at("w").data()[i] - e2.at("w").data()[i];
                CHECK(got == doctest::Approx(want).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("momentum path records no gradients") {
    TmaeModel model = TmaeModel::init(tiny_config(), 7);
    auto sample = tiny_sample(3);
    std::mt19937 rng(74);

    model.params.zero_grads();
    auto loss = sample_loss(model, sample, rng, true);
    backward(loss.total);

    for (const auto& [name, t] : model.momentum.items()) {
        CHECK_FALSE(t.has_grad());
        CHECK_FALSE(t.requires_grad());
    }
    // The primary encoder and mask token do receive gradients.
    CHECK(model.params.at("mask_token").has_grad());
    bool enc_grad = false;
    for (const auto& [name, t] : model.params.items())
        if (name.rfind("encoder.", 0) == 0 && t.has_grad()) enc_grad = true;
    CHECK(enc_grad);
}

TEST_CASE("momentum encoder equals eval-mode primary encoder at init") {
    // Init clones encoder weights, so before any update the two encoders
    // agree on the same input.
    TmaeModel model = TmaeModel::init(tiny_config(), 8);
    std::mt19937 rng(75);
    Tensor z = Tensor::uniform({5, 8}, 1.0f, rng);

    Tensor from_momentum = momentum_encode(model, z);
    nn::RunCtx eval_ctx;
    Tensor from_primary = encode_visible(model, z, eval_ctx);
    REQUIRE(from_momentum.size() == from_primary.size());
    for (std::size_t i = 0; i < from_momentum.size(); ++i)
        CHECK(from_momentum.data()[i] ==
              doctest::Approx(from_primary.data()[i]).epsilon(1e-6));

    // Deterministic across calls (no dropout).
    Tensor again = momentum_encode(model, z);
    CHECK(again.data() == from_momentum.data());
}

TEST_CASE("predict_codewords matches the tied codebook head") {
    TmaeModel model = TmaeModel::init(tiny_config(), 9);
    std::mt19937 rng(76);
    Tensor r_hat = Tensor::uniform({3, 8}, 1.0f, rng);
    Tensor a = predict_codewords(model, r_hat);
    Tensor b = tokenizer::codebook_logits(r_hat, model.params, "tokenizer");
    CHECK(a.shape() == Shape{3, 16});
    CHECK(a.data() == b.data());
}

TEST_CASE("loss structure: alignment example and weighting") {
    Tensor r_m({1, 2}, {1, 0});
    Tensor r_hat({1, 2}, {0, 0});
    CHECK(ops::mse(r_m, r_hat).item() == doctest::Approx(0.5f));
    CHECK(ops::mse(r_m, r_m).item() == 0.0f);

    TmaeModel model = TmaeModel::init(tiny_config(), 10);
    auto sample = tiny_sample(4);
    std::mt19937 rng(77);
    auto loss = sample_loss(model, sample, rng, false);
    CHECK(loss.l_align >= 0.0);
    CHECK(loss.l_pred >= 0.0);
    CHECK(loss.total.item() ==
          doctest::Approx(model.cfg.alpha * loss.l_align +
                          model.cfg.beta * loss.l_pred)
              .epsilon(1e-5));
    CHECK(loss.hits1 >= 0.0);
    CHECK(loss.hits1 <= 1.0);
    CHECK(loss.ndcg10 >= 0.0);
    CHECK(loss.ndcg10 <= 1.0);

    // alpha=1, beta=0 reduces the total to the alignment term.
    TmaeModel ab = TmaeModel::init(tiny_config(), 10);
    ab.cfg.beta = 0.0f;
    std::mt19937 rng2(77);
    auto only_align = sample_loss(ab, sample, rng2, false);
    CHECK(only_align.total.item() == doctest::Approx(only_align.l_align).epsilon(1e-5));
}

TEST_CASE("eval-mode sample loss is deterministic given the rng state") {
    TmaeModel model = TmaeModel::init(tiny_config(), 11);
    auto sample = tiny_sample(5);
    std::mt19937 r1(123), r2(123);
    auto a = sample_loss(model, sample, r1, false);
    auto b = sample_loss(model, sample, r2, false);
    CHECK(a.total.item() == b.total.item());
    CHECK(a.l_align == b.l_align);
    CHECK(a.l_pred == b.l_pred);
}

TEST_CASE("short pretraining runs are deterministic and logged") {
    auto cfg = tiny_config();
    std::vector<dataio::ProcessedSample> data;
    for (int u = 0; u < 3; ++u) {
        auto prof = synthgen::gen_user(20, u, 3, 1.0f);
        for (int k = 0; k < 4; ++k)
            data.push_back(dataio::preprocess(synthgen::gen_sample(prof, 40, k),
                                              cfg.win.sigma));
    }

    TmaeModel m1 = TmaeModel::init(cfg, 5);
    TmaeModel m2 = TmaeModel::init(cfg, 5);
    std::ostringstream log1, log2;
    auto s1 = run_pretraining(m1, data, 5, &log1);
    auto s2 = run_pretraining(m2, data, 5, &log2);
    CHECK(log1.str() == log2.str());
    CHECK(log1.str().rfind("epoch,step,L_align,L_pred,total,hits1,ndcg10", 0) == 0);
    REQUIRE(s1.size() == cfg.epochs);
    CHECK(s1.back().mean_total == s2.back().mean_total);
    // Parameters end identical too.
    for (std::size_t i = 0; i < m1.params.size(); ++i)
        CHECK(m1.params.items()[i].second.data() ==
              m2.params.items()[i].second.data());
}
