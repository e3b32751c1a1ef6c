#include "tsn/touchseqnet.hpp"

#include "tsn/errors.hpp"
#include "tsn/ops.hpp"
#include "tsn/tmae.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tsn::touchseqnet {

using namespace tsn::ops;

namespace {

void init_downstream(Model& model, std::mt19937& rng) {
    const NetConfig& cfg = model.cfg;
    if (cfg.ablation != Ablation::kPretrainedOnly) {
        tacn::TacnConfig tc = cfg.tacn;
        tc.attention = cfg.ablation != Ablation::kNoAttention;
        tacn::init_params(model.params, "tacn", tc, rng);
        fingerca::init_params(model.params, "fingerca", cfg.ca, rng);
    }
    // Two-layer head: a single linear map of [z1 || z2] cannot express
    // same-vs-different (it is linear in each branch), the hidden ReLU can.
    const std::size_t c = cfg.embed_channels();
    model.params.add("head.w1", nn::xavier(2 * c, c, rng));
    model.params.add("head.b1", Tensor::zeros({c}, true));
    model.params.add("head.w2", nn::xavier(c, 1, rng));
    model.params.add("head.b2", Tensor::zeros({1}, true));
}

} // namespace

Model Model::init(const NetConfig& cfg, std::uint64_t seed) {
    Model model;
    model.cfg = cfg;
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    tokenizer::init_params(model.params, "tokenizer", cfg.win, rng);
    nn::init_encoder(model.params, "encoder", cfg.enc_layers, cfg.win.embed_dim,
                     cfg.heads, cfg.ff_hidden, rng);
    init_downstream(model, rng);
    return model;
}

Model Model::build_from_pretrained(const ParamSet& checkpoint,
                                   const NetConfig& cfg, std::uint64_t seed) {
    Model model = init(cfg, seed);
    for (auto& [name, t] : model.params.items()) {
        const bool transferred = name.rfind("tokenizer.win_proj", 0) == 0 ||
                                 name.rfind("encoder.", 0) == 0;
        if (!transferred) continue;
        if (!checkpoint.contains(name))
            throw DataError("build_from_pretrained: checkpoint is missing tensor " +
                            name);
        const Tensor& src = checkpoint.at(name);
        if (src.shape() != t.shape())
            throw DataError("build_from_pretrained: shape mismatch for " + name +
                            ": checkpoint " + shape_str(src.shape()) +
                            " vs model " + shape_str(t.shape()));
        t.data() = src.data();
    }
    return model;
}

Tensor embed(const Model& model, const dataio::ProcessedSample& sample,
             const nn::RunCtx& ctx) {
    const NetConfig& cfg = model.cfg;
    Tensor z = tokenizer::window_project(sample.features, cfg.win, model.params,
                                         "tokenizer");
    Tensor z_pos =
        add(z, tmae::positional_encoding(z.dim(0), cfg.win.embed_dim));
    Tensor h = nn::encoder_stack(z_pos, model.params, "encoder", cfg.enc_layers,
                                 cfg.heads, ctx);
    if (cfg.ablation != Ablation::kPretrainedOnly) {
        tacn::TacnConfig tc = cfg.tacn;
        tc.attention = cfg.ablation != Ablation::kNoAttention;
        h = tacn::forward(h, model.params, "tacn", tc, ctx);
        h = fingerca::recalibrate(h, model.params, "fingerca");
    }
    // Pool over valid (non-padding) windows only.
    std::vector<std::size_t> valid;
    for (std::size_t w = 0; w < sample.window_valid.size(); ++w)
        if (sample.window_valid[w]) valid.push_back(w);
    if (valid.empty())
        throw DataError("embed: sample " + sample.user_id + "/" +
                        sample.sample_id + " has no valid windows");
    if (valid.size() == sample.window_valid.size())
        return mean_axis(h, 0);
    return mean_axis(gather_rows(h, valid), 0);
}

Tensor pair_logit(const Tensor& z1, const Tensor& z2, const ParamSet& p) {
    Tensor z = reshape(concat(z1, z2, 0), {1, z1.size() + z2.size()});
    Tensor hid = relu(add_rowvec(matmul(z, p.at("head.w1")), p.at("head.b1")));
    Tensor logit = add_rowvec(matmul(hid, p.at("head.w2")), p.at("head.b2"));
    return reshape(sigmoid(logit), {});
}

Tensor contrastive_loss(const Tensor& z1, const Tensor& z2, int y,
                        float margin) {
    if (margin <= 0.0f)
        throw ConfigError("contrastive_loss: margin must be > 0");
    Tensor diff = sub(z1, z2);
    Tensor dist_sq = sum(mul(diff, diff));
    if (y == 1) return dist_sq;
    Tensor hinge = relu(add_scalar(neg(ops::sqrt(dist_sq)), margin));
    return mul(hinge, hinge);
}

Tensor ce_loss(const Tensor& y_hat, int y) {
    Tensor p = y == 1 ? y_hat : add_scalar(neg(y_hat), 1.0f);
    return neg(ops::log(p, 1e-7f));
}

Tensor total_loss(const Tensor& l_con, const Tensor& l_ce, float lambda1,
                  float lambda2) {
    if (lambda1 < 0.0f || lambda2 < 0.0f || (lambda1 == 0.0f && lambda2 == 0.0f))
        throw ConfigError("total_loss: lambdas must be nonnegative, not both zero");
    return add(scale(l_con, lambda1), scale(l_ce, lambda2));
}

metrics::EvalRecord evaluate(const Model& model,
                             const std::vector<dataio::ProcessedSample>& samples,
                             const dataio::PairBatch& pairs,
                             double* mean_loss) {
    if (pairs.empty()) throw DataError("evaluate: empty pair set");
    NoGradGuard guard;
    nn::RunCtx eval_ctx;

    // Each distinct sample is embedded once against the frozen parameters.
    std::vector<Tensor> cache(samples.size());
    std::vector<bool> cached(samples.size(), false);
    auto embed_cached = [&](std::size_t idx) -> const Tensor& {
        if (!cached[idx]) {
            cache[idx] = embed(model, samples[idx], eval_ctx);
            cached[idx] = true;
        }
        return cache[idx];
    };

    std::vector<double> scores;
    std::vector<int> labels;
    double loss_sum = 0.0;
    for (const dataio::Pair& pr : pairs) {
        const Tensor& z1 = embed_cached(pr.a);
        const Tensor& z2 = embed_cached(pr.b);
        Tensor y_hat = pair_logit(z1, z2, model.params);
        scores.push_back(y_hat.item());
        labels.push_back(pr.label);
        Tensor l = total_loss(contrastive_loss(z1, z2, pr.label, model.cfg.margin),
                              ce_loss(y_hat, pr.label), model.cfg.lambda1,
                              model.cfg.lambda2);
        loss_sum += l.item();
    }
    if (mean_loss != nullptr)
        *mean_loss = loss_sum / static_cast<double>(pairs.size());
    return metrics::evaluate(scores, labels);
}

std::vector<EpochMetrics> train(Model& model,
                                const std::vector<dataio::ProcessedSample>& samples,
                                const dataio::PairBatch& train_pairs,
                                const dataio::PairBatch& val_pairs,
                                std::uint64_t seed,
                                std::ostream* metric_log) {
    if (train_pairs.empty()) throw DataError("train: empty pair stream");
    const NetConfig& cfg = model.cfg;

    AdamState adam;
    adam.lr = cfg.lr;
    adam.init(model.params);

    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::vector<std::size_t> order(train_pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    if (metric_log != nullptr)
        *metric_log << "epoch,split,accuracy,f1,auc,loss\n";

    std::vector<EpochMetrics> history;
    double best_acc = -1.0;
    std::vector<std::vector<float>> best_data;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        nn::RunCtx train_ctx{true, cfg.dropout, &rng};
        double train_loss = 0.0;
        std::vector<double> train_scores;
        std::vector<int> train_labels;
        std::bernoulli_distribution swap(cfg.swap_prob);

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t end = std::min(begin + cfg.batch, order.size());
            Tensor batch_loss;
            for (std::size_t i = begin; i < end; ++i) {
                dataio::Pair pr = train_pairs[order[i]];
                if (cfg.swap_prob > 0.0f && swap(rng)) std::swap(pr.a, pr.b);
                Tensor z1 = embed(model, samples[pr.a], train_ctx);
                Tensor z2 = embed(model, samples[pr.b], train_ctx);
                Tensor y_hat = pair_logit(z1, z2, model.params);
                Tensor l =
                    total_loss(contrastive_loss(z1, z2, pr.label, cfg.margin),
                               ce_loss(y_hat, pr.label), cfg.lambda1,
                               cfg.lambda2);
                train_scores.push_back(y_hat.item());
                train_labels.push_back(pr.label);
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
            }
            const float n = static_cast<float>(end - begin);
            batch_loss = scale(batch_loss, 1.0f / n);
            const double loss = batch_loss.item();
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch));
            train_loss += loss * n;

            model.params.zero_grads();
            backward(batch_loss);
            adam_step(model.params, adam);
        }
        train_loss /= static_cast<double>(train_pairs.size());

        EpochMetrics em;
        em.train_loss = train_loss;
        em.val = evaluate(model, samples, val_pairs, &em.val_loss);
        history.push_back(em);

        if (metric_log != nullptr) {
            const metrics::EvalRecord tr =
                metrics::evaluate(train_scores, train_labels);
            *metric_log << epoch << ",train," << tr.accuracy << ',' << tr.f1
                        << ',' << tr.auc << ',' << train_loss << '\n'
                        << epoch << ",val," << em.val.accuracy << ','
                        << em.val.f1 << ',' << em.val.auc << ',' << em.val_loss
                        << '\n';
        }

        if (em.val.accuracy > best_acc) {
            best_acc = em.val.accuracy;
            best_data.clear();
            for (const auto& [name, t] : model.params.items())
                best_data.push_back(t.data());
        }
        if (em.val.accuracy >= cfg.early_stop_acc) break;
    }

    // Restore the best validation-accuracy parameters.
    if (!best_data.empty())
        for (std::size_t i = 0; i < model.params.size(); ++i)
            model.params.items()[i].second.data() = best_data[i];
    return history;
}

} // namespace tsn::touchseqnet
