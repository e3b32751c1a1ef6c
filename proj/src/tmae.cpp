#include "tsn/tmae.hpp"

#include "tsn/errors.hpp"
#include "tsn/metrics.hpp"
#include "tsn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tsn::tmae {

using namespace tsn::ops;

Tensor positional_encoding(std::size_t d, std::size_t m) {
    std::vector<float> data(d * m);
    for (std::size_t pos = 0; pos < d; ++pos)
        for (std::size_t i = 0; i < m; ++i) {
            const double exponent =
                static_cast<double>(2 * (i / 2)) / static_cast<double>(m);
            const double angle =
                static_cast<double>(pos) / std::pow(10000.0, exponent);
            data[pos * m + i] = static_cast<float>(i % 2 == 0 ? std::sin(angle)
                                                              : std::cos(angle));
        }
    return Tensor({d, m}, std::move(data));
}

MaskSplit split_visible_masked(std::size_t d,
                               const std::vector<bool>& window_valid,
                               float ratio, std::mt19937& rng) {
    if (window_valid.size() != d)
        throw std::invalid_argument("split_visible_masked: flag count mismatch");
    if (ratio <= 0.0f || ratio >= 1.0f)
        throw std::invalid_argument("split_visible_masked: ratio must be in (0,1)");
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < d; ++i)
        if (window_valid[i]) valid.push_back(i);
    if (valid.size() < 2)
        throw DataError("split_visible_masked: need at least 2 valid windows, got " +
                        std::to_string(valid.size()));

    std::size_t d_m = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::lround(ratio * static_cast<double>(valid.size()))));
    if (d_m >= d) d_m = d - 1; // keep at least one visible window

    std::shuffle(valid.begin(), valid.end(), rng);
    MaskSplit split;
    split.m_index.assign(valid.begin(), valid.begin() + d_m);
    std::sort(split.m_index.begin(), split.m_index.end());
    std::vector<bool> masked(d, false);
    for (std::size_t i : split.m_index) masked[i] = true;
    for (std::size_t i = 0; i < d; ++i)
        if (!masked[i]) split.v_index.push_back(i);
    return split;
}

TmaeModel TmaeModel::init(const TmaeConfig& cfg, std::uint64_t seed) {
    TmaeModel model;
    model.cfg = cfg;
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    tokenizer::init_params(model.params, "tokenizer", cfg.win, rng);
    nn::init_encoder(model.params, "encoder", cfg.enc_layers, cfg.win.embed_dim,
                     cfg.heads, cfg.ff_hidden, rng);
    nn::init_cross_stack(model.params, "regressor", cfg.reg_layers,
                         cfg.win.embed_dim, cfg.heads, cfg.ff_hidden, rng);
    model.params.add("mask_token",
                     Tensor::uniform({cfg.win.embed_dim}, 0.02f, rng, true));
    // Momentum encoder starts as an exact gradient-free copy.
    for (const auto& [name, t] : model.params.items())
        if (name.rfind("encoder.", 0) == 0)
            model.momentum.add(name, t.detach());
    return model;
}

Tensor encode_visible(const TmaeModel& model, const Tensor& z_v_pos,
                      const nn::RunCtx& ctx) {
    return nn::encoder_stack(z_v_pos, model.params, "encoder",
                             model.cfg.enc_layers, model.cfg.heads, ctx);
}

Tensor momentum_encode(const TmaeModel& model, const Tensor& z_m_pos) {
    NoGradGuard guard;
    nn::RunCtx eval_ctx; // dropout off
    return nn::encoder_stack(z_m_pos, model.momentum, "encoder",
                             model.cfg.enc_layers, model.cfg.heads, eval_ctx);
}

Tensor regress_masked(const TmaeModel& model, const Tensor& r_v,
                      const Tensor& e_mask, const nn::RunCtx& ctx) {
    return nn::cross_stack(e_mask, r_v, model.params, "regressor",
                           model.cfg.reg_layers, model.cfg.heads, ctx);
}

Tensor predict_codewords(const TmaeModel& model, const Tensor& r_hat) {
    return tokenizer::codebook_logits(r_hat, model.params, "tokenizer");
}

void momentum_update(ParamSet& theta_m, const ParamSet& theta_e, float mu) {
    if (mu < 0.0f || mu > 1.0f)
        throw std::invalid_argument("momentum_update: mu must be in [0,1]");
    for (auto& [name, t] : theta_m.items()) {
        const Tensor& src = theta_e.at(name);
        if (src.shape() != t.shape())
            throw std::invalid_argument("momentum_update: shape mismatch for " +
                                        name);
        std::vector<float>& dst = t.data();
        const std::vector<float>& e = src.data();
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = mu * dst[i] + (1.0f - mu) * e[i];
    }
}

PretrainLoss sample_loss(const TmaeModel& model,
                         const dataio::ProcessedSample& sample,
                         std::mt19937& rng, bool train) {
    const TmaeConfig& cfg = model.cfg;
    nn::RunCtx ctx{train, cfg.dropout, &rng};

    Tensor z = tokenizer::window_project(sample.features, cfg.win, model.params,
                                         "tokenizer");
    const std::size_t d = z.dim(0);
    Tensor pe = positional_encoding(d, cfg.win.embed_dim);
    Tensor z_pos = add(z, pe);

    // Tokens come from the pre-positional embeddings; during training the
    // targets are straight-through Gumbel samples so the tokenizer itself
    // stays trainable end-to-end.
    Tensor tok_scores = tokenizer::codebook_logits(z, model.params, "tokenizer");
    Tensor token_targets = tokenizer::gumbel_softmax_sample(
        tok_scores, cfg.tau, rng, /*hard=*/true,
        /*noise_scale=*/train ? 1.0f : 0.0f);

    MaskSplit split =
        split_visible_masked(d, sample.window_valid, cfg.mask_ratio, rng);

    Tensor z_v = gather_rows(z_pos, split.v_index);
    Tensor z_m = gather_rows(z_pos, split.m_index);

    Tensor r_v = encode_visible(model, z_v, ctx);
    Tensor r_m = momentum_encode(model, z_m);

    Tensor e_mask = add(ops::repeat_rows(model.params.at("mask_token"),
                                         split.m_index.size()),
                        gather_rows(pe, split.m_index));
    Tensor r_hat = regress_masked(model, r_v, e_mask, ctx);

    Tensor l_align = mse(r_m, r_hat);
    Tensor pred_logits = predict_codewords(model, r_hat);
    Tensor targets_m = gather_rows(token_targets, split.m_index);
    Tensor l_pred = cross_entropy_soft(pred_logits, targets_m);

    PretrainLoss out;
    out.total = add(scale(l_align, cfg.alpha), scale(l_pred, cfg.beta));
    out.l_align = l_align.item();
    out.l_pred = l_pred.item();

    const std::vector<std::size_t> tokens_m = tokenizer::hard_tokens(targets_m);
    std::vector<std::size_t> ranks(tokens_m.size());
    for (std::size_t i = 0; i < tokens_m.size(); ++i)
        ranks[i] = metrics::rank_of(pred_logits.data().data() + i * cfg.win.vocab,
                                    cfg.win.vocab, tokens_m[i]);
    out.hits1 = metrics::hits_at_k(ranks, 1);
    out.ndcg10 = metrics::ndcg_at_10(ranks);
    return out;
}

std::vector<EpochStats> run_pretraining(
    TmaeModel& model, const std::vector<dataio::ProcessedSample>& dataset,
    std::uint64_t seed, std::ostream* loss_log) {
    if (dataset.empty()) throw DataError("run_pretraining: empty dataset");
    const TmaeConfig& cfg = model.cfg;

    AdamState adam;
    adam.lr = cfg.lr;
    adam.init(model.params);

    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    if (loss_log != nullptr)
        *loss_log << "epoch,step,L_align,L_pred,total,hits1,ndcg10\n";

    std::vector<EpochStats> epoch_stats;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochStats stats;
        std::size_t step = 0, seen = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t end = std::min(begin + cfg.batch, order.size());
            Tensor batch_loss;
            double b_align = 0.0, b_pred = 0.0, b_hits = 0.0, b_ndcg = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                PretrainLoss l =
                    sample_loss(model, dataset[order[i]], rng, /*train=*/true);
                batch_loss = batch_loss.defined() ? add(batch_loss, l.total)
                                                  : l.total;
                b_align += l.l_align;
                b_pred += l.l_pred;
                b_hits += l.hits1;
                b_ndcg += l.ndcg10;
            }
            const double n = static_cast<double>(end - begin);
            batch_loss = scale(batch_loss, static_cast<float>(1.0 / n));
            const double total = batch_loss.item();
            if (!std::isfinite(total))
                throw NumericError("run_pretraining: non-finite loss at epoch " +
                                   std::to_string(epoch) + " step " +
                                   std::to_string(step));

            model.params.zero_grads();
            backward(batch_loss);
            adam_step(model.params, adam);
            momentum_update(model.momentum, model.params, cfg.mu);

            if (loss_log != nullptr)
                *loss_log << epoch << ',' << step << ',' << b_align / n << ','
                          << b_pred / n << ',' << total << ',' << b_hits / n
                          << ',' << b_ndcg / n << '\n';
            stats.mean_total += total * n;
            stats.mean_align += b_align;
            stats.mean_pred += b_pred;
            stats.hits1 += b_hits;
            stats.ndcg10 += b_ndcg;
            seen += end - begin;
            ++step;
        }
        stats.mean_total /= static_cast<double>(seen);
        stats.mean_align /= static_cast<double>(seen);
        stats.mean_pred /= static_cast<double>(seen);
        stats.hits1 /= static_cast<double>(seen);
        stats.ndcg10 /= static_cast<double>(seen);
        epoch_stats.push_back(stats);
    }
    return epoch_stats;
}

} // namespace tsn::tmae
