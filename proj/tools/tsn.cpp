// tsn: synthetic data generation, pair building, TMAE pretraining,
// TouchSeqNet fine-tuning, and pair evaluation.

#include "tsn/checkpoint.hpp"
#include "tsn/config.hpp"
#include "tsn/dataio.hpp"
#include "tsn/errors.hpp"
#include "tsn/kernels.hpp"
#include "tsn/metrics.hpp"
#include "tsn/synthgen.hpp"
#include "tsn/tmae.hpp"
#include "tsn/touchseqnet.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace tsn;

// All artifacts are written to a temp file and renamed into place.
void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp);
        out << content;
        if (!out) throw DataError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot rename " + tmp + " to " + path);
}

std::string config_header(const config::RunConfig& cfg) {
    std::ostringstream os;
    os << "# embed_dim = " << cfg.embed_dim << "\n# lr = " << cfg.lr
       << "\n# batch = " << cfg.batch << "\n# enc_layers = " << cfg.enc_layers
       << "\n# heads = " << cfg.heads << "\n# dropout = " << cfg.dropout
       << "\n# regressor_layers = " << cfg.regressor_layers
       << "\n# sigma = " << cfg.sigma << "\n# mask_ratio = " << cfg.mask_ratio
       << "\n# vocab = " << cfg.vocab << "\n# kernel = " << cfg.kernel
       << "\n# seed = " << cfg.seed << "\n# kernels = " << kernels::active().name
       << "\n";
    return os.str();
}

struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags,
                      config::RunConfig& cfg) {
    cmd->add_option("--config", flags.config_path,
                    "Config file (key = value lines, # comments)");
    cmd->add_option("--set", flags.overrides,
                    "Override a config key, e.g. --set mask_ratio=0.3");
    cmd->add_option("--seed", cfg.seed, "RNG seed (TSQN_SEED fallback)");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--sigma", cfg.sigma, "Window size (4, 8, or 12)");
    cmd->add_option("--mask-ratio", cfg.mask_ratio, "Masking ratio in (0,1)");
    cmd->add_option("--lr", cfg.lr, "Adam learning rate");
    cmd->add_option("--batch", cfg.batch, "Batch size");
    cmd->add_option("--kernel", cfg.kernel, "TCN kernel size (4, 5, or 7)");
}

void resolve_config(config::RunConfig& cfg, const ConfigFlags& flags,
                    const CLI::App* cmd, bool seed_given) {
    // File values load first, then flags already parsed by CLI11 win, then
    // explicit --set pairs win over both.
    if (!flags.config_path.empty()) {
        config::RunConfig file_cfg = cfg;
        config::load_file(file_cfg, flags.config_path);
        // Re-apply any flags the user passed explicitly.
        config::RunConfig merged = file_cfg;
        if (cmd->count("--seed")) merged.seed = cfg.seed;
        if (cmd->count("--epochs")) merged.epochs = cfg.epochs;
        if (cmd->count("--sigma")) merged.sigma = cfg.sigma;
        if (cmd->count("--mask-ratio")) merged.mask_ratio = cfg.mask_ratio;
        if (cmd->count("--lr")) merged.lr = cfg.lr;
        if (cmd->count("--batch")) merged.batch = cfg.batch;
        if (cmd->count("--kernel")) merged.kernel = cfg.kernel;
        cfg = merged;
    }
    for (const std::string& kv : flags.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        config::apply_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed_given && !cmd->count("--seed"))
        cfg.seed = config::seed_from_env_or(cfg.seed);
    cfg.validate();
}

std::vector<dataio::ProcessedSample> preprocess_all(
    const std::vector<dataio::GestureSample>& raw, std::size_t sigma) {
    std::vector<dataio::ProcessedSample> out;
    out.reserve(raw.size());
    for (const auto& s : raw) out.push_back(dataio::preprocess(s, sigma));
    return out;
}

void add_meta(ParamSet& p, const std::string& key, float value) {
    p.add("meta." + key, Tensor({1}, {value}));
}

float get_meta(const ParamSet& p, const std::string& key) {
    return p.at("meta." + key).data()[0];
}

void store_net_meta(ParamSet& p, const config::RunConfig& cfg, int ablation) {
    add_meta(p, "sigma", static_cast<float>(cfg.sigma));
    add_meta(p, "embed_dim", static_cast<float>(cfg.embed_dim));
    add_meta(p, "enc_layers", static_cast<float>(cfg.enc_layers));
    add_meta(p, "heads", static_cast<float>(cfg.heads));
    add_meta(p, "ff_hidden", static_cast<float>(cfg.ff_hidden));
    add_meta(p, "vocab", static_cast<float>(cfg.vocab));
    add_meta(p, "kernel", static_cast<float>(cfg.kernel));
    add_meta(p, "tcn_inputs", static_cast<float>(cfg.tcn_inputs));
    add_meta(p, "ca_reduction", static_cast<float>(cfg.ca_reduction));
    add_meta(p, "margin", cfg.margin);
    add_meta(p, "lambda1", cfg.lambda1);
    add_meta(p, "lambda2", cfg.lambda2);
    add_meta(p, "ablation", static_cast<float>(ablation));
    std::vector<float> ch(cfg.tcn_channels.begin(), cfg.tcn_channels.end());
    p.add("meta.tcn_channels", Tensor({ch.size()}, ch));
}

touchseqnet::NetConfig net_config_from_meta(const ParamSet& p) {
    config::RunConfig cfg;
    cfg.sigma = static_cast<std::size_t>(get_meta(p, "sigma"));
    cfg.embed_dim = static_cast<std::size_t>(get_meta(p, "embed_dim"));
    cfg.enc_layers = static_cast<std::size_t>(get_meta(p, "enc_layers"));
    cfg.heads = static_cast<std::size_t>(get_meta(p, "heads"));
    cfg.ff_hidden = static_cast<std::size_t>(get_meta(p, "ff_hidden"));
    cfg.vocab = static_cast<std::size_t>(get_meta(p, "vocab"));
    cfg.kernel = static_cast<std::size_t>(get_meta(p, "kernel"));
    cfg.tcn_inputs = static_cast<std::size_t>(get_meta(p, "tcn_inputs"));
    cfg.ca_reduction = static_cast<std::size_t>(get_meta(p, "ca_reduction"));
    cfg.margin = get_meta(p, "margin");
    cfg.lambda1 = get_meta(p, "lambda1");
    cfg.lambda2 = get_meta(p, "lambda2");
    cfg.tcn_channels.clear();
    for (float v : p.at("meta.tcn_channels").data())
        cfg.tcn_channels.push_back(static_cast<std::size_t>(v));
    cfg.allow_any_sigma_kernel = true;
    touchseqnet::NetConfig net = cfg.net_config();
    net.ablation =
        static_cast<touchseqnet::Ablation>(static_cast<int>(get_meta(p, "ablation")));
    return net;
}

// Pair manifests reference samples as "<user>/<sample>".
dataio::PairBatch load_manifest(const std::string& path,
                                const std::vector<dataio::GestureSample>& samples) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i)
        index[samples[i].user_id + "/" + samples[i].sample_id] = i;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path);
    dataio::PairBatch pairs;
    std::string line;
    std::size_t line_no = 0;
    auto extract = [&](const std::string& l, const std::string& key) {
        const std::string probe = "\"" + key + "\"";
        auto pos = l.find(probe);
        if (pos == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": missing key " + key);
        pos = l.find(':', pos);
        auto q1 = l.find('"', pos);
        auto q2 = l.find('"', q1 + 1);
        if (key == "y") { // numeric
            std::size_t start = pos + 1;
            while (start < l.size() && (l[start] == ' ')) ++start;
            return l.substr(start, 1);
        }
        return l.substr(q1 + 1, q2 - q1 - 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        dataio::Pair pr;
        const std::string a = extract(line, "a");
        const std::string b = extract(line, "b");
        const std::string y = extract(line, "y");
        auto ia = index.find(a);
        auto ib = index.find(b);
        if (ia == index.end() || ib == index.end())
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": unknown sample reference");
        pr.a = ia->second;
        pr.b = ib->second;
        pr.label = y == "1" ? 1 : 0;
        pairs.push_back(pr);
    }
    return pairs;
}

int cmd_synth(std::size_t users, std::size_t samples, std::uint64_t seed,
              float separation, std::size_t tmin, std::size_t tmax,
              const std::string& out) {
    if (users < 2)
        throw DataError("synth: need at least 2 users (pairing requires them)");
    auto dataset = synthgen::gen_dataset(users, samples, {tmin, tmax}, seed,
                                         separation);
    // Route through a string for atomic write-then-rename.
    std::ostringstream os;
    os << "user_id,sample_id,t,x,y,p,a\n";
    for (const auto& s : dataset)
        for (const auto& r : s.rows) {
            os.precision(7);
            os << s.user_id << ',' << s.sample_id << ',' << r.t << ',' << r.x
               << ',' << r.y << ',' << r.p << ',' << r.a << '\n';
        }
    atomic_write(out, os.str());
    std::cout << "wrote " << dataset.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_pairs(const std::string& data, std::size_t n, std::uint64_t seed,
              const std::string& out) {
    auto samples = dataio::load_gesture_csv(data);
    auto pairs = dataio::make_pairs(samples, seed, n);
    std::ostringstream os;
    for (const auto& pr : pairs)
        os << "{\"a\": \"" << samples[pr.a].user_id << '/'
           << samples[pr.a].sample_id << "\", \"b\": \""
           << samples[pr.b].user_id << '/' << samples[pr.b].sample_id
           << "\", \"y\": " << pr.label << "}\n";
    atomic_write(out, os.str());
    std::cout << "wrote " << pairs.size() << " pairs to " << out << "\n";
    return 0;
}

int cmd_pretrain(const config::RunConfig& cfg, const std::string& data,
                 const std::string& out, const std::string& log_path) {
    auto raw = dataio::load_gesture_csv(data);
    auto processed = preprocess_all(raw, cfg.sigma);

    tmae::TmaeModel model = tmae::TmaeModel::init(cfg.tmae_config(), cfg.seed);
    std::ostringstream log;
    log << config_header(cfg);
    auto stats = tmae::run_pretraining(model, processed, cfg.seed, &log);

    ParamSet ckpt;
    for (const auto& [name, t] : model.params.items()) ckpt.add(name, t);
    ckpt.merge("momentum", model.momentum);
    config::RunConfig meta_cfg = cfg;
    store_net_meta(ckpt, meta_cfg, 0);
    checkpoint::save(out, ckpt);
    if (!log_path.empty()) atomic_write(log_path, log.str());

    std::cout << "pretrain done: first-epoch mean loss " << stats.front().mean_total
              << ", last-epoch mean loss " << stats.back().mean_total
              << "\ncheckpoint: " << out << "\n";
    return 0;
}

int cmd_finetune(const config::RunConfig& cfg, const std::string& data,
                 const std::string& pretrained, const std::string& ablation,
                 std::size_t n_pairs, float val_frac, const std::string& out,
                 const std::string& log_path) {
    touchseqnet::Ablation ab;
    int ab_code;
    if (ablation == "full") { ab = touchseqnet::Ablation::kFull; ab_code = 0; }
    else if (ablation == "no-attention") { ab = touchseqnet::Ablation::kNoAttention; ab_code = 1; }
    else if (ablation == "pretrained-only") { ab = touchseqnet::Ablation::kPretrainedOnly; ab_code = 2; }
    else if (ablation == "no-pretrain") { ab = touchseqnet::Ablation::kNoPretrain; ab_code = 3; }
    else throw ConfigError("finetune: unknown ablation '" + ablation + "'");

    if (ab != touchseqnet::Ablation::kNoPretrain && pretrained.empty())
        throw ConfigError("finetune: --pretrained is required unless --ablation no-pretrain");

    auto raw = dataio::load_gesture_csv(data);
    auto processed = preprocess_all(raw, cfg.sigma);

    // Disjoint train/validation pairs from independent seeds.
    auto all_pairs = dataio::make_pairs(raw, cfg.seed, n_pairs);
    const std::size_t n_val =
        std::max<std::size_t>(1, static_cast<std::size_t>(val_frac * n_pairs));
    dataio::PairBatch val_pairs(all_pairs.begin(), all_pairs.begin() + n_val);
    dataio::PairBatch train_pairs(all_pairs.begin() + n_val, all_pairs.end());

    touchseqnet::NetConfig net_cfg = cfg.net_config();
    net_cfg.ablation = ab;
    touchseqnet::Model model =
        ab == touchseqnet::Ablation::kNoPretrain
            ? touchseqnet::Model::init(net_cfg, cfg.seed)
            : touchseqnet::Model::build_from_pretrained(
                  checkpoint::load(pretrained), net_cfg, cfg.seed);

    std::ostringstream log;
    log << config_header(cfg) << "# ablation = " << ablation << "\n";
    auto history =
        touchseqnet::train(model, processed, train_pairs, val_pairs, cfg.seed, &log);

    ParamSet ckpt;
    for (const auto& [name, t] : model.params.items()) ckpt.add(name, t);
    store_net_meta(ckpt, cfg, ab_code);
    checkpoint::save(out, ckpt);
    if (!log_path.empty()) atomic_write(log_path, log.str());

    const auto& best =
        *std::max_element(history.begin(), history.end(),
                          [](const auto& a, const auto& b) {
                              return a.val.accuracy < b.val.accuracy;
                          });
    std::cout << "finetune done: best val accuracy " << best.val.accuracy
              << ", f1 " << best.val.f1 << ", auc " << best.val.auc
              << "\ncheckpoint: " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data,
                 const std::string& manifest, const std::string& out_csv) {
    ParamSet ckpt = checkpoint::load(model_path);
    touchseqnet::NetConfig net_cfg = net_config_from_meta(ckpt);
    touchseqnet::Model model;
    model.cfg = net_cfg;
    for (const auto& [name, t] : ckpt.items())
        if (name.rfind("meta.", 0) != 0 && name.rfind("momentum.", 0) != 0)
            model.params.add(name, t);

    auto raw = dataio::load_gesture_csv(data);
    auto processed = preprocess_all(raw, net_cfg.win.sigma);
    auto pairs = load_manifest(manifest, raw);

    metrics::EvalRecord rec = touchseqnet::evaluate(model, processed, pairs);
    std::cout << "Metric    Value\n"
              << "Accuracy  " << rec.accuracy << "\n"
              << "F1 Score  " << rec.f1 << "\n"
              << "AUC       " << rec.auc << "\n";
    if (!out_csv.empty()) {
        std::ostringstream os;
        os << "accuracy,f1,auc\n"
           << rec.accuracy << ',' << rec.f1 << ',' << rec.auc << '\n';
        atomic_write(out_csv, os.str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Touch-dynamics continuous authentication toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic gesture CSV");
    std::size_t users = 8, samples_per_user = 40, tmin = 64, tmax = 128;
    std::uint64_t synth_seed = 1;
    float separation = 1.0f;
    std::string synth_out;
    synth->add_option("--users", users, "Number of users");
    synth->add_option("--samples", samples_per_user, "Samples per user");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--separation", separation, "Inter-user separability in [0,1]");
    synth->add_option("--tmin", tmin, "Minimum sequence length");
    synth->add_option("--tmax", tmax, "Maximum sequence length");
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    // pairs
    auto* pairs_cmd = app.add_subcommand("pairs", "Build a labeled pair manifest");
    std::string pairs_data, pairs_out;
    std::size_t n_pairs = 2000;
    std::uint64_t pairs_seed = 1;
    pairs_cmd->add_option("--data", pairs_data, "Gesture CSV")->required();
    pairs_cmd->add_option("--n", n_pairs, "Number of pairs");
    pairs_cmd->add_option("--seed", pairs_seed, "RNG seed");
    pairs_cmd->add_option("--out", pairs_out, "Output JSONL manifest")->required();

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "Self-supervised TMAE pretraining");
    config::RunConfig pre_cfg;
    ConfigFlags pre_flags;
    std::string pre_data, pre_out, pre_log;
    pre->add_option("--data", pre_data, "Gesture CSV")->required();
    pre->add_option("--out", pre_out, "Output checkpoint")->required();
    pre->add_option("--log", pre_log, "Loss log CSV");
    add_config_flags(pre, pre_flags, pre_cfg);

    // finetune
    auto* fine = app.add_subcommand("finetune", "Fine-tune TouchSeqNet on pairs");
    config::RunConfig fine_cfg;
    fine_cfg.epochs = 30;
    ConfigFlags fine_flags;
    std::string fine_data, fine_pre, fine_out, fine_log, ablation = "full";
    std::size_t fine_pairs = 2000;
    float val_frac = 0.2f;
    fine->add_option("--data", fine_data, "Gesture CSV")->required();
    fine->add_option("--pretrained", fine_pre, "TMAE checkpoint");
    fine->add_option("--out", fine_out, "Output checkpoint")->required();
    fine->add_option("--log", fine_log, "Metric log CSV");
    fine->add_option("--ablation", ablation,
                     "full | no-attention | pretrained-only | no-pretrain");
    fine->add_option("--pairs", fine_pairs, "Number of labeled pairs");
    fine->add_option("--val-frac", val_frac, "Validation pair fraction");
    add_config_flags(fine, fine_flags, fine_cfg);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Evaluate a model on a pair manifest");
    std::string eval_model, eval_data, eval_manifest, eval_out;
    eval->add_option("--model", eval_model, "Fine-tuned checkpoint")->required();
    eval->add_option("--data", eval_data, "Gesture CSV")->required();
    eval->add_option("--pairs", eval_manifest, "Pair manifest JSONL")->required();
    eval->add_option("--out", eval_out, "Output metrics CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(users, samples_per_user, synth_seed, separation,
                             tmin, tmax, synth_out);
        if (pairs_cmd->parsed())
            return cmd_pairs(pairs_data, n_pairs, pairs_seed, pairs_out);
        if (pre->parsed()) {
            resolve_config(pre_cfg, pre_flags, pre, false);
            return cmd_pretrain(pre_cfg, pre_data, pre_out, pre_log);
        }
        if (fine->parsed()) {
            resolve_config(fine_cfg, fine_flags, fine, false);
            return cmd_finetune(fine_cfg, fine_data, fine_pre, ablation,
                                fine_pairs, val_frac, fine_out, fine_log);
        }
        if (eval->parsed())
            return cmd_evaluate(eval_model, eval_data, eval_manifest, eval_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
