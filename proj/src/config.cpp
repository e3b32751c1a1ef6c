#include "tsn/config.hpp"

#include "tsn/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tsn::config {

namespace {

float to_float(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const float f = std::stof(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return f;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value '" + v + "' for " + key);
    }
}

std::size_t to_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value '" + v + "' for " + key);
    }
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

} // namespace

void RunConfig::validate() const {
    auto positive = [](const char* field, double v) {
        if (v <= 0.0)
            throw ConfigError(std::string("config: ") + field +
                              " must be positive");
    };
    positive("embed_dim", static_cast<double>(embed_dim));
    positive("lr", lr);
    positive("batch", static_cast<double>(batch));
    positive("enc_layers", static_cast<double>(enc_layers));
    positive("heads", static_cast<double>(heads));
    positive("regressor_layers", static_cast<double>(regressor_layers));
    positive("vocab", static_cast<double>(vocab));
    positive("margin", margin);
    positive("epochs", static_cast<double>(epochs));
    if (dropout < 0.0f || dropout >= 1.0f)
        throw ConfigError("config: dropout must be in [0,1)");
    if (mask_ratio <= 0.0f || mask_ratio >= 1.0f)
        throw ConfigError("config: mask_ratio must be in (0,1)");
    if (mu < 0.0f || mu > 1.0f)
        throw ConfigError("config: mu must be in [0,1]");
    if (alpha < 0.0f || beta < 0.0f)
        throw ConfigError("config: alpha and beta must be nonnegative");
    if (lambda1 < 0.0f || lambda2 < 0.0f || (lambda1 == 0.0f && lambda2 == 0.0f))
        throw ConfigError("config: lambda1/lambda2 must be nonnegative, not both zero");
    if (embed_dim % heads != 0)
        throw ConfigError("config: embed_dim must be divisible by heads");
    if (tcn_channels.empty())
        throw ConfigError("config: tcn_channels must be nonempty");
    if (!allow_any_sigma_kernel) {
        if (sigma != 4 && sigma != 8 && sigma != 12)
            throw ConfigError("config: sigma must be one of {4, 8, 12} "
                              "(set allow_any_sigma_kernel to override)");
        if (kernel != 4 && kernel != 5 && kernel != 7)
            throw ConfigError("config: kernel must be one of {4, 5, 7} "
                              "(set allow_any_sigma_kernel to override)");
    }
}

tmae::TmaeConfig RunConfig::tmae_config() const {
    tmae::TmaeConfig c;
    c.win = {sigma, embed_dim, dataio::kChannels, vocab};
    c.enc_layers = enc_layers;
    c.heads = heads;
    c.reg_layers = regressor_layers;
    c.ff_hidden = ff_hidden;
    c.dropout = dropout;
    c.mask_ratio = mask_ratio;
    c.mu = mu;
    c.alpha = alpha;
    c.beta = beta;
    c.lr = lr;
    c.batch = batch;
    c.epochs = epochs;
    return c;
}

touchseqnet::NetConfig RunConfig::net_config() const {
    touchseqnet::NetConfig c;
    c.win = {sigma, embed_dim, dataio::kChannels, vocab};
    c.enc_layers = enc_layers;
    c.heads = heads;
    c.ff_hidden = ff_hidden;
    c.dropout = dropout;
    c.tacn.num_inputs = tcn_inputs;
    c.tacn.num_channels = tcn_channels;
    c.tacn.kernel = kernel;
    c.tacn.dropout = dropout;
    c.tacn.heads = heads;
    c.ca.channels = tcn_channels.back();
    c.ca.reduction = ca_reduction;
    c.margin = margin;
    c.lambda1 = lambda1;
    c.lambda2 = lambda2;
    c.lr = lr;
    c.batch = batch;
    c.epochs = epochs;
    c.early_stop_acc = early_stop_acc;
    return c;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "embed_dim") cfg.embed_dim = to_size(key, value);
    else if (key == "lr") cfg.lr = to_float(key, value);
    else if (key == "batch") cfg.batch = to_size(key, value);
    else if (key == "enc_layers") cfg.enc_layers = to_size(key, value);
    else if (key == "heads") cfg.heads = to_size(key, value);
    else if (key == "dropout") cfg.dropout = to_float(key, value);
    else if (key == "regressor_layers") cfg.regressor_layers = to_size(key, value);
    else if (key == "sigma") cfg.sigma = to_size(key, value);
    else if (key == "mask_ratio") cfg.mask_ratio = to_float(key, value);
    else if (key == "vocab") cfg.vocab = to_size(key, value);
    else if (key == "tcn_inputs") cfg.tcn_inputs = to_size(key, value);
    else if (key == "tcn_channels") {
        cfg.tcn_channels.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
            cfg.tcn_channels.push_back(to_size(key, trim(item)));
    } else if (key == "kernel") cfg.kernel = to_size(key, value);
    else if (key == "mu") cfg.mu = to_float(key, value);
    else if (key == "alpha") cfg.alpha = to_float(key, value);
    else if (key == "beta") cfg.beta = to_float(key, value);
    else if (key == "lambda1") cfg.lambda1 = to_float(key, value);
    else if (key == "lambda2") cfg.lambda2 = to_float(key, value);
    else if (key == "margin") cfg.margin = to_float(key, value);
    else if (key == "ff_hidden") cfg.ff_hidden = to_size(key, value);
    else if (key == "ca_reduction") cfg.ca_reduction = to_size(key, value);
    else if (key == "epochs") cfg.epochs = to_size(key, value);
    else if (key == "seed") cfg.seed = to_size(key, value);
    else if (key == "early_stop_acc") cfg.early_stop_acc = to_float(key, value);
    else if (key == "allow_any_sigma_kernel")
        cfg.allow_any_sigma_kernel = value == "1" || value == "true";
    else throw ConfigError("config: unknown key '" + key + "'");
}

void load_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::uint64_t seed_from_env_or(std::uint64_t fallback) {
    const char* env = std::getenv("TSQN_SEED");
    if (env == nullptr) return fallback;
    try {
        return static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
        throw ConfigError("config: TSQN_SEED is not an integer: " +
                          std::string(env));
    }
}

} // namespace tsn::config
