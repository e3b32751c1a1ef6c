#pragma once

#include "tsn/tmae.hpp"
#include "tsn/touchseqnet.hpp"

#include <cstdint>
#include <map>
#include <string>

// Run configuration shared by the CLI commands. Defaults follow the
// experiment protocol this toolkit implements; the config file format is
// plain `key = value` lines with `#` comments, and flags override file
// values.

namespace tsn::config {

struct RunConfig {
    std::size_t embed_dim = 64;
    float lr = 0.01f;
    std::size_t batch = 128;
    std::size_t enc_layers = 8;
    std::size_t heads = 4;
    float dropout = 0.2f;
    std::size_t regressor_layers = 4;
    std::size_t sigma = 8;          // candidate set {4, 8, 12}
    float mask_ratio = 0.4f;
    std::size_t vocab = 192;
    std::size_t tcn_inputs = 64;
    std::vector<std::size_t> tcn_channels = {64, 128};
    std::size_t kernel = 5;         // candidate set {4, 5, 7}
    float mu = 0.99f;
    float alpha = 1.0f;
    float beta = 1.0f;
    float lambda1 = 0.5f;
    float lambda2 = 1.0f;
    float margin = 1.0f;
    std::size_t ff_hidden = 128;
    std::size_t ca_reduction = 4;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    bool allow_any_sigma_kernel = false; // override flag for candidate sets
    float early_stop_acc = 2.0f;

    // Throws ConfigError naming the offending field.
    void validate() const;

    tmae::TmaeConfig tmae_config() const;
    touchseqnet::NetConfig net_config() const;
};

// Parse a `key = value` file into cfg; unknown keys are errors.
void load_file(RunConfig& cfg, const std::string& path);
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// TSQN_SEED fallback when the flag was not given.
std::uint64_t seed_from_env_or(std::uint64_t fallback);

} // namespace tsn::config
