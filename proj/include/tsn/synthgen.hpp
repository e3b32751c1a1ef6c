#pragma once

#include "tsn/dataio.hpp"

#include <cstdint>
#include <utility>
#include <vector>

// Synthetic multi-user gesture generator. Stands in for real collections so
// training and acceptance runs are self-contained; the separation knob
// controls how far apart user parameter means are placed.

namespace tsn::synthgen {

struct UserProfile {
    std::string user_id;
    float pressure_mean = 0.6f;   // in [0.3, 0.9]
    float pressure_jitter = 0.02f;
    float speed_scale = 1.0f;
    float curvature = 0.0f;
    float tremor_freq = 0.1f;
    float area_mean = 0.5f;
    std::uint64_t seed = 0;
};

// Deterministic per (seed, user index). separation=0 collapses all user
// means onto shared values; separation=1 spreads them across a grid.
UserProfile gen_user(std::uint64_t rng_seed, std::size_t user_index,
                     std::size_t n_users, float separation);

// Smooth sinusoid + curvature drift trajectory with AR(1) pressure noise
// around the profile mean. T must be >= 8.
dataio::GestureSample gen_sample(const UserProfile& profile, std::size_t T,
                                 std::size_t sample_index);

std::vector<dataio::GestureSample> gen_dataset(
    std::size_t n_users, std::size_t samples_per_user,
    std::pair<std::size_t, std::size_t> t_range, std::uint64_t seed,
    float separation = 1.0f);

} // namespace tsn::synthgen
