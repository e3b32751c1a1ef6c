#include "tsn/synthgen.hpp"

#include "tsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tsn::synthgen {

namespace {

constexpr float kPi = 3.14159265358979323846f;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 round over the combined value
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

float grid(float lo, float hi, std::size_t idx, std::size_t n) {
    if (n <= 1) return 0.5f * (lo + hi);
    return lo + (hi - lo) * static_cast<float>(idx) / static_cast<float>(n - 1);
}

// Blend a grid position toward the range midpoint as separation drops.
float place(float lo, float hi, std::size_t idx, std::size_t n, float sep) {
    const float mid = 0.5f * (lo + hi);
    return mid + sep * (grid(lo, hi, idx, n) - mid);
}

} // namespace

UserProfile gen_user(std::uint64_t rng_seed, std::size_t user_index,
                     std::size_t n_users, float separation) {
    UserProfile u;
    u.user_id = "user" + std::to_string(user_index);
    u.seed = mix(rng_seed, user_index);
    std::mt19937 rng(static_cast<std::uint32_t>(u.seed));
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);

    // Shuffle grid slots per seed so the user order carries no information.
    std::vector<std::size_t> slots(n_users);
    for (std::size_t i = 0; i < n_users; ++i) slots[i] = i;
    std::mt19937 slot_rng(static_cast<std::uint32_t>(mix(rng_seed, 0x5107)));
    std::shuffle(slots.begin(), slots.end(), slot_rng);
    const std::size_t slot = slots[user_index];

    u.pressure_mean = place(0.3f, 0.9f, slot, n_users, separation);
    u.area_mean = place(0.3f, 0.8f, (slot + n_users / 2) % n_users, n_users,
                        separation);
    u.speed_scale = place(0.5f, 2.0f, slot, n_users, separation);
    u.curvature = place(-0.5f, 0.5f, (slot * 3) % n_users, n_users, separation);
    u.tremor_freq = place(0.05f, 0.45f, (slot * 5 + 1) % n_users, n_users,
                          separation);
    u.pressure_jitter = 0.02f + 0.01f * unit(rng) * separation;
    return u;
}

dataio::GestureSample gen_sample(const UserProfile& profile, std::size_t T,
                                 std::size_t sample_index) {
    if (T < 8)
        throw ConfigError("gen_sample: T must be >= 8, got " +
                          std::to_string(T));
    std::mt19937 rng(static_cast<std::uint32_t>(mix(profile.seed, sample_index)));
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::normal_distribution<float> gauss(0.0f, 1.0f);

    dataio::GestureSample s;
    s.user_id = profile.user_id;
    s.sample_id = "s" + std::to_string(sample_index);
    s.rows.reserve(T);

    const float phase = 2.0f * kPi * unit(rng);
    const float omega = 2.0f * kPi * profile.tremor_freq;
    const float amp = 40.0f * profile.speed_scale;
    const float cx = 200.0f + 100.0f * unit(rng);
    const float cy = 300.0f + 100.0f * unit(rng);
    const float drift = 2.0f * profile.speed_scale * (unit(rng) - 0.5f);

    float t = 0.0f;
    float p_noise = 0.0f, a_noise = 0.0f;
    const float ar = 0.8f;
    for (std::size_t i = 0; i < T; ++i) {
        const float fi = static_cast<float>(i);
        t += (8.0f + 8.0f * unit(rng)) / profile.speed_scale;
        p_noise = ar * p_noise + profile.pressure_jitter * gauss(rng);
        a_noise = ar * a_noise + 0.02f * gauss(rng);
        dataio::GestureSample::Row row;
        row.t = t;
        row.x = cx + amp * std::sin(omega * fi + phase) + drift * fi;
        row.y = cy + amp * std::cos(omega * fi + phase) +
                profile.curvature * 0.01f * fi * fi;
        row.p = std::clamp(profile.pressure_mean + p_noise, 0.0f, 1.0f);
        row.a = std::clamp(profile.area_mean + a_noise, 0.0f, 1.0f);
        s.rows.push_back(row);
    }
    return s;
}

std::vector<dataio::GestureSample> gen_dataset(
    std::size_t n_users, std::size_t samples_per_user,
    std::pair<std::size_t, std::size_t> t_range, std::uint64_t seed,
    float separation) {
    if (n_users < 2)
        throw DataError("gen_dataset: need at least 2 users");
    if (t_range.first < 8 || t_range.second < t_range.first)
        throw ConfigError("gen_dataset: bad length range");
    std::vector<dataio::GestureSample> out;
    out.reserve(n_users * samples_per_user);
    for (std::size_t u = 0; u < n_users; ++u) {
        const UserProfile profile = gen_user(seed, u, n_users, separation);
        std::mt19937 len_rng(
            static_cast<std::uint32_t>(mix(profile.seed, 0xbeef)));
        std::uniform_int_distribution<std::size_t> len_dist(t_range.first,
                                                            t_range.second);
        for (std::size_t k = 0; k < samples_per_user; ++k)
            out.push_back(gen_sample(profile, len_dist(len_rng), k));
    }
    return out;
}

} // namespace tsn::synthgen
