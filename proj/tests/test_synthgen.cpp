#include "tsn/errors.hpp"
#include "tsn/synthgen.hpp"

#include <doctest.h>

#include <cmath>

using namespace tsn;
using namespace tsn::synthgen;

TEST_CASE("profiles are deterministic per (seed, index)") {
    auto a = gen_user(5, 3, 8, 0.7f);
    auto b = gen_user(5, 3, 8, 0.7f);
    CHECK(a.pressure_mean == b.pressure_mean);
    CHECK(a.speed_scale == b.speed_scale);
    CHECK(a.area_mean == b.area_mean);
    CHECK(a.seed == b.seed);

    // Different dataset seeds give different per-user sample streams. (The
    // grid slot for a given index can coincide across seeds, so compare the
    // derived sample seed, which folds in the full dataset seed.)
    auto c = gen_user(6, 3, 8, 0.7f);
    CHECK(a.seed != c.seed);
}

TEST_CASE("separation 0 collapses parameter means") {
    auto a = gen_user(1, 0, 8, 0.0f);
    auto b = gen_user(1, 7, 8, 0.0f);
    CHECK(a.pressure_mean == doctest::Approx(b.pressure_mean).epsilon(1e-6));
    CHECK(a.area_mean == doctest::Approx(b.area_mean).epsilon(1e-6));
    CHECK(a.speed_scale == doctest::Approx(b.speed_scale).epsilon(1e-6));
}

TEST_CASE("separation 1 spreads pressure means at least 0.05 apart (8 users)") {
    std::vector<float> means;
    for (std::size_t u = 0; u < 8; ++u)
        means.push_back(gen_user(1, u, 8, 1.0f).pressure_mean);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(means[i] >= 0.3f);
        CHECK(means[i] <= 0.9f);
        for (std::size_t j = i + 1; j < 8; ++j)
            CHECK(std::abs(means[i] - means[j]) >= 0.05f);
    }
}

TEST_CASE("samples satisfy gesture invariants") {
    auto profile = gen_user(2, 1, 4, 0.8f);
    auto s = gen_sample(profile, 64, 0);
    CHECK(s.rows.size() == 64);
    for (std::size_t i = 1; i < s.rows.size(); ++i)
        CHECK(s.rows[i].t >= s.rows[i - 1].t);
    for (const auto& r : s.rows) {
        CHECK(r.p >= 0.0f);
        CHECK(r.p <= 1.0f);
        CHECK(r.a >= 0.0f);
        CHECK(r.a <= 1.0f);
    }
    CHECK_THROWS_AS(gen_sample(profile, 7, 0), ConfigError);
}

TEST_CASE("mean pressure tracks the profile over 100 samples") {
    auto profile = gen_user(3, 2, 8, 1.0f);
    double total = 0;
    std::size_t count = 0;
    for (int k = 0; k < 100; ++k) {
        auto s = gen_sample(profile, 96, k);
        for (const auto& r : s.rows) total += r.p;
        count += s.rows.size();
    }
    CHECK(std::abs(total / count - profile.pressure_mean) <= 0.02);
}

TEST_CASE("same-profile samples are closer in stats than distant profiles") {
    // Construct two profiles with pressure means ~0.3 apart and count how
    // often two samples of profile A are closer to each other than a sample
    // of A is to a sample of B in (pressure-mean, area-mean) space.
    UserProfile pa = gen_user(11, 0, 8, 1.0f);
    UserProfile pb = pa;
    pb.pressure_mean = pa.pressure_mean < 0.6f ? pa.pressure_mean + 0.3f
                                               : pa.pressure_mean - 0.3f;
    pb.area_mean = pa.area_mean < 0.5f ? pa.area_mean + 0.3f : pa.area_mean - 0.3f;
    pb.seed += 977;

    auto stats = [](const dataio::GestureSample& s) {
        double p = 0, a = 0;
        for (const auto& r : s.rows) {
            p += r.p;
            a += r.a;
        }
        return std::pair<double, double>{p / s.rows.size(), a / s.rows.size()};
    };
    auto dist2 = [](std::pair<double, double> u, std::pair<double, double> v) {
        const double dp = u.first - v.first, da = u.second - v.second;
        return dp * dp + da * da;
    };

    int closer = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto s1 = stats(gen_sample(pa, 64, 3 * trial));
        auto s2 = stats(gen_sample(pa, 64, 3 * trial + 1));
        auto s3 = stats(gen_sample(pb, 64, 3 * trial + 2));
        if (dist2(s1, s2) < dist2(s1, s3)) ++closer;
    }
    CHECK(closer >= 950);
}

TEST_CASE("datasets: counts, length range, seed sensitivity, bit-identity") {
    auto d = gen_dataset(8, 40, {64, 128}, 1, 1.0f);
    CHECK(d.size() == 320);
    for (const auto& s : d) {
        CHECK(s.rows.size() >= 64);
        CHECK(s.rows.size() <= 128);
    }

    auto d2 = gen_dataset(8, 40, {64, 128}, 1, 1.0f);
    REQUIRE(d2.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d[i].user_id == d2[i].user_id);
        REQUIRE(d[i].rows.size() == d2[i].rows.size());
        for (std::size_t r = 0; r < d[i].rows.size(); ++r) {
            CHECK(d[i].rows[r].t == d2[i].rows[r].t);
            CHECK(d[i].rows[r].x == d2[i].rows[r].x);
            CHECK(d[i].rows[r].p == d2[i].rows[r].p);
        }
    }

    auto d3 = gen_dataset(8, 40, {64, 128}, 2, 1.0f);
    bool differs = false;
    for (std::size_t i = 0; i < d.size() && !differs; ++i)
        differs = d[i].rows.size() != d3[i].rows.size() ||
                  d[i].rows[0].p != d3[i].rows[0].p;
    CHECK(differs);
}
