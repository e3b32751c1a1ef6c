#include "tsn/dataio.hpp"

#include "tsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace tsn::dataio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

float parse_float(const std::string& s, const std::string& origin,
                  std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const float v = std::stof(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(origin + ":" + std::to_string(line_no) +
                        ": cannot parse number '" + s + "'");
    }
}

} // namespace

std::vector<GestureSample> load_gesture_csv(std::istream& in,
                                            const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "user_id,sample_id,t,x,y,p,a")
        throw DataError(origin + ": bad header '" + line +
                        "', expected 'user_id,sample_id,t,x,y,p,a'");

    std::vector<GestureSample> samples;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 7)
            throw DataError(origin + ":" + std::to_string(line_no) +
                            ": expected 7 columns, got " +
                            std::to_string(fields.size()));
        const std::pair<std::string, std::string> key{fields[0], fields[1]};
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, samples.size());
            samples.push_back({fields[0], fields[1], {}});
            it = index.find(key);
        }
        GestureSample& s = samples[it->second];
        GestureSample::Row row{
            parse_float(fields[2], origin, line_no),
            parse_float(fields[3], origin, line_no),
            parse_float(fields[4], origin, line_no),
            parse_float(fields[5], origin, line_no),
            parse_float(fields[6], origin, line_no),
        };
        if (!s.rows.empty() && row.t < s.rows.back().t)
            throw DataError(origin + ": non-monotone timestamp in sample " +
                            s.user_id + "/" + s.sample_id + " at line " +
                            std::to_string(line_no));
        s.rows.push_back(row);
    }
    return samples;
}

std::vector<GestureSample> load_gesture_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return load_gesture_csv(in, path);
}

void write_gesture_csv(const std::string& path,
                       const std::vector<GestureSample>& samples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "user_id,sample_id,t,x,y,p,a\n";
    for (const auto& s : samples)
        for (const auto& r : s.rows) {
            out << s.user_id << ',' << s.sample_id << ',';
            std::ostringstream row;
            row.precision(7);
            row << r.t << ',' << r.x << ',' << r.y << ',' << r.p << ',' << r.a;
            out << row.str() << '\n';
        }
    if (!out) throw DataError("write failed for " + path);
}

void first_order_difference(const GestureSample& in, std::vector<float>& t_out,
                            std::vector<float>& x_out,
                            std::vector<float>& y_out) {
    const std::size_t n = in.rows.size();
    t_out.assign(n, 0.0f);
    x_out.assign(n, 0.0f);
    y_out.assign(n, 0.0f);
    for (std::size_t i = 1; i < n; ++i) {
        t_out[i] = in.rows[i].t - in.rows[i - 1].t;
        x_out[i] = in.rows[i].x - in.rows[i - 1].x;
        y_out[i] = in.rows[i].y - in.rows[i - 1].y;
    }
}

std::vector<float> zscore_normalize(const std::vector<float>& values) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (float v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n); // population std
    const double sd = std::sqrt(var);
    std::vector<float> out(n, 0.0f);
    if (sd < 1e-8) return out;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>((values[i] - mean) / sd);
    return out;
}

ProcessedSample pad_and_window_mask(const Tensor& features, std::size_t sigma) {
    if (sigma < 1) throw ConfigError("pad_and_window_mask: sigma must be >= 1");
    if (features.rank() != 2 || features.dim(1) != kChannels)
        throw DataError("pad_and_window_mask: need [T x 5] features, got " +
                        shape_str(features.shape()));
    const std::size_t t = features.dim(0);
    const std::size_t t_pad = (t + sigma - 1) / sigma * sigma;
    std::vector<float> data(t_pad * kChannels, 0.0f);
    std::copy(features.data().begin(), features.data().end(), data.begin());

    ProcessedSample out;
    out.features = Tensor({t_pad, kChannels}, std::move(data));
    out.raw_len = t;
    out.pad_len = t_pad;
    const std::size_t windows = t_pad / sigma;
    out.window_valid.resize(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t start = w * sigma;
        const std::size_t pad_count = start >= t ? sigma : (start + sigma > t ? start + sigma - t : 0);
        out.window_valid[w] = !(pad_count * 2 > sigma); // invalid iff > half padding
    }
    // Very short samples can fail the half-padding rule everywhere; keep the
    // first window (it holds all real rows) so downstream always has input.
    if (std::find(out.window_valid.begin(), out.window_valid.end(), true) ==
        out.window_valid.end())
        out.window_valid[0] = true;
    return out;
}

ProcessedSample preprocess(const GestureSample& sample, std::size_t sigma) {
    if (sample.rows.empty())
        throw DataError("preprocess: empty sample " + sample.user_id + "/" +
                        sample.sample_id);
    const std::size_t n = sample.rows.size();
    std::vector<float> t, x, y;
    first_order_difference(sample, t, x, y);
    std::vector<float> p(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = sample.rows[i].p;
        a[i] = sample.rows[i].a;
    }
    p = zscore_normalize(p);
    a = zscore_normalize(a);
    std::vector<float> feat(n * kChannels);
    for (std::size_t i = 0; i < n; ++i) {
        feat[i * kChannels + 0] = t[i];
        feat[i * kChannels + 1] = x[i];
        feat[i * kChannels + 2] = y[i];
        feat[i * kChannels + 3] = p[i];
        feat[i * kChannels + 4] = a[i];
    }
    ProcessedSample out =
        pad_and_window_mask(Tensor({n, kChannels}, std::move(feat)), sigma);
    out.user_id = sample.user_id;
    out.sample_id = sample.sample_id;
    return out;
}

namespace {

PairBatch make_pairs_impl(const std::vector<std::string>& user_of,
                          std::uint64_t rng_seed, std::size_t n_pairs) {
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < user_of.size(); ++i)
        by_user[user_of[i]].push_back(i);
    if (by_user.size() < 2)
        throw DataError("make_pairs: need at least 2 users, got " +
                        std::to_string(by_user.size()));
    for (const auto& [user, ids] : by_user)
        if (ids.size() < 2)
            throw DataError("make_pairs: user " + user +
                            " has fewer than 2 samples");

    std::mt19937 rng(static_cast<std::uint32_t>(rng_seed));
    PairBatch out;
    if (n_pairs == 0) return out;
    const std::size_t n_pos = n_pairs / 2;
    const std::size_t n_neg = n_pairs - n_pos;

    // Positives: all distinct within-user pairs, shuffled; cycled if more are
    // requested than exist.
    std::vector<Pair> positives;
    for (const auto& [user, ids] : by_user)
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j)
                positives.push_back({ids[i], ids[j], 1});
    std::shuffle(positives.begin(), positives.end(), rng);
    for (std::size_t i = 0; i < n_pos; ++i)
        out.push_back(positives[i % positives.size()]);

    // Negatives: random cross-user picks.
    std::vector<std::string> users;
    users.reserve(by_user.size());
    for (const auto& [user, ids] : by_user) users.push_back(user);
    std::uniform_int_distribution<std::size_t> user_dist(0, users.size() - 1);
    for (std::size_t i = 0; i < n_neg; ++i) {
        std::size_t ua = user_dist(rng), ub = user_dist(rng);
        while (ub == ua) ub = user_dist(rng);
        const auto& sa = by_user[users[ua]];
        const auto& sb = by_user[users[ub]];
        std::uniform_int_distribution<std::size_t> da(0, sa.size() - 1);
        std::uniform_int_distribution<std::size_t> db(0, sb.size() - 1);
        out.push_back({sa[da(rng)], sb[db(rng)], 0});
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

} // namespace

PairBatch make_pairs(const std::vector<GestureSample>& samples,
                     std::uint64_t rng_seed, std::size_t n_pairs) {
    std::vector<std::string> user_of(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        user_of[i] = samples[i].user_id;
    return make_pairs_impl(user_of, rng_seed, n_pairs);
}

PairBatch make_pairs_processed(const std::vector<ProcessedSample>& samples,
                               std::uint64_t rng_seed, std::size_t n_pairs) {
    std::vector<std::string> user_of(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        user_of[i] = samples[i].user_id;
    return make_pairs_impl(user_of, rng_seed, n_pairs);
}

void write_pair_manifest(const std::string& path, const PairBatch& pairs,
                         const std::vector<GestureSample>& samples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const Pair& p : pairs)
        out << "{\"a\": \"" << samples[p.a].user_id << '/'
            << samples[p.a].sample_id << "\", \"b\": \"" << samples[p.b].user_id
            << '/' << samples[p.b].sample_id << "\", \"y\": " << p.label
            << "}\n";
    if (!out) throw DataError("write failed for " + path);
}

} // namespace tsn::dataio
