#include "tsn/checkpoint.hpp"
#include "tsn/errors.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

using namespace tsn;

namespace {

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamSet sample_params() {
    std::mt19937 rng(61);
    ParamSet p;
    p.add("enc.w", Tensor::uniform({4, 6}, 1.0f, rng, true));
    p.add("enc.b", Tensor::uniform({6}, 1.0f, rng, true));
    p.add("tok.codebook", Tensor::uniform({2, 3, 4}, 1.0f, rng, true));
    p.add("scalarish", Tensor({1}, {3.14159f}));
    return p;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& p) : path(p) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("checkpoint round-trips bit-exactly") {
    TempFile f("/tmp/tsn_ckpt_test.bin");
    ParamSet p = sample_params();
    checkpoint::save(f.path, p);
    ParamSet q = checkpoint::load(f.path);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.items()[i].first == p.items()[i].first);
        CHECK(q.items()[i].second.shape() == p.items()[i].second.shape());
        CHECK(q.items()[i].second.data() == p.items()[i].second.data()); // bitwise
    }
}

TEST_CASE("save -> load -> save produces byte-identical files") {
    TempFile f1("/tmp/tsn_ckpt_a.bin"), f2("/tmp/tsn_ckpt_b.bin");
    ParamSet p = sample_params();
    checkpoint::save(f1.path, p);
    checkpoint::save(f2.path, checkpoint::load(f1.path));
    CHECK(slurp(f1.path) == slurp(f2.path));
}

TEST_CASE("corrupted payload fails the CRC check") {
    TempFile f("/tmp/tsn_ckpt_corrupt.bin");
    checkpoint::save(f.path, sample_params());
    auto bytes = slurp(f.path);
    bytes[bytes.size() / 2] ^= 0x40; // flip a payload bit
    spit(f.path, bytes);
    CHECK_THROWS_AS(checkpoint::load(f.path), DataError);
}

TEST_CASE("bad magic, truncation, and trailing garbage are rejected") {
    TempFile f("/tmp/tsn_ckpt_bad.bin");
    checkpoint::save(f.path, sample_params());
    auto good = slurp(f.path);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    spit(f.path, bad_magic);
    CHECK_THROWS_AS(checkpoint::load(f.path), DataError);

    auto truncated = good;
    truncated.resize(truncated.size() - 7);
    spit(f.path, truncated);
    CHECK_THROWS_AS(checkpoint::load(f.path), DataError);

    auto padded = good;
    padded.push_back(0);
    spit(f.path, padded);
    CHECK_THROWS_AS(checkpoint::load(f.path), DataError);

    CHECK_THROWS_AS(checkpoint::load("/tmp/does_not_exist_tsn.bin"), DataError);
}

TEST_CASE("crc32 reference values") {
    // Standard test vector for the reflected polynomial 0xEDB88320.
    const char* s = "123456789";
    CHECK(checkpoint::crc32(reinterpret_cast<const std::uint8_t*>(s), 9) ==
          0xCBF43926u);
    CHECK(checkpoint::crc32(nullptr, 0) == 0u);
}

TEST_CASE("no temp file left behind after a successful save") {
    TempFile f("/tmp/tsn_ckpt_atomic.bin");
    checkpoint::save(f.path, sample_params());
    std::ifstream tmp(f.path + ".tmp");
    CHECK_FALSE(tmp.good());
}
