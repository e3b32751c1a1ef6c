#include "tsn/checkpoint.hpp"

#include "tsn/errors.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

namespace tsn::checkpoint {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'Q', 'N'};

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;
    const std::string& path;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw DataError(path + ": truncated checkpoint");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return *p++;
    }
};

} // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = make_crc_table();
    std::uint32_t c = 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i)
        c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

void save(const std::string& path, const ParamSet& params) {
    std::string payload;
    for (const auto& [name, t] : params.items()) {
        if (name.size() > 0xffff)
            throw DataError("checkpoint: tensor name too long: " + name);
        put_u16(payload, static_cast<std::uint16_t>(name.size()));
        payload.append(name);
        payload.push_back(static_cast<char>(t.shape().size()));
        for (std::size_t d : t.shape())
            put_u32(payload, static_cast<std::uint32_t>(d));
        for (float v : t.data()) put_f32(payload, v);
    }

    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kFormatVersion);
    put_u32(buf, static_cast<std::uint32_t>(params.size()));
    buf.append(payload);
    put_u32(buf, crc32(reinterpret_cast<const std::uint8_t*>(payload.data()),
                       payload.size()));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw DataError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot rename " + tmp + " to " + path);
}

ParamSet load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (buf.size() < 16) throw DataError(path + ": truncated checkpoint");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw DataError(path + ": bad magic, not a TSQN checkpoint");

    const auto* bytes = reinterpret_cast<const std::uint8_t*>(buf.data());
    Reader r{bytes + 4, bytes + buf.size() - 4, path};
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw DataError(path + ": unsupported format version " +
                        std::to_string(version));
    const std::uint32_t count = r.u32();

    const std::uint8_t* payload_begin = r.p;
    const std::uint8_t* payload_end = bytes + buf.size() - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= static_cast<std::uint32_t>(bytes[buf.size() - 4 + i])
                      << (8 * i);
    if (crc32(payload_begin, static_cast<std::size_t>(payload_end - payload_begin)) !=
        stored_crc)
        throw DataError(path + ": CRC mismatch, checkpoint corrupt");

    ParamSet params;
    std::set<std::string> seen;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint16_t name_len = r.u16();
        r.need(name_len);
        std::string name(reinterpret_cast<const char*>(r.p), name_len);
        r.p += name_len;
        if (!seen.insert(name).second)
            throw DataError(path + ": duplicate tensor name " + name);
        const std::uint8_t rank = r.u8();
        Shape shape(rank);
        std::size_t n = 1;
        for (std::uint8_t i = 0; i < rank; ++i) {
            shape[i] = r.u32();
            n *= shape[i];
        }
        std::vector<float> data(n);
        r.need(n * 4);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(r.p[i * 4 + b]) << (8 * b);
            std::memcpy(&data[i], &bits, 4);
        }
        r.p += n * 4;
        params.add(name, Tensor(std::move(shape), std::move(data), true));
    }
    if (r.p != payload_end)
        throw DataError(path + ": trailing bytes after last tensor");
    return params;
}

} // namespace tsn::checkpoint
