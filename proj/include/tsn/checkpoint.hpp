#pragma once

#include "tsn/adam.hpp"
#include "tsn/tensor.hpp"

#include <cstdint>
#include <string>

// Binary checkpoint: magic "TSQN", format version u32, tensor count u32,
// then per tensor: name length u16 + UTF-8 name, rank u8, dims u32 LE,
// f32 LE data. A CRC32 of the tensor payload trails the file. Files are
// written to a temp path and renamed so readers never see partial output.

namespace tsn::checkpoint {

constexpr std::uint32_t kFormatVersion = 1;

void save(const std::string& path, const ParamSet& params);

// Throws DataError on bad magic, version, CRC, or duplicate tensor names.
ParamSet load(const std::string& path);

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

} // namespace tsn::checkpoint
