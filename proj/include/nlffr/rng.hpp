#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nlffr {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a of a stream label, used to name substreams.
std::uint64_t stream_tag(std::string_view label);

// Deterministic seed for substream (label, index) of a base seed. Distinct
// (label, index) pairs give statistically independent engines, so work can be
// split across threads without changing any draw.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

Engine make_engine(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

}  // namespace nlffr
