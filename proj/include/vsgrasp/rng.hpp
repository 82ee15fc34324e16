#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vsgrasp {

using Rng = std::mt19937_64;

// Named-stream splitting: every noise site draws from its own generator whose
// seed depends only on the run seed and the site name, so adding or reordering
// noise sites never shifts the samples of the others.
std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view stream_name);
Rng make_stream(std::uint64_t run_seed, std::string_view stream_name);

}  // namespace vsgrasp
