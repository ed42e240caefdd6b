#pragma once

// Execution policy shared by the data-parallel kernels. Every kernel keeps a
// plain serial loop as the reference path; the parallel path uses OpenMP over
// fixed-size chunks so that reductions combine in the same order regardless
// of the thread count.

#include <algorithm>
#include <cstdint>

namespace abc {

enum class Exec { serial, parallel };

inline constexpr std::uint64_t kChunk = 4096;

inline std::uint64_t chunk_count(std::uint64_t n) { return (n + kChunk - 1) / kChunk; }

void set_worker_count(int workers);
int worker_count();

}  // namespace abc
