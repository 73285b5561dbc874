#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace torusmix::util {

// Worker count: hardware concurrency capped by TORUSMIX_THREADS.
int thread_count();

// Row-parallel loop with deterministic output (each row owned by one task).
void parallel_rows(int rows, const std::function<void(int)>& body);

// FNV-1a 64-bit content hash, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

// Write-temp-then-rename.
void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace torusmix::util
