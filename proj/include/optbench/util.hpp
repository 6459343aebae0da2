#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace optbench {

std::string trim(std::string_view s);
std::string rtrim_newlines(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Default worker count for pools: physical cores minus one, at least one.
unsigned default_workers();

// Runs fn(i) for i in [0, n) on at most `workers` threads. The first
// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

// Portable seeded sampling. std::shuffle and the std distributions are
// implementation-defined, so subsets would differ across standard libraries;
// these helpers only rely on the fully specified mt19937_64 engine.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);
  std::uint64_t next();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double unit();

 private:
  std::mt19937_64 engine_;
};

// k distinct indices from [0, n), returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        SeededRng& rng);

}  // namespace optbench
