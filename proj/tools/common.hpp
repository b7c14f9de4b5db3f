#pragma once

#include <chrono>
#include <cstdint>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace loh::cli {

// Bad flag combinations and malformed command-line inputs (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path);

// Full-precision float text; keeps metrics CSVs byte-stable across runs.
std::string num_full(double v);
std::string num_short(double v);

// --threads flag if set, else LOH_THREADS, else 1.
int resolve_threads(int flag);

double median(std::vector<double> v);

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Run record written at command end: the resolved config, hashes of the
// input files, and the produced paths. No-op when `path` is empty.
void write_manifest(const std::string& path, const std::string& command,
                    nlohmann::json config, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double duration);

}  // namespace loh::cli
