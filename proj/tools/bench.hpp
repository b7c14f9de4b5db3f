#pragma once

#include <cstdint>
#include <string>

namespace loh::cli {

struct BenchArgs {
  std::string suite;  // select-cnf | select-dnf | one-per-set | definite
  int truth = 5;
  int decoys = 5;  // one-per-set: decoys per set
  int runs = 0;    // 0: suite default (10, definite: 20)
  int epochs = 64;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string manifest;
};

void run_bench(const BenchArgs& a);

}  // namespace loh::cli
