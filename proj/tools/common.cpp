#include "common.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "loh/checkpoint.hpp"
#include "loh/formula.hpp"

namespace loh::cli {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int resolve_threads(int flag) {
  if (flag >= 1) return flag;
  if (const char* s = std::getenv("LOH_THREADS")) {
    int n = std::atoi(s);
    if (n >= 1) return n;
  }
  return 1;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sequence");
  std::sort(v.begin(), v.end());
  size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void write_manifest(const std::string& path, const std::string& command,
                    nlohmann::json config, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double duration) {
  if (path.empty()) return;
  nlohmann::json j;
  j["command"] = command;
  j["config"] = std::move(config);
  j["seed"] = seed;
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs) in[p] = file_hash(p);
  j["inputs"] = std::move(in);
  j["outputs"] = outputs;
  j["duration_seconds"] = duration;
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace loh::cli
