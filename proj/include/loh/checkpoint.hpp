#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loh/engine.hpp"
#include "loh/train.hpp"

namespace loh {

/// Everything needed to rebuild a trained model: the formula source, the
/// compilation settings, and the gate logits. Metric fields are informative.
struct Checkpoint {
  std::string source_text;
  Semantics semantics = Semantics::godel;
  Variant root_context = Variant::conjunctive;
  std::optional<Variant> force_variant;
  std::map<int, Variant> variant_map;
  std::map<int, WeightBlock> blocks;
  TrainConfig cfg;
  std::uint64_t seed = 0;
  std::vector<std::string> input_names;
  std::vector<std::string> class_names;
  std::string label_column;
  std::map<std::string, double> metrics;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a over the file bytes, as 16 hex digits.
std::string file_hash(const std::string& path);

/// Serializes to the given path via a temporary file and rename, so readers
/// never observe a partial write.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace loh
