#include "loh/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace loh {

namespace {

using nlohmann::json;

json config_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"max_epochs", cfg.max_epochs},
              {"beta", cfg.beta},
              {"temperature", cfg.temperature},
              {"temp_decay", cfg.temp_decay},
              {"loss", to_string(cfg.loss)},
              {"multiclass", to_string(cfg.multiclass)},
              {"convergence", to_string(cfg.convergence)},
              {"plateau_steps", cfg.plateau_steps},
              {"max_steps", cfg.max_steps},
              {"threads", cfg.threads}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.beta = j.at("beta").get<double>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.temp_decay = j.at("temp_decay").get<double>();
  cfg.loss = loss_from_string(j.at("loss").get<std::string>());
  cfg.multiclass = multiclass_from_string(j.at("multiclass").get<std::string>());
  cfg.convergence = convergence_from_string(j.at("convergence").get<std::string>());
  cfg.plateau_steps = j.at("plateau_steps").get<int>();
  cfg.max_steps = j.at("max_steps").get<long>();
  cfg.threads = j.at("threads").get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json j;
  j["format"] = "loh-checkpoint-v1";
  j["source"] = c.source_text;
  j["semantics"] = to_string(c.semantics);
  j["root_context"] = to_string(c.root_context);
  if (c.force_variant) j["force_variant"] = to_string(*c.force_variant);
  json variants = json::object();
  for (const auto& [id, v] : c.variant_map) variants[std::to_string(id)] = to_string(v);
  j["variants"] = std::move(variants);
  json blocks = json::object();
  for (const auto& [id, b] : c.blocks) {
    blocks[std::to_string(id)] = json{{"z", b.z},
                                      {"beta", b.beta},
                                      {"temperature", b.temperature},
                                      {"trainable", b.trainable}};
  }
  j["blocks"] = std::move(blocks);
  j["config"] = config_json(c.cfg);
  j["seed"] = c.seed;
  j["input_names"] = c.input_names;
  j["class_names"] = c.class_names;
  j["label_column"] = c.label_column;
  j["metrics"] = c.metrics;
  write_text_atomic(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "' is not valid json: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "loh-checkpoint-v1")
      throw DataError("unsupported checkpoint format");
    Checkpoint c;
    c.source_text = j.at("source").get<std::string>();
    c.semantics = semantics_from_string(j.at("semantics").get<std::string>());
    c.root_context = variant_from_string(j.at("root_context").get<std::string>());
    if (j.contains("force_variant"))
      c.force_variant = variant_from_string(j.at("force_variant").get<std::string>());
    for (const auto& [key, value] : j.at("variants").items())
      c.variant_map[std::stoi(key)] = variant_from_string(value.get<std::string>());
    for (const auto& [key, value] : j.at("blocks").items()) {
      WeightBlock b;
      b.z = value.at("z").get<std::vector<double>>();
      b.beta = value.at("beta").get<double>();
      b.temperature = value.at("temperature").get<double>();
      b.trainable = value.at("trainable").get<bool>();
      c.blocks[std::stoi(key)] = std::move(b);
    }
    c.cfg = config_from_json(j.at("config"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.input_names = j.at("input_names").get<std::vector<std::string>>();
    c.class_names = j.at("class_names").get<std::vector<std::string>>();
    c.label_column = j.at("label_column").get<std::string>();
    if (j.contains("metrics"))
      c.metrics = j.at("metrics").get<std::map<std::string, double>>();
    return c;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash '" + path + "': file not readable");
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << text;
    if (!out.good()) throw DataError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename '" + tmp + "' to '" + path + "'");
}

}  // namespace loh
