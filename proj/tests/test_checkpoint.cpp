#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "loh/checkpoint.hpp"

using namespace loh;

namespace {

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("loh_ckpt_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Checkpoint sample() {
  Checkpoint c;
  c.source_text = "out y = [a, b] & c;\n";
  c.semantics = Semantics::product;
  c.root_context = Variant::disjunctive;
  c.variant_map[0] = Variant::disjunctive;
  WeightBlock b;
  b.z = {0.125, -3.5};
  b.beta = 0.75;
  b.temperature = 2.0;
  b.trainable = true;
  c.blocks[0] = b;
  WeightBlock frozen;
  frozen.z = {0.0};
  frozen.trainable = false;
  c.blocks[4] = frozen;
  c.cfg.learning_rate = 0.15;
  c.cfg.batch_size = 128;
  c.cfg.max_epochs = 64;
  c.cfg.loss = Loss::mse;
  c.cfg.multiclass = Multiclass::exclusive_top2;
  c.cfg.convergence = Convergence::accuracy_steps;
  c.cfg.max_steps = 5000;
  c.seed = 18446744073709551615ull;
  c.input_names = {"a", "b", "c"};
  c.class_names = {"negative", "positive"};
  c.label_column = "outcome";
  c.metrics["test_f1"] = 0.9375;
  return c;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves every field") {
  TempDir t;
  Checkpoint c = sample();
  save_checkpoint(c, t.path("m.loh"));
  Checkpoint r = load_checkpoint(t.path("m.loh"));

  CHECK(r.source_text == c.source_text);
  CHECK(r.semantics == Semantics::product);
  CHECK(r.root_context == Variant::disjunctive);
  CHECK(!r.force_variant.has_value());
  CHECK(r.variant_map == c.variant_map);
  REQUIRE(r.blocks.size() == 2);
  CHECK(r.blocks.at(0).z == std::vector<double>{0.125, -3.5});
  CHECK(r.blocks.at(0).beta == 0.75);
  CHECK(r.blocks.at(0).temperature == 2.0);
  CHECK(r.blocks.at(0).trainable);
  CHECK(!r.blocks.at(4).trainable);
  CHECK(r.cfg.learning_rate == 0.15);
  CHECK(r.cfg.batch_size == 128);
  CHECK(r.cfg.max_epochs == 64);
  CHECK(r.cfg.loss == Loss::mse);
  CHECK(r.cfg.multiclass == Multiclass::exclusive_top2);
  CHECK(r.cfg.convergence == Convergence::accuracy_steps);
  CHECK(r.cfg.max_steps == 5000);
  CHECK(r.seed == 18446744073709551615ull);
  CHECK(r.input_names == c.input_names);
  CHECK(r.class_names == c.class_names);
  CHECK(r.label_column == "outcome");
  CHECK(r.metrics.at("test_f1") == 0.9375);
}

TEST_CASE("force_variant survives when set") {
  TempDir t;
  Checkpoint c = sample();
  c.force_variant = Variant::conjunctive;
  save_checkpoint(c, t.path("f.loh"));
  Checkpoint r = load_checkpoint(t.path("f.loh"));
  REQUIRE(r.force_variant.has_value());
  CHECK(*r.force_variant == Variant::conjunctive);
}

TEST_CASE("exact doubles survive the json round trip") {
  TempDir t;
  Checkpoint c = sample();
  c.blocks[0].z = {0.1, 1.0 / 3.0, -1e-17, 6.02e23};
  save_checkpoint(c, t.path("d.loh"));
  Checkpoint r = load_checkpoint(t.path("d.loh"));
  CHECK(r.blocks.at(0).z == c.blocks.at(0).z);
}

TEST_CASE("saved file is stable json") {
  TempDir t;
  save_checkpoint(sample(), t.path("a.loh"));
  save_checkpoint(sample(), t.path("b.loh"));
  CHECK(file_hash(t.path("a.loh")) == file_hash(t.path("b.loh")));
  std::ifstream in(t.path("a.loh"));
  std::string first_line;
  std::getline(in, first_line);
  CHECK(first_line == "{");
  CHECK(!std::filesystem::exists(t.path("a.loh.tmp")));
}

TEST_CASE("file_hash is fnv-1a over bytes") {
  TempDir t;
  write_text_atomic(t.path("h1"), "abc");
  CHECK(file_hash(t.path("h1")) == "e71fa2190541574b");
  write_text_atomic(t.path("h2"), "loh\n");
  CHECK(file_hash(t.path("h2")) == "cdeff4ad70d7cef2");
  write_text_atomic(t.path("h3"), "");
  CHECK(file_hash(t.path("h3")) == "cbf29ce484222325");
  CHECK_THROWS_AS(file_hash(t.path("absent")), DataError);
}

TEST_CASE("write_text_atomic replaces the old content") {
  TempDir t;
  write_text_atomic(t.path("w"), "first");
  write_text_atomic(t.path("w"), "second");
  std::ifstream in(t.path("w"), std::ios::binary);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body == "second");
  CHECK(!std::filesystem::exists(t.path("w.tmp")));
}

TEST_CASE("load errors") {
  TempDir t;
  CHECK_THROWS_AS(load_checkpoint(t.path("missing.loh")), DataError);

  write_text_atomic(t.path("junk.loh"), "not json at all");
  CHECK_THROWS_AS(load_checkpoint(t.path("junk.loh")), DataError);

  write_text_atomic(t.path("tag.loh"), "{\"format\": \"other-v9\"}");
  CHECK_THROWS_AS(load_checkpoint(t.path("tag.loh")), DataError);

  write_text_atomic(t.path("partial.loh"), "{\"format\": \"loh-checkpoint-v1\"}");
  CHECK_THROWS_AS(load_checkpoint(t.path("partial.loh")), DataError);
}

}  // TEST_SUITE
