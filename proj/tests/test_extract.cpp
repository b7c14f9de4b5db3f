#include <doctest.h>

#include <string>
#include <vector>

#include "loh/extract.hpp"
#include "loh/hypothesis.hpp"
#include "loh/parser.hpp"

using namespace loh;

namespace {

ParameterStore store_with(std::vector<std::pair<int, std::vector<double>>> zs) {
  ParameterStore ps;
  for (auto& [id, z] : zs) {
    WeightBlock b;
    b.z = std::move(z);
    ps.blocks[id] = b;
  }
  return ps;
}

std::string simp(const std::string& src) {
  return format_formula(simplify(parse_formula(src)));
}

}  // namespace

TEST_SUITE("extract") {

TEST_CASE("discretize takes the argmax, ties go low and get reported") {
  ParameterStore ps = store_with({{0, {0.1, 0.9, 0.2}}, {1, {0.5, 0.5}}, {2, {-1.0}}});
  DiscretizeResult r = discretize(ps);
  CHECK(r.indices == IndexAssignment{{0, 1}, {1, 0}, {2, 0}});
  CHECK(r.tied_blocks == std::vector<int>{1});
}

TEST_CASE("extract pins the argmax branch per choice") {
  Program p = parse_program("out y = [a, b] & ![c, d];");
  CompiledGraph g = compile(p);
  ParameterStore ps = store_with({{0, {-0.3, 0.8}}, {1, {0.2, -0.2}}});
  ExtractedRuleSet rs = extract(g, ps, p);
  REQUIRE(rs.rules.size() == 1);
  CHECK(rs.rules[0].first == "y");
  CHECK(format_formula(rs.rules[0].second) == "b & !c");
  CHECK(rs.indices == IndexAssignment{{0, 1}, {1, 0}});
  CHECK(structurally_equal(rs.rules[0].second, eval_indices(p, "y", rs.indices), false));
}

TEST_CASE("extraction agrees with the rounded continuous model") {
  Program p = parse_program(
      "let pick = [a, !b, b & c];\n"
      "out y = pick | ![a, c];\n"
      "out z = pick & [b, true];\n");
  CompiledGraph g = compile(p);
  Rng rng(91);
  ParameterStore ps = ParameterStore::init(g, rng);
  ExtractedRuleSet rs = extract(g, ps, p);
  VerifySummary s = verify_lossless_exhaustive(g, ps, rs);
  CHECK(s.exhaustive);
  CHECK(s.samples == 16);  // 2^3 input rows, two outputs each
  CHECK(s.mismatches == 0);
}

TEST_CASE("verification flags rows that sit on the threshold") {
  Program p = parse_program("out y = [a, b];");
  CompileOptions opts;
  opts.force_variant = Variant::disjunctive;
  CompiledGraph g = compile(p, opts);
  ParameterStore ps = store_with({{0, {0.0, 0.0}}});  // w = (0.5, 0.5), a tie
  ExtractedRuleSet rs = extract(g, ps, p);
  CHECK(rs.tied_blocks == std::vector<int>{0});
  Matrix x(1, 2);
  x.at(0, 0) = 1.0;
  x.at(0, 1) = 0.0;
  VerifySummary s = verify_lossless(g, ps, rs, x);
  CHECK(s.samples == 1);
  CHECK(s.near_threshold == 1);
  CHECK(s.mismatches == 1);  // continuous lands exactly on 0.5, rounds down
}

TEST_CASE("verification refuses product semantics") {
  Program p = parse_program("out y = [a, b];");
  CompileOptions opts;
  opts.semantics = Semantics::product;
  CompiledGraph g = compile(p, opts);
  ParameterStore ps = store_with({{0, {0.4, -0.4}}});
  ExtractedRuleSet rs = extract(g, ps, p);
  Matrix x(1, 2);
  try {
    verify_lossless(g, ps, rs, x);
    FAIL("expected a refusal");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("only sound for min/max") != std::string::npos);
    CHECK(std::string(e.what()).find(".42") != std::string::npos);
  }
}

TEST_CASE("exhaustive verification caps the input count") {
  std::string src = "out y = ";
  for (int i = 0; i < 21; ++i) {
    if (i) src += " & ";
    src += "x" + std::to_string(i);
  }
  src += ";";
  Program p = parse_program(src);
  CompiledGraph g = compile(p);
  ExtractedRuleSet rs = extract(g, {}, p);
  CHECK_THROWS_AS(verify_lossless_exhaustive(g, {}, rs), ValidationError);
}

TEST_CASE("simplify folds constants") {
  CHECK(simp("a & true") == "a");
  CHECK(simp("a & false") == "false");
  CHECK(simp("a | false") == "a");
  CHECK(simp("a | true") == "true");
  CHECK(simp("!true") == "false");
  CHECK(simp("!false & a | b & true") == "a | b");
  CHECK(simp("a") == "a");
}

TEST_CASE("simplify cleans flat clauses") {
  CHECK(simp("a | a | b") == "a | b");
  CHECK(simp("a & a & b") == "a & b");
  CHECK(simp("a | !a | b") == "true");
  CHECK(simp("a & !a & b") == "false");
  CHECK(simp("!a | b | !a") == "!a | b");
}

TEST_CASE("simplify removes subsumed clauses") {
  CHECK(simp("(a | b) & (a | b | c)") == "a | b");
  CHECK(simp("a & b | a & b & c") == "a & b");
  CHECK(simp("(a | b) & (c | d) & (a | b | d)") == "(a | b) & (c | d)");
  CHECK(simp("a & (a | b)") == "a");
}

TEST_CASE("extract with simplification stays equivalent") {
  Program p = parse_program("out y = [a, true] & [b | b, false] & [c | !c | a, b];");
  CompiledGraph g = compile(p);
  ParameterStore ps = store_with({{0, {1.0, -1.0}},         // a
                                  {1, {2.0, -2.0}},         // b | b
                                  {2, {0.5, -0.5, -1.0}}});  // c | !c | a, a tautology
  ExtractedRuleSet raw = extract(g, ps, p, false);
  ExtractedRuleSet simplified = extract(g, ps, p, true);
  CHECK(format_formula(raw.rules[0].second) == "a & (b | b) & (c | !c | a)");
  CHECK(format_formula(simplified.rules[0].second) == "a & b");
  CHECK(verify_lossless_exhaustive(g, ps, simplified).mismatches == 0);
}

TEST_CASE("simplify does not rewrite negated chains") {
  FormulaPtr f = parse_formula("a & !(!c & c)");
  CHECK(format_formula(simplify(f)) == "a & !(!c & c)");
}

TEST_CASE("tied blocks surface through extract") {
  Program p = parse_program("out y = [a, b] & c;");
  CompiledGraph g = compile(p);
  ParameterStore ps = store_with({{0, {0.7, 0.7}}});
  ExtractedRuleSet rs = extract(g, ps, p);
  CHECK(rs.tied_blocks == std::vector<int>{0});
  CHECK(format_formula(rs.rules[0].second) == "a & c");
}

}  // TEST_SUITE
