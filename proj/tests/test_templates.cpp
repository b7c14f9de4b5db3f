#include <doctest.h>

#include "loh/hypothesis.hpp"
#include "loh/parser.hpp"
#include "loh/templates.hpp"

using namespace loh;

TEST_SUITE("templates") {

TEST_CASE("select_rules wraps each rule against true") {
  auto r1 = parse_formula("a | !b");
  auto r2 = parse_formula("c");
  Program p = select_rules({r1, r2});
  CHECK(format_program(p) == "out y = [a | !b, true]@conj & [c, true]@conj;\n");
  CHECK(space_size(p, "y").decimal == "4");
  Program bare = select_rules({r1, r2}, false);
  CHECK(format_program(bare) == "out y = [a | !b, true] & [c, true];\n");
  CHECK_THROWS_AS(select_rules({}), ValidationError);
}

TEST_CASE("select_rules space doubles per rule") {
  std::vector<FormulaPtr> rules;
  for (int i = 0; i < 7; ++i) rules.push_back(var("r" + std::to_string(i)));
  CHECK(space_size(select_rules(rules), "y").decimal == "128");
}

TEST_CASE("select_rules leaves embedded choice ids alone") {
  auto with_choice = parse_formula("[a, b] & c");  // takes id 0
  Program p = select_rules({with_choice});
  p.validate();
  CHECK(space_size(p, "y").decimal == "4");  // inner choice times the wrapper
}

TEST_CASE("one_per_set picks one rule per group") {
  std::vector<std::vector<FormulaPtr>> sets{
      {var("a"), var("b")},
      {var("c"), var("d"), var("e")},
  };
  Program p = one_per_set(sets);
  CHECK(format_program(p) == "out y = [a, b]@conj & [c, d, e]@conj;\n");
  CHECK(space_size(p, "y").decimal == "6");
  CHECK_THROWS_AS(one_per_set({{var("a")}, {}}), ValidationError);
}

TEST_CASE("width-k clause over the full literal pool") {
  int next = 0;
  auto f = width_k_clause({"a", "b", "c"}, 2, ClauseLiterals::both, next);
  CHECK(next == 2);
  CHECK(format_formula(f) == "[a, b, c, !a, !b, !c]@disj | [a, b, c, !a, !b, !c]@disj");

  std::vector<std::string> v10;
  for (int i = 1; i <= 10; ++i) v10.push_back("v" + std::to_string(i));
  int id = 0;
  Program p;
  p.outputs.push_back({"y", width_k_clause(v10, 3, ClauseLiterals::both, id)});
  CHECK(space_size(p, "y").decimal == "8000");
}

TEST_CASE("width-k literal pool variants") {
  int next = 0;
  auto pos = width_k_clause({"a", "b"}, 2, ClauseLiterals::positive, next);
  CHECK(format_formula(pos) == "[a, b]@disj | [a, b]@disj");
  next = 0;
  auto def = width_k_clause({"a", "b"}, 3, ClauseLiterals::definite, next);
  CHECK(format_formula(def) == "[!a, !b]@disj | [!a, !b]@disj | [a, b]@disj");
  CHECK_THROWS_AS(width_k_clause({}, 2, ClauseLiterals::both, next), ValidationError);
}

TEST_CASE("definite clause shape and sizes") {
  int next = 0;
  auto f = definite_clause({"a", "b"}, std::nullopt, next);
  CHECK(next == 3);
  CHECK(format_formula(f) == "[!a, false]@disj | [!b, false]@disj | [a, b]@disj");

  next = 0;
  auto headed = definite_clause({"a", "b"}, std::string("b"), next);
  CHECK(next == 2);
  CHECK(format_formula(headed) == "[!a, false]@disj | [!b, false]@disj | b");

  std::vector<std::string> v10;
  for (int i = 1; i <= 10; ++i) v10.push_back("v" + std::to_string(i));
  int id = 0;
  Program p;
  p.outputs.push_back({"y", definite_clause(v10, std::nullopt, id)});
  CHECK(space_size(p, "y").decimal == "10240");
  id = 0;
  Program q;
  q.outputs.push_back({"y", definite_clause(v10, std::string("v7"), id)});
  CHECK(space_size(q, "y").decimal == "1024");
}

TEST_CASE("layered net names neurons and shares them") {
  Program p = layered_net({"a", "b"},
                          {LayerSpec{Variant::conjunctive, 2, NeuronStyle::subset, 0},
                           LayerSpec{Variant::disjunctive, 1, NeuronStyle::subset, 0}},
                          1);
  REQUIRE(p.declarations.size() == 3);
  CHECK(p.declarations[0].name == "n1_1");
  CHECK(p.declarations[1].name == "n1_2");
  CHECK(p.declarations[2].name == "n2_1");
  REQUIRE(p.outputs.size() == 1);
  CHECK(p.outputs[0].label == "y");
  // subset neuron: one pick per predecessor, absorbing branch matches the connective
  CHECK(format_formula(p.declarations[0].body) == "[a, true]@conj & [b, true]@conj");
  CHECK(format_formula(p.declarations[2].body) == "[n1_1, false]@disj | [n1_2, false]@disj");
  CHECK(p.dependency_order() == std::vector<std::string>{"n1_1", "n1_2", "n2_1"});
}

TEST_CASE("layered net styles") {
  Program neg = layered_net({"a"}, {LayerSpec{Variant::disjunctive, 1,
                                              NeuronStyle::subset_negation, 0}},
                            1);
  CHECK(format_formula(neg.declarations[0].body) == "[a, !a, false]@disj");

  Program fixed = layered_net({"a", "b", "c"},
                              {LayerSpec{Variant::conjunctive, 2, NeuronStyle::fixed_k, 3},
                               LayerSpec{Variant::disjunctive, 1, NeuronStyle::subset, 0}},
                              1);
  // width 2 with k=3 picks over all three inputs per slot
  CHECK(format_formula(fixed.declarations[0].body) ==
        "[a, b, c]@conj & [a, b, c]@conj & [a, b, c]@conj");
  // 2 * 3 first-layer choices plus 2 output-layer subset choices
  CHECK(reachable_choice_ids(fixed, "y").size() == 8);
}

TEST_CASE("layered net multi-output labels") {
  Program p = layered_net({"a", "b"},
                          {LayerSpec{Variant::conjunctive, 3, NeuronStyle::subset, 0}}, 3);
  REQUIRE(p.outputs.size() == 3);
  CHECK(p.outputs[0].label == "y0");
  CHECK(p.outputs[2].label == "y2");
}

TEST_CASE("layered net validation") {
  CHECK_THROWS_AS(layered_net({}, {LayerSpec{}}, 1), ValidationError);
  CHECK_THROWS_AS(layered_net({"a"}, {}, 1), ValidationError);
  CHECK_THROWS_AS(
      layered_net({"a"}, {LayerSpec{Variant::conjunctive, 2, NeuronStyle::subset, 0}}, 1),
      ValidationError);
  CHECK_THROWS_AS(
      layered_net({"a"}, {LayerSpec{Variant::conjunctive, 1, NeuronStyle::fixed_k, 0}}, 1),
      ValidationError);
}

TEST_CASE("templates compile end to end") {
  std::vector<std::string> v4{"v1", "v2", "v3", "v4"};
  int id = 0;
  std::vector<FormulaPtr> clauses;
  for (int i = 0; i < 3; ++i) clauses.push_back(definite_clause(v4, std::nullopt, id));
  Program p;
  p.outputs.push_back({"y", conjunction_of(clauses)});
  p.validate();
  CompiledGraph g = compile(p);
  CHECK(g.weight_blocks.size() == 15);
  CHECK(g.input_names == v4);
}

}  // TEST_SUITE
