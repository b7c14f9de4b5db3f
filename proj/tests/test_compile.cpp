#include <doctest.h>

#include <algorithm>

#include "loh/engine.hpp"
#include "loh/graph.hpp"
#include "loh/parser.hpp"

using namespace loh;

namespace {

int count_kind(const CompiledGraph& g, NodeKind k) {
  return static_cast<int>(
      std::count_if(g.nodes.begin(), g.nodes.end(),
                    [&](const GraphNode& n) { return n.kind == k; }));
}

}  // namespace

TEST_SUITE("compile") {

TEST_CASE("variant from context and parity") {
  auto v = [](const std::string& src, Variant root = Variant::conjunctive) {
    return resolve_variants(parse_program(src), root).at(0);
  };
  // conjunctive root context
  CHECK(v("out y = [a, b];") == Variant::conjunctive);
  CHECK(v("out y = [a, b] & c;") == Variant::conjunctive);
  CHECK(v("out y = [a, b] | c;") == Variant::disjunctive);
  // negation flips parity
  CHECK(v("out y = ![a, b];") == Variant::disjunctive);
  CHECK(v("out y = !([a, b] | c);") == Variant::conjunctive);
  CHECK(v("out y = !![a, b];") == Variant::conjunctive);
  CHECK(v("out y = !(![a, b] & c);") == Variant::conjunctive);
  // disjunctive root context
  CHECK(v("out y = [a, b];", Variant::disjunctive) == Variant::disjunctive);
  CHECK(v("out y = [a, b] & c;", Variant::disjunctive) == Variant::conjunctive);
}

TEST_CASE("branches inherit the resolved variant as context") {
  Program p = parse_program("out y = [[c, d], b];");
  auto conj = resolve_variants(p, Variant::conjunctive);
  CHECK(conj.at(0) == Variant::conjunctive);
  CHECK(conj.at(1) == Variant::conjunctive);
  auto disj = resolve_variants(p, Variant::disjunctive);
  CHECK(disj.at(0) == Variant::disjunctive);
  CHECK(disj.at(1) == Variant::disjunctive);

  Program q = parse_program("out y = [![c, d], b];");
  CHECK(resolve_variants(q, Variant::conjunctive).at(1) == Variant::disjunctive);
}

TEST_CASE("hints win over context, force wins over hints") {
  Program p = parse_program("out y = [a, b]@disj & c;");
  CHECK(resolve_variants(p, Variant::conjunctive).at(0) == Variant::disjunctive);
  CHECK(resolve_variants(p, Variant::conjunctive, Variant::conjunctive).at(0) ==
        Variant::conjunctive);
  Program q = parse_program("out y = [a, b]@conj | c;");
  CHECK(resolve_variants(q, Variant::conjunctive).at(0) == Variant::conjunctive);
  CHECK(resolve_variants(q, Variant::conjunctive, Variant::disjunctive).at(0) ==
        Variant::disjunctive);
}

TEST_CASE("shared declaration resolves once, first visit wins") {
  Program p = parse_program("let p = [a, b]; out y = p & c; out z = p | d;");
  auto vm = resolve_variants(p, Variant::conjunctive);
  CHECK(vm.at(0) == Variant::conjunctive);
  Program q = parse_program("let p = [a, b]; out y = p | c; out z = p & d;");
  CHECK(resolve_variants(q, Variant::conjunctive).at(0) == Variant::disjunctive);
}

TEST_CASE("connective chains flatten to one reduce") {
  CompiledGraph g = compile(parse_program("out y = a & b & c & d;"));
  CHECK(g.input_names == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(count_kind(g, NodeKind::min_reduce) == 1);
  CHECK(count_kind(g, NodeKind::max_reduce) == 0);
  REQUIRE(g.outputs.size() == 1);
  CHECK(g.outputs[0].first == "y");
  CHECK(g.nodes[g.outputs[0].second].children.size() == 4);

  CompiledGraph h = compile(parse_program("out y = a | (b | c);"));
  CHECK(count_kind(h, NodeKind::max_reduce) == 1);
  CHECK(h.nodes[h.outputs[0].second].children.size() == 3);
}

TEST_CASE("mixed connectives keep their own reduces") {
  CompiledGraph g = compile(parse_program("out y = a & (b | c) & d;"));
  CHECK(count_kind(g, NodeKind::min_reduce) == 1);
  CHECK(count_kind(g, NodeKind::max_reduce) == 1);
}

TEST_CASE("disjunctive choice emits gate/branch pairs under a max") {
  CompiledGraph g = compile(parse_program("out y = [a, b] | c;"));
  // two gate weights, two min pairs, one outer max for the choice, one root max
  CHECK(count_kind(g, NodeKind::gate_weight) == 2);
  CHECK(count_kind(g, NodeKind::gate_co_weight) == 0);
  CHECK(count_kind(g, NodeKind::min_reduce) == 2);
  CHECK(count_kind(g, NodeKind::max_reduce) == 2);
  REQUIRE(g.weight_blocks.size() == 1);
  CHECK(g.weight_blocks[0].choice_id == 0);
  CHECK(g.weight_blocks[0].arity == 2);
  CHECK(g.weight_blocks[0].variant == Variant::disjunctive);
}

TEST_CASE("conjunctive choice uses co-weights dually") {
  CompiledGraph g = compile(parse_program("out y = [a, b] & c;"));
  CHECK(count_kind(g, NodeKind::gate_co_weight) == 2);
  CHECK(count_kind(g, NodeKind::gate_weight) == 0);
  CHECK(count_kind(g, NodeKind::max_reduce) == 2);
  CHECK(count_kind(g, NodeKind::min_reduce) == 2);
  CHECK(g.weight_blocks[0].variant == Variant::conjunctive);
}

TEST_CASE("single branch choice wires through with a frozen block") {
  CompiledGraph g = compile(parse_program("out y = [a & b];"));
  CHECK(count_kind(g, NodeKind::gate_weight) == 0);
  CHECK(count_kind(g, NodeKind::gate_co_weight) == 0);
  REQUIRE(g.weight_blocks.size() == 1);
  CHECK(g.weight_blocks[0].arity == 1);
  Rng rng(1);
  ParameterStore ps = ParameterStore::init(g, rng);
  CHECK(ps.blocks.at(0).z == std::vector<double>{0.0});
  CHECK(!ps.blocks.at(0).trainable);
}

TEST_CASE("constants and lookups") {
  CompiledGraph g = compile(parse_program("out y = a & true;"));
  CHECK(count_kind(g, NodeKind::constant) == 1);
  CHECK(g.input_index("a") == 0);
  CHECK(g.input_index("nope") == -1);
  CHECK(g.block(0) == nullptr);

  CompiledGraph h = compile(parse_program("out y = [a, b];"));
  REQUIRE(h.block(0) != nullptr);
  CHECK(h.block(0)->arity == 2);
}

TEST_CASE("placeholder subgraphs are shared") {
  CompiledGraph g = compile(parse_program("let p = [a, b]; out y = p & p;"));
  // one weight block, one choice realization reused by both operands
  CHECK(g.weight_blocks.size() == 1);
  CHECK(count_kind(g, NodeKind::gate_co_weight) == 2);
}

TEST_CASE("variant map recorded on the graph") {
  Program p = parse_program("out y = [a, b] | ![c, d];");
  CompileOptions opts;
  opts.root_context = Variant::conjunctive;
  CompiledGraph g = compile(p, opts);
  CHECK(g.variant_map == resolve_variants(p, Variant::conjunctive));
  CHECK(g.variant_map.at(0) == Variant::disjunctive);
  CHECK(g.variant_map.at(1) == Variant::conjunctive);

  opts.force_variant = Variant::disjunctive;
  CHECK(compile(p, opts).variant_map.at(1) == Variant::disjunctive);
}

TEST_CASE("semantics flag is carried, not baked into the shape") {
  Program p = parse_program("out y = (a & b) | c;");
  CompileOptions godel;
  CompileOptions product;
  product.semantics = Semantics::product;
  CompiledGraph g = compile(p, godel);
  CompiledGraph h = compile(p, product);
  CHECK(g.semantics == Semantics::godel);
  CHECK(h.semantics == Semantics::product);
  REQUIRE(g.nodes.size() == h.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) CHECK(g.nodes[i].kind == h.nodes[i].kind);
}

TEST_CASE("children precede parents") {
  CompiledGraph g = compile(parse_program("let p = [a, !b]; out y = p | [c & d, e];"));
  for (size_t i = 0; i < g.nodes.size(); ++i)
    for (int c : g.nodes[i].children) CHECK(c < static_cast<int>(i));
}

TEST_CASE("graph json mentions the interesting parts") {
  CompiledGraph g = compile(parse_program("out y = [a, b] & c;"));
  std::string js = graph_to_json(g);
  CHECK(js.find("\"gate_co_weight\"") != std::string::npos);
  CHECK(js.find("\"input_names\"") != std::string::npos);
  CHECK(js.find("\"y\"") != std::string::npos);
}

TEST_CASE("string conversions round trip") {
  CHECK(semantics_from_string(to_string(Semantics::product)) == Semantics::product);
  CHECK(variant_from_string(to_string(Variant::disjunctive)) == Variant::disjunctive);
  CHECK_THROWS_AS(semantics_from_string("fuzzy"), Error);
  CHECK_THROWS_AS(variant_from_string("both"), Error);
}

TEST_CASE("substitute_discrete matches eval_indices") {
  Program p = parse_program("let p = [a, b]; out y = p & ![c, d];");
  CompiledGraph g = compile(p);
  IndexAssignment idx{{0, 1}, {1, 0}};
  CHECK(structurally_equal(substitute_discrete(g, "y", idx), eval_indices(p, "y", idx), false));
}

}  // TEST_SUITE
