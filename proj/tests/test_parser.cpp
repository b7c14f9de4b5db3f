#include <doctest.h>

#include "loh/parser.hpp"

using namespace loh;

namespace {

std::string reprint(const std::string& src) { return format_formula(parse_formula(src)); }

}  // namespace

TEST_SUITE("parser") {

TEST_CASE("precedence: not over and over or") {
  CHECK(reprint("!a & b | c") == "!a & b | c");
  CHECK(reprint("a | b & c") == "a | b & c");
  CHECK(reprint("(a | b) & c") == "(a | b) & c");
  CHECK(reprint("!(a & b)") == "!(a & b)");
  CHECK(reprint("!!a") == "!!a");
  CHECK(reprint("a & b & c | d") == "a & b & c | d");
}

TEST_CASE("constants and identifiers") {
  auto f = parse_formula("true & !false");
  CHECK(f->children[0]->value);
  CHECK(format_formula(f) == "true & !false");
  CHECK(parse_formula("v_1")->name == "v_1");
  CHECK(parse_formula("_x9")->name == "_x9");
}

TEST_CASE("choices with hints") {
  auto f = parse_formula("[a & b, !c, true]@disj");
  CHECK(f->kind == FormulaKind::choice);
  CHECK(f->children.size() == 3);
  CHECK(f->hint == CompileHint::disjunctive);
  CHECK(reprint("[a, b]@conj") == "[a, b]@conj");
  CHECK(reprint("[a]") == "[a]");
}

TEST_CASE("choice ids assigned in source order") {
  auto f = parse_formula("[a, [b, c]] & [d, e]");
  // outer first, then the nested one, then the sibling
  CHECK(f->children[0]->choice_id == 0);
  CHECK(f->children[0]->children[1]->choice_id == 1);
  CHECK(f->children[1]->choice_id == 2);

  auto g = parse_formula("[a] | [b]", 7);
  CHECK(g->children[0]->choice_id == 7);
  CHECK(g->children[1]->choice_id == 8);
}

TEST_CASE("programs: let, out, comments") {
  Program p = parse_program(
      "# header comment\n"
      "let rule = [a, !a] & b;  # trailing comment\n"
      "out y = rule | c;\n");
  REQUIRE(p.declarations.size() == 1);
  REQUIRE(p.outputs.size() == 1);
  CHECK(p.declarations[0].name == "rule");
  CHECK(p.outputs[0].label == "y");
  // the identifier `rule` parses as a placeholder because it was declared
  CHECK(p.outputs[0].root->children[0]->kind == FormulaKind::placeholder);
  CHECK(format_program(p) == "let rule = [a, !a] & b;\nout y = rule | c;\n");
}

TEST_CASE("undeclared identifiers stay variables") {
  Program p = parse_program("out y = rule & a;");
  CHECK(p.outputs[0].root->children[0]->kind == FormulaKind::var);
}

TEST_CASE("choice ids run across declarations in source order") {
  Program p = parse_program("let p = [a, b]; out y = p & [c, d];");
  CHECK(p.declarations[0].body->choice_id == 0);
  CHECK(p.outputs[0].root->children[1]->choice_id == 1);
}

TEST_CASE("program round trip") {
  const std::string src =
      "let p = [a, b]@conj;\n"
      "out y = p & ![c, d];\n"
      "out z = p | true;\n";
  Program p = parse_program(src);
  CHECK(format_program(p) == src);
  CHECK(structurally_equal(p, parse_program(format_program(p))));
}

TEST_CASE("parse errors carry position") {
  try {
    parse_formula("a &\n& b");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.column == 1);
  }
}

TEST_CASE("rejected inputs") {
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("[]"), ParseError);
  CHECK_THROWS_AS(parse_formula("(a"), ParseError);
  CHECK_THROWS_AS(parse_formula("a b"), ParseError);
  CHECK_THROWS_AS(parse_formula("[a, b]@bogus"), ParseError);
  CHECK_THROWS_AS(parse_program("out y = a"), ParseError);     // missing ;
  CHECK_THROWS_AS(parse_program("let = a;"), ParseError);      // missing name
  CHECK_THROWS_AS(parse_program("y = a;"), ParseError);        // missing keyword
  CHECK_THROWS_AS(parse_program("out true = a;"), ParseError); // keyword as label
}

TEST_CASE("programs validate on parse") {
  CHECK_THROWS_AS(parse_program("let p = a; let p = b; out y = p;"), Error);
  CHECK_THROWS_AS(parse_program("out y = a; out y = b;"), Error);
}

}  // TEST_SUITE
