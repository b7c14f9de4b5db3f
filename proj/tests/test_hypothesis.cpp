#include <doctest.h>

#include <vector>

#include "loh/hypothesis.hpp"
#include "loh/parser.hpp"

using namespace loh;

namespace {

std::vector<std::string> printed(const std::vector<FormulaPtr>& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs) out.push_back(format_formula(f));
  return out;
}

}  // namespace

TEST_SUITE("hypothesis") {

TEST_CASE("two independent choices") {
  Program p = parse_program("out y = [a, b] & [c, d] & !e;");
  CHECK(space_size(p, "y").decimal == "4");
  CHECK(printed(enumerate_space(p, "y")) ==
        std::vector<std::string>{"a & c & !e", "a & d & !e", "b & c & !e", "b & d & !e"});
}

TEST_CASE("nested choice duplicates collapse under dedup") {
  Program p = parse_program("out y = [a, [b, c]] & ![c, d];");
  // three reachable choices of arity 2 make 8 raw assignments
  CHECK(space_size(p, "y").decimal == "8");
  CHECK(enumerate_space(p, "y").size() == 8);
  EnumerateOptions dedup;
  dedup.dedup = true;
  CHECK(printed(enumerate_space(p, "y", dedup)) ==
        std::vector<std::string>{"a & !c", "a & !d", "b & !c", "b & !d", "c & !c", "c & !d"});
}

TEST_CASE("repeated choice vs shared placeholder") {
  Program raw = parse_program("out y = [a, b] & [a, b];");
  CHECK(printed(enumerate_space(raw, "y")) ==
        std::vector<std::string>{"a & a", "a & b", "b & a", "b & b"});

  Program shared = parse_program("let p = [a, b]; out y = p & p;");
  CHECK(space_size(shared, "y").decimal == "2");
  CHECK(printed(enumerate_space(shared, "y")) == std::vector<std::string>{"a & a", "b & b"});
}

TEST_CASE("eval_indices substitutes branches") {
  Program p = parse_program("out y = [a, b] & [c, d] & !e;");
  CHECK(format_formula(eval_indices(p, "y", {{0, 0}, {1, 1}})) == "a & d & !e");

  Program shared = parse_program("let p = [a, b]; out y = p & p;");
  CHECK(format_formula(eval_indices(shared, "y", {{0, 1}})) == "b & b");

  CHECK_THROWS_AS(eval_indices(p, "y", {{0, 0}}), ValidationError);
  CHECK_THROWS_AS(eval_indices(p, "y", {{0, 5}, {1, 0}}), ValidationError);
}

TEST_CASE("reachability follows placeholders and stops per output") {
  Program p = parse_program(
      "let p = [a, b];\n"
      "out y = p & [c, d, e];\n"
      "out z = [f, g];\n");
  CHECK(reachable_choice_ids(p, "y") == std::vector<int>{0, 1});
  CHECK(reachable_choice_ids(p, "z") == std::vector<int>{2});
  auto arities = reachable_choice_arities(p, "y");
  REQUIRE(arities.size() == 2);
  CHECK(arities[0] == std::pair<int, int>{0, 2});
  CHECK(arities[1] == std::pair<int, int>{1, 3});
  CHECK(space_size(p, "y").decimal == "6");
  CHECK(space_size(p, "z").decimal == "2");
}

TEST_CASE("single branch choice denotes a singleton") {
  Program p = parse_program("out y = [a & !b];");
  CHECK(space_size(p, "y").decimal == "1");
  CHECK(printed(enumerate_space(p, "y")) == std::vector<std::string>{"a & !b"});
}

TEST_CASE("space size beyond 64 bits keeps exact decimal") {
  std::string src = "out y = ";
  for (int i = 0; i < 64; ++i) {
    if (i) src += " & ";
    src += "[a, !a]";
  }
  src += ";";
  Program p = parse_program(src);
  SpaceSize s = space_size(p, "y");
  CHECK(!s.value.has_value());
  CHECK(s.decimal == "18446744073709551616");

  std::string src3 = "out y = ";
  for (int i = 0; i < 50; ++i) {
    if (i) src3 += " & ";
    src3 += "[a, b, c]";
  }
  src3 += ";";
  CHECK(space_size(parse_program(src3), "y").decimal == "717897987691852588770249");
}

TEST_CASE("space size within range also reports the integer") {
  Program p = parse_program("out y = [a, b] & [c, d, e];");
  SpaceSize s = space_size(p, "y");
  REQUIRE(s.value.has_value());
  CHECK(*s.value == 6);
  CHECK(s.decimal == "6");
}

TEST_CASE("enumeration refuses spaces over the limit") {
  Program p = parse_program("out y = [a, b] & [c, d] & !e;");
  EnumerateOptions opts;
  opts.limit = 3;
  CHECK_THROWS_AS(enumerate_space(p, "y", opts), ValidationError);
  opts.limit = 4;
  CHECK(enumerate_space(p, "y", opts).size() == 4);
}

TEST_CASE("enumerated hypotheses are classical") {
  Program p = parse_program("let p = [a, !b]; out y = p | [c, p & true];");
  for (const auto& f : enumerate_space(p, "y")) CHECK(is_discrete(f));
}

TEST_CASE("unknown output label") {
  Program p = parse_program("out y = [a, b];");
  CHECK_THROWS_AS(space_size(p, "nope"), ValidationError);
  CHECK_THROWS_AS(enumerate_space(p, "nope"), ValidationError);
}

}  // TEST_SUITE
