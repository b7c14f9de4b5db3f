#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace loh {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Program-level invariant violations (bad AST, unresolved names, cycles).
struct ValidationError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

enum class FormulaKind {
  var,
  constant,
  negation,
  conjunction,
  disjunction,
  choice,
  placeholder,
};

enum class CompileHint { none, disjunctive, conjunctive };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Immutable formula node. Connectives are binary; choice nodes hold one
/// ordered branch list and a program-unique id.
struct Formula {
  FormulaKind kind = FormulaKind::constant;
  std::string name;                  // var, placeholder
  bool value = false;                // constant
  std::vector<FormulaPtr> children;  // negation(1), conjunction/disjunction(2), choice(>=1)
  int choice_id = -1;                // choice
  CompileHint hint = CompileHint::none;
};

FormulaPtr var(std::string name);
FormulaPtr constant(bool value);
FormulaPtr negation(FormulaPtr f);
FormulaPtr conjunction(FormulaPtr lhs, FormulaPtr rhs);
FormulaPtr disjunction(FormulaPtr lhs, FormulaPtr rhs);
FormulaPtr choice(std::vector<FormulaPtr> branches, int id,
                  CompileHint hint = CompileHint::none);
FormulaPtr placeholder(std::string name);

/// Left-associative fold; empty input yields the connective's unit.
FormulaPtr conjunction_of(const std::vector<FormulaPtr>& fs);
FormulaPtr disjunction_of(const std::vector<FormulaPtr>& fs);

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b,
                        bool compare_choice_ids = true);

/// Variable names in first-occurrence order (descends into choice branches,
/// not into placeholder declarations).
std::vector<std::string> collect_variables(const FormulaPtr& f);

bool contains_choice(const FormulaPtr& f);

/// True when the formula is classical: no choice nodes, no placeholders.
bool is_discrete(const FormulaPtr& f);

/// Classical evaluation; requires is_discrete.
bool eval_bool(const FormulaPtr& f,
               const std::function<bool(const std::string&)>& value_of);

std::string format_formula(const FormulaPtr& f);

struct Declaration {
  std::string name;
  FormulaPtr body;
};

struct Output {
  std::string label;
  FormulaPtr root;
};

struct Program {
  std::vector<Declaration> declarations;
  std::vector<Output> outputs;

  const Declaration* find_declaration(const std::string& name) const;
  const Output* find_output(const std::string& label) const;

  /// Checks: unique declaration names and output labels, declaration names
  /// disjoint from variable names, placeholder references resolve, the
  /// reference graph is acyclic, choice ids unique, choices nonempty.
  void validate() const;

  /// Declaration names ordered so every name follows everything it
  /// references; ties broken by declaration order.
  std::vector<std::string> dependency_order() const;
};

std::string format_program(const Program& p);

bool structurally_equal(const Program& a, const Program& b,
                        bool compare_choice_ids = true);

}  // namespace loh
