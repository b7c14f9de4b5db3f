#include "loh/formula.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace loh {

namespace {

std::shared_ptr<Formula> node(FormulaKind kind) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  return f;
}

}  // namespace

FormulaPtr var(std::string name) {
  auto f = node(FormulaKind::var);
  f->name = std::move(name);
  return f;
}

FormulaPtr constant(bool value) {
  auto f = node(FormulaKind::constant);
  f->value = value;
  return f;
}

FormulaPtr negation(FormulaPtr child) {
  auto f = node(FormulaKind::negation);
  f->children.push_back(std::move(child));
  return f;
}

FormulaPtr conjunction(FormulaPtr lhs, FormulaPtr rhs) {
  auto f = node(FormulaKind::conjunction);
  f->children.push_back(std::move(lhs));
  f->children.push_back(std::move(rhs));
  return f;
}

FormulaPtr disjunction(FormulaPtr lhs, FormulaPtr rhs) {
  auto f = node(FormulaKind::disjunction);
  f->children.push_back(std::move(lhs));
  f->children.push_back(std::move(rhs));
  return f;
}

FormulaPtr choice(std::vector<FormulaPtr> branches, int id, CompileHint hint) {
  if (branches.empty()) throw ValidationError("choice node needs at least one branch");
  auto f = node(FormulaKind::choice);
  f->children = std::move(branches);
  f->choice_id = id;
  f->hint = hint;
  return f;
}

FormulaPtr placeholder(std::string name) {
  auto f = node(FormulaKind::placeholder);
  f->name = std::move(name);
  return f;
}

FormulaPtr conjunction_of(const std::vector<FormulaPtr>& fs) {
  if (fs.empty()) return constant(true);
  FormulaPtr acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = conjunction(acc, fs[i]);
  return acc;
}

FormulaPtr disjunction_of(const std::vector<FormulaPtr>& fs) {
  if (fs.empty()) return constant(false);
  FormulaPtr acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = disjunction(acc, fs[i]);
  return acc;
}

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b,
                        bool compare_choice_ids) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case FormulaKind::var:
    case FormulaKind::placeholder:
      return a->name == b->name;
    case FormulaKind::constant:
      return a->value == b->value;
    default:
      break;
  }
  if (a->kind == FormulaKind::choice) {
    if (compare_choice_ids && a->choice_id != b->choice_id) return false;
    if (a->hint != b->hint) return false;
  }
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i) {
    if (!structurally_equal(a->children[i], b->children[i], compare_choice_ids))
      return false;
  }
  return true;
}

namespace {

void collect_variables_rec(const FormulaPtr& f, std::vector<std::string>& out,
                           std::set<std::string>& seen) {
  if (f->kind == FormulaKind::var) {
    if (seen.insert(f->name).second) out.push_back(f->name);
    return;
  }
  for (const auto& c : f->children) collect_variables_rec(c, out, seen);
}

}  // namespace

std::vector<std::string> collect_variables(const FormulaPtr& f) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  collect_variables_rec(f, out, seen);
  return out;
}

bool contains_choice(const FormulaPtr& f) {
  if (f->kind == FormulaKind::choice) return true;
  return std::any_of(f->children.begin(), f->children.end(), contains_choice);
}

bool is_discrete(const FormulaPtr& f) {
  if (f->kind == FormulaKind::choice || f->kind == FormulaKind::placeholder)
    return false;
  return std::all_of(f->children.begin(), f->children.end(), is_discrete);
}

bool eval_bool(const FormulaPtr& f,
               const std::function<bool(const std::string&)>& value_of) {
  switch (f->kind) {
    case FormulaKind::var:
      return value_of(f->name);
    case FormulaKind::constant:
      return f->value;
    case FormulaKind::negation:
      return !eval_bool(f->children[0], value_of);
    case FormulaKind::conjunction:
      return eval_bool(f->children[0], value_of) &&
             eval_bool(f->children[1], value_of);
    case FormulaKind::disjunction:
      return eval_bool(f->children[0], value_of) ||
             eval_bool(f->children[1], value_of);
    default:
      throw ValidationError("eval_bool requires a choice-free formula");
  }
}

namespace {

// Precedence levels for printing with minimal parentheses. Connective chains
// print left-associatively, so `a & b & c` round-trips unchanged while a
// right-nested conjunction keeps its parentheses.
enum Level { level_or, level_and, level_atom };

void print_rec(const FormulaPtr& f, Level level, std::string& out) {
  switch (f->kind) {
    case FormulaKind::var:
    case FormulaKind::placeholder:
      out += f->name;
      return;
    case FormulaKind::constant:
      out += f->value ? "true" : "false";
      return;
    case FormulaKind::choice: {
      out += '[';
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) out += ", ";
        print_rec(f->children[i], level_or, out);
      }
      out += ']';
      if (f->hint == CompileHint::disjunctive) out += "@disj";
      if (f->hint == CompileHint::conjunctive) out += "@conj";
      return;
    }
    case FormulaKind::negation: {
      const auto& c = f->children[0];
      out += '!';
      bool atom = c->kind == FormulaKind::var || c->kind == FormulaKind::constant ||
                  c->kind == FormulaKind::placeholder ||
                  c->kind == FormulaKind::choice || c->kind == FormulaKind::negation;
      if (atom) {
        print_rec(c, level_atom, out);
      } else {
        out += '(';
        print_rec(c, level_or, out);
        out += ')';
      }
      return;
    }
    case FormulaKind::conjunction: {
      bool parens = level > level_and;
      if (parens) out += '(';
      print_rec(f->children[0], level_and, out);
      out += " & ";
      print_rec(f->children[1], level_atom, out);
      if (parens) out += ')';
      return;
    }
    case FormulaKind::disjunction: {
      bool parens = level > level_or;
      if (parens) out += '(';
      print_rec(f->children[0], level_or, out);
      out += " | ";
      print_rec(f->children[1], level_and, out);
      if (parens) out += ')';
      return;
    }
  }
}

}  // namespace

std::string format_formula(const FormulaPtr& f) {
  std::string out;
  print_rec(f, level_or, out);
  return out;
}

const Declaration* Program::find_declaration(const std::string& name) const {
  for (const auto& d : declarations)
    if (d.name == name) return &d;
  return nullptr;
}

const Output* Program::find_output(const std::string& label) const {
  for (const auto& o : outputs)
    if (o.label == label) return &o;
  return nullptr;
}

namespace {

void collect_refs(const FormulaPtr& f, std::set<std::string>& refs) {
  if (f->kind == FormulaKind::placeholder) {
    refs.insert(f->name);
    return;
  }
  for (const auto& c : f->children) collect_refs(c, refs);
}

void check_formula(const FormulaPtr& f, const Program& p,
                   std::set<int>& choice_ids, std::set<std::string>& vars) {
  switch (f->kind) {
    case FormulaKind::var:
      vars.insert(f->name);
      return;
    case FormulaKind::placeholder:
      if (!p.find_declaration(f->name))
        throw ValidationError("unresolved placeholder '" + f->name + "'");
      return;
    case FormulaKind::choice:
      if (f->children.empty())
        throw ValidationError("choice node needs at least one branch");
      if (f->choice_id < 0)
        throw ValidationError("choice node without an id");
      if (!choice_ids.insert(f->choice_id).second)
        throw ValidationError("duplicate choice id " + std::to_string(f->choice_id));
      break;
    default:
      break;
  }
  for (const auto& c : f->children) check_formula(c, p, choice_ids, vars);
}

}  // namespace

void Program::validate() const {
  std::set<std::string> decl_names;
  for (const auto& d : declarations) {
    if (!decl_names.insert(d.name).second)
      throw ValidationError("duplicate declaration '" + d.name + "'");
  }
  std::set<std::string> labels;
  for (const auto& o : outputs) {
    if (!labels.insert(o.label).second)
      throw ValidationError("duplicate output label '" + o.label + "'");
  }

  std::set<int> choice_ids;
  std::set<std::string> vars;
  for (const auto& d : declarations) check_formula(d.body, *this, choice_ids, vars);
  for (const auto& o : outputs) check_formula(o.root, *this, choice_ids, vars);

  for (const auto& d : declarations) {
    if (vars.count(d.name))
      throw ValidationError("name '" + d.name +
                            "' is used both as a variable and as a declaration");
  }

  dependency_order();  // throws on reference cycles
}

std::vector<std::string> Program::dependency_order() const {
  std::map<std::string, std::set<std::string>> deps;
  for (const auto& d : declarations) {
    std::set<std::string> refs;
    collect_refs(d.body, refs);
    // keep only references to actual declarations
    std::set<std::string> kept;
    for (const auto& r : refs)
      if (find_declaration(r)) kept.insert(r);
    deps[d.name] = std::move(kept);
  }

  std::vector<std::string> order;
  std::set<std::string> emitted;
  while (order.size() < declarations.size()) {
    bool progressed = false;
    for (const auto& d : declarations) {
      if (emitted.count(d.name)) continue;
      const auto& need = deps[d.name];
      bool ready = std::all_of(need.begin(), need.end(), [&](const std::string& n) {
        return emitted.count(n) > 0;
      });
      if (ready) {
        order.push_back(d.name);
        emitted.insert(d.name);
        progressed = true;
      }
    }
    if (!progressed) {
      std::string stuck;
      for (const auto& d : declarations)
        if (!emitted.count(d.name)) stuck += (stuck.empty() ? "" : ", ") + d.name;
      throw ValidationError("cyclic placeholder dependency among: " + stuck);
    }
  }
  return order;
}

std::string format_program(const Program& p) {
  std::string out;
  for (const auto& d : p.declarations) {
    out += "let " + d.name + " = " + format_formula(d.body) + ";\n";
  }
  for (const auto& o : p.outputs) {
    out += "out " + o.label + " = " + format_formula(o.root) + ";\n";
  }
  return out;
}

bool structurally_equal(const Program& a, const Program& b, bool compare_choice_ids) {
  if (a.declarations.size() != b.declarations.size()) return false;
  if (a.outputs.size() != b.outputs.size()) return false;
  for (size_t i = 0; i < a.declarations.size(); ++i) {
    if (a.declarations[i].name != b.declarations[i].name) return false;
    if (!structurally_equal(a.declarations[i].body, b.declarations[i].body,
                            compare_choice_ids))
      return false;
  }
  for (size_t i = 0; i < a.outputs.size(); ++i) {
    if (a.outputs[i].label != b.outputs[i].label) return false;
    if (!structurally_equal(a.outputs[i].root, b.outputs[i].root, compare_choice_ids))
      return false;
  }
  return true;
}

}  // namespace loh
