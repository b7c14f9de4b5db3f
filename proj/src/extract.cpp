#include "loh/extract.hpp"

#include <algorithm>
#include <set>

namespace loh {

DiscretizeResult discretize(const ParameterStore& params) {
  DiscretizeResult r;
  for (const auto& [id, block] : params.blocks) {
    int best = 0;
    int max_count = 1;
    for (int i = 1; i < block.arity(); ++i) {
      if (block.z[i] > block.z[best]) {
        best = i;
        max_count = 1;
      } else if (block.z[i] == block.z[best]) {
        ++max_count;
      }
    }
    r.indices[id] = best;
    if (max_count > 1) r.tied_blocks.push_back(id);
  }
  return r;
}

namespace {

FormulaPtr fold_constants(const FormulaPtr& f) {
  switch (f->kind) {
    case FormulaKind::var:
    case FormulaKind::constant:
      return f;
    case FormulaKind::negation: {
      FormulaPtr c = fold_constants(f->children[0]);
      if (c->kind == FormulaKind::constant) return constant(!c->value);
      return negation(c);
    }
    case FormulaKind::conjunction: {
      FormulaPtr l = fold_constants(f->children[0]);
      FormulaPtr r = fold_constants(f->children[1]);
      if (l->kind == FormulaKind::constant) return l->value ? r : l;
      if (r->kind == FormulaKind::constant) return r->value ? l : r;
      return conjunction(l, r);
    }
    case FormulaKind::disjunction: {
      FormulaPtr l = fold_constants(f->children[0]);
      FormulaPtr r = fold_constants(f->children[1]);
      if (l->kind == FormulaKind::constant) return l->value ? l : r;
      if (r->kind == FormulaKind::constant) return r->value ? r : l;
      return disjunction(l, r);
    }
    default:
      throw ValidationError("simplify requires a choice-free formula");
  }
}

using Lit = std::pair<std::string, bool>;  // name, negated

bool as_literal(const FormulaPtr& f, Lit& out) {
  if (f->kind == FormulaKind::var) {
    out = {f->name, false};
    return true;
  }
  if (f->kind == FormulaKind::negation && f->children[0]->kind == FormulaKind::var) {
    out = {f->children[0]->name, true};
    return true;
  }
  return false;
}

void flatten_chain(const FormulaPtr& f, FormulaKind kind, std::vector<FormulaPtr>& out) {
  if (f->kind == kind) {
    flatten_chain(f->children[0], kind, out);
    flatten_chain(f->children[1], kind, out);
  } else {
    out.push_back(f);
  }
}

// ordered duplicate-free literal list; false when a complementary pair exists
bool clause_literals(const std::vector<FormulaPtr>& parts, std::vector<Lit>& lits) {
  std::set<Lit> seen;
  for (const auto& p : parts) {
    Lit lit;
    if (!as_literal(p, lit)) throw ValidationError("not a literal");
    if (seen.count({lit.first, !lit.second})) return false;
    if (seen.insert(lit).second) lits.push_back(lit);
  }
  return true;
}

FormulaPtr literal_formula(const Lit& l) {
  return l.second ? negation(var(l.first)) : var(l.first);
}

bool all_literals(const std::vector<FormulaPtr>& parts) {
  Lit ignored;
  return std::all_of(parts.begin(), parts.end(),
                     [&](const FormulaPtr& p) { return as_literal(p, ignored); });
}

// shared CNF/DNF cleanup over clause literal-sets. `outer_conj` true for CNF.
// Simplifications, all equivalence-preserving:
//   - a clause containing l and !l is dropped (tautology in CNF, contradiction
//     in DNF)
//   - duplicate clauses collapse
//   - a clause that is a subset of another absorbs it
//   - two complementary unit clauses decide the whole formula
FormulaPtr simplify_two_level(const std::vector<std::vector<FormulaPtr>>& raw_clauses,
                              bool outer_conj) {
  std::vector<std::vector<Lit>> clauses;
  std::vector<std::set<Lit>> sets;
  for (const auto& parts : raw_clauses) {
    std::vector<Lit> lits;
    if (!clause_literals(parts, lits)) continue;  // l and !l inside one clause
    std::set<Lit> s(lits.begin(), lits.end());
    if (std::find(sets.begin(), sets.end(), s) != sets.end()) continue;
    clauses.push_back(std::move(lits));
    sets.push_back(std::move(s));
  }

  for (const auto& s : sets) {
    if (s.size() != 1) continue;
    Lit complement{s.begin()->first, !s.begin()->second};
    for (const auto& other : sets)
      if (other.size() == 1 && *other.begin() == complement)
        return constant(!outer_conj);  // x & !x, or x | !x in the DNF dual
  }

  std::vector<bool> keep(clauses.size(), true);
  for (size_t a = 0; a < sets.size(); ++a) {
    if (!keep[a]) continue;
    for (size_t b = 0; b < sets.size(); ++b) {
      if (a == b || !keep[b]) continue;
      if (std::includes(sets[b].begin(), sets[b].end(), sets[a].begin(), sets[a].end()))
        keep[b] = false;  // a is a subset of b: b is redundant
    }
  }

  std::vector<FormulaPtr> rebuilt;
  for (size_t i = 0; i < clauses.size(); ++i) {
    if (!keep[i]) continue;
    std::vector<FormulaPtr> lits;
    for (const auto& l : clauses[i]) lits.push_back(literal_formula(l));
    rebuilt.push_back(outer_conj ? disjunction_of(lits) : conjunction_of(lits));
  }
  if (rebuilt.empty()) return constant(outer_conj);
  return outer_conj ? conjunction_of(rebuilt) : disjunction_of(rebuilt);
}

}  // namespace

FormulaPtr simplify(const FormulaPtr& f) {
  FormulaPtr folded = fold_constants(f);
  if (folded->kind == FormulaKind::constant) return folded;

  Lit lit;
  if (as_literal(folded, lit)) return folded;

  if (folded->kind == FormulaKind::conjunction || folded->kind == FormulaKind::disjunction) {
    bool conj = folded->kind == FormulaKind::conjunction;
    std::vector<FormulaPtr> parts;
    flatten_chain(folded, folded->kind, parts);

    if (all_literals(parts)) {
      // one flat clause
      std::vector<Lit> lits;
      if (!clause_literals(parts, lits)) return constant(!conj);
      std::vector<FormulaPtr> rebuilt;
      for (const auto& l : lits) rebuilt.push_back(literal_formula(l));
      return conj ? conjunction_of(rebuilt) : disjunction_of(rebuilt);
    }

    // two-level shape: every part a literal or an opposite-connective chain
    // of literals
    FormulaKind inner = conj ? FormulaKind::disjunction : FormulaKind::conjunction;
    std::vector<std::vector<FormulaPtr>> clause_parts;
    for (const auto& p : parts) {
      Lit l;
      if (as_literal(p, l)) {
        clause_parts.push_back({p});
        continue;
      }
      if (p->kind != inner) return folded;  // deeper nesting: leave as folded
      std::vector<FormulaPtr> inner_parts;
      flatten_chain(p, inner, inner_parts);
      if (!all_literals(inner_parts)) return folded;
      clause_parts.push_back(std::move(inner_parts));
    }
    return simplify_two_level(clause_parts, conj);
  }

  return folded;
}

ExtractedRuleSet extract(const CompiledGraph& g, const ParameterStore& params,
                         const Program& p, bool simplify_rules) {
  for (const auto& info : g.weight_blocks)
    if (!params.blocks.count(info.choice_id))
      throw ValidationError("parameters are missing block " + std::to_string(info.choice_id));

  DiscretizeResult d = discretize(params);
  ExtractedRuleSet set;
  set.indices = d.indices;
  set.tied_blocks = d.tied_blocks;
  for (const auto& [label, node] : g.outputs) {
    (void)node;
    FormulaPtr rule = eval_indices(p, label, d.indices);
    if (simplify_rules) rule = simplify(rule);
    set.rules.emplace_back(label, rule);
  }
  return set;
}

namespace {

// formula resolved against graph input columns for fast repeated evaluation
struct ResolvedRule {
  enum K { kvar, kconst, knot, kand, kor };
  struct Node {
    K k;
    int a = -1;
    int b = -1;
    bool value = false;
    int col = -1;
  };
  std::vector<Node> nodes;

  int build(const FormulaPtr& f, const CompiledGraph& g) {
    Node n;
    switch (f->kind) {
      case FormulaKind::var: {
        n.k = kvar;
        n.col = g.input_index(f->name);
        if (n.col < 0)
          throw ValidationError("rule variable '" + f->name + "' is not a graph input");
        break;
      }
      case FormulaKind::constant:
        n.k = kconst;
        n.value = f->value;
        break;
      case FormulaKind::negation:
        n.k = knot;
        n.a = build(f->children[0], g);
        break;
      case FormulaKind::conjunction:
      case FormulaKind::disjunction:
        n.k = f->kind == FormulaKind::conjunction ? kand : kor;
        n.a = build(f->children[0], g);
        n.b = build(f->children[1], g);
        break;
      default:
        throw ValidationError("extracted rule must be choice-free");
    }
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  bool eval(const std::vector<char>& bits, std::vector<char>& scratch) const {
    for (size_t i = 0; i < nodes.size(); ++i) {
      const Node& n = nodes[i];
      switch (n.k) {
        case kvar: scratch[i] = bits[n.col]; break;
        case kconst: scratch[i] = n.value; break;
        case knot: scratch[i] = !scratch[n.a]; break;
        case kand: scratch[i] = scratch[n.a] && scratch[n.b]; break;
        case kor: scratch[i] = scratch[n.a] || scratch[n.b]; break;
      }
    }
    return scratch.empty() ? false : scratch.back() != 0;
  }
};

void verify_rows(const CompiledGraph& g, const ParameterStore& params,
                 const std::vector<ResolvedRule>& resolved, const Matrix& inputs,
                 double eps, int threads, VerifySummary& summary) {
  Matrix out = forward(g, params, inputs, {.with_noise = false, .threads = threads});
  std::vector<char> bits(inputs.cols);
  std::vector<char> scratch;
  for (size_t r = 0; r < inputs.rows; ++r) {
    for (size_t c = 0; c < inputs.cols; ++c) bits[c] = inputs.at(r, c) > 0.5 ? 1 : 0;
    for (size_t k = 0; k < resolved.size(); ++k) {
      scratch.assign(resolved[k].nodes.size(), 0);
      bool discrete = resolved[k].eval(bits, scratch);
      double cont = out.at(r, k);
      if (std::abs(cont - 0.5) <= eps) ++summary.near_threshold;
      if ((cont > 0.5) != discrete) ++summary.mismatches;
      ++summary.samples;
    }
  }
}

std::vector<ResolvedRule> resolve_rules(const CompiledGraph& g, const ExtractedRuleSet& rules) {
  if (g.semantics == Semantics::product)
    throw ValidationError(
        "verification is only sound for min/max semantics: under product "
        "semantics the continuous value can land on the other side of 0.5 "
        "(e.g. max-like 1-(1-.6*.7)(1-0) = .42 vs min(.6,.7) = .6)");
  if (rules.rules.size() != g.outputs.size())
    throw ValidationError("rule count does not match graph outputs");
  std::vector<ResolvedRule> resolved(rules.rules.size());
  for (size_t k = 0; k < rules.rules.size(); ++k) {
    if (rules.rules[k].first != g.outputs[k].first)
      throw ValidationError("rule labels do not match graph outputs");
    resolved[k].build(rules.rules[k].second, g);
  }
  return resolved;
}

}  // namespace

VerifySummary verify_lossless(const CompiledGraph& g, const ParameterStore& params,
                              const ExtractedRuleSet& rules, const Matrix& inputs,
                              double eps, int threads) {
  auto resolved = resolve_rules(g, rules);
  VerifySummary summary;
  verify_rows(g, params, resolved, inputs, eps, threads, summary);
  return summary;
}

VerifySummary verify_lossless_exhaustive(const CompiledGraph& g, const ParameterStore& params,
                                         const ExtractedRuleSet& rules, double eps,
                                         int threads) {
  size_t n = g.input_names.size();
  if (n > 20)
    throw ValidationError("exhaustive verification supports at most 20 inputs, graph has " +
                          std::to_string(n));
  auto resolved = resolve_rules(g, rules);
  VerifySummary summary;
  summary.exhaustive = true;
  std::uint64_t total = std::uint64_t{1} << n;
  const std::uint64_t chunk = 4096;
  for (std::uint64_t base = 0; base < total; base += chunk) {
    std::uint64_t count = std::min<std::uint64_t>(chunk, total - base);
    Matrix inputs(count, n);
    for (std::uint64_t i = 0; i < count; ++i)
      for (size_t c = 0; c < n; ++c)
        inputs.at(i, c) = ((base + i) >> c) & 1u ? 1.0 : 0.0;
    verify_rows(g, params, resolved, inputs, eps, threads, summary);
  }
  return summary;
}

}  // namespace loh
