#include "loh/templates.hpp"

#include <algorithm>

namespace loh {

namespace {

int max_choice_id(const FormulaPtr& f) {
  int best = -1;
  if (f->kind == FormulaKind::choice) best = f->choice_id;
  for (const auto& c : f->children) best = std::max(best, max_choice_id(c));
  return best;
}

CompileHint hint_for(Variant v, bool with_hints) {
  if (!with_hints) return CompileHint::none;
  return v == Variant::disjunctive ? CompileHint::disjunctive : CompileHint::conjunctive;
}

}  // namespace

Program select_rules(const std::vector<FormulaPtr>& rules, bool with_hints) {
  if (rules.empty()) throw ValidationError("select_rules needs at least one rule");
  int next_id = 0;
  for (const auto& r : rules) next_id = std::max(next_id, max_choice_id(r) + 1);
  std::vector<FormulaPtr> picks;
  for (const auto& r : rules)
    picks.push_back(choice({r, constant(true)}, next_id++,
                           hint_for(Variant::conjunctive, with_hints)));
  Program p;
  p.outputs.push_back({"y", conjunction_of(picks)});
  p.validate();
  return p;
}

Program one_per_set(const std::vector<std::vector<FormulaPtr>>& rule_sets, bool with_hints) {
  if (rule_sets.empty()) throw ValidationError("one_per_set needs at least one rule set");
  int next_id = 0;
  for (const auto& set : rule_sets)
    for (const auto& r : set) next_id = std::max(next_id, max_choice_id(r) + 1);
  std::vector<FormulaPtr> picks;
  for (const auto& set : rule_sets) {
    if (set.empty()) throw ValidationError("a rule set is empty");
    picks.push_back(choice(set, next_id++, hint_for(Variant::conjunctive, with_hints)));
  }
  Program p;
  p.outputs.push_back({"y", conjunction_of(picks)});
  p.validate();
  return p;
}

FormulaPtr width_k_clause(const std::vector<std::string>& vars, int k, ClauseLiterals lits,
                          int& next_choice_id, bool with_hints) {
  if (vars.empty() || k < 1) throw ValidationError("width_k_clause needs vars and k >= 1");
  auto pool = [&](bool positive, bool negated) {
    std::vector<FormulaPtr> branches;
    if (positive)
      for (const auto& v : vars) branches.push_back(var(v));
    if (negated)
      for (const auto& v : vars) branches.push_back(negation(var(v)));
    return branches;
  };
  std::vector<FormulaPtr> choices;
  for (int i = 0; i < k; ++i) {
    std::vector<FormulaPtr> branches;
    switch (lits) {
      case ClauseLiterals::both:
        branches = pool(true, true);
        break;
      case ClauseLiterals::positive:
        branches = pool(true, false);
        break;
      case ClauseLiterals::definite:
        branches = i + 1 < k ? pool(false, true) : pool(true, false);
        break;
    }
    choices.push_back(choice(std::move(branches), next_choice_id++,
                             hint_for(Variant::disjunctive, with_hints)));
  }
  return disjunction_of(choices);
}

FormulaPtr definite_clause(const std::vector<std::string>& vars,
                           const std::optional<std::string>& head, int& next_choice_id,
                           bool with_hints) {
  if (vars.empty()) throw ValidationError("definite_clause needs variables");
  std::vector<FormulaPtr> parts;
  for (const auto& v : vars)
    parts.push_back(choice({negation(var(v)), constant(false)}, next_choice_id++,
                           hint_for(Variant::disjunctive, with_hints)));
  if (head) {
    parts.push_back(var(*head));
  } else {
    std::vector<FormulaPtr> positives;
    for (const auto& v : vars) positives.push_back(var(v));
    parts.push_back(choice(std::move(positives), next_choice_id++,
                           hint_for(Variant::disjunctive, with_hints)));
  }
  return disjunction_of(parts);
}

Program layered_net(const std::vector<std::string>& inputs,
                    const std::vector<LayerSpec>& layers, int n_outputs, bool with_hints) {
  if (inputs.empty()) throw ValidationError("layered_net needs input names");
  if (layers.empty()) throw ValidationError("layered_net needs at least one layer");
  if (layers.back().width != n_outputs)
    throw ValidationError("last layer width must equal the output count");

  Program p;
  int next_id = 0;
  std::vector<FormulaPtr> prev;
  for (const auto& name : inputs) prev.push_back(var(name));

  for (size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    if (spec.width < 1) throw ValidationError("layer width must be >= 1");
    if (spec.style == NeuronStyle::fixed_k && spec.k < 1)
      throw ValidationError("fixed-k layer needs k >= 1");
    bool disj = spec.kind == Variant::disjunctive;
    CompileHint hint = hint_for(spec.kind, with_hints);

    std::vector<FormulaPtr> current;
    for (int j = 0; j < spec.width; ++j) {
      std::vector<FormulaPtr> parts;
      switch (spec.style) {
        case NeuronStyle::subset:
          for (const auto& in : prev)
            parts.push_back(choice({in, constant(!disj)}, next_id++, hint));
          break;
        case NeuronStyle::subset_negation:
          for (const auto& in : prev)
            parts.push_back(choice({in, negation(in), constant(!disj)}, next_id++, hint));
          break;
        case NeuronStyle::fixed_k:
          for (int t = 0; t < spec.k; ++t)
            parts.push_back(choice(prev, next_id++, hint));
          break;
      }
      FormulaPtr body = disj ? disjunction_of(parts) : conjunction_of(parts);
      std::string name = "n" + std::to_string(l + 1) + "_" + std::to_string(j + 1);
      p.declarations.push_back({name, body});
      current.push_back(placeholder(name));
    }
    prev = std::move(current);
  }

  for (int j = 0; j < n_outputs; ++j) {
    std::string label = n_outputs == 1 ? "y" : "y" + std::to_string(j);
    p.outputs.push_back({label, prev[static_cast<size_t>(j)]});
  }
  p.validate();
  return p;
}

}  // namespace loh
