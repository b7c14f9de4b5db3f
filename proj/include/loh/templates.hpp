#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loh/formula.hpp"
#include "loh/graph.hpp"

namespace loh {

/// Literal pool of a width-k clause template.
enum class ClauseLiterals {
  both,      // v1..vn and their negations
  positive,  // v1..vn
  definite,  // k-1 all-negated choices, one all-positive choice
};

/// out y = [r1, true] & ... & [rm, true]  -- pick a subset of the rules.
Program select_rules(const std::vector<FormulaPtr>& rules, bool with_hints = true);

/// out y = [r11, r12, ...] & [r21, ...] & ...  -- pick one rule per set.
Program one_per_set(const std::vector<std::vector<FormulaPtr>>& rule_sets,
                    bool with_hints = true);

/// Disjunction of k choices over the literal pool; learns one clause of
/// width <= k (repetition allowed).
FormulaPtr width_k_clause(const std::vector<std::string>& vars, int k, ClauseLiterals lits,
                          int& next_choice_id, bool with_hints = true);

/// ([!v1, false] | ... | [!vn, false]) | [v1, ..., vn]: a clause with at most
/// one positive literal. With `head` given, the final choice is replaced by
/// that variable.
FormulaPtr definite_clause(const std::vector<std::string>& vars,
                           const std::optional<std::string>& head, int& next_choice_id,
                           bool with_hints = true);

enum class NeuronStyle { subset, subset_negation, fixed_k };

struct LayerSpec {
  Variant kind = Variant::conjunctive;  // connective joining a neuron's choices
  int width = 1;
  NeuronStyle style = NeuronStyle::subset;
  int k = 0;  // fixed_k only
};

/// Layered network; every neuron becomes a named declaration, so a neuron
/// used by several consumers shares its weights. Subset-style neurons choose
/// which predecessors to include (the `false`/`true` branch drops one);
/// fixed-k neurons combine exactly k choices over all predecessors. The last
/// layer's width must equal n_outputs.
Program layered_net(const std::vector<std::string>& inputs,
                    const std::vector<LayerSpec>& layers, int n_outputs,
                    bool with_hints = true);

}  // namespace loh
