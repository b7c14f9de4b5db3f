#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loh/formula.hpp"

namespace loh {

/// Branch selection per choice id.
using IndexAssignment = std::map<int, int>;

/// Choice ids reachable from the given output, following placeholder
/// references into their declarations; ascending id order.
std::vector<int> reachable_choice_ids(const Program& p, const std::string& root_label);

/// (id, arity) pairs for the reachable choices, ascending id order.
std::vector<std::pair<int, int>> reachable_choice_arities(const Program& p,
                                                          const std::string& root_label);

/// Substitutes the selected branch at every choice node. A placeholder used
/// twice receives the same substitution at both occurrences, because its
/// choice nodes carry one id each. The result is a classical formula.
FormulaPtr eval_indices(const Program& p, const std::string& root_label,
                        const IndexAssignment& idx);

/// Number of index assignments (product of reachable arities). `value` is
/// empty when the count does not fit in 64 bits; `decimal` always holds the
/// exact count.
struct SpaceSize {
  std::optional<std::uint64_t> value;
  std::string decimal;
};

SpaceSize space_size(const Program& p, const std::string& root_label);

struct EnumerateOptions {
  std::uint64_t limit = 1'000'000;
  bool dedup = false;  // structural duplicates removed, first occurrence kept
};

/// All hypotheses in lexicographic index order: assignments ordered by
/// (choice id, branch index), the highest id cycling fastest.
std::vector<FormulaPtr> enumerate_space(const Program& p, const std::string& root_label,
                                        const EnumerateOptions& opts = {});

}  // namespace loh
