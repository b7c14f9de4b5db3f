#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loh/engine.hpp"
#include "loh/graph.hpp"

namespace loh {

struct DiscretizeResult {
  IndexAssignment indices;
  std::vector<int> tied_blocks;  // blocks whose top logit was not unique
};

/// argmax of each block's logits; ties go to the lowest index and are
/// reported in tied_blocks.
DiscretizeResult discretize(const ParameterStore& params);

struct VerifySummary {
  std::uint64_t samples = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t near_threshold = 0;  // continuous outputs within eps of 0.5
  bool exhaustive = false;
};

struct ExtractedRuleSet {
  std::vector<std::pair<std::string, FormulaPtr>> rules;  // label -> formula
  IndexAssignment indices;
  std::vector<int> tied_blocks;
  VerifySummary verification;
};

/// Pins every choice to its argmax branch and substitutes, yielding one
/// classical formula per output.
ExtractedRuleSet extract(const CompiledGraph& g, const ParameterStore& params,
                         const Program& p, bool simplify_rules = false);

/// Equivalence-preserving cleanup of a classical formula: constant folding
/// everywhere; inside flat clause shapes (conjunctions/disjunctions of
/// literals, CNF, DNF) also duplicate removal, complementary-literal folding
/// and clause subsumption.
FormulaPtr simplify(const FormulaPtr& f);

/// Checks, row by row, that thresholding the noise-free continuous output at
/// 0.5 agrees with the extracted formula evaluated classically on the
/// thresholded inputs. Exact agreement is guaranteed for min/max semantics
/// only; product semantics is refused because products can cross the
/// threshold where max/min would not (max(min(.6,.7), min(.4,0)) thresholds
/// to 1, but .6*.7 = .42 thresholds to 0).
VerifySummary verify_lossless(const CompiledGraph& g, const ParameterStore& params,
                              const ExtractedRuleSet& rules, const Matrix& inputs,
                              double eps = 1e-9, int threads = 1);

/// Same check over every Boolean input combination; requires at most 20
/// graph inputs.
VerifySummary verify_lossless_exhaustive(const CompiledGraph& g, const ParameterStore& params,
                                         const ExtractedRuleSet& rules, double eps = 1e-9,
                                         int threads = 1);

}  // namespace loh
