#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loh/formula.hpp"
#include "loh/hypothesis.hpp"

namespace loh {

enum class Semantics { godel, product };
enum class Variant { disjunctive, conjunctive };

enum class NodeKind {
  input,
  constant,
  negation,
  min_reduce,
  max_reduce,
  gate_weight,     // w[slot] of a choice's weight block
  gate_co_weight,  // 1 - w[slot]
};

struct GraphNode {
  NodeKind kind = NodeKind::constant;
  std::vector<int> children;  // negation(1), reduces(>=1)
  int input = -1;             // input: column index
  bool value = false;         // constant
  int choice_id = -1;         // gates; also set on the reduce realizing a choice
  int slot = -1;              // gates
};

struct WeightBlockInfo {
  int choice_id = -1;
  int arity = 0;
  Variant variant = Variant::disjunctive;
};

struct CompileOptions {
  Semantics semantics = Semantics::godel;
  Variant root_context = Variant::conjunctive;
  // forces every choice to one variant, overriding hints and context
  std::optional<Variant> force_variant;
};

/// Differentiable computation graph. Nodes are stored in topological order
/// (children precede parents). The graph shape is semantics-independent;
/// `semantics` only tells the engine which operations to run.
struct CompiledGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<std::string, int>> outputs;  // label -> node id
  std::vector<WeightBlockInfo> weight_blocks;        // ascending choice id
  std::vector<std::string> input_names;              // first-occurrence order
  Semantics semantics = Semantics::godel;
  Variant root_context = Variant::conjunctive;
  std::map<int, Variant> variant_map;
  std::shared_ptr<const Program> source;

  const WeightBlockInfo* block(int choice_id) const;
  int input_index(const std::string& name) const;  // -1 when absent
};

/// Decides each choice's compilation variant. Connectives set the context for
/// their operands (& conjunctive, | disjunctive), negation flips parity, and a
/// choice is compiled disjunctively exactly when context and parity agree
/// with a disjunction. Hints win; `force` overrides everything. Choice
/// branches inherit the resolved variant of their choice as context, with
/// positive parity.
std::map<int, Variant> resolve_variants(const Program& p, Variant root_context,
                                        std::optional<Variant> force = {});

CompiledGraph compile(std::shared_ptr<const Program> p, const CompileOptions& opts = {});
CompiledGraph compile(const Program& p, const CompileOptions& opts = {});

/// The classical formula this graph computes for `label` once every choice is
/// pinned to a branch; matches eval_indices on the source program.
FormulaPtr substitute_discrete(const CompiledGraph& g, const std::string& label,
                               const IndexAssignment& idx);

std::string graph_to_json(const CompiledGraph& g);

std::string to_string(Semantics s);
std::string to_string(Variant v);
Semantics semantics_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

}  // namespace loh
