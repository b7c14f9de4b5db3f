#include <json.hpp>
#include <set>

#include "loh/graph.hpp"

namespace loh {

const WeightBlockInfo* CompiledGraph::block(int choice_id) const {
  for (const auto& b : weight_blocks)
    if (b.choice_id == choice_id) return &b;
  return nullptr;
}

int CompiledGraph::input_index(const std::string& name) const {
  for (size_t i = 0; i < input_names.size(); ++i)
    if (input_names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

struct VariantWalk {
  const Program& p;
  std::optional<Variant> force;
  std::map<int, Variant> result;
  std::set<std::string> visited_decls;

  // context: innermost enclosing connective; parity: false under an odd
  // number of negations
  void walk(const FormulaPtr& f, Variant context, bool positive) {
    switch (f->kind) {
      case FormulaKind::var:
      case FormulaKind::constant:
        return;
      case FormulaKind::placeholder: {
        if (!visited_decls.insert(f->name).second) return;
        const Declaration* d = p.find_declaration(f->name);
        if (!d) throw ValidationError("unresolved placeholder '" + f->name + "'");
        walk(d->body, context, positive);
        return;
      }
      case FormulaKind::negation:
        walk(f->children[0], context, !positive);
        return;
      case FormulaKind::conjunction:
        walk(f->children[0], Variant::conjunctive, positive);
        walk(f->children[1], Variant::conjunctive, positive);
        return;
      case FormulaKind::disjunction:
        walk(f->children[0], Variant::disjunctive, positive);
        walk(f->children[1], Variant::disjunctive, positive);
        return;
      case FormulaKind::choice: {
        bool disj_here = (context == Variant::disjunctive) == positive;
        Variant v = disj_here ? Variant::disjunctive : Variant::conjunctive;
        if (f->hint == CompileHint::disjunctive) v = Variant::disjunctive;
        if (f->hint == CompileHint::conjunctive) v = Variant::conjunctive;
        if (force) v = *force;
        result.emplace(f->choice_id, v);  // first visit wins for shared nodes
        for (const auto& b : f->children) walk(b, v, true);
        return;
      }
    }
  }
};

struct Compiler {
  const Program& p;
  const std::map<int, Variant>& variants;
  CompiledGraph g;
  std::map<std::string, int> input_nodes;
  std::map<std::string, int> decl_nodes;
  int const_nodes[2] = {-1, -1};

  int add(GraphNode n) {
    g.nodes.push_back(std::move(n));
    return static_cast<int>(g.nodes.size()) - 1;
  }

  int input_node(const std::string& name) {
    auto it = input_nodes.find(name);
    if (it != input_nodes.end()) return it->second;
    GraphNode n;
    n.kind = NodeKind::input;
    n.input = static_cast<int>(g.input_names.size());
    g.input_names.push_back(name);
    int id = add(std::move(n));
    input_nodes.emplace(name, id);
    return id;
  }

  int const_node(bool value) {
    int& slot = const_nodes[value ? 1 : 0];
    if (slot < 0) {
      GraphNode n;
      n.kind = NodeKind::constant;
      n.value = value;
      slot = add(std::move(n));
    }
    return slot;
  }

  int gate(NodeKind kind, int choice_id, int slot) {
    GraphNode n;
    n.kind = kind;
    n.choice_id = choice_id;
    n.slot = slot;
    return add(std::move(n));
  }

  // gathers the operand list of a same-connective chain, left to right
  void flatten(const FormulaPtr& f, FormulaKind kind, std::vector<FormulaPtr>& out) {
    if (f->kind == kind) {
      flatten(f->children[0], kind, out);
      flatten(f->children[1], kind, out);
    } else {
      out.push_back(f);
    }
  }

  int emit(const FormulaPtr& f) {
    switch (f->kind) {
      case FormulaKind::var:
        return input_node(f->name);
      case FormulaKind::constant:
        return const_node(f->value);
      case FormulaKind::placeholder: {
        auto it = decl_nodes.find(f->name);
        if (it != decl_nodes.end()) return it->second;
        const Declaration* d = p.find_declaration(f->name);
        if (!d) throw ValidationError("unresolved placeholder '" + f->name + "'");
        int id = emit(d->body);
        decl_nodes.emplace(f->name, id);
        return id;
      }
      case FormulaKind::negation: {
        GraphNode n;
        n.kind = NodeKind::negation;
        n.children.push_back(emit(f->children[0]));
        return add(std::move(n));
      }
      case FormulaKind::conjunction:
      case FormulaKind::disjunction: {
        bool conj = f->kind == FormulaKind::conjunction;
        std::vector<FormulaPtr> operands;
        flatten(f, f->kind, operands);
        GraphNode n;
        n.kind = conj ? NodeKind::min_reduce : NodeKind::max_reduce;
        for (const auto& o : operands) n.children.push_back(emit(o));
        return add(std::move(n));
      }
      case FormulaKind::choice:
        return emit_choice(f);
    }
    throw ValidationError("unreachable formula kind");
  }

  int emit_choice(const FormulaPtr& f) {
    int arity = static_cast<int>(f->children.size());
    Variant v = variants.at(f->choice_id);
    g.weight_blocks.push_back({f->choice_id, arity, v});
    g.variant_map[f->choice_id] = v;

    if (arity == 1) {
      // single branch wires through; its one-slot weight block stays frozen
      return emit(f->children[0]);
    }

    bool disj = v == Variant::disjunctive;
    GraphNode outer;
    outer.kind = disj ? NodeKind::max_reduce : NodeKind::min_reduce;
    outer.choice_id = f->choice_id;
    for (int i = 0; i < arity; ++i) {
      int gate_id = gate(disj ? NodeKind::gate_weight : NodeKind::gate_co_weight,
                         f->choice_id, i);
      int branch = emit(f->children[i]);
      GraphNode pair;
      pair.kind = disj ? NodeKind::min_reduce : NodeKind::max_reduce;
      pair.children = {gate_id, branch};
      outer.children.push_back(add(std::move(pair)));
    }
    return add(std::move(outer));
  }
};

}  // namespace

std::map<int, Variant> resolve_variants(const Program& p, Variant root_context,
                                        std::optional<Variant> force) {
  VariantWalk walk{p, force, {}, {}};
  for (const auto& o : p.outputs) walk.walk(o.root, root_context, true);
  return walk.result;
}

CompiledGraph compile(std::shared_ptr<const Program> p, const CompileOptions& opts) {
  if (!p) throw ValidationError("compile: null program");
  p->validate();
  if (p->outputs.empty()) throw ValidationError("compile: program has no outputs");

  Compiler c{*p, resolve_variants(*p, opts.root_context, opts.force_variant), {}, {}, {}};
  c.g.semantics = opts.semantics;
  c.g.root_context = opts.root_context;
  for (const auto& o : p->outputs) c.g.outputs.emplace_back(o.label, c.emit(o.root));
  std::sort(c.g.weight_blocks.begin(), c.g.weight_blocks.end(),
            [](const WeightBlockInfo& a, const WeightBlockInfo& b) {
              return a.choice_id < b.choice_id;
            });
  c.g.source = std::move(p);
  return c.g;
}

CompiledGraph compile(const Program& p, const CompileOptions& opts) {
  return compile(std::make_shared<Program>(p), opts);
}

FormulaPtr substitute_discrete(const CompiledGraph& g, const std::string& label,
                               const IndexAssignment& idx) {
  if (!g.source) throw ValidationError("graph carries no source program");
  return eval_indices(*g.source, label, idx);
}

std::string graph_to_json(const CompiledGraph& g) {
  nlohmann::json j;
  j["semantics"] = to_string(g.semantics);
  j["root_context"] = to_string(g.root_context);
  j["input_names"] = g.input_names;

  nlohmann::json nodes = nlohmann::json::array();
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    nlohmann::json e;
    e["id"] = i;
    switch (n.kind) {
      case NodeKind::input:
        e["kind"] = "input";
        e["input"] = n.input;
        e["name"] = g.input_names[n.input];
        break;
      case NodeKind::constant:
        e["kind"] = "const";
        e["value"] = n.value ? 1 : 0;
        break;
      case NodeKind::negation:
        e["kind"] = "neg";
        e["children"] = n.children;
        break;
      case NodeKind::min_reduce:
        e["kind"] = "min";
        e["children"] = n.children;
        break;
      case NodeKind::max_reduce:
        e["kind"] = "max";
        e["children"] = n.children;
        break;
      case NodeKind::gate_weight:
        e["kind"] = "gate_weight";
        break;
      case NodeKind::gate_co_weight:
        e["kind"] = "gate_co_weight";
        break;
    }
    if (n.choice_id >= 0) e["choice"] = n.choice_id;
    if (n.slot >= 0) e["slot"] = n.slot;
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);

  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [label, id] : g.outputs) outs[label] = id;
  j["outputs"] = std::move(outs);

  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : g.weight_blocks) {
    blocks.push_back({{"choice", b.choice_id},
                      {"arity", b.arity},
                      {"variant", to_string(b.variant)}});
  }
  j["weight_blocks"] = std::move(blocks);
  return j.dump(2);
}

std::string to_string(Semantics s) {
  return s == Semantics::godel ? "godel" : "product";
}

std::string to_string(Variant v) {
  return v == Variant::disjunctive ? "disjunctive" : "conjunctive";
}

Semantics semantics_from_string(const std::string& s) {
  if (s == "godel") return Semantics::godel;
  if (s == "product") return Semantics::product;
  throw ValidationError("unknown semantics '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "disjunctive" || s == "disj") return Variant::disjunctive;
  if (s == "conjunctive" || s == "conj") return Variant::conjunctive;
  throw ValidationError("unknown variant '" + s + "'");
}

}  // namespace loh
