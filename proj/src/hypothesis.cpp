#include "loh/hypothesis.hpp"

#include <algorithm>
#include <set>

namespace loh {

namespace {

void collect_choices(const Program& p, const FormulaPtr& f,
                     std::map<int, int>& arities, std::set<std::string>& visited_decls) {
  if (f->kind == FormulaKind::placeholder) {
    if (visited_decls.insert(f->name).second) {
      const Declaration* d = p.find_declaration(f->name);
      if (!d) throw ValidationError("unresolved placeholder '" + f->name + "'");
      collect_choices(p, d->body, arities, visited_decls);
    }
    return;
  }
  if (f->kind == FormulaKind::choice) {
    arities[f->choice_id] = static_cast<int>(f->children.size());
  }
  for (const auto& c : f->children) collect_choices(p, c, arities, visited_decls);
}

std::map<int, int> reachable_arity_map(const Program& p, const std::string& root_label) {
  const Output* o = p.find_output(root_label);
  if (!o) throw ValidationError("no output labeled '" + root_label + "'");
  std::map<int, int> arities;
  std::set<std::string> visited;
  collect_choices(p, o->root, arities, visited);
  return arities;
}

struct Substituter {
  const Program& p;
  const IndexAssignment& idx;
  std::map<std::string, FormulaPtr> decl_cache;

  FormulaPtr go(const FormulaPtr& f) {
    switch (f->kind) {
      case FormulaKind::var:
      case FormulaKind::constant:
        return f;
      case FormulaKind::negation:
        return negation(go(f->children[0]));
      case FormulaKind::conjunction:
        return conjunction(go(f->children[0]), go(f->children[1]));
      case FormulaKind::disjunction:
        return disjunction(go(f->children[0]), go(f->children[1]));
      case FormulaKind::choice: {
        auto it = idx.find(f->choice_id);
        if (it == idx.end())
          throw ValidationError("no branch index for choice " +
                                std::to_string(f->choice_id));
        int i = it->second;
        if (i < 0 || i >= static_cast<int>(f->children.size()))
          throw ValidationError("branch index " + std::to_string(i) +
                                " out of range for choice " +
                                std::to_string(f->choice_id));
        return go(f->children[i]);
      }
      case FormulaKind::placeholder: {
        auto cached = decl_cache.find(f->name);
        if (cached != decl_cache.end()) return cached->second;
        const Declaration* d = p.find_declaration(f->name);
        if (!d) throw ValidationError("unresolved placeholder '" + f->name + "'");
        FormulaPtr r = go(d->body);
        decl_cache.emplace(f->name, r);
        return r;
      }
    }
    throw ValidationError("unreachable formula kind");
  }
};

// Minimal unsigned big integer (base 1e9 limbs), enough for arity products.
struct BigUint {
  std::vector<std::uint32_t> limbs{1};  // little-endian, starts at 1

  void mul(std::uint32_t m) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs) {
      std::uint64_t v = static_cast<std::uint64_t>(limb) * m + carry;
      limb = static_cast<std::uint32_t>(v % 1000000000ull);
      carry = v / 1000000000ull;
    }
    while (carry) {
      limbs.push_back(static_cast<std::uint32_t>(carry % 1000000000ull));
      carry /= 1000000000ull;
    }
  }

  std::string to_string() const {
    std::string s = std::to_string(limbs.back());
    for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
      std::string part = std::to_string(*it);
      s += std::string(9 - part.size(), '0') + part;
    }
    return s;
  }
};

}  // namespace

std::vector<int> reachable_choice_ids(const Program& p, const std::string& root_label) {
  std::vector<int> ids;
  for (const auto& [id, arity] : reachable_arity_map(p, root_label)) {
    (void)arity;
    ids.push_back(id);
  }
  return ids;
}

std::vector<std::pair<int, int>> reachable_choice_arities(const Program& p,
                                                          const std::string& root_label) {
  auto m = reachable_arity_map(p, root_label);
  return {m.begin(), m.end()};
}

FormulaPtr eval_indices(const Program& p, const std::string& root_label,
                        const IndexAssignment& idx) {
  const Output* o = p.find_output(root_label);
  if (!o) throw ValidationError("no output labeled '" + root_label + "'");
  Substituter sub{p, idx, {}};
  return sub.go(o->root);
}

SpaceSize space_size(const Program& p, const std::string& root_label) {
  auto arities = reachable_arity_map(p, root_label);
  BigUint big;
  std::uint64_t small = 1;
  bool fits = true;
  for (const auto& [id, arity] : arities) {
    (void)id;
    big.mul(static_cast<std::uint32_t>(arity));
    if (fits) {
      std::uint64_t next = small * static_cast<std::uint64_t>(arity);
      if (arity != 0 && next / arity != small) {
        fits = false;
      } else {
        small = next;
      }
    }
  }
  SpaceSize s;
  s.decimal = big.to_string();
  if (fits) s.value = small;
  return s;
}

std::vector<FormulaPtr> enumerate_space(const Program& p, const std::string& root_label,
                                        const EnumerateOptions& opts) {
  auto arities = reachable_choice_arities(p, root_label);
  SpaceSize size = space_size(p, root_label);
  if (!size.value || *size.value > opts.limit)
    throw ValidationError("hypothesis space holds " + size.decimal +
                          " formulas, over the limit of " + std::to_string(opts.limit));

  std::vector<FormulaPtr> out;
  out.reserve(static_cast<size_t>(*size.value));
  std::set<std::string> seen;
  std::vector<int> counter(arities.size(), 0);
  while (true) {
    IndexAssignment idx;
    for (size_t i = 0; i < arities.size(); ++i) idx[arities[i].first] = counter[i];
    FormulaPtr f = eval_indices(p, root_label, idx);
    if (!opts.dedup || seen.insert(format_formula(f)).second) out.push_back(f);

    // odometer: the highest choice id cycles fastest
    size_t i = arities.size();
    while (i > 0) {
      --i;
      if (++counter[i] < arities[i].second) break;
      counter[i] = 0;
      if (i == 0) return out;
    }
    if (arities.empty()) return out;
  }
}

}  // namespace loh
