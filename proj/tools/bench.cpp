#include "bench.hpp"

#include <iostream>
#include <map>
#include <sstream>

#include "common.hpp"
#include "loh/checkpoint.hpp"
#include "loh/data.hpp"
#include "loh/graph.hpp"
#include "loh/templates.hpp"
#include "loh/train.hpp"

namespace loh::cli {

namespace {

std::vector<std::string> var_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("v" + std::to_string(i));
  return names;
}

// out y = [c1, false] | [c2, false] | ...  -- the dual of rule selection:
// pick a subset of the clauses to disjoin.
Program select_rules_disjunctive(const std::vector<FormulaPtr>& rules) {
  std::vector<FormulaPtr> parts;
  int next_id = 0;
  for (const auto& r : rules)
    parts.push_back(choice({r, constant(false)}, next_id++, CompileHint::disjunctive));
  Program p;
  p.outputs.push_back({"y", disjunction_of(parts)});
  return p;
}

TrainConfig fixed_config(int epochs, int threads, Convergence convergence) {
  TrainConfig cfg;
  cfg.learning_rate = 0.15;
  cfg.batch_size = 128;
  cfg.max_epochs = epochs;
  cfg.beta = 1.0;
  cfg.temperature = 1.0;
  cfg.convergence = convergence;
  cfg.threads = threads;
  return cfg;
}

struct CellResult {
  double f1 = 0.0;
  long steps = 0;
  bool full_accuracy = false;
};

CellResult run_cell(const Program& model, Variant forced, const SplitResult& parts,
                    const TrainConfig& cfg, std::uint64_t seed) {
  CompileOptions opts;
  opts.force_variant = forced;
  CompiledGraph g = compile(model, opts);
  Rng rng(seed);
  ParameterStore params = ParameterStore::init(g, rng, cfg.beta, cfg.temperature);
  TrainReport report = train(g, params, parts.train, nullptr, cfg, rng);
  EvalMetrics test = evaluate(g, params, parts.test, cfg.loss, cfg.multiclass, cfg.threads);
  return {test.f1, report.steps_to_convergence, report.reached_full_accuracy};
}

void run_selection_suite(const BenchArgs& a) {
  const int n_vars = 10;
  const bool dnf = a.suite == "select-dnf";
  const bool per_set = a.suite == "one-per-set";
  // dnf learns a disjunction of conjunctive clauses; the others a
  // conjunction of disjunctive clauses
  const bool clause_conjunctive = dnf;
  const auto names = var_names(n_vars);
  int runs = a.runs > 0 ? a.runs : 10;
  int threads = resolve_threads(a.threads);
  TrainConfig cfg = fixed_config(a.epochs, threads, Convergence::accuracy_steps);

  std::ostringstream csv;
  csv << "suite,compilation,truth,decoys,run,seed,f1,steps,full_accuracy\n";
  std::map<Variant, std::vector<double>> steps_by_variant, f1_by_variant;

  for (int run = 0; run < runs; ++run) {
    std::uint64_t run_seed = a.seed + static_cast<std::uint64_t>(run);
    Rng data_rng(run_seed);
    auto truth =
        gen_random_clauses(n_vars, a.truth, 2, 5, clause_conjunctive, data_rng);
    int n_decoys = per_set ? a.truth * a.decoys : a.decoys;
    auto decoys =
        gen_random_clauses(n_vars, n_decoys, 2, 5, clause_conjunctive, data_rng);
    Dataset d = gen_clause_dataset(n_vars, truth, !dnf);

    Program model;
    if (per_set) {
      std::vector<std::vector<FormulaPtr>> sets;
      for (int i = 0; i < a.truth; ++i) {
        std::vector<FormulaPtr> set{clause_formula(truth[i], names)};
        for (int j = 0; j < a.decoys; ++j)
          set.push_back(clause_formula(decoys[i * a.decoys + j], names));
        sets.push_back(std::move(set));
      }
      model = one_per_set(sets);
    } else {
      std::vector<FormulaPtr> rules;
      for (const auto& c : truth) rules.push_back(clause_formula(c, names));
      for (const auto& c : decoys) rules.push_back(clause_formula(c, names));
      model = dnf ? select_rules_disjunctive(rules) : select_rules(rules);
    }

    // input order follows the formula, and unused variables drop out
    Dataset aligned = align_features(d, compile(model).input_names);
    SplitResult parts = split(aligned, 0.75, 0.0, 0.25, run_seed);

    for (Variant v : {Variant::conjunctive, Variant::disjunctive}) {
      CellResult cell = run_cell(model, v, parts, cfg, run_seed);
      csv << a.suite << "," << to_string(v) << "," << a.truth << "," << a.decoys << ","
          << run << "," << run_seed << "," << num_full(cell.f1) << "," << cell.steps
          << "," << (cell.full_accuracy ? 1 : 0) << "\n";
      steps_by_variant[v].push_back(static_cast<double>(cell.steps));
      f1_by_variant[v].push_back(cell.f1);
      std::cout << a.suite << " " << to_string(v) << " run " << run << ": f1 "
                << num_short(cell.f1) << ", steps " << cell.steps
                << (cell.full_accuracy ? " (full accuracy)" : "") << "\n";
    }
  }

  write_text_atomic(a.out, csv.str());
  for (Variant v : {Variant::conjunctive, Variant::disjunctive})
    std::cout << to_string(v) << ": median steps " << median(steps_by_variant[v])
              << ", median f1 " << num_short(median(f1_by_variant[v])) << "\n";
  std::cout << "results written to " << a.out << "\n";
}

// The five clause-construction templates compared on the fixed 5-definite-
// clause ground truth: from purely syntactic to partially provided knowledge.
std::vector<std::pair<std::string, Program>> definite_templates(
    const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, Program>> out;
  auto wrap = [](std::vector<FormulaPtr> clauses) {
    Program p;
    p.outputs.push_back({"y", conjunction_of(clauses)});
    return p;
  };

  {  // any clause: every literal slot picks !v, v, or drops out
    int id = 0;
    std::vector<FormulaPtr> clauses;
    for (int c = 0; c < 5; ++c) {
      std::vector<FormulaPtr> slots;
      for (const auto& v : names)
        slots.push_back(choice({negation(var(v)), var(v), constant(false)}, id++,
                               CompileHint::disjunctive));
      clauses.push_back(disjunction_of(slots));
    }
    out.push_back({"5-clauses", wrap(clauses)});
  }
  {
    int id = 0;
    std::vector<FormulaPtr> clauses;
    for (int c = 0; c < 5; ++c) clauses.push_back(definite_clause(names, {}, id));
    out.push_back({"5-definite", wrap(clauses)});
  }
  {
    int id = 0;
    std::vector<FormulaPtr> clauses;
    for (int c = 0; c < 5; ++c)
      clauses.push_back(width_k_clause(names, 3, ClauseLiterals::definite, id));
    out.push_back({"5-definite-width-3", wrap(clauses)});
  }
  {
    int id = 0;
    std::vector<FormulaPtr> clauses;
    for (const char* head : {"v7", "v4", "v10", "v8", "v5"})
      clauses.push_back(definite_clause(names, std::string(head), id));
    out.push_back({"5-definite-heads-given", wrap(clauses)});
  }
  {
    int id = 0;
    std::vector<FormulaPtr> clauses{
        disjunction_of({negation(var("v3")), negation(var("v8")), var("v7")})};
    for (int c = 0; c < 4; ++c) clauses.push_back(definite_clause(names, {}, id));
    out.push_back({"5-definite-first-given", wrap(clauses)});
  }
  return out;
}

// (!v3|!v8|v7) & (!v10|!v3|v4) & (!v1|!v9|v10) & (!v2|!v6|v8) & (!v4|!v3|v5)
std::vector<ClauseSpec> definite_ground_truth() {
  auto lit = [](int v, bool neg) { return Literal{v - 1, neg}; };
  return {
      {{lit(3, true), lit(8, true), lit(7, false)}, false},
      {{lit(10, true), lit(3, true), lit(4, false)}, false},
      {{lit(1, true), lit(9, true), lit(10, false)}, false},
      {{lit(2, true), lit(6, true), lit(8, false)}, false},
      {{lit(4, true), lit(3, true), lit(5, false)}, false},
  };
}

void run_definite_suite(const BenchArgs& a) {
  const auto names = var_names(10);
  int runs = a.runs > 0 ? a.runs : 20;
  int threads = resolve_threads(a.threads);
  TrainConfig cfg = fixed_config(a.epochs, threads, Convergence::epochs_only);

  Dataset d = gen_clause_dataset(10, definite_ground_truth(), true);
  std::ostringstream csv;
  csv << "template,run,seed,epoch,split,loss,f1\n";

  for (const auto& [name, model] : definite_templates(names)) {
    CompiledGraph g = compile(model);
    Dataset aligned = align_features(d, g.input_names);
    for (int run = 0; run < runs; ++run) {
      std::uint64_t run_seed = a.seed + static_cast<std::uint64_t>(run);
      SplitResult parts = split(aligned, 0.75, 0.0, 0.25, run_seed);
      Rng rng(run_seed);
      ParameterStore params = ParameterStore::init(g, rng, cfg.beta, cfg.temperature);
      auto row = [&](int epoch, const char* split_name, double loss, double f1) {
        csv << name << "," << run << "," << run_seed << "," << epoch << "," << split_name
            << "," << num_full(loss) << "," << num_full(f1) << "\n";
      };
      EvalMetrics init_train =
          evaluate(g, params, parts.train, cfg.loss, cfg.multiclass, threads);
      EvalMetrics init_test =
          evaluate(g, params, parts.test, cfg.loss, cfg.multiclass, threads);
      row(0, "train", init_train.loss, init_train.f1);
      row(0, "test", init_test.loss, init_test.f1);
      // the test split doubles as the per-epoch evaluation set
      TrainReport report = train(g, params, parts.train, &parts.test, cfg, rng);
      for (const auto& em : report.history) {
        row(em.epoch, "train", em.train_loss, em.train_f1);
        row(em.epoch, "test", em.val_loss, em.val_f1);
      }
      double final_f1 =
          report.history.empty() ? init_test.f1 : report.history.back().val_f1;
      std::cout << name << " run " << run << ": test f1 " << num_short(final_f1) << "\n";
    }
  }

  write_text_atomic(a.out, csv.str());
  std::cout << "learning curves written to " << a.out << "\n";
}

}  // namespace

void run_bench(const BenchArgs& a) {
  Stopwatch clock;
  if (a.out.empty()) throw UsageError("bench requires --out");
  if (a.suite == "select-cnf" || a.suite == "select-dnf" || a.suite == "one-per-set")
    run_selection_suite(a);
  else if (a.suite == "definite")
    run_definite_suite(a);
  else
    throw UsageError("unknown suite '" + a.suite +
                     "' (expected select-cnf, select-dnf, one-per-set or definite)");
  write_manifest(a.manifest, "bench",
                 {{"suite", a.suite},
                  {"truth", a.truth},
                  {"decoys", a.decoys},
                  {"runs", a.runs},
                  {"epochs", a.epochs},
                  {"threads", resolve_threads(a.threads)}},
                 a.seed, {}, {a.out}, clock.seconds());
}

}  // namespace loh::cli
