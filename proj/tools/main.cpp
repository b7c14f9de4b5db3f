#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "common.hpp"
#include "loh/checkpoint.hpp"
#include "loh/data.hpp"
#include "loh/extract.hpp"
#include "loh/graph.hpp"
#include "loh/hypothesis.hpp"
#include "loh/parser.hpp"
#include "loh/templates.hpp"
#include "loh/train.hpp"

namespace {

using namespace loh;
using loh::cli::median;
using loh::cli::num_full;
using loh::cli::num_short;
using loh::cli::read_text;
using loh::cli::resolve_threads;
using loh::cli::Stopwatch;
using loh::cli::UsageError;
using loh::cli::write_manifest;
using nlohmann::json;

std::optional<Variant> parse_force(const std::string& s) {
  if (s.empty()) return {};
  return variant_from_string(s);
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<std::string> numbered_vars(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("v" + std::to_string(i));
  return names;
}

// --vars a,b,c or --n-vars N (v1..vN); exactly one of the two
std::vector<std::string> resolve_vars(const std::string& vars_csv, int n_vars) {
  if (!vars_csv.empty() && n_vars > 0)
    throw UsageError("give either --vars or --n-vars, not both");
  if (!vars_csv.empty()) return split_csv_list(vars_csv);
  if (n_vars > 0) return numbered_vars(n_vars);
  throw UsageError("variable names required (--vars or --n-vars)");
}

// ---------------------------------------------------------------- compile

struct CompileArgs {
  std::string formula;
  std::string semantics = "godel";
  std::string root_context = "conj";
  std::string force;
  std::string dump_graph;
  std::string manifest;
};

void run_compile(const CompileArgs& a) {
  Stopwatch clock;
  auto prog = std::make_shared<Program>(parse_program(read_text(a.formula)));
  CompileOptions opts;
  opts.semantics = semantics_from_string(a.semantics);
  opts.root_context = variant_from_string(a.root_context);
  opts.force_variant = parse_force(a.force);
  CompiledGraph g = compile(prog, opts);

  std::cout << "semantics: " << to_string(g.semantics) << "\n";
  std::cout << "inputs (" << g.input_names.size() << "):";
  for (const auto& n : g.input_names) std::cout << " " << n;
  std::cout << "\nnodes: " << g.nodes.size() << "\n";
  for (const auto& b : g.weight_blocks)
    std::cout << "choice " << b.choice_id << ": arity " << b.arity << ", "
              << to_string(b.variant) << "\n";
  for (const auto& [label, node] : g.outputs)
    std::cout << "output " << label << ": node " << node << ", hypothesis space "
              << space_size(*prog, label).decimal << "\n";

  std::vector<std::string> outs;
  if (!a.dump_graph.empty()) {
    write_text_atomic(a.dump_graph, graph_to_json(g) + "\n");
    outs.push_back(a.dump_graph);
    std::cout << "graph written to " << a.dump_graph << "\n";
  }
  write_manifest(a.manifest, "compile",
                 {{"formula", a.formula},
                  {"semantics", a.semantics},
                  {"root_context", a.root_context},
                  {"force_variant", a.force}},
                 0, {a.formula}, outs, clock.seconds());
}

// ---------------------------------------------------------------- enumerate

struct EnumerateArgs {
  std::string formula;
  std::string output_label;
  std::uint64_t limit = 1'000'000;
  bool dedup = false;
  bool count_only = false;
  std::string out;
};

const std::string& pick_output(const Program& p, const std::string& label) {
  if (!label.empty()) {
    if (!p.find_output(label)) throw UsageError("no output labeled '" + label + "'");
    return label;
  }
  if (p.outputs.size() != 1) {
    std::string labels;
    for (const auto& o : p.outputs) labels += (labels.empty() ? "" : ", ") + o.label;
    throw UsageError("program has several outputs (" + labels + "); pick one with --output");
  }
  return p.outputs.front().label;
}

void run_enumerate(const EnumerateArgs& a) {
  Program p = parse_program(read_text(a.formula));
  const std::string& label = pick_output(p, a.output_label);
  if (a.count_only) {
    std::cout << space_size(p, label).decimal << "\n";
    return;
  }
  EnumerateOptions opts;
  opts.limit = a.limit;
  opts.dedup = a.dedup;
  std::vector<FormulaPtr> space = enumerate_space(p, label, opts);
  std::ostringstream text;
  for (const auto& f : space) text << format_formula(f) << "\n";
  if (a.out.empty())
    std::cout << text.str();
  else {
    write_text_atomic(a.out, text.str());
    std::cout << space.size() << " formulas written to " << a.out << "\n";
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string formula;
  std::string data;
  std::string label_column = "label";
  std::string positive_class;
  int bins = 0;
  std::string split_spec = "0.7,0.1,0.2";
  std::string semantics = "godel";
  std::string root_context = "conj";
  std::string force;
  std::uint64_t seed = 0;
  int runs = 1;
  double lr = 0.1;
  int batch = 128;
  int epochs = 100;
  double beta = 1.0;
  double temperature = 1.0;
  double temp_decay = 1.0;
  std::string loss = "bce";
  std::string multiclass;  // empty: pick by output count
  std::string convergence = "epochs";
  int threads = 0;
  std::string checkpoint_path;
  std::string metrics_path;
  std::string save_splits;
  std::string manifest;
};

std::array<double, 3> parse_fractions(const std::string& spec) {
  auto parts = split_csv_list(spec);
  if (parts.size() != 3)
    throw UsageError("--split needs three fractions, e.g. 0.7,0.1,0.2");
  std::array<double, 3> f{};
  for (size_t i = 0; i < 3; ++i) {
    try {
      f[i] = std::stod(parts[i]);
    } catch (const std::exception&) {
      throw UsageError("bad fraction '" + parts[i] + "' in --split");
    }
  }
  return f;
}

// load_csv numbers classes by first occurrence in the file; for binary tasks
// the learner targets class 1, so make sure the conventional positive label
// ("1", "positive", or the requested name) sits at index 1.
Dataset orient_binary_classes(Dataset d, const std::string& requested) {
  if (d.n_classes != 2) {
    if (!requested.empty())
      throw UsageError("--positive-class applies to binary datasets only");
    return d;
  }
  std::string positive = requested;
  if (positive.empty()) {
    auto has = [&](const char* s) {
      return d.class_names[0] == s || d.class_names[1] == s;
    };
    if (has("1") && has("0"))
      positive = "1";
    else if (has("positive") && has("negative"))
      positive = "positive";
    else
      return d;  // no convention recognized; keep file order
  }
  if (d.class_names[1] == positive) return d;
  if (d.class_names[0] != positive)
    throw UsageError("positive class '" + requested + "' is not a dataset label");
  std::swap(d.class_names[0], d.class_names[1]);
  for (int& label : d.y) label = 1 - label;
  return d;
}

struct MetricsRow {
  int run = 0;
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double f1 = 0.0;
};

std::string render_metrics(const std::vector<MetricsRow>& rows, bool with_run) {
  std::ostringstream out;
  out << (with_run ? "run,epoch,split,loss,f1\n" : "epoch,split,loss,f1\n");
  for (const auto& r : rows) {
    if (with_run) out << r.run << ",";
    out << r.epoch << "," << r.split << "," << num_full(r.loss) << "," << num_full(r.f1)
        << "\n";
  }
  return out.str();
}

void run_train(const TrainArgs& a) {
  Stopwatch clock;
  std::string source_text = read_text(a.formula);
  auto prog = std::make_shared<Program>(parse_program(source_text));
  CompileOptions copts;
  copts.semantics = semantics_from_string(a.semantics);
  copts.root_context = variant_from_string(a.root_context);
  copts.force_variant = parse_force(a.force);
  CompiledGraph g = compile(prog, copts);

  Dataset full = orient_binary_classes(load_csv(a.data, a.label_column, a.bins),
                                       a.positive_class);
  Dataset aligned = align_features(full, g.input_names);
  auto fr = parse_fractions(a.split_spec);
  SplitResult parts = split(aligned, fr[0], fr[1], fr[2], a.seed);
  if (parts.train.size() == 0) throw DataError("train split is empty");
  bool have_val = parts.val.size() > 0;
  bool have_test = parts.test.size() > 0;

  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.max_epochs = a.epochs;
  cfg.beta = a.beta;
  cfg.temperature = a.temperature;
  cfg.temp_decay = a.temp_decay;
  cfg.loss = loss_from_string(a.loss);
  cfg.multiclass = a.multiclass.empty()
                       ? (g.outputs.size() > 1 ? Multiclass::exclusive_top2
                                               : Multiclass::independent)
                       : multiclass_from_string(a.multiclass);
  cfg.convergence = convergence_from_string(a.convergence);
  cfg.threads = resolve_threads(a.threads);
  if (a.runs < 1) throw UsageError("--runs must be at least 1");

  std::vector<std::string> outputs_written;
  if (!a.save_splits.empty()) {
    write_csv(parts.train, a.save_splits + ".train.csv");
    outputs_written.push_back(a.save_splits + ".train.csv");
    if (have_val) {
      write_csv(parts.val, a.save_splits + ".val.csv");
      outputs_written.push_back(a.save_splits + ".val.csv");
    }
    if (have_test) {
      write_csv(parts.test, a.save_splits + ".test.csv");
      outputs_written.push_back(a.save_splits + ".test.csv");
    }
  }

  std::vector<MetricsRow> rows;
  std::vector<double> final_f1s;
  int best_run = -1;
  double best_f1 = -1.0;
  ParameterStore best_params;
  EvalMetrics best_test;
  TrainReport best_report;

  for (int run = 0; run < a.runs; ++run) {
    std::uint64_t run_seed = a.seed + static_cast<std::uint64_t>(run);
    Rng rng(run_seed);
    ParameterStore params = ParameterStore::init(g, rng, cfg.beta, cfg.temperature);

    EvalMetrics init_train =
        evaluate(g, params, parts.train, cfg.loss, cfg.multiclass, cfg.threads);
    rows.push_back({run, 0, "train", init_train.loss, init_train.f1});
    if (have_val) {
      EvalMetrics iv = evaluate(g, params, parts.val, cfg.loss, cfg.multiclass, cfg.threads);
      rows.push_back({run, 0, "val", iv.loss, iv.f1});
    }

    TrainReport report =
        train(g, params, parts.train, have_val ? &parts.val : nullptr, cfg, rng);
    for (const auto& em : report.history) {
      rows.push_back({run, em.epoch, "train", em.train_loss, em.train_f1});
      if (have_val) rows.push_back({run, em.epoch, "val", em.val_loss, em.val_f1});
    }
    int last_epoch = report.history.empty() ? 0 : report.history.back().epoch;

    EvalMetrics test;
    double run_f1;
    if (have_test) {
      test = evaluate(g, params, parts.test, cfg.loss, cfg.multiclass, cfg.threads);
      rows.push_back({run, last_epoch, "test", test.loss, test.f1});
      run_f1 = test.f1;
    } else {
      run_f1 = report.history.empty() ? init_train.f1 : report.history.back().train_f1;
    }
    final_f1s.push_back(run_f1);

    std::cout << "run " << run << " (seed " << run_seed << "): "
              << (have_test ? "test" : "train") << " f1 " << num_short(run_f1);
    if (cfg.convergence == Convergence::accuracy_steps)
      std::cout << ", steps to convergence " << report.steps_to_convergence
                << (report.reached_full_accuracy ? " (full accuracy)" : "");
    std::cout << "\n";

    if (run_f1 > best_f1) {
      best_f1 = run_f1;
      best_run = run;
      best_params = params;
      best_test = test;
      best_report = report;
    }
  }

  if (a.runs > 1) {
    double mean = 0.0;
    for (double f : final_f1s) mean += f;
    mean /= static_cast<double>(final_f1s.size());
    double var = 0.0;
    for (double f : final_f1s) var += (f - mean) * (f - mean);
    var /= static_cast<double>(final_f1s.size());
    std::cout << "f1 over " << a.runs << " runs: mean " << num_short(mean) << " +/- "
              << num_short(std::sqrt(var)) << ", median "
              << num_short(median(final_f1s)) << "\n";
  }

  if (!a.metrics_path.empty()) {
    write_text_atomic(a.metrics_path, render_metrics(rows, a.runs > 1));
    outputs_written.push_back(a.metrics_path);
    std::cout << "metrics written to " << a.metrics_path << "\n";
  }

  if (!a.checkpoint_path.empty()) {
    Checkpoint c;
    c.source_text = source_text;
    c.semantics = g.semantics;
    c.root_context = g.root_context;
    c.force_variant = copts.force_variant;
    c.variant_map = g.variant_map;
    c.blocks = best_params.blocks;
    c.cfg = cfg;
    c.seed = a.seed + static_cast<std::uint64_t>(best_run);
    c.input_names = g.input_names;
    c.class_names = aligned.class_names;
    c.label_column = a.label_column;
    if (have_test) {
      c.metrics["test_f1"] = best_test.f1;
      c.metrics["test_loss"] = best_test.loss;
      c.metrics["test_accuracy"] = best_test.acc;
    }
    c.metrics["final_train_accuracy"] = best_report.final_train_accuracy;
    c.metrics["steps_to_convergence"] =
        static_cast<double>(best_report.steps_to_convergence);
    save_checkpoint(c, a.checkpoint_path);
    outputs_written.push_back(a.checkpoint_path);
    std::cout << "checkpoint written to " << a.checkpoint_path << " (run " << best_run
              << ")\n";
  }

  write_manifest(a.manifest, "train",
                 {{"formula", a.formula},
                  {"data", a.data},
                  {"label_column", a.label_column},
                  {"bins", a.bins},
                  {"split", a.split_spec},
                  {"semantics", a.semantics},
                  {"root_context", a.root_context},
                  {"force_variant", a.force},
                  {"runs", a.runs},
                  {"learning_rate", cfg.learning_rate},
                  {"batch_size", cfg.batch_size},
                  {"max_epochs", cfg.max_epochs},
                  {"beta", cfg.beta},
                  {"temperature", cfg.temperature},
                  {"temp_decay", cfg.temp_decay},
                  {"loss", to_string(cfg.loss)},
                  {"multiclass", to_string(cfg.multiclass)},
                  {"convergence", to_string(cfg.convergence)},
                  {"threads", cfg.threads}},
                 a.seed, {a.formula, a.data}, outputs_written, clock.seconds());
}

// ---------------------------------------------------------------- eval

struct LoadedModel {
  std::shared_ptr<const Program> program;
  CompiledGraph graph;
  ParameterStore params;
  Checkpoint ckpt;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.ckpt = load_checkpoint(path);
  m.program = std::make_shared<Program>(parse_program(m.ckpt.source_text));
  CompileOptions opts;
  opts.semantics = m.ckpt.semantics;
  opts.root_context = m.ckpt.root_context;
  opts.force_variant = m.ckpt.force_variant;
  m.graph = compile(m.program, opts);
  if (m.graph.variant_map != m.ckpt.variant_map)
    throw DataError("checkpoint variants disagree with the recompiled graph");
  for (const auto& b : m.graph.weight_blocks) {
    auto it = m.ckpt.blocks.find(b.choice_id);
    if (it == m.ckpt.blocks.end())
      throw DataError("checkpoint lacks parameters for choice " +
                      std::to_string(b.choice_id));
    if (it->second.arity() != b.arity)
      throw DataError("checkpoint arity mismatch at choice " +
                      std::to_string(b.choice_id));
  }
  m.params.blocks = m.ckpt.blocks;
  return m;
}

// Remaps the file's first-occurrence class indices onto the label order the
// model was trained with.
Dataset remap_classes(Dataset d, const std::vector<std::string>& trained_classes) {
  std::vector<int> remap(d.class_names.size(), -1);
  for (size_t i = 0; i < d.class_names.size(); ++i) {
    auto it = std::find(trained_classes.begin(), trained_classes.end(), d.class_names[i]);
    if (it == trained_classes.end())
      throw DataError("class '" + d.class_names[i] + "' was not present at training time");
    remap[i] = static_cast<int>(it - trained_classes.begin());
  }
  for (int& label : d.y) label = remap[static_cast<size_t>(label)];
  d.class_names = trained_classes;
  d.n_classes = static_cast<int>(trained_classes.size());
  return d;
}

void print_confusion(const EvalMetrics& m, const std::vector<std::string>& class_names) {
  std::cout << "confusion (rows truth, cols predicted):\n";
  for (size_t i = 0; i < m.confusion.size(); ++i) {
    std::cout << "  " << class_names[i] << ":";
    for (long v : m.confusion[i]) std::cout << " " << v;
    std::cout << "\n";
  }
}

// Label from thresholded outputs: single output reads as class 1 when true;
// several outputs pick the first true one (class 0 when none fires).
std::vector<int> labels_from_bits(const std::vector<std::uint8_t>& bits, size_t rows,
                                  size_t cols) {
  std::vector<int> labels(rows, 0);
  for (size_t r = 0; r < rows; ++r) {
    if (cols == 1) {
      labels[r] = bits[r] ? 1 : 0;
      continue;
    }
    int pick = 0;
    for (size_t c = 0; c < cols; ++c)
      if (bits[r * cols + c]) {
        pick = static_cast<int>(c);
        break;
      }
    labels[r] = pick;
  }
  return labels;
}

std::vector<std::uint8_t> eval_rules_bits(const ExtractedRuleSet& rules,
                                          const CompiledGraph& g, const Matrix& X) {
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < g.input_names.size(); ++i) col[g.input_names[i]] = i;
  size_t n_out = rules.rules.size();
  std::vector<std::uint8_t> bits(X.rows * n_out, 0);
  for (size_t r = 0; r < X.rows; ++r) {
    auto value_of = [&](const std::string& name) {
      auto it = col.find(name);
      if (it == col.end())
        throw ValidationError("rule references unknown input '" + name + "'");
      return X.at(r, it->second) > 0.5;
    };
    for (size_t o = 0; o < n_out; ++o)
      bits[r * n_out + o] = eval_bool(rules.rules[o].second, value_of) ? 1 : 0;
  }
  return bits;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string label_column;  // empty: the checkpoint's column
  int bins = 0;
  bool discrete = false;
  int threads = 0;
  std::string manifest;
};

void run_eval(const EvalArgs& a) {
  Stopwatch clock;
  LoadedModel m = load_model(a.checkpoint);
  std::string label_col = a.label_column.empty() ? m.ckpt.label_column : a.label_column;
  Dataset d = load_csv(a.data, label_col, a.bins);
  d = remap_classes(std::move(d), m.ckpt.class_names);
  Dataset aligned = align_features(d, m.graph.input_names);
  if (aligned.size() == 0) throw DataError("dataset is empty");
  int threads = resolve_threads(a.threads);

  EvalMetrics cont = evaluate(m.graph, m.params, aligned, m.ckpt.cfg.loss,
                              m.ckpt.cfg.multiclass, threads);
  std::cout << "continuous: loss " << num_short(cont.loss) << ", macro f1 "
            << num_short(cont.f1) << ", accuracy " << num_short(cont.acc) << "\n";
  print_confusion(cont, aligned.class_names);

  if (a.discrete) {
    ExtractedRuleSet rules = extract(m.graph, m.params, *m.program);
    size_t n_out = rules.rules.size();
    if (m.graph.semantics == Semantics::godel) {
      VerifySummary vs =
          verify_lossless(m.graph, m.params, rules, aligned.X, 1e-9, threads);
      if (vs.mismatches != 0)
        throw NumericError("discrete evaluation disagrees with the rounded continuous "
                           "output on " +
                           std::to_string(vs.mismatches) + " of " +
                           std::to_string(vs.samples) + " checks");
      std::cout << "discrete agreement: " << vs.samples << " checks, 0 mismatches, "
                << vs.near_threshold << " near threshold\n";
    } else {
      std::cout << "warning: product semantics does not guarantee discrete/continuous "
                   "agreement (max(min(0.6,0.7), min(0.4,0)) rounds to 1 while "
                   "0.6*0.7 = 0.42 rounds to 0)\n";
    }

    std::vector<std::uint8_t> dbits = eval_rules_bits(rules, m.graph, aligned.X);
    Matrix cont_out = forward(m.graph, m.params, aligned.X, {false, threads});
    std::vector<std::uint8_t> cbits(cont_out.rows * cont_out.cols, 0);
    for (size_t i = 0; i < cont_out.data.size(); ++i)
      cbits[i] = cont_out.data[i] > 0.5 ? 1 : 0;

    auto dlabels = labels_from_bits(dbits, aligned.size(), n_out);
    auto clabels = labels_from_bits(cbits, aligned.size(), n_out);
    double f1_d = macro_f1(dlabels, aligned.y, aligned.n_classes);
    double f1_c = macro_f1(clabels, aligned.y, aligned.n_classes);
    std::cout << "discrete rules: macro f1 " << num_short(f1_d) << ", accuracy "
              << num_short(accuracy(dlabels, aligned.y)) << "\n";
    std::cout << "rounded continuous: macro f1 " << num_short(f1_c) << "\n";
  }

  write_manifest(a.manifest, "eval",
                 {{"checkpoint", a.checkpoint},
                  {"data", a.data},
                  {"label_column", label_col},
                  {"bins", a.bins},
                  {"discrete", a.discrete},
                  {"threads", threads}},
                 m.ckpt.seed, {a.checkpoint, a.data}, {}, clock.seconds());
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string checkpoint;
  bool simplify_rules = false;
  std::string out;
  std::string verify_data;
  std::string label_column;
  bool exhaustive = false;
  std::string summary;
  int threads = 0;
  std::string manifest;
};

void run_extract(const ExtractArgs& a) {
  Stopwatch clock;
  LoadedModel m = load_model(a.checkpoint);
  ExtractedRuleSet rules = extract(m.graph, m.params, *m.program, a.simplify_rules);
  for (int id : rules.tied_blocks)
    std::cerr << "warning: choice " << id
              << " has tied top logits; the lowest index was kept\n";

  std::ostringstream text;
  for (const auto& [label, f] : rules.rules)
    text << "out " << label << " = " << format_formula(f) << ";\n";
  std::vector<std::string> outs;
  if (a.out.empty())
    std::cout << text.str();
  else {
    write_text_atomic(a.out, text.str());
    outs.push_back(a.out);
    std::cout << rules.rules.size() << " rules written to " << a.out << "\n";
  }

  VerifySummary vs;
  bool verified = false;
  std::vector<std::string> manifest_inputs{a.checkpoint};
  if (a.exhaustive) {
    vs = verify_lossless_exhaustive(m.graph, m.params, rules, 1e-9,
                                    resolve_threads(a.threads));
    verified = true;
  } else if (!a.verify_data.empty()) {
    std::string label_col = a.label_column.empty() ? m.ckpt.label_column : a.label_column;
    Dataset d = load_csv(a.verify_data, label_col, 0);
    Dataset aligned = align_features(d, m.graph.input_names);
    vs = verify_lossless(m.graph, m.params, rules, aligned.X, 1e-9,
                         resolve_threads(a.threads));
    verified = true;
    manifest_inputs.push_back(a.verify_data);
  }
  if (verified) {
    std::cout << "verification: " << vs.samples << " checks, " << vs.mismatches
              << " mismatches, " << vs.near_threshold << " near threshold"
              << (vs.exhaustive ? " (exhaustive)" : "") << "\n";
    if (vs.mismatches != 0)
      throw NumericError("extracted rules disagree with the continuous model");
  }
  if (!a.summary.empty()) {
    json j{{"samples", vs.samples},
           {"mismatches", vs.mismatches},
           {"near_threshold", vs.near_threshold},
           {"exhaustive", vs.exhaustive},
           {"verified", verified},
           {"tied_choices", rules.tied_blocks}};
    json idx = json::object();
    for (const auto& [id, branch] : rules.indices) idx[std::to_string(id)] = branch;
    j["indices"] = idx;
    write_text_atomic(a.summary, j.dump(2) + "\n");
    outs.push_back(a.summary);
  }

  write_manifest(a.manifest, "extract",
                 {{"checkpoint", a.checkpoint},
                  {"simplify", a.simplify_rules},
                  {"verify_data", a.verify_data},
                  {"exhaustive", a.exhaustive}},
                 m.ckpt.seed, manifest_inputs, outs, clock.seconds());
}

// ---------------------------------------------------------------- template

struct TemplateArgs {
  std::string kind;
  std::string rules_file;
  std::string vars_csv;
  int n_vars = 0;
  int k = 0;
  std::string literals = "both";
  std::string head;
  std::vector<std::string> layer_specs;
  int n_outputs = 0;
  std::string inputs_from;
  std::string label_column = "label";
  std::string output_label = "y";
  bool no_hints = false;
  std::string out;
  std::string manifest;
};

std::vector<FormulaPtr> parse_rule_lines(const std::string& text) {
  std::vector<FormulaPtr> rules;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FormulaPtr f = parse_formula(line);
    if (!is_discrete(f))
      throw UsageError("rule '" + line + "' must be a classical formula (no choices)");
    rules.push_back(f);
  }
  return rules;
}

// Groups separated by blank lines; one formula per line.
std::vector<std::vector<FormulaPtr>> parse_rule_groups(const std::string& text) {
  std::vector<std::vector<FormulaPtr>> groups;
  std::vector<FormulaPtr> current;
  std::istringstream in(text);
  std::string line;
  auto flush = [&] {
    if (!current.empty()) groups.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
      continue;
    }
    FormulaPtr f = parse_formula(line);
    if (!is_discrete(f))
      throw UsageError("rule '" + line + "' must be a classical formula (no choices)");
    current.push_back(f);
  }
  flush();
  return groups;
}

ClauseLiterals literals_from_string(const std::string& s) {
  if (s == "both") return ClauseLiterals::both;
  if (s == "positive") return ClauseLiterals::positive;
  if (s == "definite") return ClauseLiterals::definite;
  throw UsageError("unknown literal pool '" + s +
                   "' (expected both, positive or definite)");
}

LayerSpec parse_layer_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 2 || parts.size() > 4)
    throw UsageError("layer spec '" + spec + "' should look like conj:32 or conj:32:fixed-k:3");
  LayerSpec layer;
  layer.kind = variant_from_string(parts[0]);
  try {
    layer.width = std::stoi(parts[1]);
  } catch (const std::exception&) {
    throw UsageError("bad layer width in '" + spec + "'");
  }
  if (parts.size() >= 3) {
    if (parts[2] == "subset")
      layer.style = NeuronStyle::subset;
    else if (parts[2] == "subset-neg")
      layer.style = NeuronStyle::subset_negation;
    else if (parts[2] == "fixed-k")
      layer.style = NeuronStyle::fixed_k;
    else
      throw UsageError("unknown neuron style '" + parts[2] +
                       "' (expected subset, subset-neg or fixed-k)");
  }
  if (layer.style == NeuronStyle::fixed_k) {
    if (parts.size() != 4)
      throw UsageError("fixed-k layers need a clause width, e.g. conj:32:fixed-k:3");
    try {
      layer.k = std::stoi(parts[3]);
    } catch (const std::exception&) {
      throw UsageError("bad k in '" + spec + "'");
    }
  } else if (parts.size() == 4) {
    throw UsageError("only fixed-k layers take a fourth field: '" + spec + "'");
  }
  return layer;
}

void run_template(const TemplateArgs& a) {
  Stopwatch clock;
  if (a.out.empty()) throw UsageError("template requires --out");
  bool hints = !a.no_hints;
  std::vector<std::string> manifest_inputs;
  Program p;

  if (a.kind == "select" || a.kind == "one-per-set") {
    if (a.rules_file.empty())
      throw UsageError(a.kind + " needs --rules-file (one formula per line" +
                       (a.kind == "one-per-set" ? ", groups split by blank lines" : "") +
                       ")");
    std::string text = read_text(a.rules_file);
    manifest_inputs.push_back(a.rules_file);
    if (a.kind == "select") {
      auto rules = parse_rule_lines(text);
      if (rules.empty()) throw UsageError("no rules in " + a.rules_file);
      p = select_rules(rules, hints);
    } else {
      auto groups = parse_rule_groups(text);
      if (groups.empty()) throw UsageError("no rule groups in " + a.rules_file);
      p = one_per_set(groups, hints);
    }
  } else if (a.kind == "width-k") {
    auto vars = resolve_vars(a.vars_csv, a.n_vars);
    if (a.k < 1) throw UsageError("width-k needs --k >= 1");
    int id = 0;
    p.outputs.push_back(
        {a.output_label, width_k_clause(vars, a.k, literals_from_string(a.literals), id, hints)});
  } else if (a.kind == "definite") {
    auto vars = resolve_vars(a.vars_csv, a.n_vars);
    std::optional<std::string> head;
    if (!a.head.empty()) head = a.head;
    int id = 0;
    p.outputs.push_back({a.output_label, definite_clause(vars, head, id, hints)});
  } else if (a.kind == "layers") {
    std::vector<std::string> inputs;
    if (!a.inputs_from.empty()) {
      Dataset d = load_csv(a.inputs_from, a.label_column, 0);
      manifest_inputs.push_back(a.inputs_from);
      for (const auto& name : d.feature_names) inputs.push_back(identifier_for(name));
    } else {
      inputs = resolve_vars(a.vars_csv, a.n_vars);
    }
    if (a.layer_specs.empty())
      throw UsageError("layers needs at least one --layer kind:width[:style[:k]]");
    std::vector<LayerSpec> layers;
    for (const auto& spec : a.layer_specs) layers.push_back(parse_layer_spec(spec));
    int n_outputs = a.n_outputs > 0 ? a.n_outputs : layers.back().width;
    p = layered_net(inputs, layers, n_outputs, hints);
  } else {
    throw UsageError("unknown template kind '" + a.kind +
                     "' (expected select, one-per-set, width-k, definite or layers)");
  }

  std::string text = format_program(p);
  Program reparsed = parse_program(text);  // round-trip sanity
  CompiledGraph g = compile(reparsed);
  write_text_atomic(a.out, text);
  std::cout << "template written to " << a.out << " (" << g.weight_blocks.size()
            << " choices";
  for (const auto& o : reparsed.outputs)
    std::cout << "; space " << space_size(reparsed, o.label).decimal << " for " << o.label;
  std::cout << ")\n";

  write_manifest(a.manifest, "template",
                 {{"kind", a.kind},
                  {"rules_file", a.rules_file},
                  {"vars", a.vars_csv},
                  {"n_vars", a.n_vars},
                  {"k", a.k},
                  {"literals", a.literals},
                  {"head", a.head},
                  {"layers", a.layer_specs},
                  {"hints", hints}},
                 0, manifest_inputs, {a.out}, clock.seconds());
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string task;
  std::string out;
  int n_vars = 10;
  int n_clauses = 5;
  int min_width = 2;
  int max_width = 5;
  std::string clause_type = "disj";
  std::string combine = "conj";
  std::vector<std::string> clauses;
  std::uint64_t seed = 0;
  std::string clauses_out;
  std::string manifest;
};

ClauseSpec formula_to_clause(const FormulaPtr& f,
                             const std::map<std::string, int>& var_index,
                             bool default_conjunctive) {
  ClauseSpec spec;
  FormulaKind top = f->kind;
  if (top == FormulaKind::conjunction)
    spec.conjunctive = true;
  else if (top == FormulaKind::disjunction)
    spec.conjunctive = false;
  else
    spec.conjunctive = default_conjunctive;
  FormulaKind connective =
      spec.conjunctive ? FormulaKind::conjunction : FormulaKind::disjunction;

  std::function<void(const FormulaPtr&)> walk = [&](const FormulaPtr& node) {
    if (node->kind == FormulaKind::var ||
        (node->kind == FormulaKind::negation &&
         node->children[0]->kind == FormulaKind::var)) {
      bool neg = node->kind == FormulaKind::negation;
      const std::string& name = neg ? node->children[0]->name : node->name;
      auto it = var_index.find(name);
      if (it == var_index.end())
        throw UsageError("clause variable '" + name + "' is outside v1..v" +
                         std::to_string(var_index.size()));
      spec.literals.push_back({it->second, neg});
      return;
    }
    if (node->kind == connective) {
      walk(node->children[0]);
      walk(node->children[1]);
      return;
    }
    throw UsageError("clause must be a flat conjunction or disjunction of literals: " +
                     format_formula(node));
  };
  walk(f);
  return spec;
}

void run_gen(const GenArgs& a) {
  Stopwatch clock;
  if (a.out.empty()) throw UsageError("gen requires --out");
  std::vector<std::string> outs{a.out};

  if (a.task == "tictactoe") {
    write_tictactoe_csv(a.out);
    std::cout << "tic-tac-toe endgames written to " << a.out
              << " (958 rows, 9 categorical cells, label column 'outcome')\n";
    write_manifest(a.manifest, "gen", {{"task", a.task}}, 0, {}, outs, clock.seconds());
    return;
  }
  if (a.task != "clauses")
    throw UsageError("unknown task '" + a.task + "' (expected tictactoe or clauses)");

  auto names = numbered_vars(a.n_vars);
  bool conjunctive_clauses = variant_from_string(a.clause_type) == Variant::conjunctive;
  bool combine_conjunctive = variant_from_string(a.combine) == Variant::conjunctive;

  std::vector<ClauseSpec> specs;
  if (!a.clauses.empty()) {
    std::map<std::string, int> var_index;
    for (int i = 0; i < a.n_vars; ++i) var_index[names[static_cast<size_t>(i)]] = i;
    for (const auto& text : a.clauses)
      specs.push_back(
          formula_to_clause(parse_formula(text), var_index, conjunctive_clauses));
  } else {
    Rng rng(a.seed);
    specs = gen_random_clauses(a.n_vars, a.n_clauses, a.min_width, a.max_width,
                               conjunctive_clauses, rng);
  }

  Dataset d = gen_clause_dataset(a.n_vars, specs, combine_conjunctive);
  write_csv(d, a.out);

  std::ostringstream clause_text;
  for (const auto& spec : specs)
    clause_text << format_formula(clause_formula(spec, names)) << "\n";
  std::cout << "ground truth (" << (combine_conjunctive ? "conjunction" : "disjunction")
            << " of " << specs.size() << " clauses):\n"
            << clause_text.str();
  size_t positives = 0;
  for (int label : d.y) positives += static_cast<size_t>(label);
  std::cout << d.size() << " rows written to " << a.out << " (" << positives
            << " positive)\n";
  if (!a.clauses_out.empty()) {
    write_text_atomic(a.clauses_out, clause_text.str());
    outs.push_back(a.clauses_out);
    std::cout << "clauses written to " << a.clauses_out << "\n";
  }

  write_manifest(a.manifest, "gen",
                 {{"task", a.task},
                  {"n_vars", a.n_vars},
                  {"n_clauses", a.n_clauses},
                  {"min_width", a.min_width},
                  {"max_width", a.max_width},
                  {"clause_type", a.clause_type},
                  {"combine", a.combine},
                  {"explicit_clauses", a.clauses}},
                 a.seed, {}, outs, clock.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loh: learn and extract propositional rules via choice operators"};
  app.require_subcommand(1);

  CompileArgs compile_args;
  auto* c = app.add_subcommand("compile", "lower a .loh file to a computation graph");
  c->add_option("--formula", compile_args.formula, "input .loh file")->required();
  c->add_option("--semantics", compile_args.semantics, "godel | product")
      ->capture_default_str();
  c->add_option("--root-context", compile_args.root_context,
                "polarity context at the outputs: conj | disj")
      ->capture_default_str();
  c->add_option("--force-variant", compile_args.force,
                "compile every choice this way: conj | disj");
  c->add_option("--dump-graph", compile_args.dump_graph, "write the node list as JSON");
  c->add_option("--manifest", compile_args.manifest, "write a run manifest here");
  c->callback([&] { run_compile(compile_args); });

  EnumerateArgs enum_args;
  auto* e = app.add_subcommand("enumerate", "list the hypothesis space of a .loh file");
  e->add_option("--formula", enum_args.formula, "input .loh file")->required();
  e->add_option("--output", enum_args.output_label, "output label (default: the only one)");
  e->add_option("--limit", enum_args.limit, "refuse spaces larger than this")
      ->capture_default_str();
  e->add_flag("--dedup", enum_args.dedup, "drop structural duplicates");
  e->add_flag("--count", enum_args.count_only, "print only the space size");
  e->add_option("--out", enum_args.out, "write formulas here instead of stdout");
  e->callback([&] { run_enumerate(enum_args); });

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "fit choice gates to a labeled CSV");
  t->add_option("--formula", train_args.formula, "model .loh file")->required();
  t->add_option("--data", train_args.data, "labeled CSV")->required();
  t->add_option("--label-column", train_args.label_column, "label column name")
      ->capture_default_str();
  t->add_option("--positive-class", train_args.positive_class,
                "binary label treated as class 1 (default: '1' or 'positive' "
                "when present, else file order)");
  t->add_option("--bins", train_args.bins,
                "equal-frequency bins for non-binary numeric columns");
  t->add_option("--split", train_args.split_spec, "train,val,test fractions")
      ->capture_default_str();
  t->add_option("--semantics", train_args.semantics, "godel | product")
      ->capture_default_str();
  t->add_option("--root-context", train_args.root_context, "conj | disj")
      ->capture_default_str();
  t->add_option("--force-variant", train_args.force, "conj | disj");
  t->add_option("--seed", train_args.seed, "base seed")->capture_default_str();
  t->add_option("--runs", train_args.runs, "repeat with seeds seed..seed+N-1")
      ->capture_default_str();
  t->add_option("--lr", train_args.lr, "learning rate")->capture_default_str();
  t->add_option("--batch", train_args.batch, "minibatch size")->capture_default_str();
  t->add_option("--epochs", train_args.epochs, "epoch budget")->capture_default_str();
  t->add_option("--beta", train_args.beta, "Gumbel noise scale")->capture_default_str();
  t->add_option("--temperature", train_args.temperature, "gate sigmoid temperature")
      ->capture_default_str();
  t->add_option("--temp-decay", train_args.temp_decay,
                "temperature multiplier applied every 10 epochs")
      ->capture_default_str();
  t->add_option("--loss", train_args.loss, "bce | mse")->capture_default_str();
  t->add_option("--multiclass", train_args.multiclass,
                "independent | exclusive-top2 (default: exclusive-top2 when the model "
                "has several outputs)");
  t->add_option("--convergence", train_args.convergence,
                "epochs | accuracy (stop at full training accuracy, a 64-step "
                "accuracy plateau, or step 384)")
      ->capture_default_str();
  t->add_option("--threads", train_args.threads, "worker threads (default: LOH_THREADS or 1)");
  t->add_option("--checkpoint", train_args.checkpoint_path,
                "write the best run's checkpoint here");
  t->add_option("--metrics", train_args.metrics_path, "write per-epoch metrics CSV here");
  t->add_option("--save-splits", train_args.save_splits,
                "write PREFIX.{train,val,test}.csv with the exact split");
  t->add_option("--manifest", train_args.manifest, "write a run manifest here");
  t->callback([&] { run_train(train_args); });

  EvalArgs eval_args;
  auto* v = app.add_subcommand("eval", "evaluate a checkpoint on a labeled CSV");
  v->add_option("--checkpoint", eval_args.checkpoint, "checkpoint JSON")->required();
  v->add_option("--data", eval_args.data, "labeled CSV")->required();
  v->add_option("--label-column", eval_args.label_column,
                "label column (default: the checkpoint's)");
  v->add_option("--bins", eval_args.bins, "equal-frequency bins for numeric columns");
  v->add_flag("--discrete", eval_args.discrete,
              "also evaluate the extracted rules; under godel semantics any "
              "disagreement with the rounded continuous output is a hard failure");
  v->add_option("--threads", eval_args.threads, "worker threads");
  v->add_option("--manifest", eval_args.manifest, "write a run manifest here");
  v->callback([&] { run_eval(eval_args); });

  ExtractArgs extract_args;
  auto* x = app.add_subcommand("extract", "read the learned rules out of a checkpoint");
  x->add_option("--checkpoint", extract_args.checkpoint, "checkpoint JSON")->required();
  x->add_flag("--simplify", extract_args.simplify_rules,
              "fold constants and drop redundant clauses");
  x->add_option("--out", extract_args.out, "write rules here instead of stdout");
  x->add_option("--verify", extract_args.verify_data,
                "check rule/model agreement on this CSV");
  x->add_option("--label-column", extract_args.label_column,
                "label column of --verify (default: the checkpoint's)");
  x->add_flag("--exhaustive", extract_args.exhaustive,
              "check agreement on every Boolean input (needs <= 20 inputs)");
  x->add_option("--summary", extract_args.summary, "write a verification summary JSON");
  x->add_option("--threads", extract_args.threads, "worker threads");
  x->add_option("--manifest", extract_args.manifest, "write a run manifest here");
  x->callback([&] { run_extract(extract_args); });

  TemplateArgs template_args;
  auto* tp = app.add_subcommand("template", "emit a .loh model skeleton");
  tp->add_option("--kind", template_args.kind,
                 "select | one-per-set | width-k | definite | layers")
      ->required();
  tp->add_option("--rules-file", template_args.rules_file,
                 "candidate rules, one formula per line (one-per-set: groups "
                 "separated by blank lines)");
  tp->add_option("--vars", template_args.vars_csv, "comma-separated variable names");
  tp->add_option("--n-vars", template_args.n_vars, "shorthand for v1..vN");
  tp->add_option("--k", template_args.k, "clause width (width-k)");
  tp->add_option("--literals", template_args.literals,
                 "width-k literal pool: both | positive | definite")
      ->capture_default_str();
  tp->add_option("--head", template_args.head, "fixed head variable (definite)");
  tp->add_option("--layer", template_args.layer_specs,
                 "layer spec kind:width[:style[:k]], repeatable; styles subset, "
                 "subset-neg, fixed-k");
  tp->add_option("--outputs", template_args.n_outputs,
                 "output count (default: last layer width)");
  tp->add_option("--inputs-from", template_args.inputs_from,
                 "take layer input names from this CSV's features");
  tp->add_option("--label-column", template_args.label_column,
                 "label column of --inputs-from")
      ->capture_default_str();
  tp->add_option("--output-label", template_args.output_label, "output label")
      ->capture_default_str();
  tp->add_flag("--no-hints", template_args.no_hints, "omit @conj/@disj hints");
  tp->add_option("--out", template_args.out, "destination .loh file")->required();
  tp->add_option("--manifest", template_args.manifest, "write a run manifest here");
  tp->callback([&] { run_template(template_args); });

  GenArgs gen_args;
  auto* gn = app.add_subcommand("gen", "generate a benchmark dataset CSV");
  gn->add_option("--task", gen_args.task, "tictactoe | clauses")->required();
  gn->add_option("--out", gen_args.out, "destination CSV")->required();
  gn->add_option("--n-vars", gen_args.n_vars, "variable count (clauses)")
      ->capture_default_str();
  gn->add_option("--clauses", gen_args.n_clauses, "ground-truth clause count")
      ->capture_default_str();
  gn->add_option("--min-width", gen_args.min_width, "clause width lower bound")
      ->capture_default_str();
  gn->add_option("--max-width", gen_args.max_width, "clause width upper bound")
      ->capture_default_str();
  gn->add_option("--clause-type", gen_args.clause_type,
                 "literals joined by: disj | conj")
      ->capture_default_str();
  gn->add_option("--combine", gen_args.combine, "clauses joined by: conj | disj")
      ->capture_default_str();
  gn->add_option("--clause", gen_args.clauses,
                 "explicit ground-truth clause over v1..vn, repeatable "
                 "(overrides --clauses)");
  gn->add_option("--seed", gen_args.seed, "clause generation seed")->capture_default_str();
  gn->add_option("--clauses-out", gen_args.clauses_out,
                 "also write the ground-truth clauses, one per line");
  gn->add_option("--manifest", gen_args.manifest, "write a run manifest here");
  gn->callback([&] { run_gen(gen_args); });

  loh::cli::BenchArgs bench_args;
  auto* b = app.add_subcommand("bench", "synthetic clause-learning experiment grids");
  b->add_option("--suite", bench_args.suite,
                "select-cnf | select-dnf | one-per-set | definite")
      ->required();
  b->add_option("--truth", bench_args.truth, "ground-truth clause count")
      ->capture_default_str();
  b->add_option("--decoys", bench_args.decoys,
                "additional clause count (one-per-set: per set)")
      ->capture_default_str();
  b->add_option("--runs", bench_args.runs, "repetitions (default 10, definite 20)");
  b->add_option("--epochs", bench_args.epochs, "epoch budget")->capture_default_str();
  b->add_option("--seed", bench_args.seed, "base seed")->capture_default_str();
  b->add_option("--threads", bench_args.threads, "worker threads");
  b->add_option("--out", bench_args.out, "destination CSV")->required();
  b->add_option("--manifest", bench_args.manifest, "write a run manifest here");
  b->callback([&] { loh::cli::run_bench(bench_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
