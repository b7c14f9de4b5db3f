#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl_bind.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loh/checkpoint.hpp"
#include "loh/data.hpp"
#include "loh/engine.hpp"
#include "loh/extract.hpp"
#include "loh/formula.hpp"
#include "loh/graph.hpp"
#include "loh/hypothesis.hpp"
#include "loh/parser.hpp"
#include "loh/templates.hpp"
#include "loh/train.hpp"

namespace py = pybind11;
using namespace loh;

// kept opaque so `params.blocks[id].z = [...]` mutates in place instead of a
// throwaway dict copy
PYBIND11_MAKE_OPAQUE(std::map<int, loh::WeightBlock>);

namespace {

Matrix matrix_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix m(static_cast<size_t>(a.shape(0)), static_cast<size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.data());
  return m;
}

void check_cell(const Matrix& m, size_t r, size_t c) {
  if (r >= m.rows || c >= m.cols) throw py::index_error("matrix index out of range");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "choice formulas, fuzzy-logic compilation, gate training, rule extraction";
  m.attr("__version__") = "0.1.0";

  auto base_exc = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base_exc);
  py::register_exception<ParseError>(m, "ParseError", base_exc);
  py::register_exception<DataError>(m, "DataError", base_exc);
  py::register_exception<NumericError>(m, "NumericError", base_exc);

  py::enum_<FormulaKind>(m, "FormulaKind")
      .value("var", FormulaKind::var)
      .value("constant", FormulaKind::constant)
      .value("negation", FormulaKind::negation)
      .value("conjunction", FormulaKind::conjunction)
      .value("disjunction", FormulaKind::disjunction)
      .value("choice", FormulaKind::choice)
      .value("placeholder", FormulaKind::placeholder);

  py::enum_<CompileHint>(m, "CompileHint")
      .value("none", CompileHint::none)
      .value("disjunctive", CompileHint::disjunctive)
      .value("conjunctive", CompileHint::conjunctive);

  py::enum_<Semantics>(m, "Semantics")
      .value("godel", Semantics::godel)
      .value("product", Semantics::product);

  py::enum_<Variant>(m, "Variant")
      .value("disjunctive", Variant::disjunctive)
      .value("conjunctive", Variant::conjunctive);

  py::enum_<Loss>(m, "Loss").value("bce", Loss::bce).value("mse", Loss::mse);

  py::enum_<Multiclass>(m, "Multiclass")
      .value("independent", Multiclass::independent)
      .value("exclusive_top2", Multiclass::exclusive_top2);

  py::enum_<Convergence>(m, "Convergence")
      .value("epochs_only", Convergence::epochs_only)
      .value("accuracy_steps", Convergence::accuracy_steps);

  py::enum_<ClauseLiterals>(m, "ClauseLiterals")
      .value("both", ClauseLiterals::both)
      .value("positive", ClauseLiterals::positive)
      .value("definite", ClauseLiterals::definite);

  py::enum_<NeuronStyle>(m, "NeuronStyle")
      .value("subset", NeuronStyle::subset)
      .value("subset_negation", NeuronStyle::subset_negation)
      .value("fixed_k", NeuronStyle::fixed_k);

  py::class_<Formula, std::shared_ptr<Formula>>(m, "Formula")
      .def_readonly("kind", &Formula::kind)
      .def_readonly("name", &Formula::name)
      .def_readonly("value", &Formula::value)
      .def_readonly("children", &Formula::children)
      .def_readonly("choice_id", &Formula::choice_id)
      .def_readonly("hint", &Formula::hint)
      .def("__str__", [](const FormulaPtr& f) { return format_formula(f); })
      .def("__repr__", [](const FormulaPtr& f) { return "<formula " + format_formula(f) + ">"; })
      .def("__invert__", [](const FormulaPtr& f) { return negation(f); })
      .def("__and__", [](const FormulaPtr& a, const FormulaPtr& b) { return conjunction(a, b); })
      .def("__or__", [](const FormulaPtr& a, const FormulaPtr& b) { return disjunction(a, b); });

  m.def("var", &var, py::arg("name"));
  m.def("constant", &constant, py::arg("value"));
  m.def("negation", &negation, py::arg("f"));
  m.def("conjunction", &conjunction, py::arg("lhs"), py::arg("rhs"));
  m.def("disjunction", &disjunction, py::arg("lhs"), py::arg("rhs"));
  m.def("choice", &choice, py::arg("branches"), py::arg("id"),
        py::arg("hint") = CompileHint::none);
  m.def("placeholder", &placeholder, py::arg("name"));
  m.def("conjunction_of", &conjunction_of, py::arg("formulas"));
  m.def("disjunction_of", &disjunction_of, py::arg("formulas"));
  m.def("collect_variables", &collect_variables, py::arg("f"));
  m.def("contains_choice", &contains_choice, py::arg("f"));
  m.def("is_discrete", &is_discrete, py::arg("f"));
  m.def("format_formula", &format_formula, py::arg("f"));
  m.def(
      "eval_bool",
      [](const FormulaPtr& f, const std::map<std::string, bool>& values) {
        return eval_bool(f, [&](const std::string& n) {
          auto it = values.find(n);
          if (it == values.end()) throw DataError("no value for variable '" + n + "'");
          return it->second;
        });
      },
      py::arg("f"), py::arg("values"));
  m.def("eval_bool", py::overload_cast<const FormulaPtr&,
                                       const std::function<bool(const std::string&)>&>(&eval_bool),
        py::arg("f"), py::arg("value_of"));
  m.def("structurally_equal",
        py::overload_cast<const FormulaPtr&, const FormulaPtr&, bool>(&structurally_equal),
        py::arg("a"), py::arg("b"), py::arg("compare_choice_ids") = true);

  py::class_<Declaration>(m, "Declaration")
      .def(py::init([](std::string name, FormulaPtr body) {
             return Declaration{std::move(name), std::move(body)};
           }),
           py::arg("name"), py::arg("body"))
      .def_readwrite("name", &Declaration::name)
      .def_readwrite("body", &Declaration::body);

  py::class_<Output>(m, "Output")
      .def(py::init([](std::string label, FormulaPtr root) {
             return Output{std::move(label), std::move(root)};
           }),
           py::arg("label"), py::arg("root"))
      .def_readwrite("label", &Output::label)
      .def_readwrite("root", &Output::root);

  py::class_<Program, std::shared_ptr<Program>>(m, "Program")
      .def(py::init<>())
      .def_readwrite("declarations", &Program::declarations)
      .def_readwrite("outputs", &Program::outputs)
      .def("add_declaration",
           [](Program& p, std::string name, FormulaPtr body) {
             p.declarations.push_back({std::move(name), std::move(body)});
           },
           py::arg("name"), py::arg("body"))
      .def("add_output",
           [](Program& p, std::string label, FormulaPtr root) {
             p.outputs.push_back({std::move(label), std::move(root)});
           },
           py::arg("label"), py::arg("root"))
      .def("validate", &Program::validate)
      .def("dependency_order", &Program::dependency_order)
      .def("__str__", [](const Program& p) { return format_program(p); });

  m.def("format_program", &format_program, py::arg("program"));
  m.def("structurally_equal",
        py::overload_cast<const Program&, const Program&, bool>(&structurally_equal),
        py::arg("a"), py::arg("b"), py::arg("compare_choice_ids") = true);

  m.def("parse_program", &parse_program, py::arg("source"));
  m.def("parse_formula", &parse_formula, py::arg("source"), py::arg("first_choice_id") = 0);

  m.def("reachable_choice_ids", &reachable_choice_ids, py::arg("program"), py::arg("root_label"));
  m.def("reachable_choice_arities", &reachable_choice_arities, py::arg("program"),
        py::arg("root_label"));
  m.def("eval_indices", &eval_indices, py::arg("program"), py::arg("root_label"),
        py::arg("indices"));

  py::class_<SpaceSize>(m, "SpaceSize")
      .def_readonly("value", &SpaceSize::value)
      .def_readonly("decimal", &SpaceSize::decimal)
      .def("__int__",
           [](const SpaceSize& s) {
             return py::reinterpret_steal<py::object>(
                 PyLong_FromString(s.decimal.c_str(), nullptr, 10));
           })
      .def("__repr__", [](const SpaceSize& s) { return "<space of " + s.decimal + ">"; });

  m.def("space_size", &space_size, py::arg("program"), py::arg("root_label"));
  m.def(
      "enumerate_space",
      [](const Program& p, const std::string& label, std::uint64_t limit, bool dedup) {
        EnumerateOptions o;
        o.limit = limit;
        o.dedup = dedup;
        return enumerate_space(p, label, o);
      },
      py::arg("program"), py::arg("root_label"), py::arg("limit") = std::uint64_t{1'000'000},
      py::arg("dedup") = false);

  py::enum_<NodeKind>(m, "NodeKind")
      .value("input", NodeKind::input)
      .value("constant", NodeKind::constant)
      .value("negation", NodeKind::negation)
      .value("min_reduce", NodeKind::min_reduce)
      .value("max_reduce", NodeKind::max_reduce)
      .value("gate_weight", NodeKind::gate_weight)
      .value("gate_co_weight", NodeKind::gate_co_weight);

  py::class_<GraphNode>(m, "GraphNode")
      .def_readonly("kind", &GraphNode::kind)
      .def_readonly("children", &GraphNode::children)
      .def_readonly("input", &GraphNode::input)
      .def_readonly("value", &GraphNode::value)
      .def_readonly("choice_id", &GraphNode::choice_id)
      .def_readonly("slot", &GraphNode::slot);

  py::class_<WeightBlockInfo>(m, "WeightBlockInfo")
      .def_readonly("choice_id", &WeightBlockInfo::choice_id)
      .def_readonly("arity", &WeightBlockInfo::arity)
      .def_readonly("variant", &WeightBlockInfo::variant);

  py::class_<CompiledGraph>(m, "CompiledGraph")
      .def_readonly("nodes", &CompiledGraph::nodes)
      .def_readonly("outputs", &CompiledGraph::outputs)
      .def_readonly("weight_blocks", &CompiledGraph::weight_blocks)
      .def_readonly("input_names", &CompiledGraph::input_names)
      .def_readonly("semantics", &CompiledGraph::semantics)
      .def_readonly("root_context", &CompiledGraph::root_context)
      .def_readonly("variant_map", &CompiledGraph::variant_map)
      .def_readonly("source", &CompiledGraph::source)
      .def("input_index", &CompiledGraph::input_index, py::arg("name"))
      .def("to_json", [](const CompiledGraph& g) { return graph_to_json(g); });

  m.def(
      "resolve_variants",
      [](const Program& p, Variant root_context, std::optional<Variant> force) {
        return resolve_variants(p, root_context, force);
      },
      py::arg("program"), py::arg("root_context") = Variant::conjunctive,
      py::arg("force") = std::nullopt);

  m.def(
      "compile",
      [](const Program& p, Semantics semantics, Variant root_context,
         std::optional<Variant> force_variant) {
        CompileOptions o;
        o.semantics = semantics;
        o.root_context = root_context;
        o.force_variant = force_variant;
        return compile(p, o);
      },
      py::arg("program"), py::arg("semantics") = Semantics::godel,
      py::arg("root_context") = Variant::conjunctive, py::arg("force_variant") = std::nullopt);

  m.def("substitute_discrete", &substitute_discrete, py::arg("graph"), py::arg("label"),
        py::arg("indices"));
  m.def("graph_to_json", &graph_to_json, py::arg("graph"));

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &Rng::next)
      .def("uniform01", &Rng::uniform01)
      .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
      .def("uniform_int", &Rng::uniform_int, py::arg("n"))
      .def("gumbel", &Rng::gumbel, py::arg("beta"));

  m.def("gumbel_from_uniform", &gumbel_from_uniform, py::arg("u"), py::arg("beta"));
  m.def("sigmoid", &sigmoid, py::arg("x"));

  py::class_<WeightBlock>(m, "WeightBlock")
      .def(py::init([](std::vector<double> z, double beta, double temperature, bool trainable) {
             WeightBlock b;
             b.z = std::move(z);
             b.beta = beta;
             b.temperature = temperature;
             b.trainable = trainable;
             return b;
           }),
           py::arg("z") = std::vector<double>{}, py::arg("beta") = 1.0,
           py::arg("temperature") = 1.0, py::arg("trainable") = true)
      .def_readwrite("z", &WeightBlock::z)
      .def_readwrite("beta", &WeightBlock::beta)
      .def_readwrite("temperature", &WeightBlock::temperature)
      .def_readwrite("trainable", &WeightBlock::trainable)
      .def("arity", &WeightBlock::arity);

  py::bind_map<std::map<int, WeightBlock>>(m, "WeightBlockMap");

  py::class_<ParameterStore>(m, "ParameterStore")
      .def(py::init<>())
      .def_static("init", &ParameterStore::init, py::arg("graph"), py::arg("rng"),
                  py::arg("beta") = 1.0, py::arg("temperature") = 1.0)
      .def_readwrite("blocks", &ParameterStore::blocks)
      .def_readonly("revision", &ParameterStore::revision)
      .def("scale_temperatures", &ParameterStore::scale_temperatures, py::arg("factor"));

  py::class_<ReparamCache>(m, "ReparamCache")
      .def_readonly("w", &ReparamCache::w)
      .def_readonly("z_noisy", &ReparamCache::z_noisy)
      .def_readonly("top1", &ReparamCache::top1)
      .def_readonly("top2", &ReparamCache::top2)
      .def_readonly("from_block", &ReparamCache::from_block);

  m.def(
      "reparameterize",
      [](const WeightBlock& b, bool with_noise, Rng* rng) {
        return reparameterize(b, with_noise, rng);
      },
      py::arg("block"), py::arg("with_noise") = false, py::arg("rng") = nullptr);
  m.def(
      "reparameterize_backward",
      [](const WeightBlock& b, const ReparamCache& cache, const std::vector<double>& grad_w) {
        return reparameterize_backward(b, cache, grad_w);
      },
      py::arg("block"), py::arg("cache"), py::arg("grad_w"));
  m.def(
      "sample_choice_frequencies",
      [](const WeightBlock& b, int trials, Rng& rng) {
        return sample_choice_frequencies(b, trials, rng);
      },
      py::arg("block"), py::arg("trials"), py::arg("rng"));

  py::class_<Matrix>(m, "Matrix", py::buffer_protocol())
      .def(py::init<size_t, size_t>(), py::arg("rows"), py::arg("cols"))
      .def(py::init(&matrix_from_array), py::arg("values"))
      .def_readonly("rows", &Matrix::rows)
      .def_readonly("cols", &Matrix::cols)
      .def("__getitem__",
           [](const Matrix& mm, std::pair<size_t, size_t> rc) {
             check_cell(mm, rc.first, rc.second);
             return mm.at(rc.first, rc.second);
           })
      .def("__setitem__",
           [](Matrix& mm, std::pair<size_t, size_t> rc, double v) {
             check_cell(mm, rc.first, rc.second);
             mm.at(rc.first, rc.second) = v;
           })
      .def("tolist",
           [](const Matrix& mm) {
             py::list rows;
             for (size_t r = 0; r < mm.rows; ++r) {
               py::list row;
               for (size_t c = 0; c < mm.cols; ++c) row.append(mm.at(r, c));
               rows.append(row);
             }
             return rows;
           })
      .def("__repr__",
           [](const Matrix& mm) {
             return "<matrix " + std::to_string(mm.rows) + "x" + std::to_string(mm.cols) + ">";
           })
      .def_buffer([](Matrix& mm) {
        return py::buffer_info(mm.data.data(), static_cast<py::ssize_t>(sizeof(double)),
                               py::format_descriptor<double>::format(), 2,
                               {static_cast<py::ssize_t>(mm.rows),
                                static_cast<py::ssize_t>(mm.cols)},
                               {static_cast<py::ssize_t>(sizeof(double) * mm.cols),
                                static_cast<py::ssize_t>(sizeof(double))});
      });

  py::class_<Tape>(m, "Tape")
      .def(py::init<>())
      .def_readonly("batch", &Tape::batch)
      .def_readonly("reparams", &Tape::reparams)
      .def("value", &Tape::value, py::arg("node"), py::arg("row"));

  m.def(
      "forward",
      [](const CompiledGraph& g, const ParameterStore& params, const Matrix& inputs,
         bool with_noise, int threads, Rng* rng, Tape* tape) {
        ForwardOptions o;
        o.with_noise = with_noise;
        o.threads = threads;
        return forward(g, params, inputs, o, rng, tape);
      },
      py::arg("graph"), py::arg("params"), py::arg("inputs"), py::arg("with_noise") = false,
      py::arg("threads") = 1, py::arg("rng") = nullptr, py::arg("tape") = nullptr);
  m.def("forward_with_weights", &forward_with_weights, py::arg("graph"), py::arg("weights"),
        py::arg("inputs"), py::arg("tape") = nullptr, py::arg("threads") = 1);
  m.def("backward", &backward, py::arg("graph"), py::arg("params"), py::arg("tape"),
        py::arg("output_grads"), py::arg("threads") = 1);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("feature_names", &Dataset::feature_names)
      .def_readwrite("X", &Dataset::X)
      .def_readwrite("y", &Dataset::y)
      .def_readwrite("n_classes", &Dataset::n_classes)
      .def_readwrite("class_names", &Dataset::class_names)
      .def("__len__", &Dataset::size);

  m.def("load_csv", &load_csv, py::arg("path"), py::arg("label_column"), py::arg("bins") = 0);
  m.def("load_csv_text", &load_csv_text, py::arg("text"), py::arg("label_column"),
        py::arg("bins") = 0);
  m.def("write_csv", &write_csv, py::arg("dataset"), py::arg("path"));

  py::class_<SplitResult>(m, "SplitResult")
      .def_readwrite("train", &SplitResult::train)
      .def_readwrite("val", &SplitResult::val)
      .def_readwrite("test", &SplitResult::test);

  m.def("split", &split, py::arg("dataset"), py::arg("train_frac"), py::arg("val_frac"),
        py::arg("test_frac"), py::arg("seed"));

  py::class_<Literal>(m, "Literal")
      .def(py::init([](int var, bool negated) {
             return Literal{var, negated};
           }),
           py::arg("var"), py::arg("negated") = false)
      .def_readwrite("var", &Literal::var)
      .def_readwrite("negated", &Literal::negated);

  py::class_<ClauseSpec>(m, "ClauseSpec")
      .def(py::init([](std::vector<Literal> literals, bool conjunctive) {
             return ClauseSpec{std::move(literals), conjunctive};
           }),
           py::arg("literals") = std::vector<Literal>{}, py::arg("conjunctive") = false)
      .def_readwrite("literals", &ClauseSpec::literals)
      .def_readwrite("conjunctive", &ClauseSpec::conjunctive);

  m.def("eval_clause", &eval_clause, py::arg("clause"), py::arg("assignment"));
  m.def("clause_formula", &clause_formula, py::arg("clause"), py::arg("var_names"));
  m.def(
      "gen_random_clauses",
      [](int n_vars, int count, int min_width, int max_width, bool conjunctive, Rng& rng) {
        return gen_random_clauses(n_vars, count, min_width, max_width, conjunctive, rng);
      },
      py::arg("n_vars"), py::arg("count"), py::arg("min_width"), py::arg("max_width"),
      py::arg("conjunctive"), py::arg("rng"));
  m.def("gen_clause_dataset", &gen_clause_dataset, py::arg("n_vars"), py::arg("ground_truth"),
        py::arg("combine_conjunctive"));
  m.def("gen_tictactoe", &gen_tictactoe);
  m.def("write_tictactoe_csv", &write_tictactoe_csv, py::arg("path"));
  m.def("identifier_for", &identifier_for, py::arg("feature_name"));
  m.def("align_features", &align_features, py::arg("dataset"), py::arg("input_names"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](double learning_rate, int batch_size, int max_epochs, double beta,
                       double temperature, double temp_decay, Loss loss, Multiclass multiclass,
                       Convergence convergence, int plateau_steps, long max_steps, int threads) {
             TrainConfig c;
             c.learning_rate = learning_rate;
             c.batch_size = batch_size;
             c.max_epochs = max_epochs;
             c.beta = beta;
             c.temperature = temperature;
             c.temp_decay = temp_decay;
             c.loss = loss;
             c.multiclass = multiclass;
             c.convergence = convergence;
             c.plateau_steps = plateau_steps;
             c.max_steps = max_steps;
             c.threads = threads;
             return c;
           }),
           py::arg("learning_rate") = 0.1, py::arg("batch_size") = 128,
           py::arg("max_epochs") = 100, py::arg("beta") = 1.0, py::arg("temperature") = 1.0,
           py::arg("temp_decay") = 1.0, py::arg("loss") = Loss::bce,
           py::arg("multiclass") = Multiclass::independent,
           py::arg("convergence") = Convergence::epochs_only, py::arg("plateau_steps") = 64,
           py::arg("max_steps") = long{384}, py::arg("threads") = 1)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("temperature", &TrainConfig::temperature)
      .def_readwrite("temp_decay", &TrainConfig::temp_decay)
      .def_readwrite("loss", &TrainConfig::loss)
      .def_readwrite("multiclass", &TrainConfig::multiclass)
      .def_readwrite("convergence", &TrainConfig::convergence)
      .def_readwrite("plateau_steps", &TrainConfig::plateau_steps)
      .def_readwrite("max_steps", &TrainConfig::max_steps)
      .def_readwrite("threads", &TrainConfig::threads);

  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("train_loss", &EpochMetrics::train_loss)
      .def_readonly("train_f1", &EpochMetrics::train_f1)
      .def_readonly("val_loss", &EpochMetrics::val_loss)
      .def_readonly("val_f1", &EpochMetrics::val_f1);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("history", &TrainReport::history)
      .def_readonly("steps", &TrainReport::steps)
      .def_readonly("steps_to_convergence", &TrainReport::steps_to_convergence)
      .def_readonly("reached_full_accuracy", &TrainReport::reached_full_accuracy)
      .def_readonly("final_train_accuracy", &TrainReport::final_train_accuracy);

  m.def("loss_bce", &loss_bce, py::arg("outputs"), py::arg("targets"));
  m.def("loss_mse", &loss_mse, py::arg("outputs"), py::arg("targets"));
  m.def("exclusive_output_reparam", &exclusive_output_reparam, py::arg("outputs"));
  m.def("exclusive_output_reparam_backward", &exclusive_output_reparam_backward,
        py::arg("outputs"), py::arg("reparamed"), py::arg("grad_out"));
  m.def(
      "targets_matrix",
      [](const std::vector<int>& y, int n_classes, size_t n_outputs) {
        return targets_matrix(y, n_classes, n_outputs);
      },
      py::arg("y"), py::arg("n_classes"), py::arg("n_outputs"));
  m.def("predict_labels", &predict_labels, py::arg("outputs"));
  m.def(
      "accuracy",
      [](const std::vector<int>& predicted, const std::vector<int>& truth) {
        return accuracy(predicted, truth);
      },
      py::arg("predicted"), py::arg("truth"));
  m.def(
      "macro_f1",
      [](const std::vector<int>& predicted, const std::vector<int>& truth, int n_classes) {
        return macro_f1(predicted, truth, n_classes);
      },
      py::arg("predicted"), py::arg("truth"), py::arg("n_classes"));

  py::class_<ConvergenceResult>(m, "ConvergenceResult")
      .def_readonly("converged", &ConvergenceResult::converged)
      .def_readonly("step", &ConvergenceResult::step);

  m.def(
      "convergence_check",
      [](const std::vector<double>& step_accuracies, int plateau_steps, long max_steps) {
        return convergence_check(step_accuracies, plateau_steps, max_steps);
      },
      py::arg("step_accuracies"), py::arg("plateau_steps") = 64, py::arg("max_steps") = long{384});

  py::class_<Adam>(m, "Adam")
      .def(py::init([](double learning_rate, double beta1, double beta2, double epsilon) {
             Adam a;
             a.learning_rate = learning_rate;
             a.beta1 = beta1;
             a.beta2 = beta2;
             a.epsilon = epsilon;
             return a;
           }),
           py::arg("learning_rate") = 0.001, py::arg("beta1") = 0.9, py::arg("beta2") = 0.999,
           py::arg("epsilon") = 1e-8)
      .def_readwrite("learning_rate", &Adam::learning_rate)
      .def_readonly("t", &Adam::t)
      .def("step", &Adam::step, py::arg("params"), py::arg("grads"));

  py::class_<EvalMetrics>(m, "EvalMetrics")
      .def_readonly("loss", &EvalMetrics::loss)
      .def_readonly("f1", &EvalMetrics::f1)
      .def_readonly("acc", &EvalMetrics::acc)
      .def_readonly("confusion", &EvalMetrics::confusion);

  m.def("evaluate", &evaluate, py::arg("graph"), py::arg("params"), py::arg("dataset"),
        py::arg("loss") = Loss::bce, py::arg("multiclass") = Multiclass::independent,
        py::arg("threads") = 1);
  m.def(
      "train",
      [](const CompiledGraph& g, ParameterStore& params, const Dataset& train_set,
         const TrainConfig& cfg, Rng& rng, const Dataset* val) {
        return train(g, params, train_set, val, cfg, rng);
      },
      py::arg("graph"), py::arg("params"), py::arg("train_set"), py::arg("cfg"), py::arg("rng"),
      py::arg("val") = nullptr);

  py::class_<DiscretizeResult>(m, "DiscretizeResult")
      .def_readonly("indices", &DiscretizeResult::indices)
      .def_readonly("tied_blocks", &DiscretizeResult::tied_blocks);

  m.def("discretize", &discretize, py::arg("params"));

  py::class_<VerifySummary>(m, "VerifySummary")
      .def_readonly("samples", &VerifySummary::samples)
      .def_readonly("mismatches", &VerifySummary::mismatches)
      .def_readonly("near_threshold", &VerifySummary::near_threshold)
      .def_readonly("exhaustive", &VerifySummary::exhaustive);

  py::class_<ExtractedRuleSet>(m, "ExtractedRuleSet")
      .def_readonly("rules", &ExtractedRuleSet::rules)
      .def_readonly("indices", &ExtractedRuleSet::indices)
      .def_readonly("tied_blocks", &ExtractedRuleSet::tied_blocks)
      .def_readonly("verification", &ExtractedRuleSet::verification);

  m.def("extract", &extract, py::arg("graph"), py::arg("params"), py::arg("program"),
        py::arg("simplify_rules") = false);
  m.def("simplify", &simplify, py::arg("f"));
  m.def("verify_lossless", &verify_lossless, py::arg("graph"), py::arg("params"),
        py::arg("rules"), py::arg("inputs"), py::arg("eps") = 1e-9, py::arg("threads") = 1);
  m.def("verify_lossless_exhaustive", &verify_lossless_exhaustive, py::arg("graph"),
        py::arg("params"), py::arg("rules"), py::arg("eps") = 1e-9, py::arg("threads") = 1);

  m.def("select_rules", &select_rules, py::arg("rules"), py::arg("with_hints") = true);
  m.def("one_per_set", &one_per_set, py::arg("rule_sets"), py::arg("with_hints") = true);
  m.def(
      "width_k_clause",
      [](const std::vector<std::string>& vars, int k, ClauseLiterals literals,
         int next_choice_id, bool with_hints) {
        int id = next_choice_id;
        FormulaPtr f = width_k_clause(vars, k, literals, id, with_hints);
        return py::make_tuple(f, id);
      },
      py::arg("vars"), py::arg("k"), py::arg("literals") = ClauseLiterals::both,
      py::arg("next_choice_id") = 0, py::arg("with_hints") = true);
  m.def(
      "definite_clause",
      [](const std::vector<std::string>& vars, const std::optional<std::string>& head,
         int next_choice_id, bool with_hints) {
        int id = next_choice_id;
        FormulaPtr f = definite_clause(vars, head, id, with_hints);
        return py::make_tuple(f, id);
      },
      py::arg("vars"), py::arg("head") = std::nullopt, py::arg("next_choice_id") = 0,
      py::arg("with_hints") = true);

  py::class_<LayerSpec>(m, "LayerSpec")
      .def(py::init([](Variant kind, int width, NeuronStyle style, int k) {
             LayerSpec s;
             s.kind = kind;
             s.width = width;
             s.style = style;
             s.k = k;
             return s;
           }),
           py::arg("kind") = Variant::conjunctive, py::arg("width") = 1,
           py::arg("style") = NeuronStyle::subset, py::arg("k") = 0)
      .def_readwrite("kind", &LayerSpec::kind)
      .def_readwrite("width", &LayerSpec::width)
      .def_readwrite("style", &LayerSpec::style)
      .def_readwrite("k", &LayerSpec::k);

  m.def("layered_net", &layered_net, py::arg("inputs"), py::arg("layers"), py::arg("n_outputs"),
        py::arg("with_hints") = true);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init<>())
      .def_readwrite("source_text", &Checkpoint::source_text)
      .def_readwrite("semantics", &Checkpoint::semantics)
      .def_readwrite("root_context", &Checkpoint::root_context)
      .def_readwrite("force_variant", &Checkpoint::force_variant)
      .def_readwrite("variant_map", &Checkpoint::variant_map)
      .def_readwrite("blocks", &Checkpoint::blocks)
      .def_readwrite("cfg", &Checkpoint::cfg)
      .def_readwrite("seed", &Checkpoint::seed)
      .def_readwrite("input_names", &Checkpoint::input_names)
      .def_readwrite("class_names", &Checkpoint::class_names)
      .def_readwrite("label_column", &Checkpoint::label_column)
      .def_readwrite("metrics", &Checkpoint::metrics);

  m.def("save_checkpoint", &save_checkpoint, py::arg("checkpoint"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("file_hash", &file_hash, py::arg("path"));
}
