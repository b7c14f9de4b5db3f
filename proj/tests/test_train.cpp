#include <doctest.h>

#include <cmath>
#include <vector>

#include "loh/data.hpp"
#include "loh/parser.hpp"
#include "loh/train.hpp"

using namespace loh;

namespace {

Matrix column(std::vector<double> vals) {
  Matrix m(vals.size(), 1);
  m.data = std::move(vals);
  return m;
}

// truth (v1 | !v3) & (v2 | v4) with one decoy row to discard
struct SelectionFixture {
  Program program = parse_program(
      "out y = [v1 | !v3, true] & [v2 | v4, true] & [!v1 & v4, true];");
  CompiledGraph graph = compile(program);
  Dataset data;

  SelectionFixture() {
    std::vector<ClauseSpec> truth{
        ClauseSpec{{{0, false}, {2, true}}, false},
        ClauseSpec{{{1, false}, {3, false}}, false},
    };
    data = align_features(gen_clause_dataset(4, truth, true), graph.input_names);
  }
};

}  // namespace

TEST_SUITE("train") {

TEST_CASE("bce loss and gradient") {
  auto [loss, grad] = loss_bce(column({0.5}), column({1.0}));
  CHECK(loss == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(grad.at(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));

  auto [l2, g2] = loss_bce(column({0.5, 0.5}), column({1.0, 0.0}));
  CHECK(l2 == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(g2.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g2.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bce clamps and zeroes the gradient outside the band") {
  auto [loss, grad] = loss_bce(column({0.0}), column({1.0}));
  CHECK(loss == doctest::Approx(16.11809565095832).epsilon(1e-12));
  CHECK(grad.at(0, 0) == 0.0);
  // the upper clamp goes through 1 - oc in doubles, hence the last digits
  auto [l1, g1] = loss_bce(column({1.0}), column({0.0}));
  CHECK(l1 == doctest::Approx(16.118095651484676).epsilon(1e-12));
  CHECK(g1.at(0, 0) == 0.0);
}

TEST_CASE("mse loss and gradient") {
  auto [loss, grad] = loss_mse(column({0.8, 0.2}), column({1.0, 0.0}));
  CHECK(loss == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(grad.at(0, 0) == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(grad.at(1, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("exclusive reparam pushes exactly one output above half") {
  Matrix o(1, 3);
  o.at(0, 0) = 0.9;
  o.at(0, 1) = 0.8;
  o.at(0, 2) = 0.1;
  Matrix w = exclusive_output_reparam(o);
  CHECK(w.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.at(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(w.at(0, 2) == doctest::Approx(1.0 / 55.0).epsilon(1e-9));
  int above = 0;
  for (size_t c = 0; c < 3; ++c)
    if (w.at(0, c) > 0.5) ++above;
  CHECK(above == 1);

  Matrix two(1, 2);
  two.at(0, 0) = 0.9;
  two.at(0, 1) = 0.3;
  Matrix w2 = exclusive_output_reparam(two);
  CHECK(w2.at(0, 0) == doctest::Approx(0.820871215252208).epsilon(1e-12));
  CHECK(w2.at(0, 1) == doctest::Approx(0.17912878474779198).epsilon(1e-12));

  Matrix fixed(1, 2);
  fixed.at(0, 0) = 0.88;
  fixed.at(0, 1) = 0.12;
  Matrix wf = exclusive_output_reparam(fixed);
  CHECK(wf.at(0, 0) == doctest::Approx(0.88).epsilon(1e-12));
  CHECK(wf.at(0, 1) == doctest::Approx(0.12).epsilon(1e-12));

  Matrix one(1, 1);
  one.at(0, 0) = 0.7;
  CHECK_THROWS_AS(exclusive_output_reparam(one), ValidationError);
}

TEST_CASE("exclusive reparam backward matches finite differences") {
  Matrix o(2, 3);
  double vals[] = {0.62, 0.31, 0.45, 0.2, 0.9, 0.7};
  for (size_t i = 0; i < 6; ++i) o.data[i] = vals[i];
  Matrix repar = exclusive_output_reparam(o);
  const double h = 1e-6;
  for (size_t r = 0; r < 2; ++r)
    for (size_t c = 0; c < 3; ++c) {
      Matrix gout(2, 3);
      gout.at(r, c) = 1.0;
      Matrix gin = exclusive_output_reparam_backward(o, repar, gout);
      for (size_t j = 0; j < 3; ++j) {
        Matrix hi = o;
        Matrix lo = o;
        hi.at(r, j) += h;
        lo.at(r, j) -= h;
        double num = (exclusive_output_reparam(hi).at(r, c) -
                      exclusive_output_reparam(lo).at(r, c)) /
                     (2 * h);
        CHECK(gin.at(r, j) == doctest::Approx(num).epsilon(2e-4));
        for (size_t rr = 0; rr < 2; ++rr)
          if (rr != r) CHECK(gin.at(rr, j) == 0.0);
      }
    }
}

TEST_CASE("targets matrix layouts") {
  std::vector<int> y{0, 1, 2};
  Matrix t = targets_matrix(y, 3, 3);
  CHECK(t.at(0, 0) == 1.0);
  CHECK(t.at(0, 1) == 0.0);
  CHECK(t.at(1, 1) == 1.0);
  CHECK(t.at(2, 2) == 1.0);

  std::vector<int> b{0, 1};
  Matrix tb = targets_matrix(b, 2, 1);
  CHECK(tb.at(0, 0) == 0.0);
  CHECK(tb.at(1, 0) == 1.0);

  CHECK_THROWS_AS(targets_matrix(y, 3, 1), ValidationError);
  CHECK_THROWS_AS(targets_matrix(y, 3, 2), ValidationError);
}

TEST_CASE("label prediction") {
  Matrix o(2, 3);
  o.at(0, 0) = 0.2;
  o.at(0, 1) = 0.9;
  o.at(0, 2) = 0.9;  // tie goes to the lower index
  o.at(1, 0) = 0.7;
  o.at(1, 1) = 0.1;
  o.at(1, 2) = 0.3;
  CHECK(predict_labels(o) == std::vector<int>{1, 0});

  Matrix s(3, 1);
  s.at(0, 0) = 0.51;
  s.at(1, 0) = 0.5;
  s.at(2, 0) = 0.49;
  CHECK(predict_labels(s) == std::vector<int>{1, 0, 0});
}

TEST_CASE("accuracy and macro f1") {
  std::vector<int> truth;
  truth.insert(truth.end(), 61, 0);
  truth.insert(truth.end(), 39, 1);
  std::vector<int> allzero(100, 0);
  CHECK(accuracy(allzero, truth) == doctest::Approx(0.61).epsilon(1e-15));
  CHECK(macro_f1(allzero, truth, 2) == doctest::Approx(0.37888198757763975).epsilon(1e-15));
  CHECK(macro_f1(truth, truth, 2) == 1.0);
  // a class absent from both predictions and truth contributes zero
  CHECK(macro_f1(allzero, allzero, 2) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("convergence stopping rules") {
  std::vector<double> hits(57, 0.5);
  hits.back() = 1.0;
  ConvergenceResult a = convergence_check(hits);
  CHECK(a.converged);
  CHECK(a.step == 57);

  // settles at step 10, plateau of 64 fires at step 74
  std::vector<double> plateau;
  for (int i = 0; i < 9; ++i) plateau.push_back(0.1 + 0.01 * i);
  plateau.insert(plateau.end(), 80, 0.9);
  ConvergenceResult b = convergence_check(plateau);
  CHECK(b.converged);
  CHECK(b.step == 74);

  std::vector<double> wander;
  for (int i = 0; i < 400; ++i) wander.push_back(0.3 + 0.001 * (i % 7));
  ConvergenceResult c = convergence_check(wander);
  CHECK(c.converged);
  CHECK(c.step == 384);

  std::vector<double> open{0.1, 0.2, 0.3};
  ConvergenceResult d = convergence_check(open);
  CHECK(!d.converged);
  CHECK(d.step == 3);
}

TEST_CASE("adam first step") {
  ParameterStore ps;
  WeightBlock b;
  b.z = {0.0, 0.0};
  ps.blocks[0] = b;
  Adam opt;
  opt.learning_rate = 0.1;
  opt.step(ps, {{0, {1.0, -1.0}}});
  CHECK(opt.t == 1);
  CHECK(ps.blocks.at(0).z[0] == doctest::Approx(-0.09999999900000002).epsilon(1e-15));
  CHECK(ps.blocks.at(0).z[1] == doctest::Approx(0.09999999900000002).epsilon(1e-15));
  CHECK(ps.revision == 1);
}

TEST_CASE("adam skips frozen blocks and validates ids") {
  ParameterStore ps;
  WeightBlock frozen;
  frozen.z = {0.0};
  frozen.trainable = false;
  ps.blocks[3] = frozen;
  WeightBlock live;
  live.z = {0.0};
  ps.blocks[4] = live;
  Adam opt;
  opt.step(ps, {{3, {5.0}}});
  CHECK(ps.blocks.at(3).z[0] == 0.0);  // frozen: skipped, not an error
  CHECK_THROWS_AS(opt.step(ps, {{9, {1.0}}}), ValidationError);
  CHECK_THROWS_AS(opt.step(ps, {{4, {1.0, 2.0}}}), ValidationError);
}

TEST_CASE("evaluate on a passthrough graph") {
  CompiledGraph g = compile(parse_program("out y = a;"));
  Dataset d;
  d.feature_names = {"a"};
  d.X = Matrix(2, 1);
  d.X.at(0, 0) = 0.9;
  d.X.at(1, 0) = 0.2;
  d.y = {1, 0};
  d.n_classes = 2;
  d.class_names = {"0", "1"};
  EvalMetrics m = evaluate(g, {}, d, Loss::bce, Multiclass::independent);
  CHECK(m.loss == doctest::Approx(0.16425203348635004).epsilon(1e-12));
  CHECK(m.f1 == 1.0);
  CHECK(m.acc == 1.0);
  REQUIRE(m.confusion.size() == 2);
  CHECK(m.confusion[0][0] == 1);
  CHECK(m.confusion[1][1] == 1);
  CHECK(m.confusion[0][1] == 0);
}

TEST_CASE("training selects the true clauses") {
  SelectionFixture fx;
  Rng rng(3);
  ParameterStore params = ParameterStore::init(fx.graph, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 8;
  cfg.max_epochs = 40;
  TrainReport report = train(fx.graph, params, fx.data, nullptr, cfg, rng);
  CHECK(report.steps == 80);
  CHECK(report.history.size() == 40);
  CHECK(report.history.back().train_f1 == 1.0);
  CHECK(std::isnan(report.history.back().val_loss));
  CHECK(report.final_train_accuracy == 1.0);
  EvalMetrics m = evaluate(fx.graph, params, fx.data, Loss::bce, Multiclass::independent);
  CHECK(m.f1 == 1.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
  SelectionFixture fx;
  TrainConfig cfg;
  cfg.learning_rate = 0.15;
  cfg.batch_size = 8;
  cfg.max_epochs = 7;

  auto run = [&]() {
    Rng rng(12);
    ParameterStore params = ParameterStore::init(fx.graph, rng);
    train(fx.graph, params, fx.data, nullptr, cfg, rng);
    return params;
  };
  ParameterStore a = run();
  ParameterStore b = run();
  for (const auto& [id, blk] : a.blocks) CHECK(blk.z == b.blocks.at(id).z);
}

TEST_CASE("validation metrics come from the held-out set") {
  SelectionFixture fx;
  SplitResult parts = split(fx.data, 0.75, 0.25, 0.0, 4);
  Rng rng(5);
  ParameterStore params = ParameterStore::init(fx.graph, rng);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  TrainReport report = train(fx.graph, params, parts.train, &parts.val, cfg, rng);
  for (const auto& em : report.history) {
    CHECK(!std::isnan(em.val_loss));
    CHECK(em.val_f1 >= 0.0);
  }
}

TEST_CASE("temperature decays every ten epochs") {
  SelectionFixture fx;
  Rng rng(6);
  ParameterStore params = ParameterStore::init(fx.graph, rng, 1.0, 2.0);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 20;
  cfg.temp_decay = 0.5;
  train(fx.graph, params, fx.data, nullptr, cfg, rng);
  CHECK(params.blocks.at(0).temperature == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("accuracy-steps convergence can stop early") {
  SelectionFixture fx;
  Rng rng(3);
  ParameterStore params = ParameterStore::init(fx.graph, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 8;
  cfg.max_epochs = 400;
  cfg.convergence = Convergence::accuracy_steps;
  TrainReport report = train(fx.graph, params, fx.data, nullptr, cfg, rng);
  CHECK(report.steps_to_convergence <= 384);
  CHECK(report.steps < 800);
  CHECK(report.reached_full_accuracy);
}

TEST_CASE("exclusive coupling ignores single-output models") {
  // the output reparam itself needs two columns; evaluate falls back to the
  // independent path when there is only one output
  Matrix one(2, 1);
  one.at(0, 0) = 0.9;
  one.at(1, 0) = 0.2;
  CHECK_THROWS_AS(exclusive_output_reparam(one), ValidationError);

  SelectionFixture fx;
  Rng rng(1);
  ParameterStore params = ParameterStore::init(fx.graph, rng);
  EvalMetrics excl =
      evaluate(fx.graph, params, fx.data, Loss::bce, Multiclass::exclusive_top2);
  EvalMetrics indep =
      evaluate(fx.graph, params, fx.data, Loss::bce, Multiclass::independent);
  CHECK(excl.loss == indep.loss);
  CHECK(excl.f1 == indep.f1);
}

TEST_CASE("misaligned dataset is rejected") {
  SelectionFixture fx;
  Dataset wrong = gen_clause_dataset(4, {}, true);  // features v1..v4 in raw order
  Rng rng(1);
  ParameterStore params = ParameterStore::init(fx.graph, rng);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(fx.graph, params, wrong, nullptr, cfg, rng), DataError);
}

TEST_CASE("enum string conversions") {
  CHECK(loss_from_string(to_string(Loss::mse)) == Loss::mse);
  CHECK(multiclass_from_string(to_string(Multiclass::exclusive_top2)) ==
        Multiclass::exclusive_top2);
  CHECK(convergence_from_string(to_string(Convergence::accuracy_steps)) ==
        Convergence::accuracy_steps);
  CHECK_THROWS_AS(loss_from_string("hinge"), Error);
}

}  // TEST_SUITE
