#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loh/engine.hpp"
#include "loh/formula.hpp"

namespace loh {

/// Feature matrix with values in [0, 1] plus integer class labels.
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix X;
  std::vector<int> y;
  int n_classes = 0;
  std::vector<std::string> class_names;  // class index -> original label text

  size_t size() const { return X.rows; }
};

/// Loads a headered CSV. The label column becomes class indices in
/// first-occurrence order. Numeric 0/1 columns pass through under their own
/// name; other columns one-hot expand to `column=value` features
/// (first-occurrence value order). A numeric non-binary column is an error
/// unless `bins` > 0, in which case it is equal-frequency binned first.
Dataset load_csv(const std::string& path, const std::string& label_column, int bins = 0);
Dataset load_csv_text(const std::string& text, const std::string& label_column, int bins = 0);

void write_csv(const Dataset& d, const std::string& path);

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded shuffle, then contiguous partition. Fractions must sum to 1; part
/// sizes are rounded, the test part takes the remainder. Class bookkeeping is
/// shared across parts even when a class is absent from one.
SplitResult split(const Dataset& d, double train_frac, double val_frac, double test_frac,
                  std::uint64_t seed);

struct Literal {
  int var = 0;  // 0-based variable index
  bool negated = false;
};

struct ClauseSpec {
  std::vector<Literal> literals;
  bool conjunctive = false;  // true: AND of literals, false: OR
};

bool eval_clause(const ClauseSpec& c, const std::vector<bool>& assignment);

/// Clause as a formula over the given variable names.
FormulaPtr clause_formula(const ClauseSpec& c, const std::vector<std::string>& var_names);

/// Random clauses: width uniform in [min_width, max_width], distinct
/// variables per clause, uniform literal polarity. Duplicate clauses may
/// occur across the list.
std::vector<ClauseSpec> gen_random_clauses(int n_vars, int count, int min_width,
                                           int max_width, bool conjunctive, Rng& rng);

/// All 2^n assignments (n <= 20) over variables v1..vn, labeled by the
/// conjunction (or disjunction) of the ground-truth clauses. Row i assigns
/// bit j of i to variable j.
Dataset gen_clause_dataset(int n_vars, const std::vector<ClauseSpec>& ground_truth,
                           bool combine_conjunctive);

/// The 958 distinct finished tic-tac-toe boards (x moves first, play stops at
/// a win or a full board), one-hot encoded: 9 cells x values {x, o, b} make
/// 27 binary features. Positive class: x won.
Dataset gen_tictactoe();

/// Same boards in categorical form: columns c1..c9 with values x/o/b and a
/// label column `outcome` with values positive/negative.
void write_tictactoe_csv(const std::string& path);

/// Feature name mangled into a formula identifier ([A-Za-z_][A-Za-z0-9_]*).
std::string identifier_for(const std::string& feature_name);

/// Reorders/projects columns so identifier_for(feature) matches input_names
/// exactly, in order. Missing or ambiguous inputs are errors; surplus
/// features are dropped.
Dataset align_features(const Dataset& d, const std::vector<std::string>& input_names);

}  // namespace loh
