#include "loh/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace loh {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(std::istream& in) {
  RawTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (first) {
      t.header = fields;
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw DataError("csv row has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw DataError("csv file is empty");
  return t;
}

// equal-frequency bin labels for a numeric column
std::vector<std::string> bin_column(const std::vector<std::string>& raw, int bins,
                                    const std::string& col) {
  std::vector<double> values(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!parse_double(raw[i], values[i]))
      throw DataError("column '" + col + "' mixes numeric and text values");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k)
    edges.push_back(sorted[sorted.size() * static_cast<size_t>(k) / static_cast<size_t>(bins)]);
  std::vector<std::string> labels(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    int b = 0;
    for (double e : edges)
      if (values[i] >= e) ++b;
    labels[i] = "bin" + std::to_string(b);
  }
  return labels;
}

Dataset from_table(const RawTable& t, const std::string& label_column, int bins) {
  int label_idx = -1;
  for (size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == label_column) label_idx = static_cast<int>(i);
  if (label_idx < 0)
    throw DataError("label column '" + label_column + "' not found in csv header");
  if (t.rows.empty()) throw DataError("csv has no data rows");

  Dataset d;
  for (const auto& row : t.rows) {
    const std::string& label = row[label_idx];
    int cls = -1;
    for (size_t k = 0; k < d.class_names.size(); ++k)
      if (d.class_names[k] == label) cls = static_cast<int>(k);
    if (cls < 0) {
      cls = static_cast<int>(d.class_names.size());
      d.class_names.push_back(label);
    }
    d.y.push_back(cls);
  }
  d.n_classes = static_cast<int>(d.class_names.size());

  // per feature column: either 0/1 numeric passthrough or one-hot categories
  std::vector<std::vector<double>> columns;
  for (size_t c = 0; c < t.header.size(); ++c) {
    if (static_cast<int>(c) == label_idx) continue;
    const std::string& col = t.header[c];
    std::vector<std::string> raw(t.rows.size());
    for (size_t r = 0; r < t.rows.size(); ++r) raw[r] = t.rows[r][c];

    bool numeric = true;
    bool binary = true;
    for (const auto& s : raw) {
      double v;
      if (!parse_double(s, v)) {
        numeric = false;
        break;
      }
      if (v != 0.0 && v != 1.0) binary = false;
    }

    if (numeric && binary) {
      d.feature_names.push_back(col);
      std::vector<double> vals(raw.size());
      for (size_t r = 0; r < raw.size(); ++r) {
        double v;
        parse_double(raw[r], v);
        vals[r] = v;
      }
      columns.push_back(std::move(vals));
      continue;
    }
    if (numeric && !binary) {
      if (bins <= 0)
        throw DataError("numeric column '" + col +
                        "' is not 0/1; rerun with a bin count to discretize it");
      raw = bin_column(raw, bins, col);
    }

    // categorical: one-hot in first-occurrence value order
    std::vector<std::string> values;
    for (const auto& s : raw)
      if (std::find(values.begin(), values.end(), s) == values.end()) values.push_back(s);
    for (const auto& v : values) {
      d.feature_names.push_back(col + "=" + v);
      std::vector<double> vals(raw.size());
      for (size_t r = 0; r < raw.size(); ++r) vals[r] = raw[r] == v ? 1.0 : 0.0;
      columns.push_back(std::move(vals));
    }
  }

  d.X = Matrix(t.rows.size(), columns.size());
  for (size_t c = 0; c < columns.size(); ++c)
    for (size_t r = 0; r < t.rows.size(); ++r) d.X.at(r, c) = columns[c][r];
  return d;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column, int bins) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  RawTable t = read_table(in);
  return from_table(t, label_column, bins);
}

Dataset load_csv_text(const std::string& text, const std::string& label_column, int bins) {
  std::istringstream in(text);
  RawTable t = read_table(in);
  return from_table(t, label_column, bins);
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& name : d.feature_names) out << name << ',';
  out << "label\n";
  for (size_t r = 0; r < d.X.rows; ++r) {
    for (size_t c = 0; c < d.X.cols; ++c) {
      double v = d.X.at(r, c);
      if (v == static_cast<long long>(v)) {
        out << static_cast<long long>(v);
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
      }
      out << ',';
    }
    out << d.class_names[d.y[r]] << '\n';
  }
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<size_t>& rows) {
  Dataset part;
  part.feature_names = d.feature_names;
  part.n_classes = d.n_classes;
  part.class_names = d.class_names;
  part.X = Matrix(rows.size(), d.X.cols);
  part.y.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t c = 0; c < d.X.cols; ++c) part.X.at(i, c) = d.X.at(rows[i], c);
    part.y.push_back(d.y[rows[i]]);
  }
  return part;
}

}  // namespace

SplitResult split(const Dataset& d, double train_frac, double val_frac, double test_frac,
                  std::uint64_t seed) {
  if (train_frac < 0 || val_frac < 0 || test_frac < 0 ||
      std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw DataError("split fractions must be nonnegative and sum to 1");
  size_t n = d.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  size_t n_train = static_cast<size_t>(std::llround(static_cast<double>(n) * train_frac));
  size_t n_val = static_cast<size_t>(std::llround(static_cast<double>(n) * val_frac));
  if (n_train + n_val > n) n_val = n - n_train;

  std::vector<size_t> tr(order.begin(), order.begin() + n_train);
  std::vector<size_t> va(order.begin() + n_train, order.begin() + n_train + n_val);
  std::vector<size_t> te(order.begin() + n_train + n_val, order.end());
  return {take_rows(d, tr), take_rows(d, va), take_rows(d, te)};
}

bool eval_clause(const ClauseSpec& c, const std::vector<bool>& assignment) {
  if (c.conjunctive) {
    for (const auto& lit : c.literals) {
      bool v = assignment[lit.var];
      if (lit.negated) v = !v;
      if (!v) return false;
    }
    return true;
  }
  for (const auto& lit : c.literals) {
    bool v = assignment[lit.var];
    if (lit.negated) v = !v;
    if (v) return true;
  }
  return false;
}

FormulaPtr clause_formula(const ClauseSpec& c, const std::vector<std::string>& var_names) {
  std::vector<FormulaPtr> lits;
  for (const auto& lit : c.literals) {
    FormulaPtr v = var(var_names.at(lit.var));
    lits.push_back(lit.negated ? negation(v) : v);
  }
  return c.conjunctive ? conjunction_of(lits) : disjunction_of(lits);
}

std::vector<ClauseSpec> gen_random_clauses(int n_vars, int count, int min_width,
                                           int max_width, bool conjunctive, Rng& rng) {
  if (min_width < 1 || max_width < min_width || max_width > n_vars)
    throw DataError("bad clause width range");
  std::vector<ClauseSpec> clauses;
  std::vector<int> vars(n_vars);
  for (int i = 0; i < n_vars; ++i) vars[i] = i;
  for (int k = 0; k < count; ++k) {
    int width = min_width + rng.uniform_int(max_width - min_width + 1);
    rng.shuffle(vars);
    ClauseSpec c;
    c.conjunctive = conjunctive;
    for (int i = 0; i < width; ++i)
      c.literals.push_back({vars[i], rng.uniform_int(2) == 1});
    clauses.push_back(std::move(c));
  }
  return clauses;
}

Dataset gen_clause_dataset(int n_vars, const std::vector<ClauseSpec>& ground_truth,
                           bool combine_conjunctive) {
  if (n_vars < 1 || n_vars > 20)
    throw DataError("clause dataset enumeration supports 1..20 variables");
  Dataset d;
  for (int j = 0; j < n_vars; ++j) d.feature_names.push_back("v" + std::to_string(j + 1));
  d.class_names = {"0", "1"};
  d.n_classes = 2;
  size_t rows = size_t{1} << n_vars;
  d.X = Matrix(rows, static_cast<size_t>(n_vars));
  d.y.resize(rows);
  std::vector<bool> assignment(n_vars);
  for (size_t i = 0; i < rows; ++i) {
    for (int j = 0; j < n_vars; ++j) {
      bool bit = (i >> j) & 1u;
      assignment[j] = bit;
      d.X.at(i, j) = bit ? 1.0 : 0.0;
    }
    bool label = combine_conjunctive;
    for (const auto& c : ground_truth) {
      bool v = eval_clause(c, assignment);
      label = combine_conjunctive ? (label && v) : (label || v);
    }
    d.y[i] = label ? 1 : 0;
  }
  return d;
}

namespace {

bool line_won(const std::array<char, 9>& b, char player) {
  static const int lines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                                  {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};
  for (const auto& l : lines)
    if (b[l[0]] == player && b[l[1]] == player && b[l[2]] == player) return true;
  return false;
}

void collect_endgames(std::array<char, 9>& board, int moves,
                      std::set<std::array<char, 9>>& seen,
                      std::set<std::array<char, 9>>& finished) {
  if (line_won(board, 'x') || line_won(board, 'o') || moves == 9) {
    finished.insert(board);
    return;
  }
  if (!seen.insert(board).second) return;
  char player = moves % 2 == 0 ? 'x' : 'o';
  for (int i = 0; i < 9; ++i) {
    if (board[i] != 'b') continue;
    board[i] = player;
    collect_endgames(board, moves + 1, seen, finished);
    board[i] = 'b';
  }
}

std::string tictactoe_table_text() {
  std::array<char, 9> board;
  board.fill('b');
  std::set<std::array<char, 9>> seen, finished;
  collect_endgames(board, 0, seen, finished);

  std::string text = "c1,c2,c3,c4,c5,c6,c7,c8,c9,outcome\n";
  for (const auto& b : finished) {  // std::set iteration: lexicographic, stable
    for (char c : b) {
      text += c;
      text += ',';
    }
    text += line_won(b, 'x') ? "positive" : "negative";
    text += '\n';
  }
  return text;
}

}  // namespace

Dataset gen_tictactoe() { return load_csv_text(tictactoe_table_text(), "outcome"); }

void write_tictactoe_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << tictactoe_table_text();
}

std::string identifier_for(const std::string& feature_name) {
  std::string id;
  for (char c : feature_name) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    id += ok ? c : '_';
  }
  if (id.empty() || std::isdigit(static_cast<unsigned char>(id[0]))) id = "_" + id;
  return id;
}

Dataset align_features(const Dataset& d, const std::vector<std::string>& input_names) {
  std::vector<size_t> cols;
  for (const auto& name : input_names) {
    int found = -1;
    for (size_t c = 0; c < d.feature_names.size(); ++c) {
      if (identifier_for(d.feature_names[c]) != name) continue;
      if (found >= 0)
        throw DataError("input '" + name + "' matches several dataset features");
      found = static_cast<int>(c);
    }
    if (found < 0) throw DataError("dataset provides no feature for input '" + name + "'");
    cols.push_back(static_cast<size_t>(found));
  }
  Dataset out;
  out.feature_names = input_names;
  out.n_classes = d.n_classes;
  out.class_names = d.class_names;
  out.y = d.y;
  out.X = Matrix(d.X.rows, cols.size());
  for (size_t r = 0; r < d.X.rows; ++r)
    for (size_t c = 0; c < cols.size(); ++c) out.X.at(r, c) = d.X.at(r, cols[c]);
  return out;
}

}  // namespace loh
