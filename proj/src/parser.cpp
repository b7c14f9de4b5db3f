#include "loh/parser.hpp"

#include <cctype>
#include <set>

namespace loh {

namespace {

enum class Tok {
  ident,
  kw_let,
  kw_out,
  kw_true,
  kw_false,
  bang,
  amp,
  pipe,
  lparen,
  rparen,
  lbracket,
  rbracket,
  comma,
  semicolon,
  equals,
  at_disj,
  at_conj,
  eof,
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, col);
  }

  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_space_and_comments() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  Token next() {
    skip_space_and_comments();
    int l = line, c = col;
    if (pos >= src.size()) return {Tok::eof, "", l, c};
    char ch = src[pos];
    auto single = [&](Tok k) {
      advance();
      return Token{k, std::string(1, ch), l, c};
    };
    switch (ch) {
      case '!': return single(Tok::bang);
      case '&': return single(Tok::amp);
      case '|': return single(Tok::pipe);
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case '[': return single(Tok::lbracket);
      case ']': return single(Tok::rbracket);
      case ',': return single(Tok::comma);
      case ';': return single(Tok::semicolon);
      case '=': return single(Tok::equals);
      case '@': {
        advance();
        std::string word;
        while (pos < src.size() && ident_char(src[pos])) {
          word += src[pos];
          advance();
        }
        if (word == "disj") return {Tok::at_disj, "@disj", l, c};
        if (word == "conj") return {Tok::at_conj, "@conj", l, c};
        throw ParseError("unknown choice annotation '@" + word +
                             "' (expected @disj or @conj)",
                         l, c);
      }
      default: break;
    }
    if (ident_start(ch)) {
      std::string word;
      while (pos < src.size() && ident_char(src[pos])) {
        word += src[pos];
        advance();
      }
      if (word == "let") return {Tok::kw_let, word, l, c};
      if (word == "out") return {Tok::kw_out, word, l, c};
      if (word == "true") return {Tok::kw_true, word, l, c};
      if (word == "false") return {Tok::kw_false, word, l, c};
      return {Tok::ident, word, l, c};
    }
    throw ParseError(std::string("unexpected character '") + ch + "'", l, c);
  }
};

struct Parser {
  Lexer lexer;
  Token tok;
  int next_choice_id;
  // names declared so far; identifiers matching these parse as placeholders
  std::set<std::string> declared;
  std::set<std::string> used_as_var;
  bool allow_placeholders;

  Parser(const std::string& src, int first_choice_id, bool placeholders)
      : lexer(src), next_choice_id(first_choice_id),
        allow_placeholders(placeholders) {
    tok = lexer.next();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, tok.line, tok.col);
  }

  void bump() { tok = lexer.next(); }

  Token expect(Tok kind, const std::string& what) {
    if (tok.kind != kind) fail("expected " + what);
    Token t = tok;
    bump();
    return t;
  }

  FormulaPtr parse_or() {
    FormulaPtr lhs = parse_and();
    while (tok.kind == Tok::pipe) {
      bump();
      lhs = disjunction(lhs, parse_and());
    }
    return lhs;
  }

  FormulaPtr parse_and() {
    FormulaPtr lhs = parse_unary();
    while (tok.kind == Tok::amp) {
      bump();
      lhs = conjunction(lhs, parse_unary());
    }
    return lhs;
  }

  FormulaPtr parse_unary() {
    if (tok.kind == Tok::bang) {
      bump();
      return negation(parse_unary());
    }
    return parse_atom();
  }

  FormulaPtr parse_atom() {
    switch (tok.kind) {
      case Tok::kw_true:
        bump();
        return constant(true);
      case Tok::kw_false:
        bump();
        return constant(false);
      case Tok::ident: {
        std::string name = tok.text;
        bump();
        if (allow_placeholders && declared.count(name)) return placeholder(name);
        used_as_var.insert(name);
        return var(name);
      }
      case Tok::lparen: {
        bump();
        FormulaPtr f = parse_or();
        expect(Tok::rparen, "')'");
        return f;
      }
      case Tok::lbracket: {
        int id = next_choice_id++;
        bump();
        std::vector<FormulaPtr> branches;
        branches.push_back(parse_or());
        while (tok.kind == Tok::comma) {
          bump();
          branches.push_back(parse_or());
        }
        expect(Tok::rbracket, "']'");
        CompileHint hint = CompileHint::none;
        if (tok.kind == Tok::at_disj) {
          hint = CompileHint::disjunctive;
          bump();
        } else if (tok.kind == Tok::at_conj) {
          hint = CompileHint::conjunctive;
          bump();
        }
        return choice(std::move(branches), id, hint);
      }
      default:
        fail("expected a formula");
    }
  }

  Program parse_program() {
    Program p;
    std::set<std::string> labels;
    while (tok.kind != Tok::eof) {
      if (tok.kind == Tok::kw_let) {
        Token at = tok;
        bump();
        Token name = expect(Tok::ident, "declaration name");
        if (declared.count(name.text))
          throw ParseError("duplicate declaration '" + name.text + "'",
                           name.line, name.col);
        if (used_as_var.count(name.text))
          throw ParseError("declaration of '" + name.text +
                               "' after it was used as a variable (forward "
                               "references are not allowed)",
                           name.line, name.col);
        (void)at;
        expect(Tok::equals, "'='");
        FormulaPtr body = parse_or();
        expect(Tok::semicolon, "';'");
        p.declarations.push_back({name.text, body});
        declared.insert(name.text);
      } else if (tok.kind == Tok::kw_out) {
        bump();
        Token label = expect(Tok::ident, "output label");
        if (labels.count(label.text))
          throw ParseError("duplicate output label '" + label.text + "'",
                           label.line, label.col);
        labels.insert(label.text);
        expect(Tok::equals, "'='");
        FormulaPtr root = parse_or();
        expect(Tok::semicolon, "';'");
        p.outputs.push_back({label.text, root});
      } else {
        fail("expected 'let' or 'out'");
      }
    }
    return p;
  }
};

}  // namespace

ParseError::ParseError(std::string message, int line_, int column_)
    : Error("parse error at " + std::to_string(line_) + ":" +
            std::to_string(column_) + ": " + message),
      line(line_),
      column(column_) {}

Program parse_program(const std::string& source) {
  Parser parser(source, 0, /*placeholders=*/true);
  Program p = parser.parse_program();
  p.validate();
  return p;
}

FormulaPtr parse_formula(const std::string& source, int first_choice_id) {
  Parser parser(source, first_choice_id, /*placeholders=*/false);
  FormulaPtr f = parser.parse_or();
  if (parser.tok.kind != Tok::eof) parser.fail("trailing input after formula");
  return f;
}

}  // namespace loh
