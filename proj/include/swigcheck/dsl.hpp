#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "swigcheck/error.hpp"
#include "swigcheck/format.hpp"
#include "swigcheck/graph.hpp"
#include "swigcheck/inference.hpp"
#include "swigcheck/swig.hpp"

namespace swigcheck {

/// A parsed `.dag` file: the graph, an optional model block and a title.
struct Document {
  Dag graph;
  std::optional<DiscreteModel> model;
  std::string title;

  bool operator==(const Document&) const = default;
};

namespace dsl {

enum class Tok { Ident, Number, String, LBrace, RBrace, LBracket, RBracket, LParen, RParen, Semi, Comma, Eq, Bar, Arrow, End };

inline std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "string";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Semi: return "';'";
    case Tok::Comma: return "','";
    case Tok::Eq: return "'='";
    case Tok::Bar: return "'|'";
    case Tok::Arrow: return "'->'";
    case Tok::End: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip();
      Token t;
      const auto start = mark();
      if (pos_ >= src_.size()) {
        t.span = finish(start);
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (is_alpha(c)) {
        while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]))) advance();
        t.kind = Tok::Ident;
      } else if (is_digit(c) || c == '.' || (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] != '>')) {
        number();
        t.kind = Tok::Number;
      } else if (c == '"') {
        advance();
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
          if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
          advance();
        }
        if (pos_ >= src_.size() || src_[pos_] != '"') throw SyntaxError("unterminated string", finish(start));
        advance();
        t.kind = Tok::String;
      } else if (c == '-' ) {
        advance();
        advance();
        t.kind = Tok::Arrow;
      } else {
        switch (c) {
          case '{': t.kind = Tok::LBrace; break;
          case '}': t.kind = Tok::RBrace; break;
          case '[': t.kind = Tok::LBracket; break;
          case ']': t.kind = Tok::RBracket; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ';': t.kind = Tok::Semi; break;
          case ',': t.kind = Tok::Comma; break;
          case '=': t.kind = Tok::Eq; break;
          case '|': t.kind = Tok::Bar; break;
          default: {
            advance();
            throw SyntaxError("unexpected character '" + std::string(1, c) + "'", finish(start));
          }
        }
        advance();
      }
      t.span = finish(start);
      t.text = std::string(src_.substr(start.begin, pos_ - start.begin));
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  SourceSpan mark() const { return {line_, col_, line_, col_, pos_, pos_}; }
  SourceSpan finish(SourceSpan s) const {
    s.end_line = line_;
    s.end_column = col_;
    s.end = pos_;
    return s;
  }

  void advance() {
    if (pos_ >= src_.size()) return;
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      ++col_;  // count code points, not continuation bytes
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  void number() {
    if (src_[pos_] == '-') advance();
    while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

inline std::string unescape(std::string_view quoted) {
  std::string out;
  for (std::size_t i = 1; i + 1 < quoted.size(); ++i) {
    if (quoted[i] == '\\' && i + 2 < quoted.size()) ++i;
    out += quoted[i];
  }
  return out;
}

inline std::string escape(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  Document run() {
    Document doc;
    expect_keyword("dag");
    const Token name = expect(Tok::Ident);
    doc.graph.set_name(name.text);
    if (at(Tok::LBracket)) {
      for (const auto& a : attrs()) {
        if (a.key.text != "title" || !a.value || a.value->kind != Tok::String)
          throw SemanticError("graph attributes accept only title=\"...\"", a.key.span);
        doc.title = unescape(a.value->text);
      }
    }
    expect(Tok::LBrace);
    while (!at(Tok::RBrace)) statement(doc.graph);
    const Token close = expect(Tok::RBrace);

    try {
      validate(doc.graph);
    } catch (const Error& e) {
      SourceSpan span = name.span;
      span.end_line = close.span.end_line;
      span.end_column = close.span.end_column;
      span.end = close.span.end;
      throw SemanticError(e.code() + ": " + e.what(), span);
    }

    if (at(Tok::Ident) && peek().text == "model") doc.model = model_block(doc.graph);
    if (!at(Tok::End)) throw SyntaxError("expected end of input, found " + found(peek()), peek().span);
    return doc;
  }

 private:
  struct Attr {
    Token key;
    std::optional<Token> value;
  };

  const Token& peek() const { return toks_[pos_]; }
  bool at(Tok k) const { return peek().kind == k; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  static std::string found(const Token& t) {
    return t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
  }

  Token expect(Tok k) {
    if (!at(k)) throw SyntaxError("expected " + std::string(describe(k)) + ", found " + found(peek()), peek().span);
    return take();
  }

  Token expect_keyword(std::string_view word) {
    if (!at(Tok::Ident) || peek().text != word)
      throw SyntaxError("expected '" + std::string(word) + "', found " + found(peek()), peek().span);
    return take();
  }

  std::vector<Attr> attrs() {
    std::vector<Attr> out;
    expect(Tok::LBracket);
    while (true) {
      Attr a{expect(Tok::Ident), std::nullopt};
      if (at(Tok::Eq)) {
        take();
        if (!at(Tok::Ident) && !at(Tok::Number) && !at(Tok::String))
          throw SyntaxError("expected attribute value, found " + found(peek()), peek().span);
        a.value = take();
      }
      out.push_back(std::move(a));
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      expect(Tok::RBracket);
      return out;
    }
  }

  static const Token& need_value(const Attr& a, Tok kind) {
    if (!a.value || a.value->kind != kind)
      throw SemanticError("attribute '" + a.key.text + "' needs a " + std::string(describe(kind)) + " value",
                          a.key.span);
    return *a.value;
  }

  static void need_flag(const Attr& a) {
    if (a.value) throw SemanticError("attribute '" + a.key.text + "' takes no value", a.value->span);
  }

  void declare_implicit(Dag& g, const Token& t) {
    if (!g.has_node(t.text)) {
      g.add_node(t.text);
      implicit_.insert(t.text);
    }
  }

  void statement(Dag& g) {
    const Token first = expect(Tok::Ident);
    if (at(Tok::Arrow)) {
      take();
      const Token second = expect(Tok::Ident);
      bool dashed = false;
      if (at(Tok::LBracket)) {
        for (const auto& a : attrs()) {
          if (a.key.text != "dashed") throw SemanticError("unknown edge attribute '" + a.key.text + "'", a.key.span);
          need_flag(a);
          dashed = true;
        }
      }
      const Token semi = expect(Tok::Semi);
      SourceSpan span = first.span;
      span.end_line = semi.span.end_line;
      span.end_column = semi.span.end_column;
      span.end = semi.span.end;
      if (first.text == second.text) throw SemanticError("self-loop on " + first.text, span);
      declare_implicit(g, first);
      declare_implicit(g, second);
      if (g.has_edge(first.text, second.text))
        throw SemanticError("duplicate edge " + first.text + " -> " + second.text, span);
      g.add_edge(first.text, second.text, dashed);
      return;
    }

    Node node{first.text, Role::covariate(), true, std::nullopt, std::nullopt};
    std::optional<Token> stage;
    if (at(Tok::LBracket)) {
      std::set<std::string> seen;
      for (const auto& a : attrs()) {
        if (!seen.insert(a.key.text).second) throw SemanticError("repeated attribute '" + a.key.text + "'", a.key.span);
        if (a.key.text == "role") {
          const auto& v = need_value(a, Tok::Ident);
          auto kind = role_kind_from_string(v.text);
          if (!kind) throw SemanticError("unknown role '" + v.text + "'", v.span);
          node.role.kind = *kind;
          if (*kind == RoleKind::Selection && node.role.stage == 0) node.role.stage = 1;
        } else if (a.key.text == "stage") {
          const auto& v = need_value(a, Tok::Number);
          if (v.text.find_first_not_of("0123456789") != std::string::npos || v.text.size() > 6 || std::stoi(v.text) < 1)
            throw SemanticError("stage must be a positive integer", v.span);
          stage = v;
        } else if (a.key.text == "latent") {
          need_flag(a);
          node.observed = false;
        } else if (a.key.text == "match") {
          node.match = need_value(a, Tok::Ident).text;
        } else if (a.key.text == "balance") {
          node.balance = need_value(a, Tok::Ident).text;
        } else {
          throw SemanticError("unknown node attribute '" + a.key.text + "'", a.key.span);
        }
      }
    }
    if (stage) {
      if (node.role.kind != RoleKind::Selection) throw SemanticError("stage given on a non-selection node", stage->span);
      node.role.stage = std::stoi(stage->text);
    }
    expect(Tok::Semi);
    if (g.has_node(node.name)) {
      if (!implicit_.count(node.name) || declared_.count(node.name))
        throw SemanticError("duplicate node " + node.name, first.span);
      g.node(node.name) = node;
    } else {
      g.add_node(node);
    }
    declared_.insert(node.name);
  }

  static double probability(const Token& t) {
    double v = 0;
    try {
      v = std::stod(t.text);
    } catch (const std::exception&) {
      throw SyntaxError("bad number '" + t.text + "'", t.span);
    }
    if (!(v >= 0.0 && v <= 1.0)) throw SemanticError("probability " + t.text + " outside [0, 1]", t.span);
    return v;
  }

  static int binary(const Token& t) {
    if (t.kind != Tok::Number || (t.text != "0" && t.text != "1"))
      throw SemanticError("value must be 0 or 1", t.span);
    return t.text == "1" ? 1 : 0;
  }

  DiscreteModel model_block(const Dag& g) {
    const Token kw = take();
    DiscreteModel m(g);
    // given[node][row][value] -> probability and span of the statement
    std::map<NodeId, std::map<std::size_t, std::map<int, std::pair<double, SourceSpan>>>> given;
    expect(Tok::LBrace);
    while (!at(Tok::RBrace)) {
      const Token p = expect_keyword("p");
      expect(Tok::LParen);
      const Token var = expect(Tok::Ident);
      if (!g.has_node(var.text)) throw SemanticError("undeclared node " + var.text, var.span);
      expect(Tok::Eq);
      const int value = binary(expect(Tok::Number));
      Assignment parents;
      std::map<NodeId, SourceSpan> where;
      if (at(Tok::Bar)) {
        take();
        do {
          const Token pv = expect(Tok::Ident);
          if (!g.has_node(pv.text)) throw SemanticError("undeclared parent " + pv.text, pv.span);
          if (!g.has_edge(pv.text, var.text))
            throw SemanticError(pv.text + " is not a parent of " + var.text, pv.span);
          if (parents.count(pv.text)) throw SemanticError("parent " + pv.text + " repeated", pv.span);
          expect(Tok::Eq);
          parents[pv.text] = binary(expect(Tok::Number));
          where[pv.text] = pv.span;
        } while (at(Tok::Comma) && (take(), true));
      }
      const Token rparen = expect(Tok::RParen);
      expect(Tok::Eq);
      const Token num = expect(Tok::Number);
      const double prob = probability(num);
      const Token semi = expect(Tok::Semi);
      SourceSpan span = p.span;
      span.end_line = semi.span.end_line;
      span.end_column = semi.span.end_column;
      span.end = semi.span.end;
      for (const auto& parent : g.parents(var.text))
        if (!parents.count(parent))
          throw SemanticError("row for " + var.text + " does not assign parent " + parent, rparen.span);
      const auto row = m.row_index(var.text, parents);
      auto& slot = given[var.text][row];
      if (slot.count(value)) throw SemanticError("duplicate row for " + var.text, span);
      slot[value] = {prob, span};
    }
    const Token close = expect(Tok::RBrace);

    for (const auto& n : g.nodes()) {
      const auto rows = std::size_t{1} << g.parents(n.name).size();
      auto it = given.find(n.name);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto* slot = it == given.end() ? nullptr : (it->second.count(r) ? &it->second.at(r) : nullptr);
        if (!slot) {
          SourceSpan span = kw.span;
          span.end_line = close.span.end_line;
          span.end_column = close.span.end_column;
          span.end = close.span.end;
          throw SemanticError("incomplete table for " + n.name + ": missing row " + row_text(g, n.name, r), span);
        }
        double p1 = 0;
        if (slot->count(1) && slot->count(0)) {
          const double sum = slot->at(1).first + slot->at(0).first;
          if (std::abs(sum - 1.0) > 1e-12)
            throw SemanticError("row " + row_text(g, n.name, r) + " sums to " + format_number(sum) + ", not 1",
                                slot->at(0).second);
          p1 = slot->at(1).first;
        } else if (slot->count(1)) {
          p1 = slot->at(1).first;
        } else {
          p1 = 1.0 - slot->at(0).first;
        }
        auto rowv = m.cpt(n.name);
        rowv[r] = p1;
        m.set_table(n.name, std::move(rowv));
      }
    }
    return m;
  }

  static std::string row_text(const Dag& g, const NodeId& node, std::size_t row) {
    std::string out = "p(" + node + "=1";
    const auto ps = g.parents(node);
    for (std::size_t j = 0; j < ps.size(); ++j)
      out += (j ? ", " : " | ") + ps[j] + "=" + std::to_string(row >> j & 1U);
    return out + ")";
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<NodeId> implicit_;
  std::set<NodeId> declared_;
};

inline std::string quote_id(const std::string& id) { return is_identifier(id) ? id : escape(id); }

}  // namespace dsl

/// Parses `.dag` text. Errors carry the span of the offending token.
inline Document parse(std::string_view text) { return dsl::Parser(text).run(); }

/// Canonical text: node declarations in order, then edges, then the model.
inline std::string serialize(const Document& doc) {
  const Dag& g = doc.graph;
  std::string out = "dag " + g.name();
  if (!doc.title.empty()) out += " [title=" + dsl::escape(doc.title) + "]";
  out += " {\n";
  for (const auto& n : g.nodes()) {
    std::vector<std::string> attrs;
    if (n.role.kind != RoleKind::Covariate) attrs.push_back("role=" + std::string(to_string(n.role.kind)));
    if (n.role.kind == RoleKind::Selection && n.role.stage != 1) attrs.push_back("stage=" + std::to_string(n.role.stage));
    if (!n.observed) attrs.push_back("latent");
    if (n.match) attrs.push_back("match=" + *n.match);
    if (n.balance) attrs.push_back("balance=" + *n.balance);
    out += "  " + n.name;
    for (std::size_t i = 0; i < attrs.size(); ++i) out += (i ? ", " : " [") + attrs[i];
    out += attrs.empty() ? ";\n" : "];\n";
  }
  for (const auto& e : g.edges()) out += "  " + e.from + " -> " + e.to + (e.dashed ? " [dashed];\n" : ";\n");
  out += "}\n";
  if (doc.model) {
    out += "model {\n";
    for (const auto& n : g.nodes()) {
      const auto ps = g.parents(n.name);
      const auto& rows = doc.model->cpt(n.name);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        out += "  p(" + n.name + "=1";
        for (std::size_t j = 0; j < ps.size(); ++j) out += (j ? ", " : " | ") + ps[j] + "=" + std::to_string(r >> j & 1U);
        out += ") = " + format_number(rows[r]) + ";\n";
      }
    }
    out += "}\n";
  }
  return out;
}

/// Graphviz rendering of a DAG. Dashed edges get `style=dashed`, latent
/// nodes `style=dotted`.
inline std::string emit_dot(const Dag& g) {
  using dsl::quote_id;
  if (g.size() == 0) return "digraph " + quote_id(g.name()) + " { }\n";
  std::string out = "digraph " + quote_id(g.name()) + " {\n";
  for (const auto& n : g.nodes()) out += "  " + quote_id(n.name) + (n.observed ? ";\n" : " [style=dotted];\n");
  for (const auto& e : g.edges())
    out += "  " + quote_id(e.from) + " -> " + quote_id(e.to) + (e.dashed ? " [style=dashed];\n" : ";\n");
  return out + "}\n";
}

/// Graphviz rendering of a SWIG: each split node becomes a cluster holding
/// its random half and its boxed fixed half.
inline std::string emit_dot(const Swig& s) {
  using dsl::quote_id;
  const auto& nodes = s.nodes();
  if (nodes.empty()) return "digraph " + quote_id(s.source().name()) + " { }\n";
  std::string out = "digraph " + quote_id(s.source().name()) + " {\n";
  auto node_stmt = [&](const SwigNode& n) {
    std::string attrs;
    if (n.kind == SwigNodeKind::Fixed) attrs = "shape=box";
    else if (!s.source().node(n.base).observed) attrs = "style=dotted";
    return quote_id(n.display()) + (attrs.empty() ? "" : " [" + attrs + "]") + ";";
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.kind == SwigNodeKind::Fixed) continue;
    if (i + 1 < nodes.size() && nodes[i + 1].kind == SwigNodeKind::Fixed) {
      out += "  subgraph " + quote_id("cluster_" + n.base) + " { " + node_stmt(n) + " " + node_stmt(nodes[i + 1]) + " }\n";
    } else {
      out += "  " + node_stmt(n) + "\n";
    }
  }
  for (const auto& e : s.edges())
    out += "  " + quote_id(nodes[e.from].display()) + " -> " + quote_id(nodes[e.to].display()) +
           (e.dashed ? " [style=dashed];\n" : ";\n");
  return out + "}\n";
}

}  // namespace swigcheck
