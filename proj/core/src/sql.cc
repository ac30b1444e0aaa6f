// Copyright 2026 The rawdb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rawdb/sql.h"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "rawdb/error.h"

namespace rawdb {

namespace {

enum class Tok : std::uint8_t { kIdent, kInt, kFloat, kString, kSymbol, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;  // identifiers keep their spelling; symbols their lexeme
  SourcePos pos;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_reserved(std::string_view word) {
  static const char* const kWords[] = {
      "SELECT", "FROM",  "WHERE", "AND",    "OR",     "NOT",   "JOIN",    "INNER", "LEFT",
      "RIGHT",  "FULL",  "OUTER", "CROSS",  "ON",     "GROUP", "BY",      "ORDER", "ASC",
      "DESC",   "LIMIT", "AS",    "EXPLAIN", "SET",   "DISTINCT", "HAVING", "UNION", "IN",
      "LIKE",   "IS",    "NULL",  "BETWEEN", "EXISTS", "CASE",  "OFFSET", "INTERSECT", "EXCEPT"};
  const std::string u = upper(word);
  return std::any_of(std::begin(kWords), std::end(kWords), [&](const char* w) { return u == w; });
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      bool is_float = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        is_float = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          is_float = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        throw SyntaxError(line, col, "malformed number");
      }
      t.kind = is_float ? Tok::kFloat : Tok::kInt;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '\'') {
      std::string value;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= src.size()) throw SyntaxError(line, col, "unterminated string literal");
        if (src[j] == '\'') {
          if (j + 1 < src.size() && src[j + 1] == '\'') {
            value.push_back('\'');
            j += 2;
            continue;
          }
          break;
        }
        value.push_back(src[j++]);
      }
      t.kind = Tok::kString;
      t.text = std::move(value);
      advance(j + 1 - i);
    } else {
      static const char* const kTwo[] = {"<=", ">=", "!=", "<>", "||"};
      std::string lexeme(1, c);
      for (const char* two : kTwo) {
        if (src.substr(i, 2) == two) lexeme = two;
      }
      if (lexeme.size() == 1 && std::string_view("(),.;*=<>+-/%").find(c) == std::string_view::npos) {
        throw SyntaxError(line, col, std::string("unexpected character '") + c + "'");
      }
      t.kind = Tok::kSymbol;
      t.text = lexeme;
      advance(lexeme.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::kEnd;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Statement statement() {
    Statement st;
    if (keyword("EXPLAIN")) st.explain = true;
    if (!st.explain && keyword("SET")) {
      st.body = set_statement();
    } else {
      st.body = select();
    }
    finish();
    return st;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_keyword(const Token& t, std::string_view kw) const {
    return t.kind == Tok::kIdent && upper(t.text) == kw;
  }
  bool keyword(std::string_view kw) {
    if (!is_keyword(peek(), kw)) return false;
    next();
    return true;
  }
  bool symbol(std::string_view s) {
    if (peek().kind != Tok::kSymbol || peek().text != s) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw SyntaxError(t.pos.line, t.pos.column, what);
  }
  [[noreturn]] void unsupported(const Token& t, const std::string& what) const {
    throw SyntaxError(t.pos.line, t.pos.column, what, ErrorCode::kUnsupported);
  }
  std::string describe(const Token& t) const {
    switch (t.kind) {
      case Tok::kEnd: return "end of input";
      case Tok::kString: return "'" + t.text + "'";
      default: return "'" + t.text + "'";
    }
  }
  void expect_keyword(std::string_view kw) {
    if (!keyword(kw)) fail(peek(), "expected " + std::string(kw) + ", found " + describe(peek()));
  }
  void expect_symbol(std::string_view s) {
    if (!symbol(s)) fail(peek(), "expected '" + std::string(s) + "', found " + describe(peek()));
  }

  void finish() {
    symbol(";");
    const Token& t = peek();
    if (t.kind == Tok::kEnd) return;
    check_unsupported_clause(t);
    fail(t, "unexpected " + describe(t));
  }

  void check_unsupported_clause(const Token& t) {
    const std::string u = t.kind == Tok::kIdent ? upper(t.text) : "";
    if (u == "OR") unsupported(t, "OR");
    if (u == "HAVING") unsupported(t, "HAVING");
    if (u == "UNION" || u == "INTERSECT" || u == "EXCEPT") unsupported(t, u);
    if (u == "OFFSET") unsupported(t, "OFFSET");
    if (u == "LEFT" || u == "RIGHT" || u == "FULL" || u == "OUTER") unsupported(t, "outer join");
    if (u == "CROSS") unsupported(t, "cross join");
    if (u == "NOT") unsupported(t, "NOT");
    if (u == "IN") unsupported(t, "IN");
    if (u == "LIKE") unsupported(t, "LIKE");
    if (u == "IS") unsupported(t, "IS NULL");
    if (t.kind == Tok::kSymbol && (t.text == "+" || t.text == "-" || t.text == "/" ||
                                   t.text == "%" || t.text == "||" || t.text == "*")) {
      unsupported(t, "arithmetic expression");
    }
  }

  std::string identifier(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::kIdent || is_reserved(t.text)) {
      if (symbol("(")) {
        if (is_keyword(peek(), "SELECT")) unsupported(t, "subquery");
        unsupported(t, "parenthesized expression");
      }
      fail(t, "expected " + std::string(what) + ", found " + describe(t));
    }
    return next().text;
  }

  ColumnRef column_ref() {
    ColumnRef ref;
    ref.pos = peek().pos;
    ref.name = identifier("column name");
    if (symbol(".")) {
      ref.table = std::move(ref.name);
      ref.name = identifier("column name");
    }
    return ref;
  }

  static std::optional<AggFn> agg_name(const std::string& u) {
    if (u == "COUNT") return AggFn::kCount;
    if (u == "SUM") return AggFn::kSum;
    if (u == "AVG") return AggFn::kAvg;
    if (u == "MIN") return AggFn::kMin;
    if (u == "MAX") return AggFn::kMax;
    return std::nullopt;
  }

  // At an identifier followed by '('.
  Aggregate aggregate() {
    const Token& name = next();
    const auto fn = agg_name(upper(name.text));
    if (!fn) unsupported(name, "function " + name.text);
    expect_symbol("(");
    Aggregate agg;
    agg.fn = *fn;
    if (*fn == AggFn::kCount && symbol("*")) {
      expect_symbol(")");
      return agg;
    }
    if (keyword("DISTINCT")) {
      if (*fn != AggFn::kCount) unsupported(name, "DISTINCT inside " + upper(name.text));
      agg.fn = AggFn::kCountDistinct;
    }
    if (peek().kind == Tok::kSymbol && peek().text == "(") unsupported(peek(), "nested expression");
    agg.arg = column_ref();
    if (!symbol(")")) {
      check_unsupported_clause(peek());
      fail(peek(), "expected ')', found " + describe(peek()));
    }
    return agg;
  }

  bool at_call() const {
    return peek().kind == Tok::kIdent && peek(1).kind == Tok::kSymbol && peek(1).text == "(";
  }

  SelectItem select_item() {
    SelectItem item;
    if (symbol("*")) {
      item.kind = SelectItem::Kind::kStar;
      return item;
    }
    if (at_call()) {
      item.kind = SelectItem::Kind::kAggregate;
      item.aggregate = aggregate();
    } else {
      item.kind = SelectItem::Kind::kColumn;
      item.column = column_ref();
    }
    if (keyword("AS")) {
      item.alias = identifier("alias");
    } else if (peek().kind == Tok::kIdent && !is_reserved(peek().text)) {
      item.alias = next().text;
    }
    if (peek().kind == Tok::kSymbol && peek().text != "," ) check_unsupported_clause(peek());
    return item;
  }

  Value literal() {
    const Token& start = peek();
    bool negative = false;
    if (symbol("-")) negative = true;
    const Token& t = next();
    switch (t.kind) {
      case Tok::kInt: {
        std::string text = (negative ? "-" : "") + t.text;
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
          fail(t, "integer literal out of range");
        }
        return v;
      }
      case Tok::kFloat: {
        std::string text = (negative ? "-" : "") + t.text;
        double v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size()) fail(t, "bad float literal");
        return v;
      }
      case Tok::kString:
        if (negative) fail(start, "cannot negate a string");
        return t.text;
      default:
        if (is_keyword(t, "NULL")) unsupported(t, "NULL literal");
        fail(t, "expected literal, found " + describe(t));
    }
  }

  bool at_literal() const {
    const Token& t = peek();
    if (t.kind == Tok::kInt || t.kind == Tok::kFloat || t.kind == Tok::kString) return true;
    return t.kind == Tok::kSymbol && t.text == "-";
  }

  std::optional<CompareOp> comparison_op() {
    const Token& t = peek();
    if (t.kind != Tok::kSymbol) return std::nullopt;
    if (t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=" || t.text == "=" ||
        t.text == "!=" || t.text == "<>") {
      next();
      return parse_compare_op(t.text);
    }
    return std::nullopt;
  }

  void condition(std::vector<Condition>& out) {
    const Token& start = peek();
    if (is_keyword(start, "NOT")) unsupported(start, "NOT");
    if (is_keyword(start, "EXISTS")) unsupported(start, "subquery");
    if (start.kind == Tok::kSymbol && start.text == "(") {
      if (is_keyword(peek(1), "SELECT")) unsupported(start, "subquery");
      unsupported(start, "parenthesized expression");
    }
    if (at_literal()) {
      Value lit = literal();
      const Token& op_tok = peek();
      auto op = comparison_op();
      if (!op) fail(op_tok, "expected comparison operator, found " + describe(op_tok));
      if (at_literal()) unsupported(peek(), "literal-to-literal comparison");
      Condition c{column_ref(), flip(*op), std::move(lit)};
      out.push_back(std::move(c));
      return;
    }
    if (at_call()) unsupported(start, "function call in WHERE");
    ColumnRef col = column_ref();
    if (keyword("BETWEEN")) {
      Value lo = literal();
      expect_keyword("AND");
      Value hi = literal();
      out.push_back({col, CompareOp::kGe, std::move(lo)});
      out.push_back({col, CompareOp::kLe, std::move(hi)});
      return;
    }
    const Token& op_tok = peek();
    auto op = comparison_op();
    if (!op) {
      check_unsupported_clause(op_tok);
      fail(op_tok, "expected comparison operator, found " + describe(op_tok));
    }
    if (!at_literal()) {
      if (peek().kind == Tok::kSymbol && peek().text == "(") {
        if (is_keyword(peek(1), "SELECT")) unsupported(peek(), "subquery");
      }
      if (peek().kind == Tok::kIdent && !is_reserved(peek().text)) {
        unsupported(peek(), "column-to-column comparison");
      }
      fail(peek(), "expected literal, found " + describe(peek()));
    }
    out.push_back({std::move(col), *op, literal()});
    const Token& after = peek();
    if (after.kind == Tok::kSymbol && after.text != ")" && after.text != ";") {
      check_unsupported_clause(after);
    }
  }

  SelectQuery select() {
    expect_keyword("SELECT");
    SelectQuery q;
    if (is_keyword(peek(), "DISTINCT")) unsupported(peek(), "SELECT DISTINCT");
    do {
      q.items.push_back(select_item());
    } while (symbol(","));

    expect_keyword("FROM");
    if (peek().kind == Tok::kSymbol && peek().text == "(") {
      if (is_keyword(peek(1), "SELECT")) unsupported(peek(), "subquery");
      unsupported(peek(), "parenthesized table expression");
    }
    q.table = identifier("table name");
    if (peek().kind == Tok::kIdent && !is_reserved(peek().text)) unsupported(peek(), "table alias");
    if (peek().kind == Tok::kSymbol && peek().text == ",") unsupported(peek(), "implicit cross join");

    check_unsupported_clause(peek());
    if (keyword("INNER")) {
      if (!is_keyword(peek(), "JOIN")) fail(peek(), "expected JOIN after INNER");
    }
    if (keyword("JOIN")) {
      JoinClause j;
      j.table = identifier("table name");
      if (peek().kind == Tok::kIdent && !is_reserved(peek().text)) unsupported(peek(), "table alias");
      expect_keyword("ON");
      j.left = column_ref();
      const Token& op_tok = peek();
      auto op = comparison_op();
      if (!op) fail(op_tok, "expected '=' in join condition");
      if (*op != CompareOp::kEq) unsupported(op_tok, "non-equi join");
      j.right = column_ref();
      if (is_keyword(peek(), "AND")) unsupported(peek(), "multi-condition join");
      q.join = std::move(j);
      check_unsupported_clause(peek());
      if (is_keyword(peek(), "JOIN") || is_keyword(peek(), "INNER")) unsupported(peek(), "multi-way join");
    }

    if (keyword("WHERE")) {
      condition(q.where);
      for (;;) {
        if (keyword("AND")) {
          condition(q.where);
          continue;
        }
        if (is_keyword(peek(), "OR")) unsupported(peek(), "OR");
        break;
      }
    }
    if (keyword("GROUP")) {
      expect_keyword("BY");
      do {
        q.group_by.push_back(column_ref());
      } while (symbol(","));
    }
    if (is_keyword(peek(), "HAVING")) unsupported(peek(), "HAVING");
    if (keyword("ORDER")) {
      expect_keyword("BY");
      OrderBy ob;
      if (at_call()) ob.key = aggregate();
      else ob.key = column_ref();
      if (keyword("DESC")) ob.descending = true;
      else keyword("ASC");
      if (peek().kind == Tok::kSymbol && peek().text == ",") unsupported(peek(), "multiple ORDER BY keys");
      q.order_by = std::move(ob);
    }
    if (keyword("LIMIT")) {
      const Token& t = next();
      if (t.kind != Tok::kInt) fail(t, "expected non-negative integer after LIMIT");
      std::uint64_t k = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), k);
      if (ec != std::errc()) fail(t, "LIMIT out of range");
      q.limit = k;
    }
    return q;
  }

  SetStatement set_statement() {
    SetStatement s;
    s.name = identifier("setting name");
    if (!symbol("=")) keyword("TO");
    const Token& t = next();
    if (t.kind == Tok::kEnd || t.kind == Tok::kSymbol) fail(t, "expected setting value");
    s.value = t.text;
    return s;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view agg_fn_name(AggFn fn) {
  switch (fn) {
    case AggFn::kCount: return "count";
    case AggFn::kCountDistinct: return "count_distinct";
    case AggFn::kSum: return "sum";
    case AggFn::kAvg: return "avg";
    case AggFn::kMin: return "min";
    case AggFn::kMax: return "max";
  }
  return "?";
}

std::string Aggregate::to_string() const {
  if (!arg) return "count(*)";
  if (fn == AggFn::kCountDistinct) return "count(distinct " + arg->to_string() + ")";
  return std::string(agg_fn_name(fn)) + "(" + arg->to_string() + ")";
}

Statement parse_statement(std::string_view sql) { return Parser(lex(sql)).statement(); }

SelectQuery parse_select(std::string_view sql) {
  Statement st = parse_statement(sql);
  if (st.is_set()) throw_error(ErrorCode::kInvalidArgument, "expected a SELECT statement");
  return st.select();
}

}  // namespace rawdb
