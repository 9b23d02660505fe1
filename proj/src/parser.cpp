#include <cctype>
#include <cstring>

#include "tml/formula.hpp"

namespace tml {

namespace {

// Precedence: prefix (~ [] <> [.] <.>) > & > | > -> <-> ; & and | associate
// left, -> and <-> right.
enum Level : int { kImp = 1, kOr = 2, kAnd = 3, kPrefix = 4 };

bool boxdot_shape(const Formula& f) {
  return f.kind() == Conn::And && f.rhs().kind() == Conn::Box &&
         f.rhs().lhs() == f.lhs();
}
bool diadot_shape(const Formula& f) {
  return f.kind() == Conn::Or && f.rhs().kind() == Conn::Dia &&
         f.rhs().lhs() == f.lhs();
}

int level_of(const Formula& f) {
  if (boxdot_shape(f) || diadot_shape(f)) return kPrefix;
  switch (f.kind()) {
    case Conn::And:
      return kAnd;
    case Conn::Or:
      return kOr;
    case Conn::Imp:
    case Conn::Iff:
      return kImp;
    default:
      return kPrefix;
  }
}

void emit(std::string& out, const Formula& f, int min_level) {
  int lv = level_of(f);
  if (lv < min_level) {
    out += '(';
    emit(out, f, kImp);
    out += ')';
    return;
  }
  if (boxdot_shape(f)) {
    out += "[.]";
    emit(out, f.lhs(), kPrefix);
    return;
  }
  if (diadot_shape(f)) {
    out += "<.>";
    emit(out, f.lhs(), kPrefix);
    return;
  }
  switch (f.kind()) {
    case Conn::Bot:
      out += "bot";
      break;
    case Conn::Top:
      out += "top";
      break;
    case Conn::Var:
      out += 'x';
      out += std::to_string(f.index());
      break;
    case Conn::Par:
      out += 'p';
      out += std::to_string(f.index());
      break;
    case Conn::Neg:
      out += '~';
      emit(out, f.lhs(), kPrefix);
      break;
    case Conn::Box:
      out += "[]";
      emit(out, f.lhs(), kPrefix);
      break;
    case Conn::Dia:
      out += "<>";
      emit(out, f.lhs(), kPrefix);
      break;
    case Conn::And:
      emit(out, f.lhs(), kAnd);
      out += " & ";
      emit(out, f.rhs(), kAnd + 1);
      break;
    case Conn::Or:
      emit(out, f.lhs(), kOr);
      out += " | ";
      emit(out, f.rhs(), kOr + 1);
      break;
    case Conn::Imp:
      emit(out, f.lhs(), kImp + 1);
      out += " -> ";
      emit(out, f.rhs(), kImp);
      break;
    case Conn::Iff:
      emit(out, f.lhs(), kImp + 1);
      out += " <-> ";
      emit(out, f.rhs(), kImp);
      break;
  }
}

struct Parser {
  const std::string& text;
  size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(const char* tok) {
    skip_ws();
    size_t len = std::strlen(tok);
    if (text.compare(pos, len, tok) == 0) {
      pos += len;
      return true;
    }
    return false;
  }

  bool peek_word(const char* w) {
    skip_ws();
    size_t len = std::strlen(w);
    if (text.compare(pos, len, w) != 0) return false;
    size_t end = pos + len;
    return end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
  }

  unsigned read_index() {
    size_t start = pos;
    unsigned long v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + (text[pos] - '0');
      if (v > 0xffffffffUL) fail("atom index out of range");
      ++pos;
    }
    if (pos == start) fail("expected atom index");
    return static_cast<unsigned>(v);
  }

  Formula parse_formula() {
    Formula lhs = parse_or();
    if (eat("->")) return Formula::imp(lhs, parse_formula());
    if (eat("<->")) return Formula::iff(lhs, parse_formula());
    return lhs;
  }

  Formula parse_or() {
    Formula acc = parse_and();
    while (true) {
      skip_ws();
      // '|' but not part of another token
      if (pos < text.size() && text[pos] == '|') {
        ++pos;
        acc = Formula::disj(acc, parse_and());
      } else {
        return acc;
      }
    }
  }

  Formula parse_and() {
    Formula acc = parse_prefix();
    while (eat("&")) acc = Formula::conj(acc, parse_prefix());
    return acc;
  }

  Formula parse_prefix() {
    skip_ws();
    if (eat("~")) return Formula::neg(parse_prefix());
    if (eat("[.]")) return Formula::boxdot(parse_prefix());
    if (eat("<.>")) return Formula::diadot(parse_prefix());
    if (eat("[]")) return Formula::box(parse_prefix());
    if (eat("<>")) return Formula::dia(parse_prefix());
    return parse_primary();
  }

  Formula parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (eat("(")) {
      Formula f = parse_formula();
      if (!eat(")")) fail("expected ')'");
      return f;
    }
    if (peek_word("bot")) {
      pos += 3;
      return Formula::bot();
    }
    if (peek_word("top")) {
      pos += 3;
      return Formula::top();
    }
    char c = text[pos];
    if (c == 'x') {
      ++pos;
      return Formula::var(read_index());
    }
    if (c == 'p') {
      ++pos;
      return Formula::par(read_index());
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

std::string print(const Formula& f) {
  std::string out;
  emit(out, f, kImp);
  return out;
}

Formula parse(const std::string& text) {
  Parser p(text);
  Formula f = p.parse_formula();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return f;
}

}  // namespace tml
