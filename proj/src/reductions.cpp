#include "tml/reductions.hpp"

#include <cctype>
#include <cstring>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "tml/translations.hpp"

namespace tml {

// ---------------------------------------------------------------------------
// MatrixExpr
// ---------------------------------------------------------------------------

struct MatrixExpr::Node {
  MatrixConn conn = MatrixConn::Bot;
  MatrixAtom at = MatrixAtom::Elem;
  unsigned a = 0;
  unsigned b = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using MxNode = std::shared_ptr<const MatrixExpr::Node>;

MxNode mk(MatrixConn c, MatrixAtom at, unsigned a, unsigned b, MxNode l,
          MxNode r) {
  auto n = std::make_shared<MatrixExpr::Node>();
  n->conn = c;
  n->at = at;
  n->a = a;
  n->b = b;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

}  // namespace

MatrixExpr MatrixExpr::bot() {
  return MatrixExpr(mk(MatrixConn::Bot, MatrixAtom::Elem, 0, 0, nullptr, nullptr));
}
MatrixExpr MatrixExpr::top() {
  return MatrixExpr(mk(MatrixConn::Top, MatrixAtom::Elem, 0, 0, nullptr, nullptr));
}
MatrixExpr MatrixExpr::elem(unsigned i, unsigned alpha) {
  return MatrixExpr(mk(MatrixConn::Atom, MatrixAtom::Elem, i, alpha, nullptr, nullptr));
}
MatrixExpr MatrixExpr::in_x(unsigned alpha) {
  return MatrixExpr(mk(MatrixConn::Atom, MatrixAtom::InX, alpha, 0, nullptr, nullptr));
}
MatrixExpr MatrixExpr::in_y(unsigned alpha) {
  return MatrixExpr(mk(MatrixConn::Atom, MatrixAtom::InY, alpha, 0, nullptr, nullptr));
}
MatrixExpr MatrixExpr::univ(unsigned block, unsigned j) {
  return MatrixExpr(mk(MatrixConn::Atom, MatrixAtom::Univ, block, j, nullptr, nullptr));
}
MatrixExpr MatrixExpr::exist(unsigned block, unsigned j) {
  return MatrixExpr(mk(MatrixConn::Atom, MatrixAtom::Exist, block, j, nullptr, nullptr));
}
MatrixExpr MatrixExpr::neg(MatrixExpr a) {
  return MatrixExpr(mk(MatrixConn::Not, MatrixAtom::Elem, 0, 0, a.node_, nullptr));
}
MatrixExpr MatrixExpr::conj(MatrixExpr a, MatrixExpr b) {
  return MatrixExpr(mk(MatrixConn::And, MatrixAtom::Elem, 0, 0, a.node_, b.node_));
}
MatrixExpr MatrixExpr::disj(MatrixExpr a, MatrixExpr b) {
  return MatrixExpr(mk(MatrixConn::Or, MatrixAtom::Elem, 0, 0, a.node_, b.node_));
}
MatrixExpr MatrixExpr::imp(MatrixExpr a, MatrixExpr b) {
  return MatrixExpr(mk(MatrixConn::Imp, MatrixAtom::Elem, 0, 0, a.node_, b.node_));
}
MatrixExpr MatrixExpr::iff(MatrixExpr a, MatrixExpr b) {
  return MatrixExpr(mk(MatrixConn::Iff, MatrixAtom::Elem, 0, 0, a.node_, b.node_));
}

MatrixConn MatrixExpr::kind() const { return node_->conn; }
MatrixAtom MatrixExpr::atom() const { return node_->at; }
unsigned MatrixExpr::first() const { return node_->a; }
unsigned MatrixExpr::second() const { return node_->b; }
MatrixExpr MatrixExpr::lhs() const { return MatrixExpr(node_->lhs); }
MatrixExpr MatrixExpr::rhs() const { return MatrixExpr(node_->rhs); }

namespace {

enum MxLevel : int { kMxImp = 1, kMxOr = 2, kMxAnd = 3, kMxPrefix = 4 };

int mx_level(const MatrixExpr& e) {
  switch (e.kind()) {
    case MatrixConn::And:
      return kMxAnd;
    case MatrixConn::Or:
      return kMxOr;
    case MatrixConn::Imp:
    case MatrixConn::Iff:
      return kMxImp;
    default:
      return kMxPrefix;
  }
}

void mx_emit(std::string& out, const MatrixExpr& e, int min_level) {
  if (mx_level(e) < min_level) {
    out += '(';
    mx_emit(out, e, kMxImp);
    out += ')';
    return;
  }
  switch (e.kind()) {
    case MatrixConn::Bot:
      out += "bot";
      break;
    case MatrixConn::Top:
      out += "top";
      break;
    case MatrixConn::Atom:
      switch (e.atom()) {
        case MatrixAtom::Elem:
          out += "in(" + std::to_string(e.first()) + "," +
                 std::to_string(e.second()) + ")";
          break;
        case MatrixAtom::InX:
          out += "X(" + std::to_string(e.first()) + ")";
          break;
        case MatrixAtom::InY:
          out += "Y(" + std::to_string(e.first()) + ")";
          break;
        case MatrixAtom::Univ:
          out += "a(" + std::to_string(e.first()) + "," +
                 std::to_string(e.second()) + ")";
          break;
        case MatrixAtom::Exist:
          out += "b(" + std::to_string(e.first()) + "," +
                 std::to_string(e.second()) + ")";
          break;
      }
      break;
    case MatrixConn::Not:
      out += '~';
      mx_emit(out, e.lhs(), kMxPrefix);
      break;
    case MatrixConn::And:
      mx_emit(out, e.lhs(), kMxAnd);
      out += " & ";
      mx_emit(out, e.rhs(), kMxAnd + 1);
      break;
    case MatrixConn::Or:
      mx_emit(out, e.lhs(), kMxOr);
      out += " | ";
      mx_emit(out, e.rhs(), kMxOr + 1);
      break;
    case MatrixConn::Imp:
      mx_emit(out, e.lhs(), kMxImp + 1);
      out += " -> ";
      mx_emit(out, e.rhs(), kMxImp);
      break;
    case MatrixConn::Iff:
      mx_emit(out, e.lhs(), kMxImp + 1);
      out += " <-> ";
      mx_emit(out, e.rhs(), kMxImp);
      break;
  }
}

struct MxParser {
  const std::string& text;
  size_t pos = 0;

  explicit MxParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
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

  void expect(const char* tok) {
    if (!eat(tok)) fail(std::string("expected '") + tok + "'");
  }

  unsigned parse_num() {
    skip_ws();
    size_t start = pos;
    unsigned long v = 0;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + static_cast<unsigned long>(text[pos] - '0');
      if (v > 0xffffffffUL) fail("atom index out of range");
      ++pos;
    }
    if (pos == start) fail("expected atom index");
    return static_cast<unsigned>(v);
  }

  std::string parse_ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    return text.substr(start, pos - start);
  }

  MatrixExpr parse_expr() {
    MatrixExpr lhs = parse_or();
    if (eat("->")) return MatrixExpr::imp(lhs, parse_expr());
    if (eat("<->")) return MatrixExpr::iff(lhs, parse_expr());
    return lhs;
  }

  MatrixExpr parse_or() {
    MatrixExpr acc = parse_and();
    while (eat("|")) acc = MatrixExpr::disj(acc, parse_and());
    return acc;
  }

  MatrixExpr parse_and() {
    MatrixExpr acc = parse_prefix();
    while (eat("&")) acc = MatrixExpr::conj(acc, parse_prefix());
    return acc;
  }

  MatrixExpr parse_prefix() {
    if (eat("~")) return MatrixExpr::neg(parse_prefix());
    return parse_primary();
  }

  MatrixExpr parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (eat("(")) {
      MatrixExpr e = parse_expr();
      expect(")");
      return e;
    }
    std::string word = parse_ident();
    if (word == "top") return MatrixExpr::top();
    if (word == "bot") return MatrixExpr::bot();
    if (word == "in" || word == "a" || word == "b") {
      expect("(");
      unsigned i = parse_num();
      expect(",");
      unsigned j = parse_num();
      expect(")");
      if (word == "in") return MatrixExpr::elem(i, j);
      if (word == "a") return MatrixExpr::univ(i, j);
      return MatrixExpr::exist(i, j);
    }
    if (word == "X" || word == "Y") {
      expect("(");
      unsigned alpha = parse_num();
      expect(")");
      return word == "X" ? MatrixExpr::in_x(alpha) : MatrixExpr::in_y(alpha);
    }
    if (word.empty())
      fail(std::string("unexpected character '") + text[pos] + "'");
    fail("unknown atom '" + word + "'");
  }
};

}  // namespace

std::string print_matrix(const MatrixExpr& e) {
  std::string out;
  mx_emit(out, e, kMxImp);
  return out;
}

MatrixExpr parse_matrix(const std::string& text) {
  MxParser p(text);
  MatrixExpr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return e;
}

// ---------------------------------------------------------------------------
// Source validation and brute-force truth
// ---------------------------------------------------------------------------

namespace {

void check_set_matrix(const MatrixExpr& e, const ThirdOrderSentence& s) {
  if (e.null()) throw std::invalid_argument("null matrix");
  switch (e.kind()) {
    case MatrixConn::Bot:
    case MatrixConn::Top:
      return;
    case MatrixConn::Atom:
      switch (e.atom()) {
        case MatrixAtom::Elem:
          if (e.first() >= s.n || e.second() >= s.m)
            throw std::invalid_argument("matrix atom index out of range");
          return;
        case MatrixAtom::InX:
          if (s.pattern == SetPattern::Pi2)
            throw std::invalid_argument("pattern does not bind X");
          if (e.first() >= s.m)
            throw std::invalid_argument("matrix atom index out of range");
          return;
        case MatrixAtom::InY:
          if (s.pattern == SetPattern::Sigma2)
            throw std::invalid_argument("pattern does not bind Y");
          if (e.first() >= s.m)
            throw std::invalid_argument("matrix atom index out of range");
          return;
        default:
          throw std::invalid_argument("QBF atom in a set sentence");
      }
    case MatrixConn::Not:
      check_set_matrix(e.lhs(), s);
      return;
    default:
      check_set_matrix(e.lhs(), s);
      check_set_matrix(e.rhs(), s);
      return;
  }
}

void check_qbf_matrix(const MatrixExpr& e, const Qbf& q) {
  if (e.null()) throw std::invalid_argument("null matrix");
  switch (e.kind()) {
    case MatrixConn::Bot:
    case MatrixConn::Top:
      return;
    case MatrixConn::Atom:
      if (e.atom() != MatrixAtom::Univ && e.atom() != MatrixAtom::Exist)
        throw std::invalid_argument("set atom in a QBF matrix");
      if (e.first() >= q.d || e.second() >= q.m)
        throw std::invalid_argument("matrix atom index out of range");
      return;
    case MatrixConn::Not:
      check_qbf_matrix(e.lhs(), q);
      return;
    default:
      check_qbf_matrix(e.lhs(), q);
      check_qbf_matrix(e.rhs(), q);
      return;
  }
}

bool eval_set(const MatrixExpr& e, const std::vector<unsigned>& t, uint64_t X,
              uint64_t Y) {
  switch (e.kind()) {
    case MatrixConn::Bot:
      return false;
    case MatrixConn::Top:
      return true;
    case MatrixConn::Atom:
      switch (e.atom()) {
        case MatrixAtom::Elem:
          return (t[e.second()] >> e.first()) & 1;
        case MatrixAtom::InX:
          return (X >> t[e.first()]) & 1;
        default:  // InY
          return (Y >> t[e.first()]) & 1;
      }
    case MatrixConn::Not:
      return !eval_set(e.lhs(), t, X, Y);
    case MatrixConn::And:
      return eval_set(e.lhs(), t, X, Y) && eval_set(e.rhs(), t, X, Y);
    case MatrixConn::Or:
      return eval_set(e.lhs(), t, X, Y) || eval_set(e.rhs(), t, X, Y);
    case MatrixConn::Imp:
      return !eval_set(e.lhs(), t, X, Y) || eval_set(e.rhs(), t, X, Y);
    default:  // Iff
      return eval_set(e.lhs(), t, X, Y) == eval_set(e.rhs(), t, X, Y);
  }
}

bool eval_qbf(const MatrixExpr& e, const std::vector<uint32_t>& a,
              const std::vector<uint32_t>& b) {
  switch (e.kind()) {
    case MatrixConn::Bot:
      return false;
    case MatrixConn::Top:
      return true;
    case MatrixConn::Atom:
      return e.atom() == MatrixAtom::Univ ? (a[e.first()] >> e.second()) & 1
                                          : (b[e.first()] >> e.second()) & 1;
    case MatrixConn::Not:
      return !eval_qbf(e.lhs(), a, b);
    case MatrixConn::And:
      return eval_qbf(e.lhs(), a, b) && eval_qbf(e.rhs(), a, b);
    case MatrixConn::Or:
      return eval_qbf(e.lhs(), a, b) || eval_qbf(e.rhs(), a, b);
    case MatrixConn::Imp:
      return !eval_qbf(e.lhs(), a, b) || eval_qbf(e.rhs(), a, b);
    default:  // Iff
      return eval_qbf(e.lhs(), a, b) == eval_qbf(e.rhs(), a, b);
  }
}

// Quantifier-space guards shared by sentence_true / sigma2_witness.
unsigned subset_count(const ThirdOrderSentence& s) {
  if (s.n > 4) throw BudgetError("sentence subset space too large");
  unsigned T = 1u << s.n;
  uint64_t tuples = 1;
  for (unsigned a = 0; a < s.m; ++a) {
    tuples *= T;
    if (tuples > (1u << 20)) throw BudgetError("sentence tuple space too large");
  }
  if (s.pattern == SetPattern::Sigma3 && s.n > 3)
    throw BudgetError("sentence family space too large");
  return T;
}

// Runs fn(t-vector) over all tuples, stopping early when fn returns false.
template <class F>
bool all_tuples(unsigned T, unsigned m, const F& fn) {
  std::vector<unsigned> t(m, 0);
  while (true) {
    if (!fn(t)) return false;
    unsigned k = 0;
    while (k < m && ++t[k] == T) {
      t[k] = 0;
      ++k;
    }
    if (k == m) return true;
  }
}

}  // namespace

void validate(const ThirdOrderSentence& s) { check_set_matrix(s.matrix, s); }

void validate(const Qbf& q) {
  if (q.d == 0) throw std::invalid_argument("QBF needs at least one block pair");
  check_qbf_matrix(q.matrix, q);
}

bool sentence_true(const ThirdOrderSentence& s) {
  validate(s);
  unsigned T = subset_count(s);
  uint64_t families = uint64_t{1} << T;
  auto matrix_all = [&](uint64_t X, uint64_t Y) {
    return all_tuples(T, s.m, [&](const std::vector<unsigned>& t) {
      return eval_set(s.matrix, t, X, Y);
    });
  };
  auto matrix_some = [&](uint64_t X, uint64_t Y) {
    return !all_tuples(T, s.m, [&](const std::vector<unsigned>& t) {
      return !eval_set(s.matrix, t, X, Y);
    });
  };
  switch (s.pattern) {
    case SetPattern::Sigma2:
      for (uint64_t X = 0; X < families; ++X)
        if (matrix_all(X, 0)) return true;
      return false;
    case SetPattern::Pi2:
      for (uint64_t Y = 0; Y < families; ++Y)
        if (!matrix_some(0, Y)) return false;
      return true;
    default: {  // Sigma3
      for (uint64_t X = 0; X < families; ++X) {
        bool ok = true;
        for (uint64_t Y = 0; Y < families && ok; ++Y) ok = matrix_some(X, Y);
        if (ok) return true;
      }
      return false;
    }
  }
}

std::optional<uint64_t> sigma2_witness(const ThirdOrderSentence& s) {
  validate(s);
  if (s.pattern != SetPattern::Sigma2)
    throw std::invalid_argument("witness mask needs a Sigma2 sentence");
  unsigned T = subset_count(s);
  for (uint64_t X = 0; X < (uint64_t{1} << T); ++X) {
    bool ok = all_tuples(T, s.m, [&](const std::vector<unsigned>& t) {
      return eval_set(s.matrix, t, X, 0);
    });
    if (ok) return X;
  }
  return std::nullopt;
}

namespace {

bool qbf_rec(const Qbf& q, unsigned i, std::vector<uint32_t>& a,
             std::vector<uint32_t>& b) {
  if (i == q.d) return eval_qbf(q.matrix, a, b);
  uint32_t blocks = 1u << q.m;
  for (uint32_t av = 0; av < blocks; ++av) {
    a[i] = av;
    bool found = false;
    for (uint32_t bv = 0; bv < blocks && !found; ++bv) {
      b[i] = bv;
      found = qbf_rec(q, i + 1, a, b);
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

bool qbf_true(const Qbf& q) {
  validate(q);
  if (q.m > 16 || q.d * q.m > 16)
    throw BudgetError("QBF quantifier space too large");
  std::vector<uint32_t> a(q.d, 0), b(q.d, 0);
  return qbf_rec(q, 0, a, b);
}

// ---------------------------------------------------------------------------
// Instance assembly
// ---------------------------------------------------------------------------

namespace {

void collect_atoms(const Formula& f, std::set<unsigned>& vars,
                   std::set<unsigned>& pars,
                   std::unordered_set<uint64_t>& seen) {
  if (f.null() || !seen.insert(f.id()).second) return;
  switch (f.kind()) {
    case Conn::Var:
      vars.insert(f.index());
      return;
    case Conn::Par:
      pars.insert(f.index());
      return;
    case Conn::Neg:
    case Conn::Box:
    case Conn::Dia:
      collect_atoms(f.lhs(), vars, pars, seen);
      return;
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
    case Conn::Iff:
      collect_atoms(f.lhs(), vars, pars, seen);
      collect_atoms(f.rhs(), vars, pars, seen);
      return;
    default:
      return;
  }
}

ReductionInstance finish(std::string family, Formula xi,
                         std::optional<Formula> zeta, std::string recipe) {
  ReductionInstance out;
  out.family = std::move(family);
  out.xi = xi;
  out.zeta = zeta;
  if (zeta) out.rule = Rule{{xi}, {*zeta}};
  out.witness_recipe = std::move(recipe);
  out.xi_size = xi.size();
  std::set<unsigned> vs, ps;
  std::unordered_set<uint64_t> seen;
  collect_atoms(xi, vs, ps, seen);
  if (zeta) collect_atoms(*zeta, vs, ps, seen);
  out.params.assign(ps.begin(), ps.end());
  out.vars.assign(vs.begin(), vs.end());
  return out;
}

template <class F>
Formula translate(const MatrixExpr& e, const F& atom_fn) {
  switch (e.kind()) {
    case MatrixConn::Bot:
      return Formula::bot();
    case MatrixConn::Top:
      return Formula::top();
    case MatrixConn::Atom:
      return atom_fn(e.atom(), e.first(), e.second());
    case MatrixConn::Not:
      return Formula::neg(translate(e.lhs(), atom_fn));
    case MatrixConn::And:
      return Formula::conj(translate(e.lhs(), atom_fn), translate(e.rhs(), atom_fn));
    case MatrixConn::Or:
      return Formula::disj(translate(e.lhs(), atom_fn), translate(e.rhs(), atom_fn));
    case MatrixConn::Imp:
      return Formula::imp(translate(e.lhs(), atom_fn), translate(e.rhs(), atom_fn));
    default:  // Iff
      return Formula::iff(translate(e.lhs(), atom_fn), translate(e.rhs(), atom_fn));
  }
}

void require_pattern(const ThirdOrderSentence& s, SetPattern want,
                     const char* who) {
  validate(s);
  if (s.pattern != want)
    throw std::invalid_argument(std::string(who) + ": pattern mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// Arbitrary-parameter families
// ---------------------------------------------------------------------------

ReductionInstance gen_nexp(const ThirdOrderSentence& s) {
  require_pattern(s, SetPattern::Sigma2, "gen_nexp");
  unsigned n = s.n, m = s.m;
  Formula q = Formula::par(n + m * n);
  Formula r = Formula::par(n + m * n + 1);
  Formula x = Formula::var(0);
  auto pi = [](unsigned i) { return Formula::par(i); };
  auto pai = [&](unsigned a, unsigned i) { return Formula::par(n + a * n + i); };
  auto xa = [](unsigned a) { return Formula::var(1 + a); };

  // [.]((q -> f) & (r -> g)) for each polarity.
  auto couple = [&](Formula f, Formula g, bool pos) {
    return Formula::boxdot(Formula::conj(Formula::imp(q, Formula::lit(f, pos)),
                                         Formula::imp(r, Formula::lit(g, pos))));
  };

  std::vector<Formula> groups;
  for (unsigned a = 0; a < m; ++a) {
    std::vector<Formula> prem;
    for (unsigned i = 0; i < n; ++i)
      prem.push_back(
          Formula::disj(couple(pai(a, i), pi(i), true), couple(pai(a, i), pi(i), false)));
    groups.push_back(Formula::imp(
        Formula::conj_all(prem),
        Formula::disj(couple(xa(a), x, true), couple(xa(a), x, false))));
  }
  groups.push_back(translate(s.matrix, [&](MatrixAtom at, unsigned u, unsigned v) {
    if (at == MatrixAtom::Elem) return pai(v, u);
    if (at == MatrixAtom::InX) return xa(u);
    throw std::logic_error("unreachable atom");
  }));
  return finish(
      "nexp", Formula::conj_all(groups), std::nullopt,
      "true source with witness mask X: nexp_witness sends x to OR_{t in X} "
      "P^t over the p_i and each x_alpha to the matching disjunction over "
      "the p_{alpha,i}; the image of xi derives in K4");
}

Substitution nexp_witness(const ThirdOrderSentence& s, uint64_t X) {
  require_pattern(s, SetPattern::Sigma2, "nexp_witness");
  if (s.n > 6) throw BudgetError("witness mask cannot cover the subset space");
  unsigned T = 1u << s.n;
  std::vector<unsigned> base(s.n);
  for (unsigned i = 0; i < s.n; ++i) base[i] = i;
  Substitution sig;
  auto image = [&](const std::vector<unsigned>& atoms) {
    std::vector<Formula> parts;
    for (uint64_t t = 0; t < T; ++t)
      if ((X >> t) & 1) parts.push_back(assignment_formula(atoms, t));
    return Formula::disj_all(parts);
  };
  sig.set(0, image(base));
  for (unsigned a = 0; a < s.m; ++a) {
    std::vector<unsigned> atoms(s.n);
    for (unsigned i = 0; i < s.n; ++i) atoms[i] = s.n + a * s.n + i;
    sig.set(1 + a, image(atoms));
  }
  return sig;
}

Formula conexp_eta(unsigned n, std::span<const Formula> args) {
  if (args.size() != n) throw std::invalid_argument("eta arity mismatch");
  Formula q = Formula::par(n);
  std::vector<Formula> parts{Formula::neg(q), Formula::dia(q)};
  for (unsigned i = 0; i < n; ++i)
    parts.push_back(Formula::iff(Formula::par(i), args[i]));
  return Formula::dia(Formula::conj_all(parts));
}

namespace {

// gamma = AND_{alpha,i}([.](<.>q -> z) | [.](<.>q -> ~z)) over a z-variable
// numbering supplied by the caller.
template <class Z>
Formula probe_gamma(unsigned n, unsigned m, Formula q, const Z& z) {
  std::vector<Formula> parts;
  for (unsigned a = 0; a < m; ++a)
    for (unsigned i = 0; i < n; ++i) {
      Formula probe = Formula::diadot(q);
      parts.push_back(
          Formula::disj(Formula::boxdot(Formula::imp(probe, z(a, i))),
                        Formula::boxdot(Formula::imp(probe, Formula::neg(z(a, i))))));
    }
  return Formula::conj_all(parts);
}

}  // namespace

ReductionInstance gen_conexp(const ThirdOrderSentence& s) {
  require_pattern(s, SetPattern::Pi2, "gen_conexp");
  unsigned n = s.n, m = s.m;
  Formula q = Formula::par(n);
  auto z = [&](unsigned a, unsigned i) { return Formula::var(a * n + i); };
  Formula gamma = probe_gamma(n, m, q, z);
  Formula guarded = Formula::conj(q, gamma);
  Formula body = translate(s.matrix, [&](MatrixAtom at, unsigned u, unsigned v) {
    if (at == MatrixAtom::Elem) return z(v, u);
    if (at == MatrixAtom::InY) {
      std::vector<Formula> row;
      for (unsigned i = 0; i < n; ++i) row.push_back(z(u, i));
      return conexp_eta(n, row);
    }
    throw std::logic_error("unreachable atom");
  });
  Formula xi = Formula::conj(Formula::imp(Formula::dia(q), Formula::dia(guarded)),
                             Formula::imp(guarded, body));
  return finish(
      "conexp", xi, std::nullopt,
      "no closed-form substitution: a true source admits a valuation on "
      "staged universal frames that gives z_{alpha,i} at each q-cluster the "
      "value [i in t_alpha] for the tuple answering the Y encoded below it");
}

ReductionInstance gen_sig2exp(const ThirdOrderSentence& s) {
  require_pattern(s, SetPattern::Sigma3, "gen_sig2exp");
  unsigned n = s.n, m = s.m;
  Formula q = Formula::par(n);
  Formula r = Formula::par(n + 1);
  Formula x = Formula::var(0);
  auto pi = [](unsigned i) { return Formula::par(i); };
  auto xa = [](unsigned a) { return Formula::var(1 + a); };
  auto z = [&](unsigned a, unsigned i) { return Formula::var(1 + m + a * n + i); };

  Formula gamma = probe_gamma(n, m, q, z);
  Formula guarded = Formula::conj(q, gamma);
  auto couple = [&](Formula f, Formula g, bool pos) {
    return Formula::boxdot(Formula::conj(Formula::imp(q, Formula::lit(f, pos)),
                                         Formula::imp(r, Formula::lit(g, pos))));
  };
  Formula body = translate(s.matrix, [&](MatrixAtom at, unsigned u, unsigned v) {
    if (at == MatrixAtom::Elem) return z(v, u);
    if (at == MatrixAtom::InX) return xa(u);
    std::vector<Formula> row;
    for (unsigned i = 0; i < n; ++i) row.push_back(z(u, i));
    return conexp_eta(n, row);
  });
  std::vector<Formula> groups{
      Formula::imp(Formula::dia(q), Formula::dia(guarded)),
      Formula::imp(guarded, body)};
  for (unsigned a = 0; a < m; ++a) {
    std::vector<Formula> prem;
    for (unsigned i = 0; i < n; ++i)
      prem.push_back(
          Formula::disj(couple(z(a, i), pi(i), true), couple(z(a, i), pi(i), false)));
    groups.push_back(Formula::imp(
        Formula::conj_all(prem),
        Formula::disj(couple(xa(a), x, true), couple(xa(a), x, false))));
  }
  return finish(
      "sig2exp", Formula::conj_all(groups), std::nullopt,
      "no closed-form substitution: fix a witness family X, value x and "
      "x_alpha by X-membership of the encoded tuple and the z_{alpha,i} as "
      "in the conexp recipe on a staged universal frame");
}

// ---------------------------------------------------------------------------
// Bounded-depth QBF families
// ---------------------------------------------------------------------------

Formula qbf_delta(unsigned i, bool e, Formula q) {
  Formula head = Formula::lit(q, e);
  if (i == 0) return head;
  return Formula::conj(head, Formula::dia(qbf_delta(i - 1, !e, q)));
}

Formula qbf_theta(unsigned i, Formula q) {
  bool e = i % 2 == 1;
  return Formula::conj(qbf_delta(i, e, q), Formula::neg(qbf_delta(i + 1, e, q)));
}

ReductionInstance gen_qbf(const Qbf& src) {
  validate(src);
  unsigned d = src.d, m = src.m;
  Formula q = Formula::par(m);
  auto pj = [](unsigned j) { return Formula::par(j); };
  auto xj = [](unsigned j) { return Formula::var(j); };
  std::vector<Formula> theta;
  for (unsigned i = 0; i < d; ++i) theta.push_back(qbf_theta(i, q));

  auto ladder = [&](auto atom) {
    std::vector<Formula> parts;
    for (unsigned i = 0; i < d; ++i)
      for (unsigned j = 0; j < m; ++j)
        parts.push_back(Formula::disj(
            Formula::boxdot(Formula::imp(theta[i], atom(j))),
            Formula::boxdot(Formula::imp(theta[i], Formula::neg(atom(j))))));
    return Formula::conj_all(parts);
  };
  Formula gamma = ladder(pj);
  Formula body = translate(src.matrix, [&](MatrixAtom at, unsigned u, unsigned v) {
    Formula cell = at == MatrixAtom::Univ ? pj(v) : xj(v);
    return Formula::diadot(Formula::conj(theta[u], cell));
  });
  Formula xi = Formula::conj(
      Formula::imp(gamma, ladder(xj)),
      Formula::imp(Formula::conj(gamma, theta[d - 1]), body));
  return finish(
      "qbf", xi, std::nullopt,
      "no closed-form substitution: value x_j at each theta_i point by the "
      "Skolem function of the a-bits read from p_j along the chain above; "
      "such a valuation exists exactly for true sources");
}

ReductionInstance gen_psp_irr(const Qbf& src) {
  if (src.m != 1)
    throw std::invalid_argument("gen_psp_irr needs width-1 blocks");
  validate(src);
  unsigned d = src.d;
  Formula q = Formula::par(0);
  Formula x = Formula::var(0);
  std::vector<Formula> theta;
  for (unsigned i = 0; i <= 2 * d; ++i) theta.push_back(qbf_theta(i, q));

  // <>(theta_{2i+1} & <>theta_{2i+1}): a nontrivial chain inside layer i.
  auto twice = [&](unsigned i) {
    return Formula::dia(
        Formula::conj(theta[2 * i + 1], Formula::dia(theta[2 * i + 1])));
  };
  std::vector<Formula> gparts;
  for (unsigned i = 0; i < d; ++i)
    gparts.push_back(Formula::disj(
        Formula::boxdot(
            Formula::imp(theta[2 * i + 1], Formula::box(Formula::neg(theta[2 * i + 1])))),
        Formula::boxdot(Formula::imp(theta[2 * i + 2], twice(i)))));
  Formula gamma = Formula::conj_all(gparts);

  std::vector<Formula> xparts;
  for (unsigned i = 0; i < d; ++i)
    xparts.push_back(Formula::disj(
        Formula::boxdot(Formula::imp(theta[2 * i + 2], x)),
        Formula::boxdot(Formula::imp(theta[2 * i + 2], Formula::neg(x)))));
  Formula body = translate(src.matrix, [&](MatrixAtom at, unsigned u, unsigned) {
    if (at == MatrixAtom::Univ) return twice(u);
    return Formula::diadot(Formula::conj(theta[2 * u + 2], x));
  });
  Formula xi = Formula::conj(
      Formula::imp(gamma, Formula::conj_all(xparts)),
      Formula::imp(Formula::conj(gamma, qbf_theta(2 * d, q)), body));
  return finish(
      "psp1par", xi, std::nullopt,
      "no closed-form substitution: value x at each theta_{2i+2} point by "
      "the Skolem function of the a-bits read from nontrivial q-chains in "
      "the layers above; such a valuation exists exactly for true sources");
}

// ---------------------------------------------------------------------------
// Beta/eta tower and the O(1)-parameter families
// ---------------------------------------------------------------------------

uint64_t beta_count(unsigned level) {
  uint64_t c = 2;
  for (unsigned l = 2; l <= level; l += 2) {
    if (c > 2000000) throw BudgetError("beta family too large");
    c = c * (c + 1) / 2;
  }
  return c;
}

BetaFamily gen_beta_family(unsigned level) {
  if (beta_count(level) > 64) throw BudgetError("beta family too large");
  Formula p = Formula::par(0);
  Formula guard = Formula::disj(p, Formula::box(Formula::neg(p)));
  std::vector<Formula> beta, eta;
  for (unsigned i = 0; i < 2; ++i) {
    Formula b = Formula::boxdot(Formula::lit(p, i == 1));
    beta.push_back(b);
    eta.push_back(b);
  }
  std::vector<Formula> below_eta;  // even level two below, set at odd levels
  for (unsigned l = 0; l < level; ++l) {
    std::vector<Formula> nb, ne;
    if (l % 2 == 0) {
      below_eta = eta;
      for (size_t i = 0; i < beta.size(); ++i) {
        Formula e1 = Formula::boxdot(Formula::imp(guard, eta[i]));
        ne.push_back(e1);
        nb.push_back(Formula::conj(Formula::conj(e1, Formula::neg(p)),
                                   Formula::diadot(beta[i])));
      }
    } else {
      for (unsigned j = 0; j < below_eta.size(); ++j)
        for (unsigned k = j; k < below_eta.size(); ++k) {
          Formula ejk = Formula::disj(below_eta[j], below_eta[k]);
          Formula e2 = Formula::conj(
              Formula::boxdot(Formula::imp(
                  p, Formula::disj(ejk, Formula::conj(Formula::dia(beta[j]),
                                                      Formula::dia(beta[k]))))),
              Formula::boxdot(Formula::imp(
                  Formula::neg(p), Formula::boxdot(Formula::imp(guard, ejk)))));
          ne.push_back(e2);
          nb.push_back(Formula::conj(
              Formula::conj(Formula::conj(e2, p), Formula::dia(beta[j])),
              Formula::dia(beta[k])));
        }
    }
    beta = std::move(nb);
    eta = std::move(ne);
  }
  return BetaFamily{level, std::move(beta), std::move(eta)};
}

namespace {

struct SkeletonParts {
  std::vector<Formula> b;       // encoders b_i, i < n
  std::vector<Formula> thetaA;  // one per alpha
  Formula theta;
};

// (a) AND_i([](th -> <>b_i) | [](th -> ~<>b_i)) -> [](th->x) | [](th->~x)
// (b) AND_a(<>th_a & AND_i(...)) -> matrix[Elem := <>(th_a & <>b_i),
//                                          InX  := <>(th_a & x)]
Formula skeleton(const SkeletonParts& sp, Formula x, const MatrixExpr& matrix) {
  auto split = [&](const Formula& th, const Formula& f) {
    return Formula::disj(Formula::box(Formula::imp(th, f)),
                         Formula::box(Formula::imp(th, Formula::neg(f))));
  };
  std::vector<Formula> prem;
  for (const Formula& bi : sp.b) prem.push_back(split(sp.theta, Formula::dia(bi)));
  Formula part_a =
      Formula::imp(Formula::conj_all(prem), split(sp.theta, x));

  std::vector<Formula> prem2;
  for (const Formula& ta : sp.thetaA) {
    std::vector<Formula> inner;
    for (const Formula& bi : sp.b) inner.push_back(split(ta, Formula::dia(bi)));
    prem2.push_back(Formula::conj(Formula::dia(ta), Formula::conj_all(inner)));
  }
  Formula body = translate(matrix, [&](MatrixAtom at, unsigned u, unsigned v) {
    if (at == MatrixAtom::Elem)
      return Formula::dia(Formula::conj(sp.thetaA[v], Formula::dia(sp.b[u])));
    if (at == MatrixAtom::InX)
      return Formula::dia(Formula::conj(sp.thetaA[u], x));
    throw std::logic_error("unreachable atom");
  });
  return Formula::conj(part_a, Formula::imp(Formula::conj_all(prem2), body));
}

SkeletonParts one_par_parts(const ThirdOrderSentence& s, bool relativized,
                            std::optional<unsigned> level) {
  unsigned D;
  if (level) {
    D = *level;
    if (D % 2 != 0) throw std::invalid_argument("tower level must be even");
    if (beta_count(D) < s.n + s.m + 1)
      throw std::invalid_argument("tower level too small for the source");
  } else {
    D = 0;
    while (beta_count(D) < s.n + s.m + 2) D += 2;
  }
  BetaFamily fam = gen_beta_family(D);
  Formula p = Formula::par(0);
  SkeletonParts sp;
  sp.b.assign(fam.beta.begin(), fam.beta.begin() + s.n);
  Formula delta = fam.beta[s.n + s.m];
  sp.theta = Formula::conj(Formula::conj(p, Formula::dia(delta)),
                           Formula::neg(delta));
  for (unsigned a = 0; a < s.m; ++a) {
    std::vector<Formula> parts{p, Formula::dia(delta),
                               Formula::dia(fam.beta[s.n + a])};
    for (unsigned o = 0; o < s.m; ++o)
      if (o != a)
        parts.push_back(Formula::neg(Formula::dia(fam.beta[s.n + o])));
    sp.thetaA.push_back(Formula::conj_all(parts));
  }
  if (relativized) {
    Formula q = Formula::par(1);
    auto hat = [&](const Formula& f) {
      return Formula::conj(q, relativize(f, q).rhs());
    };
    for (Formula& f : sp.b) f = hat(f);
    sp.theta = hat(sp.theta);
    for (Formula& f : sp.thetaA) f = hat(f);
  }
  return sp;
}

Formula mask_image(const std::vector<Formula>& b, unsigned n, uint64_t X) {
  std::vector<Formula> parts;
  for (uint64_t t = 0; t < (uint64_t{1} << n); ++t) {
    if (!((X >> t) & 1)) continue;
    std::vector<Formula> lits;
    for (unsigned i = 0; i < n; ++i)
      lits.push_back(Formula::lit(Formula::dia(b[i]), (t >> i) & 1));
    parts.push_back(Formula::conj_all(lits));
  }
  return Formula::disj_all(parts);
}

}  // namespace

ReductionInstance gen_nexp_1par(const ThirdOrderSentence& s, bool relativized,
                                std::optional<unsigned> level) {
  require_pattern(s, SetPattern::Sigma2, "gen_nexp_1par");
  SkeletonParts sp = one_par_parts(s, relativized, level);
  Formula xi = skeleton(sp, Formula::var(0), s.matrix);
  return finish(
      relativized ? "nexp2par" : "nexp1par", xi, std::nullopt,
      "true source with witness mask X: nexp_1par_witness sends x to "
      "OR_{t in X} AND_i (<>b_i)^[i in t] over the instantiated encoders; "
      "the image of xi derives in K4");
}

Substitution nexp_1par_witness(const ThirdOrderSentence& s, bool relativized,
                               uint64_t X, std::optional<unsigned> level) {
  require_pattern(s, SetPattern::Sigma2, "nexp_1par_witness");
  if (s.n > 6) throw BudgetError("witness mask cannot cover the subset space");
  SkeletonParts sp = one_par_parts(s, relativized, level);
  Substitution sig;
  sig.set(0, mask_image(sp.b, s.n, X));
  return sig;
}

namespace {

SkeletonParts zero_par_parts(const ThirdOrderSentence& s) {
  unsigned total = s.n + s.m + 4;
  std::vector<Formula> beta;
  for (unsigned i = 0; i < total; ++i) {
    std::vector<Formula> lits{Formula::var(i)};
    for (unsigned o = 0; o < total; ++o)
      if (o != i) lits.push_back(Formula::neg(Formula::var(o)));
    beta.push_back(Formula::boxdot(Formula::conj_all(lits)));
  }
  SkeletonParts sp;
  sp.b.assign(beta.begin(), beta.begin() + s.n);
  auto delta = [&](unsigned p) { return beta[s.n + s.m + p]; };
  sp.theta = Formula::conj_all(
      {Formula::dia(delta(1)), Formula::dia(delta(2)), Formula::dia(delta(3)),
       Formula::neg(Formula::dia(delta(0)))});
  for (unsigned a = 0; a < s.m; ++a) {
    std::vector<Formula> parts{sp.theta, Formula::dia(beta[s.n + a])};
    for (unsigned o = 0; o < s.m; ++o)
      if (o != a) parts.push_back(Formula::neg(Formula::dia(beta[s.n + o])));
    sp.thetaA.push_back(Formula::conj_all(parts));
  }
  return sp;
}

}  // namespace

ReductionInstance gen_nexp_0par_adm(const ThirdOrderSentence& s) {
  require_pattern(s, SetPattern::Sigma2, "gen_nexp_0par_adm");
  unsigned total = s.n + s.m + 4;
  SkeletonParts sp = zero_par_parts(s);
  Formula xi = skeleton(sp, Formula::var(total), s.matrix);
  std::vector<Formula> zparts;
  for (unsigned i = 0; i < total; ++i) {
    std::vector<Formula> lits{Formula::var(i)};
    for (unsigned o = 0; o < total; ++o)
      if (o != i) lits.push_back(Formula::neg(Formula::var(o)));
    zparts.push_back(
        Formula::box(Formula::neg(Formula::boxdot(Formula::conj_all(lits)))));
  }
  Formula zeta = Formula::disj_all(zparts);
  return finish(
      "nexp0adm", xi, zeta,
      "true source with witness mask X: nexp_0par_adm_witness fixes every "
      "z_i and sends x to OR_{t in X} AND_i (<>beta_i)^[i in t]; the image "
      "of xi derives in K4 while sigma(zeta) = zeta stays underivable");
}

Substitution nexp_0par_adm_witness(const ThirdOrderSentence& s, uint64_t X) {
  require_pattern(s, SetPattern::Sigma2, "nexp_0par_adm_witness");
  if (s.n > 6) throw BudgetError("witness mask cannot cover the subset space");
  SkeletonParts sp = zero_par_parts(s);
  Substitution sig;
  sig.set(s.n + s.m + 4, mask_image(sp.b, s.n, X));
  return sig;
}

}  // namespace tml
