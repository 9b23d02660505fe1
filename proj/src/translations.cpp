#include "tml/translations.hpp"

#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "tml/frame.hpp"

namespace tml {

namespace {

bool is_ipc(const Formula& f) {
  switch (f.kind()) {
    case Conn::Bot:
    case Conn::Var:
    case Conn::Par:
      return true;
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
      return is_ipc(f.lhs()) && is_ipc(f.rhs());
    default:
      return false;
  }
}

bool contains_atom(const Formula& f, Conn kind, unsigned index) {
  if (f.kind() == kind && f.index() == index) return true;
  switch (f.kind()) {
    case Conn::Neg:
    case Conn::Box:
    case Conn::Dia:
      return contains_atom(f.lhs(), kind, index);
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
    case Conn::Iff:
      return contains_atom(f.lhs(), kind, index) ||
             contains_atom(f.rhs(), kind, index);
    default:
      return false;
  }
}

unsigned max_var_index(const Formula& f, bool& any) {
  switch (f.kind()) {
    case Conn::Var:
      any = true;
      return f.index();
    case Conn::Neg:
    case Conn::Box:
    case Conn::Dia:
      return max_var_index(f.lhs(), any);
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
    case Conn::Iff: {
      bool al = false, ar = false;
      unsigned l = max_var_index(f.lhs(), al);
      unsigned r = max_var_index(f.rhs(), ar);
      any = al || ar;
      return al && ar ? std::max(l, r) : al ? l : r;
    }
    default:
      return 0;
  }
}

}  // namespace

IpcFormula::IpcFormula(const Formula& f) : raw_(f) {
  if (f.null() || !is_ipc(f))
    throw std::invalid_argument(
        "intuitionistic formulas use ->, /\\, \\/, _|_ and atoms only");
}

namespace {

Formula gmt_raw(const Formula& g) {
  switch (g.kind()) {
    case Conn::Bot:
      return g;
    case Conn::Var:
    case Conn::Par:
      return Formula::box(g);
    case Conn::And:
      return Formula::conj(gmt_raw(g.lhs()), gmt_raw(g.rhs()));
    case Conn::Or:
      return Formula::disj(gmt_raw(g.lhs()), gmt_raw(g.rhs()));
    default:  // Imp
      return Formula::box(Formula::imp(gmt_raw(g.lhs()), gmt_raw(g.rhs())));
  }
}

}  // namespace

Formula gmt(const IpcFormula& f) { return gmt_raw(f.raw()); }

Formula boxdot_translate(const Formula& f) {
  switch (f.kind()) {
    case Conn::Bot:
    case Conn::Top:
    case Conn::Var:
    case Conn::Par:
      return f;
    case Conn::Neg:
      return Formula::neg(boxdot_translate(f.lhs()));
    case Conn::And:
      return Formula::conj(boxdot_translate(f.lhs()), boxdot_translate(f.rhs()));
    case Conn::Or:
      return Formula::disj(boxdot_translate(f.lhs()), boxdot_translate(f.rhs()));
    case Conn::Imp:
      return Formula::imp(boxdot_translate(f.lhs()), boxdot_translate(f.rhs()));
    case Conn::Iff:
      return Formula::iff(boxdot_translate(f.lhs()), boxdot_translate(f.rhs()));
    case Conn::Box:
      return Formula::boxdot(boxdot_translate(f.lhs()));
    default:  // Dia
      return Formula::diadot(boxdot_translate(f.lhs()));
  }
}

EffBoxdot eff_boxdot(const Formula& f) {
  bool has_var = false;
  unsigned zbase = max_var_index(f, has_var) + (has_var ? 1 : 0);

  // z variables in order of first appearance, postorder left to right, so
  // a modal subformula is introduced before any modal formula above it.
  std::unordered_map<uint64_t, Formula> zvar;  // modal subformula id -> z
  std::vector<Formula> order;                  // the modal subformulas
  std::function<void(const Formula&)> collect = [&](const Formula& g) {
    switch (g.kind()) {
      case Conn::Neg:
        collect(g.lhs());
        break;
      case Conn::And:
      case Conn::Or:
      case Conn::Imp:
      case Conn::Iff:
        collect(g.lhs());
        collect(g.rhs());
        break;
      case Conn::Box:
      case Conn::Dia:
        collect(g.lhs());
        if (zvar.try_emplace(g.id(), Formula::var(zbase + (unsigned)order.size()))
                .second)
          order.push_back(g);
        break;
      default:
        break;
    }
  };
  collect(f);

  // g with topmost modal subformulas replaced by their z variables
  std::function<Formula(const Formula&)> prime = [&](const Formula& g) -> Formula {
    switch (g.kind()) {
      case Conn::Neg:
        return Formula::neg(prime(g.lhs()));
      case Conn::And:
        return Formula::conj(prime(g.lhs()), prime(g.rhs()));
      case Conn::Or:
        return Formula::disj(prime(g.lhs()), prime(g.rhs()));
      case Conn::Imp:
        return Formula::imp(prime(g.lhs()), prime(g.rhs()));
      case Conn::Iff:
        return Formula::iff(prime(g.lhs()), prime(g.rhs()));
      case Conn::Box:
      case Conn::Dia:
        return zvar.at(g.id());
      default:
        return g;
    }
  };

  EffBoxdot out;
  std::vector<Formula> defs;
  for (const Formula& m : order) {
    Formula z = zvar.at(m.id());
    Formula body = prime(m.lhs());
    Formula rhs = m.kind() == Conn::Box ? Formula::boxdot(body)
                                        : Formula::diadot(body);
    defs.push_back(Formula::boxdot(Formula::iff(z, rhs)));
    out.sigma.set(z.index(), boxdot_translate(m));
    out.table.emplace_back(z.index(), m);
  }
  out.formula = defs.empty()
                    ? prime(f)
                    : Formula::imp(Formula::conj_all(std::span<const Formula>(defs)),
                                   prime(f));
  return out;
}

Formula relativize(const Formula& f, const Formula& r) {
  if (r.null() || r.kind() != Conn::Par)
    throw std::invalid_argument("relativization atom must be a parameter");
  if (contains_atom(f, Conn::Par, r.index()))
    throw std::invalid_argument("relativization atom occurs in the formula");
  std::function<Formula(const Formula&)> rel = [&](const Formula& g) -> Formula {
    switch (g.kind()) {
      case Conn::Bot:
      case Conn::Top:
      case Conn::Var:
      case Conn::Par:
        return g;
      case Conn::Neg:
        return Formula::neg(rel(g.lhs()));
      case Conn::And:
        return Formula::conj(rel(g.lhs()), rel(g.rhs()));
      case Conn::Or:
        return Formula::disj(rel(g.lhs()), rel(g.rhs()));
      case Conn::Imp:
        return Formula::imp(rel(g.lhs()), rel(g.rhs()));
      case Conn::Iff:
        return Formula::iff(rel(g.lhs()), rel(g.rhs()));
      case Conn::Box:
        return Formula::box(Formula::imp(r, rel(g.lhs())));
      default:  // Dia
        return Formula::dia(Formula::conj(r, rel(g.lhs())));
    }
  };
  return Formula::imp(r, rel(f));
}

void validate_ipc(const IpcModel& M) {
  if (M.le.size() != M.n)
    throw FrameError("order matrix size does not match the point count");
  for (unsigned i = 0; i < M.n; ++i)
    if (M.le[i].size() != M.n)
      throw FrameError("order matrix row size does not match the point count");
  for (unsigned i = 0; i < M.n; ++i)
    if (!M.le[i][i]) throw FrameError("intuitionistic order must be reflexive");
  for (unsigned i = 0; i < M.n; ++i)
    for (unsigned j = 0; j < M.n; ++j) {
      if (i != j && M.le[i][j] && M.le[j][i])
        throw FrameError("intuitionistic order must be antisymmetric");
      if (!M.le[i][j]) continue;
      for (unsigned k = 0; k < M.n; ++k)
        if (M.le[j][k] && !M.le[i][k])
          throw FrameError("intuitionistic order must be transitive");
    }
  for (const auto& [v, row] : M.val) {
    if (row.size() != M.n)
      throw FrameError("valuation row size does not match the point count");
    for (unsigned i = 0; i < M.n; ++i)
      for (unsigned j = 0; j < M.n; ++j)
        if (M.le[i][j] && row[i] && !row[j])
          throw FrameError("valuation must be upward closed");
  }
}

namespace {

bool ipc_check_raw(const IpcModel& M, unsigned w, const Formula& g) {
  switch (g.kind()) {
    case Conn::Bot:
      return false;
    case Conn::Var:
    case Conn::Par: {
      auto it = M.val.find(g.index());
      return it != M.val.end() && it->second[w];
    }
    case Conn::And:
      return ipc_check_raw(M, w, g.lhs()) && ipc_check_raw(M, w, g.rhs());
    case Conn::Or:
      return ipc_check_raw(M, w, g.lhs()) || ipc_check_raw(M, w, g.rhs());
    default:  // Imp
      for (unsigned v = 0; v < M.n; ++v)
        if (M.le[w][v] && ipc_check_raw(M, v, g.lhs()) &&
            !ipc_check_raw(M, v, g.rhs()))
          return false;
      return true;
  }
}

}  // namespace

bool ipc_check(const IpcModel& M, unsigned w, const IpcFormula& f) {
  if (w >= M.n) throw FrameError("point out of range");
  return ipc_check_raw(M, w, f.raw());
}

}  // namespace tml
