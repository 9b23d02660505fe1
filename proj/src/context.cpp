#include "tml/context.hpp"

#include <algorithm>
#include <set>

namespace tml {

Formula Substitution::operator()(const Formula& f) const {
  auto it = memo_.find(f.id());
  if (it != memo_.end()) return it->second;
  Formula out;
  switch (f.kind()) {
    case Conn::Bot:
    case Conn::Top:
    case Conn::Par:
      out = f;
      break;
    case Conn::Var: {
      auto v = map_.find(f.index());
      out = v == map_.end() ? f : v->second;
      break;
    }
    case Conn::Neg:
      out = Formula::neg((*this)(f.lhs()));
      break;
    case Conn::Box:
      out = Formula::box((*this)(f.lhs()));
      break;
    case Conn::Dia:
      out = Formula::dia((*this)(f.lhs()));
      break;
    case Conn::And:
      out = Formula::conj((*this)(f.lhs()), (*this)(f.rhs()));
      break;
    case Conn::Or:
      out = Formula::disj((*this)(f.lhs()), (*this)(f.rhs()));
      break;
    case Conn::Imp:
      out = Formula::imp((*this)(f.lhs()), (*this)(f.rhs()));
      break;
    case Conn::Iff:
      out = Formula::iff((*this)(f.lhs()), (*this)(f.rhs()));
      break;
  }
  memo_.emplace(f.id(), out);
  return out;
}

namespace {

void visit(const Formula& f, std::set<Formula>& seen, std::vector<Formula>& order) {
  if (seen.count(f)) return;
  seen.insert(f);
  order.push_back(f);
  switch (f.kind()) {
    case Conn::Neg:
    case Conn::Box:
      visit(f.lhs(), seen, order);
      break;
    case Conn::Dia:
      visit(f.lhs(), seen, order);
      // box normalization: <>a contributes ~[]~a
      visit(Formula::neg(Formula::box(Formula::neg(f.lhs()))), seen, order);
      break;
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
    case Conn::Iff:
      visit(f.lhs(), seen, order);
      visit(f.rhs(), seen, order);
      break;
    default:
      break;
  }
}

}  // namespace

Context closure(std::span<const Formula> seeds) {
  Context ctx;
  std::set<Formula> seen;
  for (const Formula& f : seeds) visit(f, seen, ctx.sigma_);
  std::set<unsigned> vs, ps;
  for (const Formula& f : ctx.sigma_) {
    if (f.kind() == Conn::Var) vs.insert(f.index());
    if (f.kind() == Conn::Par) ps.insert(f.index());
    if (f.kind() == Conn::Box && !ctx.box_pos_.count(f.lhs().id())) {
      ctx.box_pos_.emplace(f.lhs().id(), static_cast<unsigned>(ctx.boxed_.size()));
      ctx.boxed_.push_back(f.lhs());
    }
  }
  if (ctx.boxed_.size() > Context::kMaxBoxed)
    throw BudgetError("too many boxed subformulas (limit " +
                      std::to_string(Context::kMaxBoxed) + ")");
  if (vs.size() + ps.size() > 62)
    throw BudgetError("too many atoms for assignment enumeration");
  ctx.vars_.assign(vs.begin(), vs.end());
  ctx.pars_.assign(ps.begin(), ps.end());
  for (size_t i = 0; i < ctx.vars_.size(); ++i) ctx.var_pos_[ctx.vars_[i]] = i;
  for (size_t i = 0; i < ctx.pars_.size(); ++i) ctx.par_pos_[ctx.pars_[i]] = i;
  return ctx;
}

Context closure(std::initializer_list<Formula> seeds) {
  return closure(std::span<const Formula>(seeds.begin(), seeds.size()));
}

unsigned Context::var_pos(unsigned index) const { return var_pos_.at(index); }
unsigned Context::par_pos(unsigned index) const { return par_pos_.at(index); }

bool Context::eval(const Formula& f, uint64_t var_bits, uint64_t par_bits,
                   uint64_t X) const {
  switch (f.kind()) {
    case Conn::Bot:
      return false;
    case Conn::Top:
      return true;
    case Conn::Var:
      return (var_bits >> var_pos(f.index())) & 1;
    case Conn::Par:
      return (par_bits >> par_pos(f.index())) & 1;
    case Conn::Neg:
      return !eval(f.lhs(), var_bits, par_bits, X);
    case Conn::And:
      return eval(f.lhs(), var_bits, par_bits, X) && eval(f.rhs(), var_bits, par_bits, X);
    case Conn::Or:
      return eval(f.lhs(), var_bits, par_bits, X) || eval(f.rhs(), var_bits, par_bits, X);
    case Conn::Imp:
      return !eval(f.lhs(), var_bits, par_bits, X) || eval(f.rhs(), var_bits, par_bits, X);
    case Conn::Iff:
      return eval(f.lhs(), var_bits, par_bits, X) == eval(f.rhs(), var_bits, par_bits, X);
    case Conn::Box:
      return (X >> boxed_pos(f.lhs())) & 1;
    case Conn::Dia:
      return !((X >> boxed_pos(Formula::neg(f.lhs()))) & 1);
  }
  return false;
}

}  // namespace tml
