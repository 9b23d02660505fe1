#include "tml/admissibility.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "tml/derivability.hpp"
#include "tml/oracle.hpp"
#include "tml/universal.hpp"

namespace tml {

namespace {

constexpr unsigned kModelPointBudget = 4096;

// Copy of M with a (false) row for every atom of the context, so evaluation
// never trips over missing valuations.
Model padded(const Model& M, const Context& ctx) {
  Model out = M;
  std::vector<bool> zero(out.frame().size(), false);
  for (unsigned p : ctx.pars())
    if (!out.has_par(p)) out.set_par(p, zero);
  for (unsigned v : ctx.vars())
    if (!out.has_var(v)) out.set_var(v, zero);
  return out;
}

// Per-point semantic tables of a padded model against a closure context:
// assignment bits over ctx.pars()/ctx.vars(), kernel truth masks, and the
// full closure truth rows.
struct SigmaTables {
  unsigned n = 0;
  std::vector<uint64_t> ebits, vbits;         // assignment bits per point
  std::vector<uint64_t> kern, boxed, boxdot;  // kernel masks per point
  std::vector<std::vector<bool>> sigt;        // [closure index][point]

  SigmaTables(const Model& PM, const Context& ctx) : n(PM.frame().size()) {
    ebits.assign(n, 0);
    vbits.assign(n, 0);
    kern.assign(n, 0);
    boxed.assign(n, 0);
    boxdot.assign(n, 0);
    Evaluator ev(PM);
    const auto& ps = ctx.pars();
    for (unsigned i = 0; i < ps.size() && i < 64; ++i) {
      const auto& row = ev.values(Formula::par(ps[i]));
      for (unsigned u = 0; u < n; ++u)
        if (row[u]) ebits[u] |= uint64_t{1} << i;
    }
    const auto& vs = ctx.vars();
    for (unsigned i = 0; i < vs.size() && i < 64; ++i) {
      const auto& row = ev.values(Formula::var(vs[i]));
      for (unsigned u = 0; u < n; ++u)
        if (row[u]) vbits[u] |= uint64_t{1} << i;
    }
    const auto& B = ctx.boxed();
    for (unsigned b = 0; b < B.size(); ++b) {
      const auto& kr = ev.values(B[b]);
      const auto& br = ev.values(Formula::box(B[b]));
      for (unsigned u = 0; u < n; ++u) {
        if (kr[u]) kern[u] |= uint64_t{1} << b;
        if (br[u]) boxed[u] |= uint64_t{1} << b;
      }
    }
    for (unsigned u = 0; u < n; ++u) boxdot[u] = kern[u] & boxed[u];
    sigt.resize(ctx.sigma().size());
    for (size_t s = 0; s < ctx.sigma().size(); ++s)
      sigt[s] = ev.values(ctx.sigma()[s]);
  }
};

// Does the model's truth at point u match the symbolic assignment built from
// u's atom bits and the boxed-kernel guess X, on every closure formula?
bool sigma_agrees(const SigmaTables& st, const Context& ctx, unsigned u,
                  uint64_t X) {
  for (size_t s = 0; s < ctx.sigma().size(); ++s)
    if (ctx.eval(ctx.sigma()[s], st.vbits[u], st.ebits[u], X) != st.sigt[s][u])
      return false;
  return true;
}

uint64_t full_mask(size_t bits) {
  return bits >= 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1;
}

std::vector<uint64_t> mask_bits(uint64_t m) {
  std::vector<uint64_t> out;
  for (uint64_t b = 0; m; ++b, m >>= 1)
    if (m & 1) out.push_back(b);
  return out;
}

// Lexicographically least choice of one mask per slot whose union is exactly
// dmask; every masks[i] must be nonempty and sorted ascending, with all
// entries subsets of dmask.
std::optional<std::vector<size_t>> cover_choice(
    const std::vector<std::vector<uint64_t>>& masks, uint64_t dmask) {
  size_t k = masks.size();
  std::vector<uint64_t> suffix(k + 1, 0);
  for (size_t i = k; i-- > 0;) {
    uint64_t all = 0;
    for (uint64_t m : masks[i]) all |= m;
    suffix[i] = suffix[i + 1] | all;
  }
  std::vector<size_t> choice(k, 0);
  std::set<std::pair<size_t, uint64_t>> dead;
  std::function<bool(size_t, uint64_t)> go = [&](size_t i,
                                                 uint64_t acc) -> bool {
    if ((acc | suffix[i]) != dmask) return false;
    if (i == k) return acc == dmask;
    if (dead.count({i, acc})) return false;
    for (size_t j = 0; j < masks[i].size(); ++j) {
      choice[i] = j;
      if (go(i + 1, acc | masks[i][j])) return true;
    }
    if (dead.size() > (1u << 18))
      throw BudgetError("tight-predecessor cover search exceeded its budget");
    dead.insert({i, acc});
    return false;
  };
  if (!go(0, 0)) return std::nullopt;
  return choice;
}

// Core of tpp_exists over prebuilt tables; arguments already validated.
bool tpp_core(const SigmaTables& st, const Context& ctx, bool refl,
              const std::vector<uint64_t>& evals, uint64_t bplus, TppMode mode,
              TppWitness* out) {
  unsigned n = st.n;
  if (!refl) {
    uint64_t e = evals[0];
    for (unsigned u = 0; u < n; ++u) {
      if (st.ebits[u] != e || st.boxed[u] != bplus) continue;
      if (mode == TppMode::FullSigma && !sigma_agrees(st, ctx, u, bplus))
        continue;
      if (out) {
        out->refl = false;
        out->evals = evals;
        out->bplus = bplus;
        out->dmask = 0;
        out->points = {u};
        out->kills = {0};
      }
      return true;
    }
    return false;
  }
  for (uint64_t D = 0;; D = (D - bplus) & bplus) {
    uint64_t inner = bplus & ~D;
    std::vector<std::vector<uint64_t>> masks(evals.size());
    std::vector<std::map<uint64_t, unsigned>> pts(evals.size());
    bool feasible = true;
    for (size_t i = 0; i < evals.size() && feasible; ++i) {
      for (unsigned u = 0; u < n; ++u) {
        if (st.ebits[u] != evals[i]) continue;
        if (st.boxed[u] != inner) continue;
        if ((st.kern[u] & inner) != inner) continue;
        if (mode == TppMode::FullSigma && !sigma_agrees(st, ctx, u, inner))
          continue;
        uint64_t cov = D & ~st.kern[u];
        if (pts[i].emplace(cov, u).second) masks[i].push_back(cov);
      }
      if (masks[i].empty())
        feasible = false;
      else
        std::sort(masks[i].begin(), masks[i].end());
    }
    if (feasible) {
      auto choice = cover_choice(masks, D);
      if (choice) {
        if (out) {
          out->refl = true;
          out->evals = evals;
          out->bplus = bplus;
          out->dmask = D;
          out->points.clear();
          out->kills.clear();
          for (size_t i = 0; i < evals.size(); ++i) {
            uint64_t m = masks[i][(*choice)[i]];
            out->points.push_back(pts[i].at(m));
            out->kills.push_back(m);
          }
        }
        return true;
      }
    }
    if (D == bplus) break;
  }
  return false;
}

// Shared body of pseudoextensible working over prebuilt tables.
bool pseudo_core(const SigmaTables& st, const Context& ctx,
                 const ExtensionCondition& ec, TppMode mode,
                 std::vector<TppWitness>* out) {
  size_t k = ctx.pars().size();
  if (k > 4) throw BudgetError("pseudoextensible: more than 4 parameters");
  unsigned nt = 1u << k;
  unsigned N = st.n;
  uint64_t bfull = full_mask(ctx.boxed().size());
  unsigned ecap = ec.refl ? std::min(ec.size, nt) : 1;

  // Distinct point boxdot masks, for the unbounded-branching sweep.
  std::vector<uint64_t> dotmasks;
  if (ec.branching == kUnbounded) {
    if (ctx.boxed().size() > 16)
      throw BudgetError("pseudoextensible: kernel sweep budget exceeded");
    std::set<uint64_t> s(st.boxdot.begin(), st.boxdot.end());
    dotmasks.assign(s.begin(), s.end());
  }

  for (uint64_t emask = 1; emask < (uint64_t{1} << nt); ++emask) {
    if (std::popcount(emask) > int(ecap)) continue;
    std::vector<uint64_t> evals = mask_bits(emask);
    auto check = [&](uint64_t bplus, std::vector<unsigned> xset,
                     bool swept) -> bool {
      TppWitness w;
      if (!tpp_core(st, ctx, ec.refl, evals, bplus, mode, out ? &w : nullptr))
        return false;
      if (out) {
        w.xset = std::move(xset);
        w.swept = swept;
        out->push_back(std::move(w));
      }
      return true;
    };
    if (ec.branching == 0) {
      if (!check(bfull, {}, false)) return false;
    } else if (ec.branching != kUnbounded) {
      std::set<uint64_t> seen;
      if (ec.branching == 1) {
        for (unsigned u = 0; u < N; ++u) {
          if (!seen.insert(st.boxdot[u]).second) continue;
          if (!check(st.boxdot[u], {u}, false)) return false;
        }
      } else {
        if (N > 16)
          throw BudgetError("pseudoextensible: sample enumeration budget");
        for (uint64_t xm = 1; xm < (uint64_t{1} << N); ++xm) {
          if (std::popcount(xm) > int(ec.branching)) continue;
          uint64_t bplus = bfull;
          std::vector<unsigned> xs;
          for (unsigned u = 0; u < N; ++u)
            if (xm >> u & 1) {
              bplus &= st.boxdot[u];
              xs.push_back(u);
            }
          if (!seen.insert(bplus).second) continue;
          if (!check(bplus, std::move(xs), false)) return false;
        }
      }
    } else {
      for (uint64_t bplus = 0;; bplus = (bplus - bfull) & bfull) {
        bool realizable = true;
        for (uint64_t rest = bfull & ~bplus; rest && realizable;
             rest &= rest - 1) {
          uint64_t bit = rest & -rest;
          bool wit = false;
          for (uint64_t m : dotmasks)
            if ((m & bplus) == bplus && !(m & bit)) {
              wit = true;
              break;
            }
          realizable = wit;
        }
        if (realizable && !check(bplus, {}, true)) return false;
        if (bplus == bfull) break;
      }
    }
  }
  return true;
}

// Iterate L-models with at most cap points where every premise is global and
// every conclusion fails somewhere, in canonical order (frame enumeration
// order, then valuation bits ascending; parameter rows before variable rows
// in the bit layout). Stops when fn returns true.
void for_each_refuting_model(const LogicSpec& L, const Context& ctx,
                             const Rule& rule, unsigned cap,
                             const std::function<bool(const Model&)>& fn) {
  EnumerationSpec es;
  es.max_points = cap;
  es.logic = L;
  std::vector<std::pair<Conn, unsigned>> atoms;
  for (unsigned p : ctx.pars()) atoms.emplace_back(Conn::Par, p);
  for (unsigned v : ctx.vars()) atoms.emplace_back(Conn::Var, v);
  for (const Frame& F : enumerate_frames(es)) {
    unsigned N = F.size();
    size_t bits = atoms.size() * N;
    if (bits > 16)
      throw BudgetError("admissibility search: valuation space too large");
    uint64_t total = uint64_t{1} << bits;
    size_t words = std::max<uint64_t>(1, total / 64);
    std::vector<uint64_t> acc(words, ~uint64_t{0});
    for (const Formula& g : rule.premises) {
      auto tbl = truth_tables(F, g, atoms);
      for (unsigned w = 0; w < N; ++w)
        for (size_t j = 0; j < words; ++j) acc[j] &= tbl[w * words + j];
    }
    for (const Formula& d : rule.conclusions) {
      auto tbl = truth_tables(F, d, atoms);
      std::vector<uint64_t> all(words, ~uint64_t{0});
      for (unsigned w = 0; w < N; ++w)
        for (size_t j = 0; j < words; ++j) all[j] &= tbl[w * words + j];
      for (size_t j = 0; j < words; ++j) acc[j] &= ~all[j];
    }
    for (uint64_t v = 0; v < total; ++v) {
      if (!(acc[v >> 6] >> (v & 63) & 1)) continue;
      Model Mv{F};
      for (size_t a = 0; a < atoms.size(); ++a) {
        std::vector<bool> row(N, false);
        for (unsigned u = 0; u < N; ++u) row[u] = v >> (a * N + u) & 1;
        if (atoms[a].first == Conn::Par)
          Mv.set_par(atoms[a].second, std::move(row));
        else
          Mv.set_var(atoms[a].second, std::move(row));
      }
      if (fn(Mv)) return;
    }
  }
}

// Base conditions with reflexive sizes clamped to the spec's cluster bound;
// an extension cluster larger than the bound would leave the logic's frames.
std::vector<ExtensionCondition> clamped_base(const LogicSpec& L) {
  std::vector<ExtensionCondition> out = L.base;
  for (ExtensionCondition& ec : out)
    if (ec.refl) ec.size = std::min(ec.size, L.cluster_bound);
  return out;
}

// Machine-check an inadmissibility countermodel: frame validity, global
// premises, per-conclusion refutation, pseudoextensibility for every base
// condition. Returns the collected witnesses.
std::vector<TppWitness> verify_counterexample(const LogicSpec& L,
                                              const Context& ctx,
                                              const Rule& rule,
                                              const Model& M) {
  if (!is_L_frame(L, M.frame()))
    throw std::logic_error("internal: countermodel leaves the logic");
  Model PM = padded(M, ctx);
  Evaluator ev(PM);
  for (const Formula& g : rule.premises)
    if (!ev.everywhere(g))
      throw std::logic_error("internal: countermodel premise not global");
  for (const Formula& d : rule.conclusions) {
    const auto& row = ev.values(d);
    if (std::find(row.begin(), row.end(), false) == row.end())
      throw std::logic_error(
          "internal: countermodel fails to refute a conclusion");
  }
  std::vector<TppWitness> cert;
  SigmaTables st(PM, ctx);
  for (const ExtensionCondition& ec : clamped_base(L))
    if (!pseudo_core(st, ctx, ec, TppMode::Displayed, &cert))
      throw std::logic_error("internal: countermodel not pseudoextensible");
  return cert;
}

// Derivable rules are admissible outright; inconclusive when the derivability
// engine does not cover the spec.
bool derivable_shortcut(const LogicSpec& L, const Rule& rule) {
  if (rule.conclusions.empty()) return false;
  try {
    return derives(L, rule.premises, rule.conclusions).derivable;
  } catch (const std::invalid_argument&) {
    return false;
  } catch (const BudgetError&) {
    return false;
  }
}

}  // namespace

Context rule_context(const Rule& r) {
  std::vector<Formula> seeds = r.premises;
  seeds.insert(seeds.end(), r.conclusions.begin(), r.conclusions.end());
  return closure(seeds);
}

bool tpp_exists(const Model& M, const Context& ctx, bool refl,
                const std::vector<uint64_t>& evals, uint64_t bplus,
                TppMode mode, TppWitness* out) {
  if (evals.empty())
    throw std::invalid_argument("tpp_exists: empty assignment set");
  for (size_t i = 0; i + 1 < evals.size(); ++i)
    if (evals[i] >= evals[i + 1])
      throw std::invalid_argument(
          "tpp_exists: assignments must be distinct and ascending");
  if (ctx.pars().size() < 64)
    for (uint64_t e : evals)
      if (e >> ctx.pars().size())
        throw std::invalid_argument("tpp_exists: assignment out of range");
  if (!refl && evals.size() != 1)
    throw std::invalid_argument(
        "tpp_exists: an irreflexive cluster takes exactly one assignment");
  if (bplus & ~full_mask(ctx.boxed().size()))
    throw std::invalid_argument("tpp_exists: kernel set out of range");
  Model PM = padded(M, ctx);
  SigmaTables st(PM, ctx);
  return tpp_core(st, ctx, refl, evals, bplus, mode, out);
}

bool pseudoextensible(const Model& M, const Context& ctx,
                      const ExtensionCondition& ec, TppMode mode,
                      std::vector<TppWitness>* out) {
  Model PM = padded(M, ctx);
  SigmaTables st(PM, ctx);
  return pseudo_core(st, ctx, ec, mode, out);
}

AdmVerdict admissible_clx(const LogicSpec& L, const Rule& rule,
                          unsigned size_cap) {
  if (L.base.empty())
    throw std::invalid_argument("admissible_clx: logic has an empty base");
  if (size_cap == 0)
    throw std::invalid_argument("admissible_clx: size cap must be positive");
  if (size_cap > kMaxEnumPoints)
    throw BudgetError(
        "admissible_clx: size cap exceeds the frame enumeration budget");
  Context ctx = rule_context(rule);
  if (ctx.pars().size() > 4)
    throw BudgetError("admissible_clx: more than 4 parameters");
  AdmVerdict out;
  out.cap = size_cap;
  if (derivable_shortcut(L, rule)) {
    out.status = AdmStatus::Admissible;
    out.complete = true;
    return out;
  }
  bool found = false;
  Model cex;
  std::vector<ExtensionCondition> base = clamped_base(L);
  for_each_refuting_model(L, ctx, rule, size_cap, [&](const Model& Mv) {
    Model PM = padded(Mv, ctx);
    SigmaTables st(PM, ctx);
    for (const ExtensionCondition& ec : base)
      if (!pseudo_core(st, ctx, ec, TppMode::Displayed, nullptr)) return false;
    cex = Mv;
    found = true;
    return true;
  });
  if (found) {
    out.status = AdmStatus::Inadmissible;
    out.complete = true;
    out.certificate = verify_counterexample(L, ctx, rule, cex);
    out.counterexample = std::move(cex);
    return out;
  }
  unsigned n = ctx.n();
  bool complete = 2 * n < 32 && size_cap >= (1u << (2 * n));
  out.status = complete ? AdmStatus::Admissible : AdmStatus::BoundedAdmissible;
  out.complete = complete;
  return out;
}

// ---------------------------------------------------------------------------
// Linear logics: symbolic goodness over boxed-kernel sets.

struct LinearSearchState::Answer {
  bool refl = false;
  std::vector<uint64_t> evals;
  std::vector<std::pair<uint64_t, uint64_t>> members;  // (e, v) per assignment
  uint64_t dmask = 0;
  uint64_t child = 0;
  bool recurse = false;
};

struct LinearSearchState::ChainNode {
  bool refl = false;
  std::vector<std::pair<uint64_t, uint64_t>> members;  // (e, v), ascending
  uint64_t below = 0;  // kernels globally true in the prefix ending here
};

LinearSearchState::LinearSearchState(const LogicSpec& L, const Rule& rule)
    : logic_(L), rule_(rule), ctx_(rule_context(rule)) {
  if (!L.linear || L.base.empty())
    throw std::invalid_argument(
        "admissible_linear_clx: logic must be linear with a nonempty base");
  if (!L.forbidden_reducts.empty())
    throw std::invalid_argument(
        "admissible_linear_clx: forbidden reducts are not supported");
  nvars_ = ctx_.vars().size();
  npars_ = ctx_.pars().size();
  if (npars_ > 4)
    throw BudgetError("admissible_linear_clx: more than 4 parameters");
  if (nvars_ > 12)
    throw BudgetError("admissible_linear_clx: more than 12 variables");
  if (ctx_.boxed().size() > 16)
    throw BudgetError("admissible_linear_clx: more than 16 boxed kernels");
  bfull_ = full_mask(ctx_.boxed().size());
  unsigned nt = 1u << npars_;
  for (const auto& c : logic_.base) {
    unsigned cap =
        std::min({c.size, logic_.cluster_bound, static_cast<unsigned>(nt)});
    if (c.refl)
      root_refl_cap_ = std::max(root_refl_cap_, cap);
    else
      root_irr_ = true;
    if (c.branching >= 1) {
      if (c.refl)
        inner_refl_cap_ = std::max(inner_refl_cap_, cap);
      else
        inner_irr_ = true;
    }
  }
  korder_.resize(ctx_.boxed().size());
  for (unsigned b = 0; b < korder_.size(); ++b) korder_[b] = b;
  std::stable_sort(korder_.begin(), korder_.end(), [&](unsigned a, unsigned b) {
    return ctx_.boxed()[a].size() < ctx_.boxed()[b].size();
  });
}

namespace {

bool gammas_hold(const Context& ctx, const std::vector<Formula>& gammas,
                 uint64_t v, uint64_t e, uint64_t X) {
  for (const Formula& g : gammas)
    if (!ctx.eval(g, v, e, X)) return false;
  return true;
}

uint64_t kernel_truths(const Context& ctx, uint64_t v, uint64_t e, uint64_t X) {
  uint64_t t = 0;
  for (unsigned b = 0; b < ctx.boxed().size(); ++b)
    if (ctx.eval(ctx.boxed()[b], v, e, X)) t |= uint64_t{1} << b;
  return t;
}

}  // namespace

bool LinearSearchState::clause_irr(uint64_t bplus, uint64_t ebits, bool root,
                                   Answer* out) {
  uint64_t env = root ? bfull_ : bplus;
  for (uint64_t v = 0; v < (uint64_t{1} << nvars_); ++v) {
    if (!gammas_hold(ctx_, rule_.premises, v, ebits, env)) continue;
    uint64_t t = kernel_truths(ctx_, v, ebits, env);
    uint64_t D = env & ~t;
    uint64_t child = env & ~D;
    bool need = root || D != 0;
    if (need && !good(child)) continue;
    if (out) {
      out->refl = false;
      out->evals = {ebits};
      out->members = {{ebits, v}};
      out->dmask = D;
      out->child = child;
      out->recurse = need;
    }
    return true;
  }
  return false;
}

bool LinearSearchState::clause_refl(uint64_t bplus, uint64_t emask, bool root,
                                    Answer* out) {
  uint64_t base = root ? bfull_ : bplus;
  std::vector<uint64_t> evals = mask_bits(emask);
  for (uint64_t D = 0;; D = (D - base) & base) {
    uint64_t inner = base & ~D;
    std::vector<std::vector<uint64_t>> masks(evals.size());
    std::vector<std::map<uint64_t, uint64_t>> vfor(evals.size());
    bool feasible = true;
    for (size_t i = 0; i < evals.size() && feasible; ++i) {
      for (uint64_t v = 0; v < (uint64_t{1} << nvars_); ++v) {
        if (!gammas_hold(ctx_, rule_.premises, v, evals[i], inner)) continue;
        uint64_t t = kernel_truths(ctx_, v, evals[i], inner);
        if ((t & inner) != inner) continue;
        uint64_t cov = D & ~t;
        if (vfor[i].emplace(cov, v).second) masks[i].push_back(cov);
      }
      if (masks[i].empty())
        feasible = false;
      else
        std::sort(masks[i].begin(), masks[i].end());
    }
    if (feasible) {
      auto choice = cover_choice(masks, D);
      if (choice) {
        uint64_t child = base & ~D;
        bool need = root || D != 0;
        if (!need || good(child)) {
          if (out) {
            out->refl = true;
            out->evals = evals;
            out->members.clear();
            for (size_t i = 0; i < evals.size(); ++i)
              out->members.emplace_back(evals[i],
                                        vfor[i].at(masks[i][(*choice)[i]]));
            out->dmask = D;
            out->child = child;
            out->recurse = need;
          }
          return true;
        }
      }
    }
    if (D == base) break;
  }
  return false;
}

bool LinearSearchState::good(uint64_t bplus) {
  auto it = memo_.find(bplus);
  if (it != memo_.end()) return it->second;
  std::vector<Answer> got;
  bool ok = true;
  unsigned nt = 1u << npars_;
  if (inner_irr_)
    for (uint64_t e = 0; ok && e < nt; ++e) {
      Answer a;
      ok = clause_irr(bplus, e, false, &a);
      if (ok) got.push_back(std::move(a));
    }
  if (ok && inner_refl_cap_)
    for (uint64_t em = 1; ok && em < (uint64_t{1} << nt); ++em) {
      if (std::popcount(em) > int(inner_refl_cap_)) continue;
      Answer a;
      ok = clause_refl(bplus, em, false, &a);
      if (ok) got.push_back(std::move(a));
    }
  memo_[bplus] = ok;
  if (ok) answers_[bplus] = std::move(got);
  return ok;
}

bool LinearSearchState::chain_search(const Formula& target,
                                     std::vector<ChainNode>* out) {
  unsigned budget = ctx_.n() + 1;
  uint64_t vspace = uint64_t{1} << nvars_;
  uint64_t espace = uint64_t{1} << npars_;
  unsigned work = 0;
  auto spend = [&]() {
    if (++work > (1u << 20))
      throw BudgetError("linear chain search exceeded its budget");
  };

  std::vector<ChainNode> chain;
  // Truth mask of the kernels at one candidate cluster, plus per-member
  // premise/refutation checks; kernels are evaluated smallest first so box
  // bits of proper subformulas are already settled.
  auto assess = [&](bool refl,
                    const std::vector<std::pair<uint64_t, uint64_t>>& members,
                    uint64_t allabove, uint64_t* newall, bool* refutes) {
    uint64_t X = allabove;
    if (refl) {
      X = 0;
      std::vector<uint64_t> tm(members.size(), 0);
      for (unsigned b : korder_) {
        bool all = (allabove >> b) & 1;
        for (size_t m = 0; m < members.size(); ++m) {
          bool t = ctx_.eval(ctx_.boxed()[b], members[m].second,
                             members[m].first, X);
          if (t) tm[m] |= uint64_t{1} << b;
          all = all && t;
        }
        if (all) X |= uint64_t{1} << b;
      }
      *newall = X;
    } else {
      uint64_t t = kernel_truths(ctx_, members[0].second, members[0].first, X);
      *newall = allabove & t;
    }
    *refutes = false;
    for (const auto& m : members) {
      if (!gammas_hold(ctx_, rule_.premises, m.second, m.first, X))
        return false;
      if (!ctx_.eval(target, m.second, m.first, X)) *refutes = true;
    }
    return true;
  };

  auto frame_valid = [&]() {
    unsigned n = 0;
    for (const auto& nd : chain) n += nd.members.size();
    Frame F(n);
    unsigned at = 0;
    for (const auto& nd : chain) {
      for (size_t m = 0; m < nd.members.size(); ++m) {
        unsigned id = at + m;
        for (unsigned a = 0; a < at; ++a) F.add_lt(id, a);
        if (nd.refl) {
          F.set_refl(id, true);
          for (size_t o = 0; o < nd.members.size(); ++o)
            if (o != m) F.add_lt(id, at + o);
        }
      }
      at += nd.members.size();
    }
    F.close_transitive();
    return is_L_frame(logic_, F);
  };

  std::function<bool(uint64_t, unsigned, bool)> dfs =
      [&](uint64_t allabove, unsigned used, bool refuted) -> bool {
    if (refuted && frame_valid()) {
      *out = chain;
      return true;
    }
    if (used >= budget) return false;
    if (logic_.depth_bound != kUnbounded &&
        chain.size() >= logic_.depth_bound)
      return false;
    auto try_cluster =
        [&](bool refl,
            const std::vector<std::pair<uint64_t, uint64_t>>& members) {
      spend();
      uint64_t newall = 0;
      bool refutes = false;
      if (!assess(refl, members, allabove, &newall, &refutes)) return false;
      if (!good(newall)) return false;
      chain.push_back(ChainNode{refl, members, newall});
      bool hit = dfs(newall, used + members.size(), refuted || refutes);
      if (!hit) chain.pop_back();
      return hit;
    };
    if (logic_.cluster_type_allowed(false, 1)) {
      for (uint64_t e = 0; e < espace; ++e)
        for (uint64_t v = 0; v < vspace; ++v)
          if (try_cluster(false, {{e, v}})) return true;
    }
    if (logic_.has_refl()) {
      uint64_t as = espace * vspace;
      unsigned smax = std::min<uint64_t>(
          {logic_.max_cluster_size(), budget - used, as});
      for (unsigned s = 1; s <= smax; ++s) {
        if (!logic_.cluster_type_allowed(true, s)) continue;
        // combinations of s distinct (e, v) assignments, lexicographic
        std::vector<uint64_t> idx(s);
        for (unsigned i = 0; i < s; ++i) idx[i] = i;
        while (true) {
          std::vector<std::pair<uint64_t, uint64_t>> members;
          for (uint64_t a : idx)
            members.emplace_back(a >> nvars_, a & (vspace - 1));
          if (try_cluster(true, members)) return true;
          unsigned i = s;
          while (i-- > 0) {
            if (idx[i] + (s - i) < as) {
              ++idx[i];
              for (unsigned j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
              break;
            }
            if (i == 0) goto next_size;
          }
        }
      next_size:;
        }
    }
    return false;
  };
  return dfs(bfull_, 0, false);
}

std::optional<Model> LinearSearchState::materialize(
    const std::vector<std::vector<ChainNode>>& chains) {
  std::vector<std::pair<uint64_t, uint64_t>> pts;
  std::vector<std::vector<unsigned>> up;
  struct Group {
    std::vector<unsigned> ids;
    bool refl;
  };
  std::vector<Group> groups;

  auto place = [&](const std::vector<std::pair<uint64_t, uint64_t>>& members,
                   bool refl, const std::vector<unsigned>& above) {
    if (pts.size() + members.size() > kModelPointBudget)
      throw BudgetError("countermodel exceeds the point budget");
    Group g;
    g.refl = refl;
    for (const auto& m : members) {
      g.ids.push_back(pts.size());
      pts.push_back(m);
      up.push_back(above);
    }
    groups.push_back(g);
    return g.ids;
  };

  std::function<void(uint64_t, const std::vector<unsigned>&)> emit =
      [&](uint64_t bplus, const std::vector<unsigned>& above) {
        auto it = answers_.find(bplus);
        if (it == answers_.end()) return;
        for (const Answer& a : it->second) {
          auto ids = place(a.members, a.refl, above);
          if (a.recurse) {
            std::vector<unsigned> deeper = above;
            deeper.insert(deeper.end(), ids.begin(), ids.end());
            emit(a.child, deeper);
          }
        }
      };

  for (const Answer& r : roots_) {
    auto ids = place(r.members, r.refl, {});
    if (r.recurse) emit(r.child, ids);
  }
  for (const auto& ch : chains) {
    std::vector<unsigned> above;
    for (const ChainNode& nd : ch) {
      auto ids = place(nd.members, nd.refl, above);
      above.insert(above.end(), ids.begin(), ids.end());
      emit(nd.below, above);
    }
  }

  unsigned n = pts.size();
  Frame F(n);
  for (unsigned i = 0; i < n; ++i)
    for (unsigned a : up[i]) F.add_lt(i, a);
  for (const Group& g : groups)
    if (g.refl)
      for (unsigned i : g.ids) {
        F.set_refl(i, true);
        for (unsigned j : g.ids)
          if (i != j) F.add_lt(i, j);
      }
  F.close_transitive();
  F.validate();
  Model M(F);
  for (size_t i = 0; i < ctx_.pars().size(); ++i) {
    std::vector<bool> row(n);
    for (unsigned u = 0; u < n; ++u) row[u] = pts[u].first >> i & 1;
    M.set_par(ctx_.pars()[i], row);
  }
  for (size_t i = 0; i < ctx_.vars().size(); ++i) {
    std::vector<bool> row(n);
    for (unsigned u = 0; u < n; ++u) row[u] = pts[u].second >> i & 1;
    M.set_var(ctx_.vars()[i], row);
  }
  return M;
}

AdmVerdict LinearSearchState::decide() {
  AdmVerdict out;
  out.complete = true;
  out.cap = 0;
  if (derivable_shortcut(logic_, rule_)) {
    out.status = AdmStatus::Admissible;
    return out;
  }
  unsigned nt = 1u << npars_;
  if (root_irr_)
    for (uint64_t e = 0; e < nt; ++e) {
      Answer a;
      if (!clause_irr(0, e, true, &a)) {
        out.status = AdmStatus::Admissible;
        return out;
      }
      roots_.push_back(std::move(a));
    }
  if (root_refl_cap_)
    for (uint64_t em = 1; em < (uint64_t{1} << nt); ++em) {
      if (std::popcount(em) > int(root_refl_cap_)) continue;
      Answer a;
      if (!clause_refl(0, em, true, &a)) {
        out.status = AdmStatus::Admissible;
        return out;
      }
      roots_.push_back(std::move(a));
    }
  std::vector<std::vector<ChainNode>> chains;
  for (const Formula& d : rule_.conclusions) {
    std::vector<ChainNode> ch;
    if (!chain_search(d, &ch)) {
      out.status = AdmStatus::Admissible;
      return out;
    }
    chains.push_back(std::move(ch));
  }
  out.status = AdmStatus::Inadmissible;
  try {
    auto M = materialize(chains);
    if (M) {
      out.certificate = verify_counterexample(logic_, ctx_, rule_, *M);
      out.counterexample = std::move(*M);
    }
  } catch (const BudgetError&) {
    out.certificate.clear();
    out.counterexample.reset();
  }
  return out;
}

AdmVerdict admissible_linear_clx(const LogicSpec& L, const Rule& rule) {
  LinearSearchState s(L, rule);
  return s.decide();
}

// ---------------------------------------------------------------------------
// Bounded depth: strong extensibility and the chain-model engine.

namespace {

struct MissingCand {
  std::vector<unsigned> xpoints;
  bool refl = false;
  std::vector<uint64_t> evals;
};

// Walks every single-cluster extension candidate of the parametric model
// (upward-closed sample, cluster type and size admitted by the logic,
// assignment set) and checks for an exactly matching answer cluster. With a
// sink, collects the unanswered candidates instead of stopping early.
bool scan_strong(const LogicSpec& L, const Model& M,
                 const std::vector<unsigned>& pars,
                 std::vector<MissingCand>* missing) {
  if (L.depth_bound == kUnbounded)
    throw std::invalid_argument(
        "strong extensibility needs a finite depth bound");
  if (pars.size() > 4)
    throw BudgetError("strong extensibility: more than 4 parameters");
  unsigned nt = 1u << pars.size();
  const Frame& F = M.frame();
  unsigned N = F.size();
  FrameStats st = analyze(F);
  unsigned C = st.clusters.size();
  if (C > 16) throw BudgetError("strong extensibility: too many clusters");

  std::vector<uint64_t> abits(N, 0);
  for (size_t i = 0; i < pars.size(); ++i) {
    auto it = M.pars().find(pars[i]);
    if (it == M.pars().end()) continue;
    for (unsigned u = 0; u < N; ++u)
      if (it->second[u]) abits[u] |= uint64_t{1} << i;
  }

  // Answer index: (strict cone, reflexivity, distinct assignments) per
  // cluster of M.
  std::set<std::tuple<std::vector<unsigned>, bool, std::vector<uint64_t>>> ans;
  for (unsigned c = 0; c < C; ++c) {
    const auto& ms = st.clusters[c];
    std::vector<uint64_t> evals;
    for (unsigned u : ms) evals.push_back(abits[u]);
    std::sort(evals.begin(), evals.end());
    if (std::adjacent_find(evals.begin(), evals.end()) != evals.end())
      continue;  // duplicated assignments answer nothing
    std::vector<unsigned> cone;
    for (unsigned w : F.successors(ms[0]))
      if (st.cluster_of[w] != c) cone.push_back(w);
    std::sort(cone.begin(), cone.end());
    ans.insert({std::move(cone), st.cluster_refl[c], std::move(evals)});
  }

  std::vector<uint64_t> above(C, 0);
  for (unsigned a = 0; a < C; ++a)
    for (unsigned b = 0; b < C; ++b)
      if (st.cluster_lt[a][b]) above[a] |= uint64_t{1} << b;

  unsigned smax_refl = std::min(L.max_cluster_size(), nt);
  bool ok = true;
  for (uint64_t S = 0; S < (uint64_t{1} << C); ++S) {
    bool closed = true;
    for (unsigned c = 0; c < C && closed; ++c)
      if ((S >> c & 1) && (above[c] & ~S)) closed = false;
    if (!closed) continue;
    std::vector<unsigned> xs;
    for (unsigned c = 0; c < C; ++c)
      if (S >> c & 1)
        xs.insert(xs.end(), st.clusters[c].begin(), st.clusters[c].end());
    std::sort(xs.begin(), xs.end());

    for (int refl = 0; refl <= 1; ++refl) {
      unsigned smax = refl ? smax_refl : 1;
      for (unsigned s = 1; s <= smax; ++s) {
        // candidate frame: the sample plus a new root cluster of size s
        unsigned xn = xs.size();
        Frame G(xn + s);
        for (unsigned i = 0; i < xn; ++i) {
          for (unsigned j = 0; j < xn; ++j)
            if (F.lt(xs[i], xs[j])) G.add_lt(i, j);
          G.set_refl(i, F.refl(xs[i]));
        }
        for (unsigned m = 0; m < s; ++m) {
          unsigned id = xn + m;
          for (unsigned i = 0; i < xn; ++i) G.add_lt(id, i);
          if (refl) {
            G.set_refl(id, true);
            for (unsigned o = 0; o < s; ++o)
              if (o != m) G.add_lt(id, xn + o);
          }
        }
        G.close_transitive();
        if (!is_L_frame(L, G)) continue;
        for (uint64_t em = 1; em < (uint64_t{1} << nt); ++em) {
          if (std::popcount(em) != int(s)) continue;
          std::vector<uint64_t> evals = mask_bits(em);
          if (ans.count({xs, refl != 0, evals})) continue;
          if (!missing) return false;
          ok = false;
          missing->push_back({xs, refl != 0, std::move(evals)});
        }
      }
    }
  }
  return ok;
}

}  // namespace

bool strongly_extensible(const LogicSpec& L, const Model& M,
                         const std::vector<unsigned>& pars) {
  return scan_strong(L, M, pars, nullptr);
}

Model strong_closure(const LogicSpec& L, const Model& M,
                     const std::vector<unsigned>& pars) {
  Model cur = M;
  for (unsigned round = 0; round < 64; ++round) {
    std::vector<MissingCand> miss;
    if (scan_strong(L, cur, pars, &miss)) return cur;
    const Frame& F0 = cur.frame();
    unsigned n0 = F0.size();
    unsigned add = 0;
    for (const auto& mc : miss) add += mc.evals.size();
    if (n0 + add > kModelPointBudget)
      throw BudgetError("strong_closure: point budget exceeded");
    Frame F(n0 + add);
    for (unsigned i = 0; i < n0; ++i) {
      for (unsigned j = 0; j < n0; ++j)
        if (F0.lt(i, j)) F.add_lt(i, j);
      F.set_refl(i, F0.refl(i));
    }
    unsigned at = n0;
    std::vector<std::pair<unsigned, uint64_t>> newbits;  // (point, assignment)
    for (const auto& mc : miss) {
      unsigned s = mc.evals.size();
      for (unsigned m = 0; m < s; ++m) {
        unsigned id = at + m;
        for (unsigned x : mc.xpoints) F.add_lt(id, x);
        if (mc.refl) {
          F.set_refl(id, true);
          for (unsigned o = 0; o < s; ++o)
            if (o != m) F.add_lt(id, at + o);
        }
        newbits.emplace_back(id, mc.evals[m]);
      }
      at += s;
    }
    F.close_transitive();
    F.validate();
    Model next(F);
    for (const auto& [idx, row] : cur.pars()) {
      std::vector<bool> r = row;
      r.resize(F.size(), false);
      next.set_par(idx, std::move(r));
    }
    for (const auto& [idx, row] : cur.vars()) {
      std::vector<bool> r = row;
      r.resize(F.size(), false);
      next.set_var(idx, std::move(r));
    }
    for (size_t i = 0; i < pars.size(); ++i)
      for (const auto& [id, e] : newbits)
        next.set_par_at(pars[i], id, e >> i & 1);
    cur = std::move(next);
  }
  throw BudgetError("strong_closure: no fixpoint within the round budget");
}

// ---------------------------------------------------------------------------
// Bounded-depth linear engine over explicit chain models.

namespace {

class BddpLinear {
 public:
  BddpLinear(const LogicSpec& L, const Rule& rule)
      : L_(L), rule_(rule), ctx_(rule_context(rule)) {
    d_ = L.depth_bound;
    npars_ = ctx_.pars().size();
    nvars_ = ctx_.vars().size();
    if (npars_ > 4)
      throw BudgetError("admissible_bddp: more than 4 parameters");
    if (nvars_ > 12)
      throw BudgetError("admissible_bddp: more than 12 variables");
    nt_ = 1u << npars_;
    bfull_ = full_mask(ctx_.boxed().size());
    unsigned mc = std::min(L.max_cluster_size(), 8u);
    bound_b_ = ctx_.n() + (1 + mc) * std::max(1u, d_);
    korder_.resize(ctx_.boxed().size());
    for (unsigned b = 0; b < korder_.size(); ++b) korder_[b] = b;
    std::stable_sort(korder_.begin(), korder_.end(),
                     [&](unsigned a, unsigned b) {
                       return ctx_.boxed()[a].size() < ctx_.boxed()[b].size();
                     });
  }

  AdmVerdict decide();

 private:
  struct Cluster {
    bool refl = false;
    std::vector<std::pair<uint64_t, uint64_t>> members;  // (e, v)
    uint64_t below = 0;  // kernels globally true in the prefix ending here
  };
  using Chain = std::vector<Cluster>;  // top cluster first

  static std::string key(const Chain& W) {
    std::ostringstream os;
    for (const auto& c : W) {
      os << (c.refl ? 'r' : 'i');
      for (const auto& m : c.members) os << ' ' << m.first << ':' << m.second;
      os << ';';
    }
    return os.str();
  }

  Frame chain_frame(const Chain& W, int extra_refl, unsigned extra) const {
    unsigned n = extra;
    for (const auto& c : W) n += c.members.size();
    Frame F(n);
    unsigned at = 0;
    for (const auto& c : W) {
      for (size_t m = 0; m < c.members.size(); ++m) {
        unsigned id = at + m;
        for (unsigned a = 0; a < at; ++a) F.add_lt(id, a);
        if (c.refl) {
          F.set_refl(id, true);
          for (size_t o = 0; o < c.members.size(); ++o)
            if (o != m) F.add_lt(id, at + o);
        }
      }
      at += c.members.size();
    }
    for (unsigned m = 0; m < extra; ++m) {
      unsigned id = at + m;
      for (unsigned a = 0; a < at; ++a) F.add_lt(id, a);
      if (extra_refl) {
        F.set_refl(id, true);
        for (unsigned o = 0; o < extra; ++o)
          if (o != m) F.add_lt(id, at + o);
      }
    }
    F.close_transitive();
    return F;
  }

  struct Cand {
    bool refl = false;
    std::vector<uint64_t> evals;
  };

  // Single-cluster extension candidates below W: every cluster type and
  // distinct-assignment set whose attachment stays an L-frame.
  std::vector<Cand> ext_candidates(const Chain& W) const {
    std::vector<Cand> out;
    if (logic_allows(false, 1, W))
      for (uint64_t e = 0; e < nt_; ++e) out.push_back({false, {e}});
    unsigned smax = std::min(L_.max_cluster_size(), nt_);
    for (unsigned s = 1; s <= smax; ++s) {
      if (!logic_allows(true, s, W)) continue;
      for (uint64_t em = 1; em < (uint64_t{1} << nt_); ++em)
        if (std::popcount(em) == int(s)) out.push_back({true, mask_bits(em)});
    }
    return out;
  }

  bool logic_allows(bool refl, unsigned s, const Chain& W) const {
    if (!L_.cluster_type_allowed(refl, s)) return false;
    return is_L_frame(L_, chain_frame(W, refl, s));
  }

  // Kernel truths of a new bottom cluster, smallest kernels first; returns
  // the box environment of its members and whether all premises hold there.
  bool assess(const Chain& W, bool refl,
              const std::vector<std::pair<uint64_t, uint64_t>>& members,
              uint64_t* env, uint64_t* newall) const {
    uint64_t allabove = W.empty() ? bfull_ : W.back().below;
    uint64_t X = allabove;
    if (refl) {
      X = 0;
      for (unsigned b : korder_) {
        bool all = (allabove >> b) & 1;
        for (const auto& m : members)
          all = all && ctx_.eval(ctx_.boxed()[b], m.second, m.first, X);
        if (all) X |= uint64_t{1} << b;
      }
      *newall = X;
    } else {
      uint64_t t =
          kernel_truths(ctx_, members[0].second, members[0].first, X);
      *newall = allabove & t;
    }
    *env = X;
    for (const auto& m : members)
      if (!gammas_hold(ctx_, rule_.premises, m.second, m.first, X))
        return false;
    return true;
  }

  bool gi(unsigned i, const Chain& W) {
    if (i == 0) return true;
    auto k = std::make_pair(i, key(W));
    auto it = gmemo_.find(k);
    if (it != gmemo_.end()) return it->second;
    std::vector<Cluster> got;
    bool ok = true;
    for (const Cand& c : ext_candidates(W)) {
      size_t ce = c.evals.size();
      if (ce * nvars_ > 16)
        throw BudgetError("admissible_bddp: cluster valuation budget");
      bool hit = false;
      for (uint64_t vv = 0; vv < (uint64_t{1} << (ce * nvars_)) && !hit;
           ++vv) {
        std::vector<std::pair<uint64_t, uint64_t>> members;
        for (size_t j = 0; j < ce; ++j)
          members.emplace_back(c.evals[j],
                               (vv >> (j * nvars_)) & (full_mask(nvars_)));
        uint64_t env = 0, newall = 0;
        if (!assess(W, c.refl, members, &env, &newall)) continue;
        Chain W2 = W;
        W2.push_back(Cluster{c.refl, members, newall});
        if (!gi(i - 1, W2)) continue;
        got.push_back(Cluster{c.refl, std::move(members), newall});
        hit = true;
      }
      if (!hit) {
        ok = false;
        break;
      }
    }
    gmemo_[k] = ok;
    if (ok) ganswers_[k] = std::move(got);
    return ok;
  }

  bool chain_search(const Formula& target, Chain* out);
  std::optional<Model> materialize(const std::vector<Chain>& chains);

  const LogicSpec& L_;
  const Rule& rule_;
  Context ctx_;
  unsigned d_ = 0, npars_ = 0, nvars_ = 0, nt_ = 0, bound_b_ = 0;
  uint64_t bfull_ = 0;
  std::vector<unsigned> korder_;
  std::map<std::pair<unsigned, std::string>, bool> gmemo_;
  std::map<std::pair<unsigned, std::string>, std::vector<Cluster>> ganswers_;
  std::vector<Cluster> roots_;
};

bool BddpLinear::chain_search(const Formula& target, Chain* out) {
  uint64_t vspace = uint64_t{1} << nvars_;
  uint64_t as = nt_ * vspace;
  unsigned work = 0;
  auto spend = [&]() {
    if (++work > (1u << 20))
      throw BudgetError("bounded-depth chain search exceeded its budget");
  };
  Chain chain;
  std::function<bool(unsigned, bool)> dfs = [&](unsigned used,
                                                bool refuted) -> bool {
    if (refuted && is_L_frame(L_, chain_frame(chain, 0, 0))) {
      *out = chain;
      return true;
    }
    if (used >= bound_b_ || chain.size() >= d_) return false;
    auto try_cluster =
        [&](bool refl,
            const std::vector<std::pair<uint64_t, uint64_t>>& members) {
      spend();
      uint64_t env = 0, newall = 0;
      if (!assess(chain, refl, members, &env, &newall)) return false;
      bool refutes = false;
      for (const auto& m : members)
        if (!ctx_.eval(target, m.second, m.first, env)) refutes = true;
      chain.push_back(Cluster{refl, members, newall});
      bool hit =
          gi(d_ - 1, chain) && dfs(used + members.size(), refuted || refutes);
      if (!hit) chain.pop_back();
      return hit;
    };
    if (L_.cluster_type_allowed(false, 1)) {
      for (uint64_t a = 0; a < as; ++a)
        if (try_cluster(false, {{a / vspace, a % vspace}})) return true;
    }
    if (L_.has_refl()) {
      unsigned smax = std::min<uint64_t>(
          {L_.max_cluster_size(), bound_b_ - used, as});
      for (unsigned s = 1; s <= smax; ++s) {
        if (!L_.cluster_type_allowed(true, s)) continue;
        std::vector<uint64_t> idx(s);
        for (unsigned i = 0; i < s; ++i) idx[i] = i;
        while (true) {
          std::vector<std::pair<uint64_t, uint64_t>> members;
          for (uint64_t a : idx) members.emplace_back(a / vspace, a % vspace);
          if (try_cluster(true, members)) return true;
          unsigned i = s;
          bool done = false;
          while (i-- > 0) {
            if (idx[i] + (s - i) < as) {
              ++idx[i];
              for (unsigned j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
              break;
            }
            if (i == 0) done = true;
          }
          if (done) break;
        }
      }
    }
    return false;
  };
  return dfs(0, false);
}

std::optional<Model> BddpLinear::materialize(const std::vector<Chain>& chains) {
  std::vector<std::pair<uint64_t, uint64_t>> pts;
  std::vector<std::vector<unsigned>> up;
  struct Group {
    std::vector<unsigned> ids;
    bool refl;
  };
  std::vector<Group> groups;
  auto place = [&](const Cluster& c, const std::vector<unsigned>& above) {
    if (pts.size() + c.members.size() > kModelPointBudget)
      throw BudgetError("countermodel exceeds the point budget");
    Group g;
    g.refl = c.refl;
    for (const auto& m : c.members) {
      g.ids.push_back(pts.size());
      pts.push_back(m);
      up.push_back(above);
    }
    groups.push_back(g);
    return g.ids;
  };

  std::function<void(unsigned, const Chain&, const std::vector<unsigned>&)>
      emit = [&](unsigned i, const Chain& W,
                 const std::vector<unsigned>& above) {
        if (i == 0) return;
        auto it = ganswers_.find({i, key(W)});
        if (it == ganswers_.end()) return;
        for (const Cluster& c : it->second) {
          auto ids = place(c, above);
          Chain W2 = W;
          W2.push_back(c);
          std::vector<unsigned> deeper = above;
          deeper.insert(deeper.end(), ids.begin(), ids.end());
          emit(i - 1, W2, deeper);
        }
      };

  for (const Cluster& r : roots_) {
    auto ids = place(r, {});
    emit(d_ - 1, Chain{r}, ids);
  }
  for (const Chain& ch : chains) {
    std::vector<unsigned> above;
    Chain sofar;
    for (const Cluster& c : ch) {
      auto ids = place(c, above);
      above.insert(above.end(), ids.begin(), ids.end());
      sofar.push_back(c);
      emit(d_ - 1, sofar, above);
    }
  }

  unsigned n = pts.size();
  Frame F(n);
  for (unsigned i = 0; i < n; ++i)
    for (unsigned a : up[i]) F.add_lt(i, a);
  for (const Group& g : groups)
    if (g.refl)
      for (unsigned i : g.ids) {
        F.set_refl(i, true);
        for (unsigned j : g.ids)
          if (i != j) F.add_lt(i, j);
      }
  F.close_transitive();
  F.validate();
  Model M(F);
  for (size_t i = 0; i < ctx_.pars().size(); ++i) {
    std::vector<bool> row(n);
    for (unsigned u = 0; u < n; ++u) row[u] = pts[u].first >> i & 1;
    M.set_par(ctx_.pars()[i], row);
  }
  for (size_t i = 0; i < ctx_.vars().size(); ++i) {
    std::vector<bool> row(n);
    for (unsigned u = 0; u < n; ++u) row[u] = pts[u].second >> i & 1;
    M.set_var(ctx_.vars()[i], row);
  }
  return M;
}

AdmVerdict BddpLinear::decide() {
  AdmVerdict out;
  out.complete = true;
  out.cap = 0;
  for (const Cand& c : ext_candidates({})) {
    size_t ce = c.evals.size();
    if (ce * nvars_ > 16)
      throw BudgetError("admissible_bddp: cluster valuation budget");
    bool hit = false;
    for (uint64_t vv = 0; vv < (uint64_t{1} << (ce * nvars_)) && !hit; ++vv) {
      std::vector<std::pair<uint64_t, uint64_t>> members;
      for (size_t j = 0; j < ce; ++j)
        members.emplace_back(c.evals[j],
                             (vv >> (j * nvars_)) & full_mask(nvars_));
      uint64_t env = 0, newall = 0;
      if (!assess({}, c.refl, members, &env, &newall)) continue;
      Chain W{Cluster{c.refl, members, newall}};
      if (!gi(d_ - 1, W)) continue;
      roots_.push_back(Cluster{c.refl, std::move(members), newall});
      hit = true;
    }
    if (!hit) {
      out.status = AdmStatus::Admissible;
      return out;
    }
  }
  std::vector<Chain> chains;
  for (const Formula& dform : rule_.conclusions) {
    Chain ch;
    if (!chain_search(dform, &ch)) {
      out.status = AdmStatus::Admissible;
      return out;
    }
    chains.push_back(std::move(ch));
  }
  out.status = AdmStatus::Inadmissible;
  try {
    auto M = materialize(chains);
    if (M) {
      if (!is_L_frame(L_, M->frame()))
        throw std::logic_error("internal: countermodel leaves the logic");
      Model PM = padded(*M, ctx_);
      Evaluator ev(PM);
      for (const Formula& g : rule_.premises)
        if (!ev.everywhere(g))
          throw std::logic_error("internal: countermodel premise not global");
      for (const Formula& dform : rule_.conclusions) {
        const auto& row = ev.values(dform);
        if (std::find(row.begin(), row.end(), false) == row.end())
          throw std::logic_error(
              "internal: countermodel fails to refute a conclusion");
      }
      if (!strongly_extensible(L_, PM, ctx_.pars()))
        throw std::logic_error(
            "internal: countermodel not strongly extensible");
      out.counterexample = std::move(*M);
    }
  } catch (const BudgetError&) {
    out.counterexample.reset();
  }
  return out;
}

// Assign variables on the points a strong closure added, cluster by cluster
// in addition order, keeping every premise true at the new points. Truth at
// a new point only reads its cone, which precedes it.
bool complete_closure_vars(const Context& ctx, const Rule& rule, unsigned n0,
                           Model* Mc) {
  unsigned n = Mc->frame().size();
  for (unsigned v : ctx.vars()) {
    auto it = Mc->vars().find(v);
    std::vector<bool> row = it == Mc->vars().end() ? std::vector<bool>()
                                                   : it->second;
    row.resize(n, false);
    Mc->set_var(v, std::move(row));
  }
  FrameStats st = analyze(Mc->frame());
  std::vector<std::vector<unsigned>> newclusters;
  for (const auto& cl : st.clusters) {
    unsigned lo = *std::min_element(cl.begin(), cl.end());
    if (lo >= n0) newclusters.push_back(cl);
  }
  std::sort(newclusters.begin(), newclusters.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  size_t nv = ctx.vars().size();
  for (const auto& cl : newclusters) {
    if (nv * cl.size() > 16) return false;
    bool hit = false;
    for (uint64_t vv = 0; vv < (uint64_t{1} << (nv * cl.size())) && !hit;
         ++vv) {
      for (size_t m = 0; m < cl.size(); ++m)
        for (size_t i = 0; i < nv; ++i)
          Mc->set_var_at(ctx.vars()[i], cl[m], vv >> (m * nv + i) & 1);
      Evaluator ev(*Mc);
      hit = true;
      for (const Formula& g : rule.premises) {
        const auto& row = ev.values(g);
        for (unsigned u : cl)
          if (!row[u]) {
            hit = false;
            break;
          }
        if (!hit) break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

void verify_bddp_counterexample(const LogicSpec& L, const Context& ctx,
                                const Rule& rule, const Model& M) {
  if (!is_L_frame(L, M.frame()))
    throw std::logic_error("internal: countermodel leaves the logic");
  Model PM = padded(M, ctx);
  Evaluator ev(PM);
  for (const Formula& g : rule.premises)
    if (!ev.everywhere(g))
      throw std::logic_error("internal: countermodel premise not global");
  for (const Formula& d : rule.conclusions) {
    const auto& row = ev.values(d);
    if (std::find(row.begin(), row.end(), false) == row.end())
      throw std::logic_error(
          "internal: countermodel fails to refute a conclusion");
  }
  if (!strongly_extensible(L, PM, ctx.pars()))
    throw std::logic_error("internal: countermodel not strongly extensible");
}

}  // namespace

AdmVerdict admissible_bddp(const LogicSpec& L, const Rule& rule) {
  if (L.depth_bound == kUnbounded)
    throw std::invalid_argument(
        "admissible_bddp: logic must have a finite depth bound");
  if (L.base.empty())
    throw std::invalid_argument("admissible_bddp: logic has an empty base");
  Context ctx = rule_context(rule);
  if (ctx.pars().size() > 4)
    throw BudgetError("admissible_bddp: more than 4 parameters");
  AdmVerdict out;
  if (derivable_shortcut(L, rule)) {
    out.status = AdmStatus::Admissible;
    out.complete = true;
    return out;
  }
  if (L.linear) {
    BddpLinear engine(L, rule);
    return engine.decide();
  }
  if (L.width_bound == kUnbounded || L.max_cluster_size() == kUnbounded)
    throw std::invalid_argument(
        "admissible_bddp: spec is neither linear nor tabular");
  unsigned cap = 6;
  out.cap = cap;
  bool found = false;
  Model cex;
  for_each_refuting_model(L, ctx, rule, cap, [&](const Model& Mv) {
    try {
      if (scan_strong(L, Mv, ctx.pars(), nullptr)) {
        cex = Mv;
        found = true;
        return true;
      }
      unsigned n0 = Mv.frame().size();
      Model Mc = strong_closure(L, Mv, ctx.pars());
      if (complete_closure_vars(ctx, rule, n0, &Mc)) {
        cex = std::move(Mc);
        found = true;
        return true;
      }
    } catch (const BudgetError&) {
    }
    return false;
  });
  if (found) {
    verify_bddp_counterexample(L, ctx, rule, cex);
    out.status = AdmStatus::Inadmissible;
    out.complete = true;
    out.counterexample = std::move(cex);
    return out;
  }
  out.status = AdmStatus::BoundedAdmissible;
  out.complete = false;
  return out;
}

// ---------------------------------------------------------------------------
// Unifiability.

UnifVerdict unifiable(const LogicSpec& L, const Formula& f) {
  Context ctx = closure({f});
  UnifVerdict out;

  // Variable-free formulas: unifiable exactly when derivable.
  if (ctx.vars().empty()) {
    DerivVerdict dv = derives(L, f);
    if (dv.derivable) {
      out.status = UnifStatus::Unifiable;
      out.witness = Substitution{};
    } else {
      out.status = UnifStatus::NotUnifiable;
      if (dv.countermodel) out.valuation = dv.countermodel;
    }
    return out;
  }

  // Finite depth: the complete engines.
  if (L.depth_bound != kUnbounded && !L.base.empty()) {
    if (L.linear) {
      try {
        AdmVerdict av = admissible_bddp(L, Rule{{f}, {}});
        if (av.status == AdmStatus::Inadmissible) {
          out.status = UnifStatus::Unifiable;
          out.valuation = av.counterexample;
        } else {
          out.status = UnifStatus::NotUnifiable;
        }
        return out;
      } catch (const BudgetError&) {
      }
    } else {
      try {
        UniversalFrameLevel U =
            universal_frame(L, ctx.pars(), L.depth_bound);
        auto m = brute_valuation_unify(L, f, U.model);
        if (m) {
          out.status = UnifStatus::Unifiable;
          out.valuation = std::move(m);
          return out;
        }
        if (L.width_bound != kUnbounded &&
            L.max_cluster_size() != kUnbounded) {
          out.status = UnifStatus::NotUnifiable;
          return out;
        }
      } catch (const BudgetError&) {
      }
    }
  }

  // Constant-substitution probe: cheap positive certificates.
  if (ctx.vars().size() <= 4) {
    for (uint64_t t = 0; t < (uint64_t{1} << ctx.vars().size()); ++t) {
      Substitution s;
      for (size_t i = 0; i < ctx.vars().size(); ++i)
        s.set(ctx.vars()[i],
              (t >> i & 1) ? Formula::top() : Formula::bot());
      try {
        if (derives(L, s(f)).derivable) {
          out.status = UnifStatus::Unifiable;
          out.witness = std::move(s);
          return out;
        }
      } catch (const std::invalid_argument&) {
        break;
      } catch (const BudgetError&) {
        break;
      }
    }
  }

  // General bounded search via the admissibility duality.
  unsigned n = ctx.n();
  unsigned cap = 2 * n < 3 ? (1u << (2 * n)) : 5;
  try {
    AdmVerdict av = admissible_clx(L, Rule{{f}, {}}, cap);
    if (av.status == AdmStatus::Inadmissible) {
      out.status = UnifStatus::Unifiable;
      out.valuation = av.counterexample;
      return out;
    }
    if (av.status == AdmStatus::Admissible && av.complete) {
      out.status = UnifStatus::NotUnifiable;
      return out;
    }
  } catch (const BudgetError&) {
  }
  out.status = UnifStatus::BoundedUnknown;
  return out;
}

}  // namespace tml
