#include "tml/derivability.hpp"

#include <algorithm>
#include <bit>
#include <span>
#include <stdexcept>
#include <string>

namespace tml {

namespace {

// Supersets of X inside full, ordered by size then numeric value; stops and
// returns true when the callback does.
template <typename F>
bool for_supersets_by_size(uint32_t X, uint32_t full, F&& f) {
  uint32_t free = full & ~X;
  unsigned fb[32];
  unsigned nf = 0;
  for (unsigned b = 0; b < 32; ++b)
    if (free >> b & 1) fb[nf++] = b;
  for (unsigned s = 0; s <= nf; ++s) {
    if (s == 0) {
      if (f(X)) return true;
      continue;
    }
    uint32_t sub = (1u << s) - 1;
    while (true) {
      uint32_t y = X;
      for (uint32_t t = sub; t; t &= t - 1) y |= 1u << fb[std::countr_zero(t)];
      if (f(y)) return true;
      if (sub == ((1u << s) - 1) << (nf - s)) break;
      uint32_t c = sub & (~sub + 1);
      uint32_t r = sub + c;
      sub = r | (((sub ^ r) >> 2) / c);
    }
  }
  return false;
}

// Subsets of mask in ascending numeric order (0 and mask included).
template <typename F>
bool for_subsets_ascending(uint32_t mask, F&& f) {
  for (uint32_t s = 0;; s = (s - mask) & mask) {
    if (f(s)) return true;
    if (s == mask) break;
  }
  return false;
}

}  // namespace

SatSearch::SatSearch(const Context& ctx, const LogicSpec& logic)
    : ctx_(ctx), logic_(logic) {
  if (logic_.base.empty())
    throw std::invalid_argument("logic '" + logic_.name +
                                "' has no base; the S-recursion only covers "
                                "base-defined logics");
  if (!logic_.forbidden_reducts.empty() || logic_.width_bound != kUnbounded)
    throw std::invalid_argument(
        "logic '" + logic_.name +
        "' carries forbidden reducts or a width bound; such logics are not "
        "base-defined and route to the oracle procedures");
  nb_ = static_cast<unsigned>(ctx_.boxed().size());
  nvars_ = static_cast<unsigned>(ctx_.vars().size());
  npars_ = static_cast<unsigned>(ctx_.pars().size());
  if (nb_ > 22)
    throw BudgetError("derivability budget: |B| = " + std::to_string(nb_) +
                      " boxed kernels exceeds 22");
  if (nvars_ + npars_ > 20)
    throw BudgetError("derivability budget: " +
                      std::to_string(nvars_ + npars_) + " atoms exceed 20");
  nwords_ = 1u << (nvars_ + npars_);
  full_ = nb_ ? (1u << nb_) - 1 : 0;
  // Realized sets strictly grow along a chain of clusters, so depth budgets
  // past |B|+1 change nothing and collapse to the unbounded mode.
  levels_ = (logic_.depth_bound == kUnbounded || logic_.depth_bound > nb_)
                ? 0
                : logic_.depth_bound;
  dense_ = nb_ + nvars_ + npars_ <= 22;
  if (dense_) {
    dense_rows_.assign((size_t(full_) + 1) << (nvars_ + npars_), 0);
    dense_ok_.assign(size_t(full_) + 1, 0);
  }
}

// Truth of every boxed kernel under A(word, Z), one bit per kernel.
const uint32_t* SatSearch::row(uint32_t Z) {
  uint32_t* r;
  if (dense_) {
    r = &dense_rows_[size_t(Z) << (nvars_ + npars_)];
    if (dense_ok_[Z]) return r;
    dense_ok_[Z] = 1;
  } else {
    auto [it, fresh] = row_map_.try_emplace(Z);
    if (!fresh) return it->second.data();
    it->second.assign(nwords_, 0);
    r = it->second.data();
  }
  uint64_t vmask = (uint64_t(1) << nvars_) - 1;
  for (uint32_t w = 0; w < nwords_; ++w) {
    uint32_t m = 0;
    for (unsigned j = 0; j < nb_; ++j)
      if (ctx_.eval(ctx_.boxed()[j], w & vmask, w >> nvars_, Z)) m |= 1u << j;
    r[w] = m;
  }
  return r;
}

void SatSearch::prep_x(uint32_t X) {
  if (prep_ok_ && prep_x_ == X) return;
  prep_ok_ = true;
  prep_x_ = X;
  const uint32_t* r = row(X);
  vxany_ = false;
  andx_ = full_;
  for (uint32_t w = 0; w < nwords_; ++w)
    if ((r[w] & X) == X) {
      vxany_ = true;
      andx_ &= r[w];
    }
}

void SatSearch::run_sweep() {
  if (swept_) return;
  swept_ = true;
  if (levels_ == 0) {
    tables_.emplace_back(size_t(full_) + 1, int8_t{0});
    sweep_level(tables_[0], &tables_[0]);
  } else {
    tables_.assign(levels_, {});
    for (unsigned l = 0; l < levels_; ++l) {
      tables_[l].assign(size_t(full_) + 1, 0);
      sweep_level(tables_[l], l ? &tables_[l - 1] : nullptr);
    }
  }
}

// Evaluates every cell in descending mask order: children realize strictly
// larger sets, so in the self-referential mode they are already final.
void SatSearch::sweep_level(std::vector<int8_t>& cur,
                            const std::vector<int8_t>* deeper) {
  for (uint32_t X = full_;; --X) {
    cur[X] = eval_cell(X, deeper) ? 1 : 0;
    if (X == 0) break;
  }
}

bool SatSearch::eval_cell(uint32_t X, const std::vector<int8_t>* deeper) {
  prep_x(X);
  return for_supersets_by_size(X, full_, [&](uint32_t Y) {
    for (const ExtensionCondition& c : logic_.base)
      if (h_holds(c, X, Y) && u_holds(c, X, Y, deeper)) return true;
    return false;
  });
}

bool SatSearch::h_holds(const ExtensionCondition& c, uint32_t X, uint32_t Y) {
  uint32_t diff = Y & ~X;
  if (!c.refl) {
    // Irreflexive root point: boxes read from Y.
    const uint32_t* r = row(Y);
    for (uint32_t w = 0; w < nwords_; ++w)
      if ((r[w] & X) == X && (r[w] & diff) == 0) return true;
    return false;
  }
  // Reflexive root cluster: boxes read from X.
  if (!vxany_) return false;
  if (c.size == kUnbounded) return (diff & andx_) == 0;
  if (c.size == 1) {
    const uint32_t* r = row(X);
    for (uint32_t w = 0; w < nwords_; ++w)
      if ((r[w] & X) == X && (r[w] & diff) == 0) return true;
    return false;
  }
  if ((diff & andx_) != 0) return false;
  return cover_words(X, diff, c.size, nullptr);
}

bool SatSearch::u_holds(const ExtensionCondition& c, uint32_t X, uint32_t Y,
                        const std::vector<int8_t>* deeper) {
  // Zero successors: the empty sum vacuously realizes all of B. Every
  // condition dominates the corresponding final-cluster type.
  if (Y == full_) return true;
  if (deeper == nullptr) return false;  // depth budget allows no successors
  unsigned m = c.branching;
  if (m == 0) return false;
  const std::vector<int8_t>& tbl = *deeper;
  if (m == 1) return Y != X && tbl[Y] == 1;
  if (m == kUnbounded) {
    ensure_avoid(X, tbl);
    return (full_ & ~Y & ~avoid_[Y]) == 0;
  }
  return cover_children(X, Y, full_ & ~Y, m, tbl, nullptr);
}

// avoid_[Y] = union of B\Z over satisfiable Z with Y <= Z, Z != X: the
// kernels a child family above Y can jointly leave out. Built per X by a
// superset-OR sweep over the free bits.
void SatSearch::ensure_avoid(uint32_t X, const std::vector<int8_t>& tbl) {
  if (avoid_ok_ && avoid_x_ == X && avoid_tbl_ == &tbl) return;
  avoid_ok_ = true;
  avoid_x_ = X;
  avoid_tbl_ = &tbl;
  if (avoid_.size() != size_t(full_) + 1) avoid_.resize(size_t(full_) + 1);
  uint32_t free = full_ & ~X;
  for_subsets_ascending(free, [&](uint32_t s) {
    uint32_t Z = X | s;
    avoid_[Z] = (Z != X && tbl[Z] == 1) ? (full_ & ~Z) : 0;
    return false;
  });
  for (unsigned b = 0; b < nb_; ++b) {
    if (!(free >> b & 1)) continue;
    uint32_t bb = 1u << b;
    uint32_t rest = free & ~bb;
    for_subsets_ascending(rest, [&](uint32_t s) {
      avoid_[X | s] |= avoid_[(X | s) | bb];
      return false;
    });
  }
}

// At most `budget` satisfiable sets Z >= Y (Z != X) jointly avoiding every
// kernel in `uncovered`; lexicographically first solution when out is set.
bool SatSearch::cover_children(uint32_t X, uint32_t Y, uint32_t uncovered,
                               unsigned budget, const std::vector<int8_t>& tbl,
                               std::vector<uint32_t>* out) {
  if (uncovered == 0) return true;
  if (budget == 0) return false;
  unsigned chi = std::countr_zero(uncovered);
  uint32_t dom = full_ & ~Y & ~(1u << chi);
  return for_subsets_ascending(dom, [&](uint32_t s) {
    uint32_t Z = Y | s;
    if (Z == X || tbl[Z] != 1) return false;
    if (out) out->push_back(Z);
    if (cover_children(X, Y, uncovered & Z, budget - 1, tbl, out)) return true;
    if (out) out->pop_back();
    return false;
  });
}

// At most `budget` words satisfying all of X under A(.,X) that jointly
// falsify every kernel in `targets`.
bool SatSearch::cover_words(uint32_t X, uint32_t targets, unsigned budget,
                            std::vector<uint32_t>* out) {
  if (targets == 0) return true;
  if (budget == 0) return false;
  unsigned chi = std::countr_zero(targets);
  const uint32_t* r = row(X);
  for (uint32_t w = 0; w < nwords_; ++w) {
    if ((r[w] & X) != X || (r[w] >> chi & 1)) continue;
    if (out) out->push_back(w);
    if (cover_words(X, targets & r[w], budget - 1, out)) return true;
    if (out) out->pop_back();
  }
  return false;
}

// Successor realizations for the branches with at least one child; Y < full.
bool SatSearch::u_children(const ExtensionCondition& c, uint32_t X, uint32_t Y,
                           const std::vector<int8_t>& tbl,
                           std::vector<uint32_t>& kids) {
  unsigned m = c.branching;
  if (m == 0) return false;
  if (m == 1) {
    if (Y == X || tbl[Y] != 1) return false;
    kids = {Y};
    return true;
  }
  if (m == kUnbounded) {
    ensure_avoid(X, tbl);
    if ((full_ & ~Y & ~avoid_[Y]) != 0) return false;
    for (uint32_t need = full_ & ~Y; need; need &= need - 1) {
      unsigned chi = std::countr_zero(need);
      uint32_t dom = full_ & ~Y & ~(1u << chi);
      for_subsets_ascending(dom, [&](uint32_t s) {
        uint32_t Z = Y | s;
        if (Z == X || tbl[Z] != 1) return false;
        kids.push_back(Z);
        return true;
      });
    }
  } else {
    if (!cover_children(X, Y, full_ & ~Y, m, tbl, &kids)) return false;
  }
  std::sort(kids.begin(), kids.end());
  kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
  return true;
}

// Root cluster valuations for a winning (C, X, Y): the least irreflexive
// witness, the least per-kernel falsifiers for unbounded clusters, or the
// first (minimize: smallest, then first) covering word set for capped ones.
std::vector<uint32_t> SatSearch::extract_words(const ExtensionCondition& c,
                                               uint32_t X, uint32_t Y,
                                               bool minimize) {
  uint32_t diff = Y & ~X;
  std::vector<uint32_t> ws;
  if (!c.refl || c.size == 1 || diff == 0) {
    const uint32_t* r = row(c.refl ? X : Y);
    for (uint32_t w = 0; w < nwords_; ++w)
      if ((r[w] & X) == X && (r[w] & diff) == 0) {
        ws.push_back(w);
        break;
      }
  } else if (minimize || c.size != kUnbounded) {
    unsigned cap = std::min<unsigned>(std::popcount(diff),
                                      c.size == kUnbounded ? 32 : c.size);
    for (unsigned sz = 1; sz <= cap; ++sz) {
      if (cover_words(X, diff, sz, &ws)) break;
      ws.clear();
    }
  } else {
    const uint32_t* r = row(X);
    for (uint32_t bits = diff; bits; bits &= bits - 1) {
      unsigned chi = std::countr_zero(bits);
      for (uint32_t w = 0; w < nwords_; ++w)
        if ((r[w] & X) == X && !(r[w] >> chi & 1)) {
          ws.push_back(w);
          break;
        }
    }
  }
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  return ws;
}

unsigned SatSearch::min_cluster(const ExtensionCondition& c, uint32_t X,
                                uint32_t Y) {
  uint32_t diff = Y & ~X;
  if (!c.refl || diff == 0) return 1;
  unsigned cap = std::min<unsigned>(std::popcount(diff),
                                    c.size == kUnbounded ? 32 : c.size);
  for (unsigned sz = 1; sz < cap; ++sz)
    if (cover_words(X, diff, sz, nullptr)) return sz;
  return cap;
}

// First witness in canonical order: Y by (size, mask), then base order,
// with the zero-successor branch ahead of child branches at Y = B.
std::optional<SWitness> SatSearch::witness_at(uint32_t X, unsigned level) {
  const std::vector<int8_t>* deeper = deeper_for(level);
  prep_x(X);
  std::optional<SWitness> out;
  for_supersets_by_size(X, full_, [&](uint32_t Y) {
    for (unsigned ci = 0; ci < logic_.base.size(); ++ci) {
      const ExtensionCondition& c = logic_.base[ci];
      if (!h_holds(c, X, Y)) continue;
      if (Y == full_) {
        out = SWitness{ci, Y, true, {}, extract_words(c, X, Y, false)};
        return true;
      }
      if (!deeper) continue;
      std::vector<uint32_t> kids;
      if (!u_children(c, X, Y, *deeper, kids)) continue;
      out = SWitness{ci, Y, false, std::move(kids), extract_words(c, X, Y, false)};
      return true;
    }
    return false;
  });
  return out;
}

// Minimum points of a witness model; single-table (unbounded depth) mode.
uint32_t SatSearch::min_points(uint32_t X) {
  if (minpts_.empty()) minpts_.assign(size_t(full_) + 1, UINT32_MAX);
  if (minpts_[X] != UINT32_MAX) return minpts_[X];
  const std::vector<int8_t>& tbl = tables_[0];
  struct Cand {
    unsigned cluster;
    std::vector<uint32_t> kids;
  };
  std::vector<Cand> cands;
  prep_x(X);
  for_supersets_by_size(X, full_, [&](uint32_t Y) {
    for (const ExtensionCondition& c : logic_.base) {
      if (!h_holds(c, X, Y)) continue;
      if (Y == full_) {
        cands.push_back({min_cluster(c, X, Y), {}});
        continue;
      }
      std::vector<uint32_t> kids;
      if (u_children(c, X, Y, tbl, kids))
        cands.push_back({min_cluster(c, X, Y), std::move(kids)});
    }
    return false;
  });
  uint64_t best = UINT32_MAX;
  for (const Cand& cd : cands) {
    uint64_t tot = cd.cluster;
    for (uint32_t z : cd.kids) tot += min_points(z);
    best = std::min(best, tot);
  }
  minpts_[X] = static_cast<uint32_t>(best);
  return minpts_[X];
}

// Points-minimal witness (linear bases); ties go to the canonical order.
std::optional<SWitness> SatSearch::best_witness_at(uint32_t X) {
  const std::vector<int8_t>& tbl = tables_[0];
  prep_x(X);
  std::vector<SWitness> cands;
  for_supersets_by_size(X, full_, [&](uint32_t Y) {
    for (unsigned ci = 0; ci < logic_.base.size(); ++ci) {
      const ExtensionCondition& c = logic_.base[ci];
      if (!h_holds(c, X, Y)) continue;
      if (Y == full_) {
        cands.push_back(SWitness{ci, Y, true, {}, extract_words(c, X, Y, true)});
        continue;
      }
      std::vector<uint32_t> kids;
      if (u_children(c, X, Y, tbl, kids))
        cands.push_back(
            SWitness{ci, Y, false, std::move(kids), extract_words(c, X, Y, true)});
    }
    return false;
  });
  std::optional<SWitness> out;
  uint64_t best = UINT64_MAX;
  for (SWitness& w : cands) {
    uint64_t tot = w.words.size();
    for (uint32_t z : w.children) tot += min_points(z);
    if (tot < best) {
      best = tot;
      out = std::move(w);
    }
  }
  return out;
}

Model SatSearch::materialize_at(uint32_t X, unsigned level, bool minimize) {
  std::optional<SWitness> w =
      minimize ? best_witness_at(X) : witness_at(X, level);
  if (!w) throw std::logic_error("materialize: no witness for a true cell");
  const ExtensionCondition& c = logic_.base[w->condition];
  std::vector<Model> kids;
  kids.reserve(w->children.size());
  for (uint32_t Z : w->children)
    kids.push_back(materialize_at(Z, child_level(level), minimize));
  unsigned cn = static_cast<unsigned>(w->words.size());
  unsigned total = cn;
  std::vector<unsigned> off;
  for (const Model& km : kids) {
    off.push_back(total);
    total += km.frame().size();
  }
  Frame f(total);
  for (unsigned i = 0; i < cn; ++i) {
    if (c.refl) f.set_refl(i, true);
    for (unsigned j = 0; j < cn; ++j)
      if (i != j) f.add_lt(i, j);
    for (unsigned q = cn; q < total; ++q) f.add_lt(i, q);
  }
  for (size_t k = 0; k < kids.size(); ++k) {
    const Frame& kf = kids[k].frame();
    for (unsigned a = 0; a < kf.size(); ++a) {
      f.set_refl(off[k] + a, kf.refl(a));
      for (unsigned b = 0; b < kf.size(); ++b)
        if (kf.lt(a, b)) f.add_lt(off[k] + a, off[k] + b);
    }
  }
  Model out(std::move(f));
  for (unsigned i = 0; i < nvars_ + npars_; ++i) {
    std::vector<bool> col(total, false);
    for (unsigned p = 0; p < cn; ++p) col[p] = w->words[p] >> i & 1;
    for (size_t k = 0; k < kids.size(); ++k) {
      const auto& rows = i < nvars_ ? kids[k].vars() : kids[k].pars();
      const std::vector<bool>& kcol =
          rows.at(i < nvars_ ? ctx_.vars()[i] : ctx_.pars()[i - nvars_]);
      for (unsigned a = 0; a < kcol.size(); ++a) col[off[k] + a] = kcol[a];
    }
    if (i < nvars_)
      out.set_var(ctx_.vars()[i], std::move(col));
    else
      out.set_par(ctx_.pars()[i - nvars_], std::move(col));
  }
  return out;
}

const std::vector<int8_t>* SatSearch::deeper_for(unsigned level) const {
  if (levels_ == 0) return &tables_[0];
  return level == 0 ? nullptr : &tables_[level - 1];
}

bool SatSearch::solve(uint32_t X) {
  if (X & ~full_)
    throw std::invalid_argument("solve_S: X is not a subset of B");
  run_sweep();
  return tables_.back()[X] == 1;
}

std::optional<SWitness> SatSearch::witness(uint32_t X) {
  if (!solve(X)) return std::nullopt;
  return witness_at(X, top_level());
}

Model SatSearch::materialize(uint32_t X, bool minimize) {
  if (!solve(X))
    throw std::invalid_argument("materialize: S(X) is false");
  return materialize_at(X, top_level(),
                        minimize && logic_.linear && levels_ == 0);
}

SolveResult solve_S(const Context& ctx, const LogicSpec& logic, uint32_t X) {
  SatSearch search(ctx, logic);
  SolveResult r;
  r.value = search.solve(X);
  if (r.value) r.witness = search.witness(X);
  return r;
}

DerivVerdict derives(const LogicSpec& logic, const std::vector<Formula>& gamma,
                     const std::vector<Formula>& delta,
                     const DeriveOptions& opts) {
  if (delta.empty())
    throw std::invalid_argument("derives: conclusion set is empty");
  DerivVerdict v;
  bool have_counter = false;
  for (const Formula& d : delta) {
    Formula xi = d;
    if (!gamma.empty())
      xi = Formula::imp(
          Formula::boxdot(Formula::conj_all(std::span<const Formula>(gamma))),
          d);
    Context ctx = closure({Formula::box(xi)});
    SatSearch search(ctx, logic);
    uint32_t allowed = search.full() & ~(1u << ctx.boxed_pos(xi));
    std::optional<uint32_t> refuting;
    for_supersets_by_size(0, allowed, [&](uint32_t X) {
      if (!search.solve(X)) return false;
      refuting = X;
      return true;
    });
    if (!refuting) {
      v.derivable = true;
      v.countermodel.reset();
      v.root = 0;
      return v;
    }
    if (have_counter) continue;
    have_counter = true;
    Model m = search.materialize(*refuting, opts.linear_tight);
    Evaluator ev(m);
    const std::vector<bool>& vals = ev.values(xi);
    unsigned u = 0;
    while (u < vals.size() && vals[u]) ++u;
    if (u == vals.size())
      throw std::logic_error("derives: witness model fails to refute");
    std::vector<unsigned> pts = cone_points(m.frame(), u);
    Model cm(cone(m.frame(), u));
    for (const auto& [idx, col] : m.vars()) {
      std::vector<bool> sub(pts.size());
      for (size_t a = 0; a < pts.size(); ++a) sub[a] = col[pts[a]];
      cm.set_var(idx, std::move(sub));
    }
    for (const auto& [idx, col] : m.pars()) {
      std::vector<bool> sub(pts.size());
      for (size_t a = 0; a < pts.size(); ++a) sub[a] = col[pts[a]];
      cm.set_par(idx, std::move(sub));
    }
    unsigned root = static_cast<unsigned>(
        std::lower_bound(pts.begin(), pts.end(), u) - pts.begin());
    if (!is_L_frame(logic, cm.frame()))
      throw std::logic_error("derives: countermodel frame fails the logic");
    if (model_check(cm, root, xi))
      throw std::logic_error("derives: countermodel fails to refute at root");
    v.countermodel = std::move(cm);
    v.root = root;
  }
  v.derivable = false;
  return v;
}

DerivVerdict derives(const LogicSpec& logic, const Formula& f,
                     const DeriveOptions& opts) {
  return derives(logic, {}, {f}, opts);
}

}  // namespace tml
