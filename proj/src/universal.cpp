#include "tml/universal.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tml/context.hpp"

namespace tml {

namespace {

// Staged construction state. Within one stage the previous level is frozen:
// candidate point sets X range over its upward-closed subsets only, so new
// clusters can be placed the moment a candidate survives the checks.
struct UniversalBuilder {
  const LogicSpec& logic;
  std::vector<unsigned> params;
  unsigned nt;  // number of parameter assignments
  unsigned point_budget;
  uint64_t work_budget;
  uint64_t work = 0;

  std::vector<std::vector<bool>> lt;  // strict order, kept transitively closed
  std::vector<bool> refl;
  std::vector<TightPedigree> ped;
  std::vector<std::string> names;
  std::vector<unsigned> stage_points{0};

  // Pedigree keys (X, RI, E) of clusters placed so far, and the X already
  // swept in full; both persist across stages, so a set that was upward
  // closed in an earlier level is skipped in one lookup.
  std::set<std::tuple<std::vector<unsigned>, bool, uint64_t>> keys;
  std::set<std::vector<unsigned>> swept;

  unsigned stage = 0;
  // Snapshot of the previous level.
  unsigned base_n = 0;
  FrameStats st;
  std::vector<unsigned> order;       // cluster positions, maximal clusters first
  std::vector<unsigned> cone_depth;  // longest cluster chain from c upward, inclusive
  std::vector<bool> chosen;          // cluster -> currently in X

  UniversalBuilder(const LogicSpec& l, std::vector<unsigned> ps, unsigned budget)
      : logic(l),
        params(std::move(ps)),
        nt(1u << params.size()),
        point_budget(budget),
        work_budget(std::max<uint64_t>(uint64_t{1} << 18, 64 * uint64_t{budget})) {}

  std::string stats() const {
    std::string s = " (level sizes so far:";
    for (unsigned c : stage_points) s += " " + std::to_string(c);
    s += "; " + std::to_string(lt.size()) + " points placed)";
    return s;
  }

  void spend_work() {
    if (++work > work_budget)
      throw BudgetError("universal frame: exploration budget exceeded at stage " +
                        std::to_string(stage) + stats());
  }

  Frame level_frame() const {
    Frame f(static_cast<unsigned>(lt.size()));
    for (unsigned i = 0; i < lt.size(); ++i) {
      f.set_refl(i, refl[i]);
      for (unsigned j = 0; j < lt.size(); ++j)
        if (lt[i][j]) f.add_lt(i, j);
    }
    return f;
  }

  void run_stage(unsigned s) {
    stage = s;
    base_n = static_cast<unsigned>(lt.size());
    st = analyze(level_frame());
    unsigned cn = static_cast<unsigned>(st.clusters.size());

    std::vector<unsigned> above_count(cn, 0);
    for (unsigned c = 0; c < cn; ++c)
      for (unsigned d = 0; d < cn; ++d)
        if (st.cluster_lt[c][d]) ++above_count[c];
    order.resize(cn);
    for (unsigned c = 0; c < cn; ++c) order[c] = c;
    // Transitivity makes ancestor counts strictly increase downward, so this
    // puts every cluster after everything above it.
    std::stable_sort(order.begin(), order.end(),
                     [&](unsigned a, unsigned b) { return above_count[a] < above_count[b]; });
    cone_depth.assign(cn, 1);
    for (unsigned c : order)
      for (unsigned d = 0; d < cn; ++d)
        if (st.cluster_lt[c][d]) cone_depth[c] = std::max(cone_depth[c], cone_depth[d] + 1);

    chosen.assign(cn, false);
    descend(0);
    stage_points.push_back(static_cast<unsigned>(lt.size()));
  }

  // Enumerates the upward-closed cluster sets of the previous level,
  // smaller-first along each branch (a cluster is excluded before it is
  // included), and hands each complete set to sweep_set.
  void descend(unsigned i) {
    spend_work();
    if (i == order.size()) {
      sweep_set();
      return;
    }
    descend(i + 1);
    unsigned c = order[i];
    for (unsigned d = 0; d < chosen.size(); ++d)
      if (st.cluster_lt[c][d] && !chosen[d]) return;  // not upward closed
    // A cluster this deep makes every candidate cone exceed the depth bound,
    // with any extension, so the whole branch is fruitless.
    if (logic.depth_bound != kUnbounded && cone_depth[c] >= logic.depth_bound) return;
    chosen[c] = true;
    descend(i + 1);
    chosen[c] = false;
  }

  void sweep_set() {
    std::vector<unsigned> xpts;
    for (unsigned c = 0; c < chosen.size(); ++c)
      if (chosen[c]) xpts.insert(xpts.end(), st.clusters[c].begin(), st.clusters[c].end());
    std::sort(xpts.begin(), xpts.end());
    if (swept.count(xpts)) return;

    // The tight-predecessor exception: when X is rooted in a reflexive
    // cluster realizing every assignment of E, that cluster already contains
    // a tight predecessor of X, so no candidate with that E is placed.
    bool rooted_refl = false;
    uint64_t realized = 0;
    unsigned minimal = 0, root = 0;
    for (unsigned c = 0; c < chosen.size() && minimal < 2; ++c) {
      if (!chosen[c]) continue;
      bool has_below = false;
      for (unsigned d = 0; d < chosen.size() && !has_below; ++d)
        if (chosen[d] && st.cluster_lt[d][c]) has_below = true;
      if (!has_below) {
        ++minimal;
        root = c;
      }
    }
    if (minimal == 1 && st.cluster_refl[root]) {
      rooted_refl = true;
      for (unsigned p : st.clusters[root]) realized |= uint64_t{1} << ped[p].assignment;
    }

    for (uint64_t t = 0; t < nt; ++t) try_place(xpts, false, uint64_t{1} << t, rooted_refl, realized);
    for (uint64_t e = 1; e < (uint64_t{1} << nt); ++e) try_place(xpts, true, e, rooted_refl, realized);
    swept.insert(std::move(xpts));
  }

  void try_place(const std::vector<unsigned>& xpts, bool is_refl, uint64_t emask,
                 bool rooted_refl, uint64_t realized) {
    spend_work();
    if (rooted_refl && (emask & ~realized) == 0) return;
    auto key = std::make_tuple(xpts, is_refl, emask);
    if (keys.count(key)) return;

    unsigned nx = static_cast<unsigned>(xpts.size());
    unsigned esz = static_cast<unsigned>(std::popcount(emask));
    Frame cone(nx + esz);
    for (unsigned i = 0; i < nx; ++i) {
      cone.set_refl(i, refl[xpts[i]]);
      for (unsigned j = 0; j < nx; ++j)
        if (lt[xpts[i]][xpts[j]]) cone.add_lt(i, j);
    }
    for (unsigned a = 0; a < esz; ++a) {
      cone.set_refl(nx + a, is_refl);
      for (unsigned j = 0; j < nx; ++j) cone.add_lt(nx + a, j);
      if (is_refl)
        for (unsigned b = 0; b < esz; ++b)
          if (b != a) cone.add_lt(nx + a, nx + b);
    }
    if (!is_L_frame(logic, cone)) return;

    if (lt.size() + esz > point_budget)
      throw BudgetError("universal frame: point budget of " + std::to_string(point_budget) +
                        " exceeded at stage " + std::to_string(stage) + stats());

    unsigned first = static_cast<unsigned>(lt.size());
    std::vector<unsigned> members(esz);
    for (unsigned a = 0; a < esz; ++a) members[a] = first + a;
    std::vector<uint64_t> evals;
    for (uint64_t t = 0; t < nt; ++t)
      if (emask >> t & 1) evals.push_back(t);

    unsigned grown = first + esz;
    for (auto& row : lt) row.resize(grown, false);
    for (unsigned a = 0; a < esz; ++a) {
      lt.emplace_back(grown, false);
      refl.push_back(is_refl);
    }
    for (unsigned a = 0; a < esz; ++a) {
      unsigned self = first + a;
      for (unsigned j : xpts) lt[self][j] = true;
      if (is_refl)
        for (unsigned b : members)
          if (b != self) lt[self][b] = true;
      TightPedigree tp;
      tp.stage = stage;
      tp.refl = is_refl;
      tp.above = xpts;
      tp.evals = evals;
      tp.assignment = evals[a];
      tp.cluster = members;
      ped.push_back(std::move(tp));
      names.push_back("s" + std::to_string(stage) + "." + std::to_string(self - base_n));
    }
    keys.insert(std::move(key));
  }
};

}  // namespace

UniversalFrameLevel universal_frame(const LogicSpec& L, const std::vector<unsigned>& params,
                                    unsigned stages, unsigned point_budget) {
  std::vector<unsigned> ps = params;
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  if (ps.size() > 4)
    throw std::invalid_argument(
        "universal_frame: more than 4 parameters (the final-cluster catalogue alone has 2^16 "
        "entries)");

  UniversalBuilder b(L, ps, point_budget);
  for (unsigned s = 1; s <= stages; ++s) b.run_stage(s);

  UniversalFrameLevel u;
  u.logic = L;
  u.params = std::move(ps);
  u.stages = stages;
  u.model = Model(b.level_frame());
  unsigned n = u.model.frame().size();
  for (unsigned i = 0; i < u.params.size(); ++i) {
    std::vector<bool> bits(n, false);
    for (unsigned w = 0; w < n; ++w) bits[w] = b.ped[w].assignment >> i & 1;
    u.model.set_par(u.params[i], std::move(bits));
  }
  u.pedigree = std::move(b.ped);
  u.names = std::move(b.names);
  u.stage_points = std::move(b.stage_points);
  return u;
}

Formula beta_formula(const UniversalFrameLevel& U, unsigned point) {
  if (!U.params.empty())
    throw std::invalid_argument("beta_formula: defined only for parameter-free levels");
  const Frame& f = U.model.frame();
  if (point >= f.size()) throw std::invalid_argument("beta_formula: point out of range");
  // Parameter-free levels have singleton clusters, so strict successors all
  // carry smaller ids and one ascending pass fills the table.
  std::vector<Formula> beta(point + 1);
  for (unsigned u = 0; u <= point; ++u) {
    std::vector<Formula> dias, bodies;
    for (unsigned v : f.successors(u)) {
      dias.push_back(Formula::dia(beta[v]));
      bodies.push_back(beta[v]);
    }
    if (!f.refl(u)) {
      std::vector<Formula> parts = dias;
      parts.push_back(Formula::box(Formula::disj_all(std::span<const Formula>(bodies))));
      beta[u] = Formula::conj_all(std::span<const Formula>(parts));
    } else {
      Formula inner = Formula::conj_all(std::span<const Formula>(dias));
      Formula rest =
          Formula::disj(Formula::disj_all(std::span<const Formula>(bodies)), Formula::dia(inner));
      beta[u] = Formula::conj(Formula::dia(inner), Formula::box(rest));
    }
  }
  return beta[point];
}

}  // namespace tml
