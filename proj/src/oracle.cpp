#include "tml/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <unordered_map>
#include <utility>

namespace tml {

namespace {

// Cluster-level view sufficient to reconstruct a frame: cluster sizes,
// reflexivity, and the strict order between clusters.
struct Clusters {
  std::vector<unsigned> size;
  std::vector<bool> refl;
  std::vector<std::vector<bool>> lt;

  unsigned points() const {
    unsigned n = 0;
    for (unsigned s : size) n += s;
    return n;
  }
};

Clusters clusters_of(const Frame& F) {
  FrameStats st = analyze(F);
  Clusters c;
  size_t k = st.clusters.size();
  c.size.resize(k);
  c.refl.resize(k);
  c.lt = st.cluster_lt;
  for (size_t i = 0; i < k; ++i) {
    c.size[i] = static_cast<unsigned>(st.clusters[i].size());
    c.refl[i] = st.cluster_refl[i] || c.size[i] > 1;
  }
  return c;
}

Frame build_frame(const Clusters& c, const std::vector<int>& order) {
  size_t k = c.size.size();
  Frame F(c.points());
  std::vector<unsigned> offset(k);
  unsigned at = 0;
  for (size_t pos = 0; pos < k; ++pos) {
    offset[pos] = at;
    at += c.size[order[pos]];
  }
  for (size_t a = 0; a < k; ++a) {
    unsigned sa = c.size[order[a]];
    for (unsigned i = 0; i < sa; ++i) {
      F.set_refl(offset[a] + i, c.refl[order[a]]);
      for (unsigned j = 0; j < sa; ++j)
        if (i != j) F.add_lt(offset[a] + i, offset[a] + j);
    }
    for (size_t b = 0; b < k; ++b) {
      if (a == b || !c.lt[order[a]][order[b]]) continue;
      for (unsigned i = 0; i < sa; ++i)
        for (unsigned j = 0; j < c.size[order[b]]; ++j)
          F.add_lt(offset[a] + i, offset[b] + j);
    }
  }
  return F;
}

// Finds the cluster order minimizing the placement encoding: per placed
// cluster a label chunk (size, reflexivity) followed by its relation bits
// against the previously placed ones. Equal encodings mean isomorphic
// frames, so the minimum is a canonical form.
struct CanonSearch {
  const Clusters& c;
  std::vector<char> best;
  std::vector<int> best_order;
  std::vector<char> cur;
  std::vector<int> order;
  std::vector<bool> used;

  explicit CanonSearch(const Clusters& cl)
      : c(cl), used(cl.size.size(), false) {}

  std::vector<char> chunk_for(size_t cand) const {
    std::vector<char> out;
    out.push_back(static_cast<char>('a' + c.size[cand]));
    out.push_back(c.refl[cand] ? '1' : '0');
    for (int s : order) {
      out.push_back(c.lt[s][cand] ? '1' : '0');
      out.push_back(c.lt[cand][s] ? '1' : '0');
    }
    return out;
  }

  // Swapping a and b while fixing all other clusters is an automorphism.
  bool interchangeable(size_t a, size_t b) const {
    if (c.size[a] != c.size[b] || c.refl[a] != c.refl[b]) return false;
    if (c.lt[a][b] != c.lt[b][a]) return false;
    for (size_t d = 0; d < c.size.size(); ++d) {
      if (d == a || d == b) continue;
      if (c.lt[a][d] != c.lt[b][d] || c.lt[d][a] != c.lt[d][b]) return false;
    }
    return true;
  }

  void step() {
    size_t k = c.size.size();
    if (order.size() == k) {
      if (best.empty() || cur < best) {
        best = cur;
        best_order = order;
      }
      return;
    }
    std::vector<std::pair<std::vector<char>, size_t>> cands;
    for (size_t i = 0; i < k; ++i) {
      if (used[i]) continue;
      bool dup = false;
      for (const auto& [ch, j] : cands)
        if (interchangeable(j, i)) {
          dup = true;
          break;
        }
      if (!dup) cands.emplace_back(chunk_for(i), i);
    }
    std::sort(cands.begin(), cands.end());
    for (const auto& [ch, i] : cands) {
      size_t pos = cur.size();
      cur.insert(cur.end(), ch.begin(), ch.end());
      // Prune once the running prefix exceeds the best known encoding.
      bool worse = !best.empty() &&
                   std::lexicographical_compare(best.begin(), best.begin() + cur.size(),
                                                cur.begin(), cur.end());
      if (!worse) {
        used[i] = true;
        order.push_back(static_cast<int>(i));
        step();
        order.pop_back();
        used[i] = false;
      }
      cur.resize(pos);
    }
  }
};

std::pair<std::string, Frame> canonicalize(const Clusters& c) {
  CanonSearch search(c);
  search.step();
  return {std::string(search.best.begin(), search.best.end()),
          build_frame(c, search.best_order)};
}

}  // namespace

std::string canonical_encoding(const Frame& F) {
  if (F.size() == 0) return std::string();
  return canonicalize(clusters_of(F)).first;
}

Frame canonical_form(const Frame& F) {
  if (F.size() == 0) return F;
  return canonicalize(clusters_of(F)).second;
}

std::vector<Frame> enumerate_frames(const EnumerationSpec& spec) {
  if (spec.max_points > kMaxEnumPoints)
    throw BudgetError("frame enumeration supports at most 7 points");
  std::vector<Frame> out;
  for (unsigned n = 1; n <= spec.max_points; ++n) {
    std::map<std::string, Frame> seen;
    unsigned kmax = spec.single_cluster ? 1 : n;
    for (unsigned k = 1; k <= kmax; ++k) {
      Clusters c;
      c.size.assign(k, 0);
      c.refl.assign(k, false);
      c.lt.assign(k, std::vector<bool>(k, false));
      unsigned pairs = k * (k - 1) / 2;

      auto pair_index = [&](unsigned i, unsigned j) {
        // i < j; row-major over the upper triangle
        return i * k - i * (i + 1) / 2 + (j - i - 1);
      };

      auto with_labels = [&]() {
        if (spec.refl == EnumerationSpec::Refl::AllReflexive &&
            std::find(c.refl.begin(), c.refl.end(), false) != c.refl.end())
          return;
        if (spec.refl == EnumerationSpec::Refl::AllIrreflexive &&
            std::find(c.refl.begin(), c.refl.end(), true) != c.refl.end())
          return;
        for (uint32_t mask = 0; mask < (1u << pairs); ++mask) {
          bool ok = true;
          for (unsigned i = 0; i < k && ok; ++i)
            for (unsigned j = i + 1; j < k && ok; ++j) {
              c.lt[i][j] = (mask >> pair_index(i, j)) & 1;
              c.lt[j][i] = false;
            }
          for (unsigned i = 0; i < k && ok; ++i)
            for (unsigned j = i + 1; j < k && ok; ++j) {
              if (!c.lt[i][j]) continue;
              for (unsigned m = j + 1; m < k; ++m)
                if (c.lt[j][m] && !c.lt[i][m]) {
                  ok = false;
                  break;
                }
            }
          if (!ok) continue;
          if (spec.rooted) {
            // rooted frames always admit a layout with the root first
            bool root = true;
            for (unsigned j = 1; j < k && root; ++j)
              if (!c.lt[0][j]) root = false;
            if (!root) continue;
          }
          auto [enc, frame] = canonicalize(c);
          seen.try_emplace(std::move(enc), std::move(frame));
        }
      };

      // Assign each cluster a size (composition of n) and a reflexivity
      // flag; proper clusters are reflexive by construction.
      std::function<void(unsigned, unsigned)> assign = [&](unsigned i, unsigned left) {
        if (i == k) {
          if (left == 0) with_labels();
          return;
        }
        unsigned remaining = k - i - 1;
        for (unsigned s = 1; s + remaining <= left; ++s) {
          c.size[i] = s;
          if (s == 1) {
            c.refl[i] = false;
            assign(i + 1, left - s);
            c.refl[i] = true;
            assign(i + 1, left - s);
          } else {
            c.refl[i] = true;
            assign(i + 1, left - s);
          }
        }
      };
      assign(0, n);
    }
    for (auto& [enc, F] : seen) {
      FrameStats st = analyze(F);
      if (spec.rooted && !st.rooted) continue;
      if (spec.refl == EnumerationSpec::Refl::AllReflexive) {
        bool all = true;
        for (unsigned w = 0; w < F.size() && all; ++w)
          if (!F.sees(w, w)) all = false;
        if (!all) continue;
      }
      if (spec.refl == EnumerationSpec::Refl::AllIrreflexive) {
        bool any = false;
        for (unsigned w = 0; w < F.size() && !any; ++w)
          if (F.sees(w, w)) any = true;
        if (any) continue;
      }
      if (spec.logic && !is_L_frame(*spec.logic, F)) continue;
      out.push_back(std::move(F));
    }
  }
  return out;
}

namespace {

// Enumeration reuse across queries; refutation searches dominate otherwise.
const std::vector<Frame>& cached_frames(const LogicSpec& L, unsigned cap) {
  static std::map<std::string, std::vector<Frame>> cache;
  static std::mutex mu;
  std::string key = L.name;
  auto num = [&key](unsigned long long v) {
    key += ':';
    key += std::to_string(v);
  };
  num(cap);
  num(L.linear);
  num(L.reflexive_only);
  num(L.irreflexive_only);
  num(L.depth_bound);
  num(L.width_bound);
  num(L.cluster_bound);
  for (const ExtensionCondition& c : L.base) {
    num(c.refl);
    num(c.size);
    num(c.branching);
  }
  for (const Frame& R : L.forbidden_reducts) {
    key += '/';
    key += canonical_encoding(R);
  }
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) {
    EnumerationSpec es;
    es.max_points = cap;
    es.logic = L;
    it = cache.emplace(std::move(key), enumerate_frames(es)).first;
  }
  return it->second;
}

// Least (valuation word, point) refuting f on F.
std::optional<std::pair<uint64_t, unsigned>> bit_refute(
    const Frame& F, const Formula& f,
    const std::vector<std::pair<Conn, unsigned>>& atoms) {
  unsigned n = F.size();
  unsigned bits = static_cast<unsigned>(atoms.size()) * n;
  size_t nw = bits >= 6 ? size_t{1} << (bits - 6) : 1;
  uint64_t valid =
      bits >= 6 ? ~uint64_t{0} : (uint64_t{1} << (uint64_t{1} << bits)) - 1;
  std::vector<uint64_t> root = truth_tables(F, f, atoms);
  for (size_t iw = 0; iw < nw; ++iw) {
    uint64_t all = ~uint64_t{0};
    for (unsigned w = 0; w < n; ++w) all &= root[size_t(w) * nw + iw];
    uint64_t bad = ~all & valid;
    if (!bad) continue;
    unsigned ib = static_cast<unsigned>(std::countr_zero(bad));
    for (unsigned w = 0; w < n; ++w)
      if (!(root[size_t(w) * nw + iw] >> ib & 1))
        return std::pair<uint64_t, unsigned>{iw * 64 + ib, w};
  }
  return std::nullopt;
}

std::optional<std::pair<uint64_t, unsigned>> slow_refute(
    const Frame& F, const Formula& f,
    const std::vector<std::pair<Conn, unsigned>>& atoms) {
  unsigned n = F.size();
  size_t bits = atoms.size() * n;
  for (uint64_t word = 0; word < (uint64_t{1} << bits); ++word) {
    Model M(F);
    for (size_t a = 0; a < atoms.size(); ++a) {
      std::vector<bool> row(n);
      for (unsigned w = 0; w < n; ++w) row[w] = word >> (a * n + w) & 1;
      if (atoms[a].first == Conn::Var)
        M.set_var(atoms[a].second, std::move(row));
      else
        M.set_par(atoms[a].second, std::move(row));
    }
    Evaluator ev(M);
    const auto& vals = ev.values(f);
    for (unsigned w = 0; w < n; ++w)
      if (!vals[w]) return std::pair<uint64_t, unsigned>{word, w};
  }
  return std::nullopt;
}

}  // namespace

std::vector<uint64_t> truth_tables(
    const Frame& F, const Formula& f,
    const std::vector<std::pair<Conn, unsigned>>& atoms, const Model* fixed) {
  unsigned n = F.size();
  unsigned bits = static_cast<unsigned>(atoms.size()) * n;
  if (bits > 16) throw BudgetError("truth-table valuation space exceeds 2^16");
  size_t nw = bits >= 6 ? size_t{1} << (bits - 6) : 1;
  static constexpr uint64_t kPat[6] = {
      0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
      0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull};
  std::unordered_map<uint64_t, std::vector<uint64_t>> memo;
  std::function<const std::vector<uint64_t>&(const Formula&)> tab =
      [&](const Formula& g) -> const std::vector<uint64_t>& {
    auto hit = memo.find(g.id());
    if (hit != memo.end()) return hit->second;
    std::vector<uint64_t> t(size_t(n) * nw, 0);
    switch (g.kind()) {
      case Conn::Bot:
        break;
      case Conn::Top:
        std::fill(t.begin(), t.end(), ~uint64_t{0});
        break;
      case Conn::Var:
      case Conn::Par: {
        size_t a = 0;
        while (a < atoms.size() &&
               (atoms[a].first != g.kind() || atoms[a].second != g.index()))
          ++a;
        for (unsigned w = 0; w < n; ++w) {
          uint64_t fill = 0;
          if (a == atoms.size()) {
            if (fixed) fill = fixed->atom_value(g.kind(), g.index(), w)
                                  ? ~uint64_t{0}
                                  : uint64_t{0};
            for (size_t iw = 0; iw < nw; ++iw) t[size_t(w) * nw + iw] = fill;
            continue;
          }
          unsigned pos = static_cast<unsigned>(a) * n + w;
          for (size_t iw = 0; iw < nw; ++iw)
            t[size_t(w) * nw + iw] =
                pos < 6 ? kPat[pos]
                        : (iw >> (pos - 6) & 1 ? ~uint64_t{0} : uint64_t{0});
        }
        break;
      }
      case Conn::Neg: {
        const std::vector<uint64_t>& a1 = tab(g.lhs());
        for (size_t i = 0; i < t.size(); ++i) t[i] = ~a1[i];
        break;
      }
      case Conn::And:
      case Conn::Or:
      case Conn::Imp:
      case Conn::Iff: {
        const std::vector<uint64_t>& a1 = tab(g.lhs());
        const std::vector<uint64_t>& a2 = tab(g.rhs());
        for (size_t i = 0; i < t.size(); ++i)
          t[i] = g.kind() == Conn::And   ? a1[i] & a2[i]
                 : g.kind() == Conn::Or  ? a1[i] | a2[i]
                 : g.kind() == Conn::Imp ? ~a1[i] | a2[i]
                                         : ~(a1[i] ^ a2[i]);
        break;
      }
      case Conn::Box:
      case Conn::Dia: {
        const std::vector<uint64_t>& a1 = tab(g.lhs());
        bool box = g.kind() == Conn::Box;
        for (unsigned w = 0; w < n; ++w)
          for (size_t iw = 0; iw < nw; ++iw) {
            uint64_t acc = box ? ~uint64_t{0} : uint64_t{0};
            for (unsigned u = 0; u < n; ++u) {
              if (!F.sees(w, u)) continue;
              if (box)
                acc &= a1[size_t(u) * nw + iw];
              else
                acc |= a1[size_t(u) * nw + iw];
            }
            t[size_t(w) * nw + iw] = acc;
          }
        break;
      }
    }
    return memo.emplace(g.id(), std::move(t)).first->second;
  };
  return tab(f);
}

std::optional<Refutation> brute_countermodel(const LogicSpec& L, const Formula& f,
                                             unsigned cap) {
  if (cap > kMaxEnumPoints)
    throw BudgetError("countermodel cap exceeds the enumeration budget");
  Context ctx = closure({f});
  std::vector<std::pair<Conn, unsigned>> atoms;
  for (unsigned v : ctx.vars()) atoms.emplace_back(Conn::Var, v);
  for (unsigned p : ctx.pars()) atoms.emplace_back(Conn::Par, p);
  for (const Frame& F : cached_frames(L, cap)) {
    unsigned n = F.size();
    size_t bits = atoms.size() * n;
    if (bits > 26) throw BudgetError("valuation space too large for brute search");
    std::optional<std::pair<uint64_t, unsigned>> hit =
        bits <= 16 ? bit_refute(F, f, atoms) : slow_refute(F, f, atoms);
    if (!hit) continue;
    Model M(F);
    for (size_t a = 0; a < atoms.size(); ++a) {
      std::vector<bool> row(n);
      for (unsigned w = 0; w < n; ++w) row[w] = hit->first >> (a * n + w) & 1;
      if (atoms[a].first == Conn::Var)
        M.set_var(atoms[a].second, std::move(row));
      else
        M.set_par(atoms[a].second, std::move(row));
    }
    return Refutation{std::move(M), hit->second};
  }
  return std::nullopt;
}

std::optional<Model> brute_valuation_unify(const LogicSpec& L, const Formula& f,
                                           const Model& frame) {
  const Frame& F = frame.frame();
  if (!is_L_frame(L, F)) throw FrameError("frame does not validate the logic");
  unsigned n = F.size();
  Context ctx = closure({f});
  const std::vector<unsigned>& vars = ctx.vars();

  // Weakly connected components; truth anywhere only depends on the cone,
  // hence on the component, so each component is searched independently.
  std::vector<int> comp(n, -1);
  std::vector<std::vector<unsigned>> comps;
  for (unsigned s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::vector<unsigned> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      unsigned w = stack.back();
      stack.pop_back();
      comps[id].push_back(w);
      for (unsigned v = 0; v < n; ++v) {
        if (comp[v] >= 0 || (!F.lt(w, v) && !F.lt(v, w))) continue;
        comp[v] = id;
        stack.push_back(v);
      }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }

  Model result = frame;
  for (unsigned v : vars) result.set_var(v, std::vector<bool>(n, false));
  for (const auto& pts : comps) {
    Frame sub = generated_subframe(F, pts);
    Model m(sub);
    for (const auto& [p, bits] : frame.pars()) {
      std::vector<bool> row(pts.size());
      for (size_t i = 0; i < pts.size(); ++i) row[i] = bits[pts[i]];
      m.set_par(p, std::move(row));
    }
    size_t bits = vars.size() * pts.size();
    if (bits > 24) throw BudgetError("valuation space too large for unifier search");
    bool found = false;
    for (uint64_t word = 0; word < (uint64_t{1} << bits) && !found; ++word) {
      for (size_t a = 0; a < vars.size(); ++a) {
        std::vector<bool> row(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) row[i] = (word >> (a * pts.size() + i)) & 1;
        m.set_var(vars[a], std::move(row));
      }
      Evaluator ev(m);
      if (!ev.everywhere(f)) continue;
      found = true;
      for (size_t a = 0; a < vars.size(); ++a)
        for (size_t i = 0; i < pts.size(); ++i)
          result.set_var_at(vars[a], pts[i], m.vars().at(vars[a])[i]);
    }
    if (!found) return std::nullopt;
  }
  return result;
}

}  // namespace tml
