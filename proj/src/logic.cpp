#include "tml/logic.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace tml {

std::vector<ExtensionCondition> LogicSpec::base1() const {
  std::vector<ExtensionCondition> out;
  for (const auto& c : base)
    if (c.branching >= 1) out.push_back(c);
  return out;
}

bool LogicSpec::has_irr() const {
  return std::any_of(base.begin(), base.end(),
                     [](const ExtensionCondition& c) { return !c.refl; });
}

bool LogicSpec::has_refl() const {
  return std::any_of(base.begin(), base.end(),
                     [](const ExtensionCondition& c) { return c.refl; });
}

unsigned LogicSpec::max_cluster_size() const {
  unsigned m = base.empty() ? kUnbounded : 1;
  for (const auto& c : base)
    if (c.refl) m = std::max(m, c.size);
  return std::min(m, cluster_bound);
}

bool LogicSpec::cluster_type_allowed(bool refl, unsigned size) const {
  if (size > cluster_bound) return false;
  if (base.empty()) return true;
  for (const auto& c : base) {
    if (c.refl != refl) continue;
    if (!refl || size <= c.size) return true;
  }
  return false;
}

void refresh_flags(LogicSpec& L) {
  if (!L.base.empty()) {
    L.linear = std::all_of(
        L.base.begin(), L.base.end(),
        [](const ExtensionCondition& c) { return c.branching <= 1; });
    L.reflexive_only = !L.has_irr();
    L.irreflexive_only = !L.has_refl();
  }
}

namespace {

LogicSpec bare_preset(const std::string& name) {
  const unsigned inf = kUnbounded;
  using E = ExtensionCondition;
  LogicSpec L;
  L.name = name;
  if (name == "K4") {
    L.base = {E::irr(inf), E::rfl(inf, inf)};
  } else if (name == "S4") {
    L.base = {E::rfl(inf, inf)};
  } else if (name == "GL") {
    L.base = {E::irr(inf)};
  } else if (name == "S4Grz") {
    L.base = {E::rfl(1, inf)};
  } else if (name == "K4Grz") {
    L.base = {E::irr(inf), E::rfl(1, inf)};
  } else if (name == "S4.3") {
    L.base = {E::rfl(inf, 1), E::rfl(inf, 0)};
  } else if (name == "GL.3") {
    L.base = {E::irr(1), E::irr(0)};
  } else if (name == "S4Grz.3") {
    L.base = {E::rfl(1, 1), E::rfl(1, 0)};
  } else if (name == "K4.3") {
    L.base = {E::rfl(inf, 1), E::rfl(inf, 0), E::irr(1), E::irr(0)};
  } else if (name == "S5") {
    L.base = {E::rfl(inf, 0)};
    L.depth_bound = 1;
  } else if (name == "Verum") {
    L.base = {E::irr(0)};
    L.depth_bound = 1;
  } else {
    throw std::invalid_argument("unknown logic preset: " + name);
  }
  refresh_flags(L);
  return L;
}

unsigned parse_bound(const std::string& mod, size_t off) {
  if (off >= mod.size()) throw std::invalid_argument("missing bound in modifier: " + mod);
  char* end = nullptr;
  unsigned long v = std::strtoul(mod.c_str() + off, &end, 10);
  if (end != mod.c_str() + mod.size() || v == 0 || v >= kUnbounded)
    throw std::invalid_argument("bad bound in modifier: " + mod);
  return static_cast<unsigned>(v);
}

}  // namespace

LogicSpec preset(const std::string& name) {
  size_t plus = name.find('+');
  LogicSpec L = bare_preset(name.substr(0, plus));
  while (plus != std::string::npos) {
    size_t next = name.find('+', plus + 1);
    std::string mod = name.substr(plus + 1, next == std::string::npos
                                                 ? std::string::npos
                                                 : next - plus - 1);
    if (mod.rfind("BD", 0) == 0) {
      L.depth_bound = std::min(L.depth_bound, parse_bound(mod, 2));
    } else if (mod.rfind("BB", 0) == 0) {
      unsigned k = parse_bound(mod, 2);
      for (auto& c : L.base) c.branching = std::min(c.branching, k);
    } else if (mod.rfind("CL", 0) == 0) {
      unsigned k = parse_bound(mod, 2);
      L.cluster_bound = std::min(L.cluster_bound, k);
      for (auto& c : L.base)
        if (c.refl) c.size = std::min(c.size, k);
    } else {
      throw std::invalid_argument("unknown logic modifier: " + mod);
    }
    plus = next;
  }
  L.name = name;
  refresh_flags(L);
  return L;
}

namespace {

// Immediate successor counts per cluster in the skeleton order.
std::vector<unsigned> immediate_successors(const FrameStats& st) {
  size_t k = st.clusters.size();
  std::vector<unsigned> count(k, 0);
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < k; ++j) {
      if (!st.cluster_lt[i][j]) continue;
      bool immediate = true;
      for (size_t m = 0; m < k && immediate; ++m)
        if (st.cluster_lt[i][m] && st.cluster_lt[m][j]) immediate = false;
      if (immediate) ++count[i];
    }
  return count;
}

struct ClusterView {
  std::vector<unsigned> size;       // points per cluster
  std::vector<bool> refl;          // cluster sees itself
  std::vector<std::vector<bool>> lt;

  bool sees(size_t i, size_t j) const { return i == j ? static_cast<bool>(refl[i]) : static_cast<bool>(lt[i][j]); }
};

ClusterView cluster_view(const FrameStats& st) {
  ClusterView v;
  size_t k = st.clusters.size();
  v.size.resize(k);
  v.refl.resize(k);
  v.lt = st.cluster_lt;
  for (size_t i = 0; i < k; ++i) {
    v.size[i] = static_cast<unsigned>(st.clusters[i].size());
    v.refl[i] = st.cluster_refl[i] || v.size[i] > 1;
  }
  return v;
}

// Backtracking search for an onto cluster assignment W -> G satisfying the
// p-morphism conditions of the contracted frames plus the lifting condition:
// every maximal cluster in each preimage is at least as large as the target.
struct ReductionSearch {
  const ClusterView& w;
  const ClusterView& g;
  std::vector<int> assign;  // cluster of W -> cluster of G

  bool forward_ok(size_t i) const {
    for (size_t j = 0; j < w.size.size(); ++j) {
      if (assign[j] < 0 || j == i) continue;
      if (w.sees(i, j) && !g.sees(assign[i], static_cast<size_t>(assign[j]))) return false;
      if (w.sees(j, i) && !g.sees(static_cast<size_t>(assign[j]), assign[i])) return false;
    }
    if (w.sees(i, i) && !g.sees(assign[i], assign[i])) return false;
    return true;
  }

  bool finish_ok() const {
    size_t nw = w.size.size(), ng = g.size.size();
    std::vector<bool> hit(ng, false);
    for (size_t i = 0; i < nw; ++i) hit[assign[i]] = true;
    if (std::find(hit.begin(), hit.end(), false) != hit.end()) return false;
    // back condition
    for (size_t i = 0; i < nw; ++i)
      for (size_t d = 0; d < ng; ++d) {
        if (!g.sees(assign[i], d)) continue;
        bool found = false;
        for (size_t j = 0; j < nw && !found; ++j)
          if (static_cast<size_t>(assign[j]) == d && w.sees(i, j)) found = true;
        if (!found) return false;
      }
    // lifting: maximal clusters of each preimage are big enough
    for (size_t i = 0; i < nw; ++i) {
      bool maximal = true;
      for (size_t j = 0; j < nw && maximal; ++j)
        if (j != i && assign[j] == assign[i] && w.lt[i][j]) maximal = false;
      if (maximal && w.size[i] < g.size[assign[i]]) return false;
    }
    return true;
  }

  bool run(size_t i) {
    if (i == w.size.size()) return finish_ok();
    for (size_t d = 0; d < g.size.size(); ++d) {
      assign[i] = static_cast<int>(d);
      if (forward_ok(i) && run(i + 1)) return true;
    }
    assign[i] = -1;
    return false;
  }
};

}  // namespace

bool reduces_onto(const Frame& W, const Frame& G) {
  if (W.size() == 0 || G.size() == 0) return false;
  FrameStats sw = analyze(W), sg = analyze(G);
  ClusterView vw = cluster_view(sw), vg = cluster_view(sg);
  ReductionSearch search{vw, vg, std::vector<int>(vw.size.size(), -1)};
  return search.run(0);
}

bool is_L_frame(const LogicSpec& L, const Frame& F) {
  if (F.size() == 0) return true;
  FrameStats st = analyze(F);
  if (st.depth > L.depth_bound || st.width > L.width_bound ||
      st.max_cluster > L.cluster_bound)
    return false;
  std::vector<unsigned> isucc = immediate_successors(st);
  for (size_t i = 0; i < st.clusters.size(); ++i) {
    bool refl = st.cluster_refl[i] || st.clusters[i].size() > 1;
    unsigned size = static_cast<unsigned>(st.clusters[i].size());
    if (L.base.empty()) {
      if (L.reflexive_only && !refl) return false;
      if (L.irreflexive_only && refl) return false;
      if (L.linear && isucc[i] > 1) return false;
      continue;
    }
    bool ok = false;
    for (const auto& c : L.base) {
      if (c.refl != refl) continue;
      if (refl && size > c.size) continue;
      if (c.branching != kUnbounded && isucc[i] > c.branching) continue;
      ok = true;
      break;
    }
    if (!ok) return false;
  }
  if (!L.forbidden_reducts.empty()) {
    for (size_t i = 0; i < st.clusters.size(); ++i) {
      Frame c = cone(F, st.clusters[i][0]);
      for (const Frame& G : L.forbidden_reducts)
        if (reduces_onto(c, G)) return false;
    }
  }
  return true;
}

}  // namespace tml
