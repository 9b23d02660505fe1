#include "tml/frame.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>

namespace tml {

void Frame::add_lt(unsigned w, unsigned v) {
  if (w == v) {
    refl_[w] = true;
    return;
  }
  lt_[w][v] = true;
  succ_.clear();
}

void Frame::close_transitive() {
  for (unsigned k = 0; k < n_; ++k)
    for (unsigned i = 0; i < n_; ++i)
      if (lt_[i][k])
        for (unsigned j = 0; j < n_; ++j)
          if (lt_[k][j] && i != j) lt_[i][j] = true;
  // A strict cycle makes its members see themselves.
  for (unsigned i = 0; i < n_; ++i)
    for (unsigned j = 0; j < n_; ++j)
      if (i != j && lt_[i][j] && lt_[j][i]) refl_[i] = true;
  succ_.clear();
}

void Frame::validate() const {
  for (unsigned i = 0; i < n_; ++i)
    for (unsigned j = 0; j < n_; ++j) {
      if (!lt_[i][j]) continue;
      if (i == j) throw FrameError("strict order has a self-loop");
      for (unsigned k = 0; k < n_; ++k)
        if (lt_[j][k] && !lt_[i][k] && i != k)
          throw FrameError("strict order not transitive");
      if (lt_[j][i] && (!refl_[i] || !refl_[j]))
        throw FrameError("proper cluster member not flagged reflexive");
    }
}

const std::vector<unsigned>& Frame::successors(unsigned w) const {
  if (succ_.empty()) {
    succ_.resize(n_);
    for (unsigned i = 0; i < n_; ++i)
      for (unsigned j = 0; j < n_; ++j)
        if (lt_[i][j]) succ_[i].push_back(j);
  }
  return succ_[w];
}

bool Frame::operator==(const Frame& o) const {
  return n_ == o.n_ && lt_ == o.lt_ && refl_ == o.refl_;
}

FrameStats analyze(const Frame& f) {
  f.validate();
  unsigned n = f.size();
  FrameStats st;
  st.cluster_of.assign(n, UINT32_MAX);
  for (unsigned w = 0; w < n; ++w) {
    if (st.cluster_of[w] != UINT32_MAX) continue;
    unsigned c = st.clusters.size();
    st.clusters.push_back({w});
    st.cluster_of[w] = c;
    for (unsigned v = w + 1; v < n; ++v)
      if (f.lt(w, v) && f.lt(v, w)) {
        st.clusters[c].push_back(v);
        st.cluster_of[v] = c;
      }
  }
  unsigned cn = st.clusters.size();
  st.cluster_refl.resize(cn);
  st.cluster_lt.assign(cn, std::vector<bool>(cn, false));
  for (unsigned c = 0; c < cn; ++c) {
    st.cluster_refl[c] = f.refl(st.clusters[c][0]);
    st.max_cluster = std::max<unsigned>(st.max_cluster, st.clusters[c].size());
  }
  for (unsigned w = 0; w < n; ++w)
    for (unsigned v = 0; v < n; ++v)
      if (f.lt(w, v) && st.cluster_of[w] != st.cluster_of[v])
        st.cluster_lt[st.cluster_of[w]][st.cluster_of[v]] = true;

  // depth: longest chain of clusters, computed over the cluster DAG
  std::vector<unsigned> dp(cn, 0);
  // topological order: clusters sorted by number of ancestors works because
  // the relation is transitive; process maximal clusters first
  std::vector<unsigned> order(cn);
  for (unsigned c = 0; c < cn; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](unsigned a, unsigned b) {
    unsigned ua = 0, ub = 0;
    for (unsigned c = 0; c < cn; ++c) {
      ua += st.cluster_lt[a][c];
      ub += st.cluster_lt[b][c];
    }
    return ua < ub;  // fewer successors first (maximal clusters first)
  });
  for (unsigned c : order) {
    dp[c] = 1;
    for (unsigned d = 0; d < cn; ++d)
      if (st.cluster_lt[c][d]) dp[c] = std::max(dp[c], dp[d] + 1);
    st.depth = std::max(st.depth, dp[c]);
  }

  // width: for each cone (clusters reachable from a given one, inclusive),
  // the largest antichain, via Dilworth: |poset| - max matching
  for (unsigned c = 0; c < cn && cn > 0; ++c) {
    std::vector<unsigned> cone;
    for (unsigned d = 0; d < cn; ++d)
      if (d == c || st.cluster_lt[c][d]) cone.push_back(d);
    unsigned k = cone.size();
    std::vector<int> match_right(k, -1), match_left(k, -1);
    std::vector<bool> seen;
    // Kuhn's augmenting search on the strict cluster order within the cone
    std::function<bool(unsigned)> try_augment = [&](unsigned a) -> bool {
      for (unsigned b = 0; b < k; ++b) {
        if (!st.cluster_lt[cone[a]][cone[b]] || seen[b]) continue;
        seen[b] = true;
        if (match_right[b] < 0 || try_augment(match_right[b])) {
          match_right[b] = a;
          match_left[a] = b;
          return true;
        }
      }
      return false;
    };
    unsigned matched = 0;
    for (unsigned a = 0; a < k; ++a) {
      seen.assign(k, false);
      if (try_augment(a)) ++matched;
    }
    st.width = std::max(st.width, k - matched);
  }

  // rooted: some cluster's cone is everything
  for (unsigned c = 0; c < cn; ++c) {
    bool all = true;
    for (unsigned d = 0; d < cn && all; ++d)
      if (d != c && !st.cluster_lt[c][d]) all = false;
    if (all) {
      st.rooted = true;
      st.root_cluster = c;
      break;
    }
  }
  if (cn == 0) st.rooted = false;

  for (unsigned c = 0; c < cn; ++c) {
    bool final = true;
    for (unsigned d = 0; d < cn && final; ++d)
      if (st.cluster_lt[c][d]) final = false;
    if (final) st.final_clusters.push_back(c);
  }
  return st;
}

bool upward_closed(const Frame& f, const std::vector<bool>& set) {
  for (unsigned w = 0; w < f.size(); ++w)
    if (set[w])
      for (unsigned v : f.successors(w))
        if (!set[v]) return false;
  return true;
}

Frame generated_subframe(const Frame& f, const std::vector<unsigned>& points) {
  std::vector<bool> in(f.size(), false);
  for (unsigned w : points) in[w] = true;
  if (!upward_closed(f, in)) throw FrameError("subframe set is not upward closed");
  return induced_subframe(f, points);
}

Frame induced_subframe(const Frame& f, const std::vector<unsigned>& points) {
  Frame g(points.size());
  for (unsigned a = 0; a < points.size(); ++a) {
    g.set_refl(a, f.refl(points[a]));
    for (unsigned b = 0; b < points.size(); ++b)
      if (a != b && f.lt(points[a], points[b])) g.add_lt(a, b);
  }
  return g;
}

std::vector<unsigned> cone_points(const Frame& f, unsigned u) {
  std::vector<unsigned> pts{u};
  for (unsigned v : f.successors(u)) pts.push_back(v);
  std::sort(pts.begin(), pts.end());
  return pts;
}

Frame cone(const Frame& f, unsigned u) { return generated_subframe(f, cone_points(f, u)); }

Frame disjoint_sum(const std::vector<Frame>& parts) {
  unsigned total = 0;
  for (const Frame& p : parts) total += p.size();
  Frame g(total);
  unsigned base = 0;
  for (const Frame& p : parts) {
    for (unsigned a = 0; a < p.size(); ++a) {
      g.set_refl(base + a, p.refl(a));
      for (unsigned b = 0; b < p.size(); ++b)
        if (a != b && p.lt(a, b)) g.add_lt(base + a, base + b);
    }
    base += p.size();
  }
  return g;
}

Frame reflexivization(const Frame& f) {
  Frame g = f;
  for (unsigned w = 0; w < g.size(); ++w) g.set_refl(w, true);
  return g;
}

Frame skeleton(const Frame& f) {
  for (unsigned w = 0; w < f.size(); ++w)
    if (!f.refl(w)) throw FrameError("skeleton requires a reflexive frame");
  FrameStats st = analyze(f);
  unsigned cn = st.clusters.size();
  Frame g(cn);
  for (unsigned c = 0; c < cn; ++c) {
    g.set_refl(c, true);
    for (unsigned d = 0; d < cn; ++d)
      if (st.cluster_lt[c][d]) g.add_lt(c, d);
  }
  return g;
}

void Model::set_par(unsigned index, std::vector<bool> bits) {
  if (bits.size() != frame_.size()) throw FrameError("valuation size mismatch");
  par_[index] = std::move(bits);
}
void Model::set_var(unsigned index, std::vector<bool> bits) {
  if (bits.size() != frame_.size()) throw FrameError("valuation size mismatch");
  var_[index] = std::move(bits);
}
void Model::set_par_at(unsigned index, unsigned point, bool value) {
  auto it = par_.find(index);
  if (it == par_.end()) {
    par_[index] = std::vector<bool>(frame_.size(), false);
    it = par_.find(index);
  }
  it->second[point] = value;
}
void Model::set_var_at(unsigned index, unsigned point, bool value) {
  auto it = var_.find(index);
  if (it == var_.end()) {
    var_[index] = std::vector<bool>(frame_.size(), false);
    it = var_.find(index);
  }
  it->second[point] = value;
}

bool Model::atom_value(Conn kind, unsigned index, unsigned point) const {
  const auto& table = kind == Conn::Par ? par_ : var_;
  auto it = table.find(index);
  if (it == table.end())
    throw FrameError(std::string("missing valuation for atom ") +
                     (kind == Conn::Par ? "p" : "x") + std::to_string(index));
  return it->second[point];
}

const std::vector<bool>& Evaluator::values(const Formula& f) {
  auto it = memo_.find(f.id());
  if (it != memo_.end()) return it->second;
  unsigned n = m_.frame().size();
  std::vector<bool> out(n);
  switch (f.kind()) {
    case Conn::Bot:
      break;
    case Conn::Top:
      out.assign(n, true);
      break;
    case Conn::Var:
    case Conn::Par:
      for (unsigned w = 0; w < n; ++w) out[w] = m_.atom_value(f.kind(), f.index(), w);
      break;
    case Conn::Neg: {
      const auto& a = values(f.lhs());
      for (unsigned w = 0; w < n; ++w) out[w] = !a[w];
      break;
    }
    case Conn::And:
    case Conn::Or:
    case Conn::Imp:
    case Conn::Iff: {
      const auto& a = values(f.lhs());
      const auto& b = values(f.rhs());
      for (unsigned w = 0; w < n; ++w) {
        switch (f.kind()) {
          case Conn::And: out[w] = a[w] && b[w]; break;
          case Conn::Or: out[w] = a[w] || b[w]; break;
          case Conn::Imp: out[w] = !a[w] || b[w]; break;
          default: out[w] = a[w] == b[w]; break;
        }
      }
      break;
    }
    case Conn::Box: {
      const auto& a = values(f.lhs());
      for (unsigned w = 0; w < n; ++w) {
        bool all = !m_.frame().refl(w) || a[w];
        if (all)
          for (unsigned v : m_.frame().successors(w))
            if (!a[v]) {
              all = false;
              break;
            }
        out[w] = all;
      }
      break;
    }
    case Conn::Dia: {
      const auto& a = values(f.lhs());
      for (unsigned w = 0; w < n; ++w) {
        bool any = m_.frame().refl(w) && a[w];
        if (!any)
          for (unsigned v : m_.frame().successors(w))
            if (a[v]) {
              any = true;
              break;
            }
        out[w] = any;
      }
      break;
    }
  }
  return memo_.emplace(f.id(), std::move(out)).first->second;
}

bool Evaluator::everywhere(const Formula& f) {
  const auto& v = values(f);
  return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
}

bool model_check(const Model& m, unsigned point, const Formula& f) {
  Evaluator ev(m);
  return ev.at(point, f);
}

bool valid_in(const Model& m, const Formula& f) {
  Evaluator ev(m);
  return ev.everywhere(f);
}

}  // namespace tml
