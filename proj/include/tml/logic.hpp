#pragma once

#include <limits>
#include <string>
#include <vector>

#include "tml/frame.hpp"

namespace tml {

inline constexpr unsigned kUnbounded = std::numeric_limits<unsigned>::max();

// One admissible cluster pattern <C,m> of a logic's base: C constrains the
// cluster itself (irreflexive singleton, or reflexive with a size cap),
// m caps the number of immediate successor clusters. m = 0 patterns apply
// to final clusters only, which the domination test enforces by itself.
struct ExtensionCondition {
  bool refl = false;
  unsigned size = 1;        // reflexive only; kUnbounded = no cap
  unsigned branching = 0;   // kUnbounded = no cap

  static ExtensionCondition irr(unsigned m) { return {false, 1, m}; }
  static ExtensionCondition rfl(unsigned k, unsigned m) { return {true, k, m}; }

  bool operator==(const ExtensionCondition&) const = default;
};

// A logic is described structurally: a base of cluster patterns, optional
// numeric bounds, and optionally a list of forbidden reducts (finite rooted
// frames no cone may p-morph onto). An empty base leaves cluster types
// unconstrained, for bounded-depth logics that are not given by a base.
struct LogicSpec {
  std::string name;
  std::vector<ExtensionCondition> base;
  bool linear = false;
  bool reflexive_only = false;
  bool irreflexive_only = false;
  unsigned depth_bound = kUnbounded;
  unsigned width_bound = kUnbounded;
  unsigned cluster_bound = kUnbounded;
  std::vector<Frame> forbidden_reducts;

  // Patterns usable for non-final clusters (branching >= 1).
  std::vector<ExtensionCondition> base1() const;

  bool has_irr() const;
  bool has_refl() const;
  // Largest cluster size allowed anywhere (base caps and cluster_bound).
  unsigned max_cluster_size() const;
  // Whether some pattern admits the given cluster type at all.
  bool cluster_type_allowed(bool refl, unsigned size) const;
};

// Recomputes the convenience flags from the base. Call after editing base.
void refresh_flags(LogicSpec& L);

// Built-in presets: K4, S4, GL, K4Grz, S4Grz, S4.3, K4.3, GL.3, S4Grz.3,
// S5, Verum. A preset name may carry modifiers: +BD<d> caps depth,
// +BB<k> caps branching, +CL<c> caps cluster size, e.g. "S4.3+BD2".
// Throws std::invalid_argument on unknown names or malformed modifiers.
LogicSpec preset(const std::string& name);

// True iff F validates L: every cluster's type and immediate-successor
// count is dominated by some base pattern (when base is nonempty), the
// numeric bounds hold, and no cone p-morphs onto a forbidden reduct.
bool is_L_frame(const LogicSpec& L, const Frame& F);

// Whether some total p-morphism maps W onto the rooted frame G. Searches
// cluster-contraction images: preimages of points are unions of clusters,
// so there are few candidates when depth and width are bounded.
bool reduces_onto(const Frame& W, const Frame& G);

}  // namespace tml
