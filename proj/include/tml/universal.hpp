#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tml/frame.hpp"
#include "tml/logic.hpp"

namespace tml {

// Ancestry record of one universal-frame point. The point's cluster entered
// the construction at `stage` as the unique tight predecessor keyed by
// (above, refl, evals): `above` is the strict up-set the cluster was placed
// under, `evals` lists the parameter assignments realized inside the cluster
// (bit i of an assignment is the value of params[i]), and `assignment` is
// the one realized by this member.
struct TightPedigree {
  unsigned stage = 0;
  bool refl = false;
  std::vector<unsigned> above;    // ascending point ids, all from earlier stages
  std::vector<uint64_t> evals;    // ascending; singleton when refl is false
  uint64_t assignment = 0;
  std::vector<unsigned> cluster;  // ascending point ids of the whole cluster
};

// Stage-tagged approximation of the universal frame of a logic over a finite
// parameter set. Point ids are append-only across stages, so the frame of
// the stage-n approximation is a generated subframe of the stage-(n+1) one.
// Names are "s<stage>.<k>" with k counting points added within the stage in
// construction order, which is a deterministic function of the pedigree.
struct UniversalFrameLevel {
  LogicSpec logic;
  std::vector<unsigned> params;  // ascending parameter indices
  unsigned stages = 0;
  Model model;  // frame plus the canonical parameter valuation; no variables
  std::vector<TightPedigree> pedigree;  // one per point
  std::vector<std::string> names;       // one per point
  // Cumulative point counts after stages 0..stages; doubles as the partial
  // statistics quoted when the point budget is exceeded.
  std::vector<unsigned> stage_points;
};

inline constexpr unsigned kUniversalPointBudget = 4096;

// Builds the stage-`stages` approximation: starting from the empty frame,
// each stage adds, below every upward-closed point set X of the previous
// level and for every cluster shape (irreflexive singleton, or reflexive
// realizing a nonempty assignment set E), the tight predecessor of X of that
// shape, unless one is already present. A set X rooted in a reflexive
// cluster realizing all of E keeps its root as the tight predecessor, so
// nothing is added for it. Only clusters whose cone validates the logic are
// placed; every frame class expressible in LogicSpec is closed under
// generated subframes, so this equals building the frame for unconstrained
// transitive logic first and then keeping the points with valid cones.
// Throws std::invalid_argument past 4 parameters and BudgetError when the
// point budget (or the proportional exploration budget) is exhausted, with
// the completed level sizes in the message.
UniversalFrameLevel universal_frame(const LogicSpec& L, const std::vector<unsigned>& params,
                                    unsigned stages,
                                    unsigned point_budget = kUniversalPointBudget);

// Defining formula of a point of a parameter-free approximation: within any
// level containing the point, it is true exactly there. Irreflexive points
// take the conjunction of <>beta_v over their strict successors v plus
// [](disjunction of beta_v); an irreflexive leaf degenerates to []_|_.
// Reflexive points u take <>C /\ [](D \/ <>C) where C conjoins <>beta_v and
// D disjoins beta_v over the successors v distinct from u; a reflexive leaf
// degenerates to <>T /\ [](_|_ \/ <>T). Throws std::invalid_argument when
// the level carries parameters or the point is out of range.
Formula beta_formula(const UniversalFrameLevel& U, unsigned point);

}  // namespace tml
