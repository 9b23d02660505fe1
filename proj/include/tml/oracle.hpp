#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tml/context.hpp"
#include "tml/formula.hpp"
#include "tml/frame.hpp"
#include "tml/logic.hpp"

namespace tml {

// Hard ceiling for exhaustive frame enumeration; canonicalization cost
// grows with the factorial of the cluster count.
inline constexpr unsigned kMaxEnumPoints = 7;

struct EnumerationSpec {
  enum class Refl { Any, AllReflexive, AllIrreflexive };

  unsigned max_points = 6;
  std::optional<LogicSpec> logic;
  bool rooted = false;
  bool single_cluster = false;
  Refl refl = Refl::Any;
};

// Cluster-level encoding that is equal for isomorphic frames and distinct
// otherwise; also used as the deterministic enumeration order.
std::string canonical_encoding(const Frame& F);

// The isomorphic copy of F whose points are laid out in canonical order.
Frame canonical_form(const Frame& F);

// All transitive frames with 1..max_points points satisfying the
// constraints, one canonical representative per isomorphism class, ordered
// by size then canonical encoding. Throws BudgetError above kMaxEnumPoints.
std::vector<Frame> enumerate_frames(const EnumerationSpec& spec);

struct Refutation {
  Model model;
  unsigned point = 0;
};

// Least L-model with at most cap points (enumeration order, then valuation
// bits, then point index) where f fails somewhere, if any. Parameters and
// variables are both valued freely.
std::optional<Refutation> brute_countermodel(const LogicSpec& L, const Formula& f,
                                             unsigned cap);

// Searches for a variable valuation on the given parametric frame making f
// true at every point. The search runs per connected component and throws
// BudgetError when a component's valuation space exceeds 2^24.
std::optional<Model> brute_valuation_unify(const LogicSpec& L, const Formula& f,
                                           const Model& frame);

// Truth of f at every point under every valuation of the listed atoms at
// once.  With n = F.size() and words = max(1, 2^(atoms*n)/64), bit v%64 of
// entry [w*words + v/64] is the value at point w under the valuation
// making atom a true at point u iff bit a*n+u of v is set; for fewer than
// 64 valuations only the low bits are meaningful.  Atoms not listed read
// from `fixed` when given and are false otherwise.  Throws BudgetError
// past 2^16 valuations.
std::vector<uint64_t> truth_tables(
    const Frame& F, const Formula& f,
    const std::vector<std::pair<Conn, unsigned>>& atoms,
    const Model* fixed = nullptr);

}  // namespace tml
