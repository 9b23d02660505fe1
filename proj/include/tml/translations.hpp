#pragma once

#include <map>
#include <vector>

#include "tml/context.hpp"
#include "tml/formula.hpp"

namespace tml {

// Intuitionistic formulas: the {->, /\, \/, _|_} fragment over the shared
// atom namespace.  Construction rejects every other connective; negation
// is encoded as a -> _|_.
class IpcFormula {
 public:
  explicit IpcFormula(const Formula& f);  // throws std::invalid_argument
  const Formula& raw() const { return raw_; }

 private:
  Formula raw_;
};

// Godel-McKinsey-Tarski translation into S4-like modal logic: atoms map to
// their boxed copies, /\, \/, _|_ pass through, and
//   gmt(a -> b) = [](gmt(a) -> gmt(b)).
Formula gmt(const IpcFormula& f);

// Boxdot translation: atoms pass through, Boolean connectives commute,
//   boxdot_translate([]a) = [.]boxdot_translate(a),
// and dually <>a maps to <.> of the translation.  Expanding [.] duplicates
// its argument, so output size can be exponential in the nesting depth.
Formula boxdot_translate(const Formula& f);

// Linear-size variant: one fresh variable z per distinct modal subformula
// []a (or <>a), defined by the premise [.](z <-> [.]a') where a' replaces
// topmost modal subformulas by their z variables:
//   /\_z [.](z <-> [.]a')  ->  f'.
// A formula without modal subformulas translates to itself.  sigma maps
// each z back to boxdot_translate of its modal subformula; composing the
// two directions gives formulas equiderivable with boxdot_translate(f).
struct EffBoxdot {
  Formula formula;
  Substitution sigma;
  // (z variable index, modal subformula it abbreviates), in introduction
  // order: first occurrence in a left-to-right postorder walk.
  std::vector<std::pair<unsigned, Formula>> table;
};
EffBoxdot eff_boxdot(const Formula& f);

// Relativization by a parameter r not occurring in f (throws
// std::invalid_argument otherwise): returns r -> f^r where ^r preserves
// atoms, commutes with Boolean connectives, and
//   ([]a)^r = [](r -> a^r),   (<>a)^r = <>(r /\ a^r).
// On a model where r marks a subframe, f^r evaluates exactly as f does on
// that subframe.
Formula relativize(const Formula& f, const Formula& r);

// Finite intuitionistic Kripke model: a poset with an upward-closed
// valuation of variables.
struct IpcModel {
  unsigned n = 0;
  std::vector<std::vector<bool>> le;  // reflexive partial order
  // Rows keyed by atom index; variables and parameters of equal index
  // share a row.
  std::map<unsigned, std::vector<bool>> val;
};

// Throws FrameError unless le is a reflexive transitive antisymmetric
// order on n points and every valuation row is upward closed.
void validate_ipc(const IpcModel& M);

// Intuitionistic satisfaction at w; implication quantifies over
// le-successors.  Atoms absent from val are false everywhere.
bool ipc_check(const IpcModel& M, unsigned w, const IpcFormula& f);

}  // namespace tml
