#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tml/context.hpp"
#include "tml/frame.hpp"
#include "tml/logic.hpp"

namespace tml {

// Multi-conclusion rule premises / conclusions. Premises are read globally
// (true at every point); the rule is refuted by a model where every premise
// holds globally and every conclusion fails somewhere.
struct Rule {
  std::vector<Formula> premises;
  std::vector<Formula> conclusions;
};

// Closure context over all formulas of the rule.
Context rule_context(const Rule& r);

enum class AdmStatus { Inadmissible, Admissible, BoundedAdmissible };

// Two flavours of the tight-predecessor witness check. Displayed tests the
// two existential conditions directly (exact boxed-theory match per witness
// point); FullSigma additionally replays every closure formula at each
// witness point against the symbolic assignment and demands agreement. The
// modes provably coincide; FullSigma is a cross-check.
enum class TppMode { Displayed, FullSigma };

// One certified virtual-cluster extension: a cluster of type (refl, evals)
// that could be placed below the sampled part of a model. evals lists the
// distinct parameter assignments of the cluster ascending; bplus is the
// bitmask (over the context's boxed-kernel list) of kernels boxed-true at
// the cluster; xset is the sampled point set inducing bplus (empty when
// bplus came from the unbounded-branching sweep or from X = 0). For
// reflexive clusters dmask marks the kernels newly falsified inside the
// cluster, points[i] is the witness point for evals[i], and kills[i] the
// part of dmask that point falsifies; irreflexive witnesses have a single
// point and empty dmask.
struct TppWitness {
  bool refl = false;
  std::vector<uint64_t> evals;
  uint64_t bplus = 0;
  std::vector<unsigned> xset;
  bool swept = false;
  uint64_t dmask = 0;
  std::vector<unsigned> points;
  std::vector<uint64_t> kills;
};

// Verdict of an admissibility engine. complete means the status decides
// admissibility outright rather than up to the size cap. Inadmissible
// verdicts carry a machine-checked countermodel: premises global,
// conclusions each refuted, plus the extension certificate that was
// re-verified against the logic's base (certificate may be empty when the
// countermodel construction exceeded its point budget; the verdict stands).
struct AdmVerdict {
  AdmStatus status = AdmStatus::BoundedAdmissible;
  unsigned cap = 0;
  bool complete = false;
  std::optional<Model> counterexample;
  std::vector<TppWitness> certificate;
};

// Does M admit a tight predecessor of type (refl, evals) whose boxed-true
// kernel set is exactly bplus? evals are distinct ascending parameter
// assignments over ctx's parameter list (exactly one for irreflexive
// clusters). Witness details are written to *out when given.
bool tpp_exists(const Model& M, const Context& ctx, bool refl,
                const std::vector<uint64_t>& evals, uint64_t bplus,
                TppMode mode = TppMode::Displayed, TppWitness* out = nullptr);

// Is M pseudoextensible for the extension condition ec: for every assignment
// set E of admissible size and every sampled upward set X in ec's range,
// does the tight predecessor of the induced boxed theory exist? Successful
// witnesses (one per distinct induced boxed theory) are appended to *out.
bool pseudoextensible(const Model& M, const Context& ctx,
                      const ExtensionCondition& ec,
                      TppMode mode = TppMode::Displayed,
                      std::vector<TppWitness>* out = nullptr);

// Bounded admissibility search over all L-models with at most size_cap
// points: inadmissible iff some model makes every premise global, refutes
// every conclusion, and is pseudoextensible for every condition of base(L).
// Complete when size_cap covers the 4^n model bound for the closure size n.
// Throws std::invalid_argument for specs with an empty base and BudgetError
// when the cap exceeds the frame-enumeration budget or the per-frame
// valuation space overflows.
AdmVerdict admissible_clx(const LogicSpec& L, const Rule& rule,
                          unsigned size_cap);

// Exact decision for linear L via the symbolic chain-model characterization:
// goodness predicates over boxed-kernel sets for the extension conditions of
// base(L), plus a bounded chain search for the conclusion refutations.
// Always complete; inadmissible verdicts carry an unwound countermodel when
// it fits the point budget. Throws std::invalid_argument when L is not
// linear or has an empty base.
AdmVerdict admissible_linear_clx(const LogicSpec& L, const Rule& rule);

// State of one linear-characterization run: memoized goodness per surviving
// boxed-kernel set together with the recorded clause answers used to unwind
// a countermodel. Constructed over the rule's closure context.
class LinearSearchState {
 public:
  LinearSearchState(const LogicSpec& L, const Rule& rule);
  AdmVerdict decide();

 private:
  struct Answer;     // one satisfied extension request at a kernel set
  struct ChainNode;  // one cluster of an explicit chain model
  bool good(uint64_t bplus);
  bool clause_irr(uint64_t bplus, uint64_t ebits, bool root, Answer* out);
  bool clause_refl(uint64_t bplus, uint64_t emask, bool root, Answer* out);
  bool chain_search(const Formula& target, std::vector<ChainNode>* out);
  std::optional<Model> materialize(
      const std::vector<std::vector<ChainNode>>& chains);

  const LogicSpec& logic_;
  const Rule& rule_;
  Context ctx_;
  unsigned nvars_ = 0, npars_ = 0;
  uint64_t bfull_ = 0;
  unsigned root_refl_cap_ = 0, inner_refl_cap_ = 0;
  bool root_irr_ = false, inner_irr_ = false;
  std::vector<unsigned> korder_;  // kernel indices, node count ascending
  std::map<uint64_t, bool> memo_;
  std::map<uint64_t, std::vector<Answer>> answers_;
  std::vector<Answer> roots_;
};

// Is the parametric model (frame plus the listed parameter rows of M; any
// variable rows are ignored) strongly extensible over L: does every
// single-cluster extension candidate (upward-closed sample X, cluster type,
// distinct assignment set E) that yields an L-frame with a loosely separated
// root have an exact answer in M, i.e. a full cluster whose strict cone is
// X, of the right reflexivity, realizing E bijectively? Requires a finite
// depth bound on L.
bool strongly_extensible(const LogicSpec& L, const Model& M,
                         const std::vector<unsigned>& pars);

// Least strongly extensible extension of M: repeatedly adds one answering
// cluster per unanswered candidate (per round, against the frame at the
// start of the round) until a fixpoint; the depth bound caps the number of
// rounds. New points carry the candidate's parameter assignments and false
// variable rows. Throws BudgetError when the frame grows past the point
// budget.
Model strong_closure(const LogicSpec& L, const Model& M,
                     const std::vector<unsigned>& pars);

// Admissibility for finite-depth L. Linear specs are decided exactly by the
// bounded-depth chain-model engine (complete verdicts); other tabular specs
// (finite depth, width and cluster bounds) get a bounded search over
// enumerated frames assisted by strong_closure, whose inadmissible verdicts
// are complete but whose admissible verdicts hold only up to the reported
// cap. Throws std::invalid_argument for specs outside either scope.
AdmVerdict admissible_bddp(const LogicSpec& L, const Rule& rule);

enum class UnifStatus { Unifiable, NotUnifiable, BoundedUnknown };

// witness: an explicit variable-free unifier when one was found; valuation:
// model evidence instead (for Unifiable, a model of the admissibility
// counterexample shape making the formula globally true under the found
// valuation; for variable-free NotUnifiable, a countermodel).
struct UnifVerdict {
  UnifStatus status = UnifStatus::BoundedUnknown;
  std::optional<Substitution> witness;
  std::optional<Model> valuation;
};

// Unifiability with parameters, via the admissibility duality: f is
// unifiable iff f/(empty conclusions) is not admissible. Cascade: exact
// derivability for variable-free f; the complete bounded-depth engines for
// finite-depth specs; a constant-substitution probe (witness-producing);
// finally the bounded general engine. BoundedUnknown when every applicable
// route was inconclusive at its budget.
UnifVerdict unifiable(const LogicSpec& L, const Formula& f);

}  // namespace tml
