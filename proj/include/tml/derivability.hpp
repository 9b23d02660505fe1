#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tml/context.hpp"
#include "tml/frame.hpp"
#include "tml/logic.hpp"

namespace tml {

// Decision procedure for derivability over base-defined logics.
//
// For a query formula xi it decides |- xi by the satisfiability predicate
//   S(X)  <=>  exists a rooted finite L-model W with B+(W) = X,
// where B is the boxed-kernel list of the context and B+(W) = {a in B :
// a true at every point of W}.  S is computed by the cluster recursion
//   S(X) <=> exists <C,m> in base(L), exists Y with X <= Y <= B,
//            H_C(X,Y) and U_m(X,Y),
// with H_C choosing a root cluster of type C (I = irreflexive point,
// k-hat = reflexive cluster of <= k points, inf-hat = unbounded reflexive
// cluster) and U_m choosing at most m immediate-successor component models
// realizing sets Z strictly above X whose intersection is Y.  Every
// condition also admits the zero-successor branch (then Y = B, the truth
// set of the empty model): base conditions dominate all smaller types.
//
// Not-derivable verdicts carry a countermodel materialized from the
// recorded H/U witnesses; ties are broken by smallest witness Y (fewest
// kernels, then lowest mask) and lexicographically least valuations, so
// countermodels are reproducible run to run.

struct DerivVerdict {
  bool derivable = false;
  // Set when derivable is false: refutes the (first) query formula at
  // `root`, and the underlying frame validates the logic.
  std::optional<Model> countermodel;
  unsigned root = 0;
};

struct DeriveOptions {
  // Linear logics only: materialize a minimum-size countermodel instead of
  // the default first-witness one (total points <= |Sigma| for linear
  // bases; checked by tests, not enforced here).
  bool linear_tight = false;
};

// Witness for one S(X) = true entry: enough to rebuild the root cluster
// and recurse into the children.
struct SWitness {
  unsigned condition = 0;          // index into LogicSpec::base
  uint32_t y = 0;                  // the chosen Y
  bool zero_children = false;      // the m=0 branch (forces y == full B)
  std::vector<uint32_t> children;  // realized sets Z of child models
  std::vector<uint32_t> words;     // root cluster valuations (vars low bits,
                                   // then pars), deduplicated, sorted
};

// One S-search over a fixed context and logic; memoized on X (and on the
// remaining depth for depth-bounded logics).
class SatSearch {
 public:
  // Throws std::invalid_argument for specs the recursion cannot express
  // (empty base, forbidden-reduct or width-bounded specs) and BudgetError
  // when |B| > 22 or the joint atom count exceeds 20.
  SatSearch(const Context& ctx, const LogicSpec& logic);

  bool solve(uint32_t X);
  // Witness re-derived deterministically from the memo; nullopt iff S(X)
  // is false.  Depth argument only matters for depth-bounded logics.
  std::optional<SWitness> witness(uint32_t X);
  // Builds the witness model (valuations for every context atom).  X must
  // satisfy solve(X).  With minimize, every choice point picks a
  // points-minimal witness instead of the first one.
  Model materialize(uint32_t X, bool minimize = false);

  uint32_t full() const { return full_; }
  const Context& ctx() const { return ctx_; }

 private:
  const uint32_t* row(uint32_t Z);
  void run_sweep();
  void sweep_level(std::vector<int8_t>& cur, const std::vector<int8_t>* deeper);
  bool eval_cell(uint32_t X, const std::vector<int8_t>* deeper);
  void prep_x(uint32_t X);
  bool h_holds(const ExtensionCondition& c, uint32_t X, uint32_t Y);
  bool u_holds(const ExtensionCondition& c, uint32_t X, uint32_t Y,
               const std::vector<int8_t>* deeper);
  bool u_children(const ExtensionCondition& c, uint32_t X, uint32_t Y,
                  const std::vector<int8_t>& tbl, std::vector<uint32_t>& kids);
  bool cover_children(uint32_t X, uint32_t Y, uint32_t uncovered,
                      unsigned budget, const std::vector<int8_t>& tbl,
                      std::vector<uint32_t>* out);
  bool cover_words(uint32_t X, uint32_t targets, unsigned budget,
                   std::vector<uint32_t>* out);
  void ensure_avoid(uint32_t X, const std::vector<int8_t>& tbl);
  std::vector<uint32_t> extract_words(const ExtensionCondition& c, uint32_t X,
                                      uint32_t Y, bool minimize);
  unsigned min_cluster(const ExtensionCondition& c, uint32_t X, uint32_t Y);
  uint32_t min_points(uint32_t X);
  std::optional<SWitness> witness_at(uint32_t X, unsigned level);
  std::optional<SWitness> best_witness_at(uint32_t X);
  Model materialize_at(uint32_t X, unsigned level, bool minimize);
  const std::vector<int8_t>* deeper_for(unsigned level) const;
  unsigned top_level() const { return levels_ == 0 ? 0 : levels_ - 1; }
  unsigned child_level(unsigned level) const {
    return levels_ == 0 ? 0 : level - 1;
  }

  const Context& ctx_;
  LogicSpec logic_;
  unsigned nb_ = 0, nvars_ = 0, npars_ = 0;
  uint32_t nwords_ = 1, full_ = 0;
  // 0 = one self-referential table (no depth bound); otherwise tables_[l]
  // holds S restricted to models of cluster depth <= l+1.
  unsigned levels_ = 0;
  std::vector<std::vector<int8_t>> tables_;
  bool swept_ = false;

  // Kernel-truth rows per box set Z: dense block for small contexts, map
  // otherwise.
  bool dense_ = false;
  std::vector<uint32_t> dense_rows_;
  std::vector<uint8_t> dense_ok_;
  std::unordered_map<uint32_t, std::vector<uint32_t>> row_map_;

  // Summary of the words satisfying all of X under A(., X).
  uint32_t prep_x_ = 0;
  bool prep_ok_ = false;
  bool vxany_ = false;
  uint32_t andx_ = 0;

  // Per-(X, table) cache: avoid_[Y] = union of B\Z over satisfiable Z >= Y
  // with Z != X, for the unbounded-branching test.
  std::vector<uint32_t> avoid_;
  uint32_t avoid_x_ = 0;
  const std::vector<int8_t>* avoid_tbl_ = nullptr;
  bool avoid_ok_ = false;

  std::vector<uint32_t> minpts_;  // min model size per X, lazy
};

// Single S(X) query for the given context, fresh search per call.
struct SolveResult {
  bool value = false;
  std::optional<SWitness> witness;
};
SolveResult solve_S(const Context& ctx, const LogicSpec& logic, uint32_t X);

// Multi-conclusion derivability: gamma |- delta iff some d in delta has
// |- [.]/\gamma -> d.  On failure the countermodel refutes the first
// conclusion's query formula at its root.  Throws std::invalid_argument
// for empty delta or unsupported specs, BudgetError past the search caps.
DerivVerdict derives(const LogicSpec& logic, const std::vector<Formula>& gamma,
                     const std::vector<Formula>& delta,
                     const DeriveOptions& opts = {});

// Convenience wrapper: |- f.
DerivVerdict derives(const LogicSpec& logic, const Formula& f,
                     const DeriveOptions& opts = {});

}  // namespace tml
