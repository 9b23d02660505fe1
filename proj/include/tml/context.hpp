#pragma once

#include <map>
#include <unordered_map>
#include <vector>

#include "tml/formula.hpp"

namespace tml {

// Substitution for variables; parameters are never in the domain and are
// mapped to themselves, as is everything outside the domain.
class Substitution {
 public:
  Substitution() = default;
  explicit Substitution(std::map<unsigned, Formula> m) : map_(std::move(m)) {}

  void set(unsigned var, Formula f) { map_[var] = f; }
  const std::map<unsigned, Formula>& entries() const { return map_; }

  Formula operator()(const Formula& f) const;

 private:
  std::map<unsigned, Formula> map_;
  mutable std::unordered_map<uint64_t, Formula> memo_;
};

// Subformula context of a formula set. Sigma is closed under subformulas and
// under the box normalization of diamonds: every <>a in Sigma contributes
// ~[]~a, so "boxed subformula" questions reduce to the single kernel list
// `boxed` (B = {a : []a in Sigma}). Atom census is split into variables and
// parameters.
class Context {
 public:
  static constexpr unsigned kMaxBoxed = 64;  // kernel sets live in uint64_t

  const std::vector<Formula>& sigma() const { return sigma_; }
  const std::vector<Formula>& boxed() const { return boxed_; }
  const std::vector<unsigned>& vars() const { return vars_; }
  const std::vector<unsigned>& pars() const { return pars_; }
  size_t n() const { return sigma_.size(); }

  bool has_boxed(const Formula& kernel) const { return box_pos_.count(kernel.id()) != 0; }
  unsigned boxed_pos(const Formula& kernel) const { return box_pos_.at(kernel.id()); }

  // Truth of f under a Boolean assignment plus a guess X of which boxed
  // kernels hold: []a reads as "a in X", <>a as "~a not in X". Assignment
  // bits are indexed by position in vars()/pars().
  bool eval(const Formula& f, uint64_t var_bits, uint64_t par_bits, uint64_t X) const;

  unsigned var_pos(unsigned index) const;
  unsigned par_pos(unsigned index) const;

  friend Context closure(std::span<const Formula> seeds);

 private:
  std::vector<Formula> sigma_;
  std::vector<Formula> boxed_;
  std::vector<unsigned> vars_, pars_;
  std::unordered_map<uint64_t, unsigned> box_pos_;
  std::unordered_map<unsigned, unsigned> var_pos_, par_pos_;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Context closure(std::span<const Formula> seeds);
Context closure(std::initializer_list<Formula> seeds);

}  // namespace tml
