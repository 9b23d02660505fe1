#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tml {

enum class Conn : uint8_t { Bot, Top, Var, Par, Neg, And, Or, Imp, Iff, Box, Dia };

// Immutable modal formulas, hash-consed: structural equality is pointer
// equality, so formulas are cheap to copy, compare and key maps with.
// Variables (x<i>) and parameters (p<i>) live in disjoint namespaces.
class Formula {
 public:
  Formula() = default;  // null; only valid as an "absent" placeholder

  static Formula bot();
  static Formula top();
  static Formula var(unsigned index);
  static Formula par(unsigned index);
  static Formula neg(Formula a);
  static Formula conj(Formula a, Formula b);
  static Formula disj(Formula a, Formula b);
  static Formula imp(Formula a, Formula b);
  static Formula iff(Formula a, Formula b);
  static Formula box(Formula a);
  static Formula dia(Formula a);
  static Formula boxdot(Formula a);  // a & []a
  static Formula diadot(Formula a);  // a | <>a

  // Big operators: empty -> top/bot, singleton -> the element, else a
  // left-associated fold (matching parser associativity of & and |).
  static Formula conj_all(std::span<const Formula> fs);
  static Formula disj_all(std::span<const Formula> fs);
  static Formula conj_all(std::initializer_list<Formula> fs);
  static Formula disj_all(std::initializer_list<Formula> fs);

  // a^e: a when e, ~a when not.
  static Formula lit(Formula a, bool e) { return e ? a : neg(a); }

  bool null() const { return p_ == nullptr; }
  explicit operator bool() const { return p_ != nullptr; }

  Conn kind() const;
  unsigned index() const;  // Var/Par only
  Formula lhs() const;     // unary child lives here too
  Formula rhs() const;     // binary connectives only

  uint32_t size() const;         // node count
  uint32_t modal_depth() const;  // nesting of Box/Dia
  uint64_t id() const;           // arena id; stable within a process

  bool operator==(const Formula&) const = default;
  // Orders by arena id: deterministic within a run, used for canonical sets.
  std::strong_ordering operator<=>(const Formula& o) const;

  struct Node;

 private:
  explicit Formula(const Node* p) : p_(p) {}
  const Node* p_ = nullptr;
  friend struct FormulaHash;
};

struct FormulaHash {
  size_t operator()(const Formula& f) const noexcept {
    return std::hash<const void*>()(static_cast<const void*>(f.p_));
  }
};

// Renders with minimal parentheses; detects the a&[]a / a|<>a patterns and
// prints them as [.]a / <.>a.
std::string print(const Formula& f);

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(const std::string& what, size_t pos)
      : std::runtime_error(what), position(pos) {}
};

Formula parse(const std::string& text);  // throws ParseError

// Conjunction of p^[i in t] over positions i of params; empty list gives top.
Formula assignment_formula(std::span<const unsigned> params, uint64_t t);

}  // namespace tml
