#include "tml/formula.hpp"

#include <cassert>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace tml {

struct Formula::Node {
  Conn kind;
  unsigned index;
  const Node* a;
  const Node* b;
  uint32_t size;
  uint32_t mdepth;
  uint64_t id;
};

namespace {

struct Key {
  Conn kind;
  unsigned index;
  const Formula::Node* a;
  const Formula::Node* b;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  size_t operator()(const Key& k) const noexcept {
    size_t h = static_cast<size_t>(k.kind);
    h = h * 1000003u + k.index;
    h = h * 1000003u + std::hash<const void*>()(k.a);
    h = h * 1000003u + std::hash<const void*>()(k.b);
    return h;
  }
};

// Interning arena: nodes live for the whole process, structurally equal
// formulas share one node, so equality is pointer equality.
struct Arena {
  std::mutex mu;
  std::unordered_map<Key, const Formula::Node*, KeyHash> table;
  std::vector<std::unique_ptr<Formula::Node>> nodes;

  const Formula::Node* intern(Conn kind, unsigned index, const Formula::Node* a,
                              const Formula::Node* b) {
    std::lock_guard<std::mutex> lock(mu);
    Key key{kind, index, a, b};
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    auto node = std::make_unique<Formula::Node>();
    node->kind = kind;
    node->index = index;
    node->a = a;
    node->b = b;
    node->size = 1 + (a ? a->size : 0) + (b ? b->size : 0);
    uint32_t child = std::max(a ? a->mdepth : 0u, b ? b->mdepth : 0u);
    node->mdepth = (kind == Conn::Box || kind == Conn::Dia) ? child + 1 : child;
    node->id = nodes.size();
    const Formula::Node* raw = node.get();
    nodes.push_back(std::move(node));
    table.emplace(key, raw);
    return raw;
  }
};

Arena& arena() {
  static Arena* a = new Arena;  // leaked deliberately: formulas are permanent
  return *a;
}

}  // namespace

Formula Formula::bot() { return Formula(arena().intern(Conn::Bot, 0, nullptr, nullptr)); }
Formula Formula::top() { return Formula(arena().intern(Conn::Top, 0, nullptr, nullptr)); }
Formula Formula::var(unsigned i) { return Formula(arena().intern(Conn::Var, i, nullptr, nullptr)); }
Formula Formula::par(unsigned i) { return Formula(arena().intern(Conn::Par, i, nullptr, nullptr)); }

Formula Formula::neg(Formula a) {
  assert(a);
  return Formula(arena().intern(Conn::Neg, 0, a.p_, nullptr));
}
Formula Formula::box(Formula a) {
  assert(a);
  return Formula(arena().intern(Conn::Box, 0, a.p_, nullptr));
}
Formula Formula::dia(Formula a) {
  assert(a);
  return Formula(arena().intern(Conn::Dia, 0, a.p_, nullptr));
}
Formula Formula::conj(Formula a, Formula b) {
  assert(a && b);
  return Formula(arena().intern(Conn::And, 0, a.p_, b.p_));
}
Formula Formula::disj(Formula a, Formula b) {
  assert(a && b);
  return Formula(arena().intern(Conn::Or, 0, a.p_, b.p_));
}
Formula Formula::imp(Formula a, Formula b) {
  assert(a && b);
  return Formula(arena().intern(Conn::Imp, 0, a.p_, b.p_));
}
Formula Formula::iff(Formula a, Formula b) {
  assert(a && b);
  return Formula(arena().intern(Conn::Iff, 0, a.p_, b.p_));
}

Formula Formula::boxdot(Formula a) { return conj(a, box(a)); }
Formula Formula::diadot(Formula a) { return disj(a, dia(a)); }

Formula Formula::conj_all(std::span<const Formula> fs) {
  if (fs.empty()) return top();
  Formula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
  return acc;
}
Formula Formula::disj_all(std::span<const Formula> fs) {
  if (fs.empty()) return bot();
  Formula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = disj(acc, fs[i]);
  return acc;
}
Formula Formula::conj_all(std::initializer_list<Formula> fs) {
  return conj_all(std::span<const Formula>(fs.begin(), fs.size()));
}
Formula Formula::disj_all(std::initializer_list<Formula> fs) {
  return disj_all(std::span<const Formula>(fs.begin(), fs.size()));
}

Conn Formula::kind() const {
  assert(p_);
  return p_->kind;
}
unsigned Formula::index() const {
  assert(p_ && (p_->kind == Conn::Var || p_->kind == Conn::Par));
  return p_->index;
}
Formula Formula::lhs() const {
  assert(p_ && p_->a);
  return Formula(p_->a);
}
Formula Formula::rhs() const {
  assert(p_ && p_->b);
  return Formula(p_->b);
}
uint32_t Formula::size() const {
  assert(p_);
  return p_->size;
}
uint32_t Formula::modal_depth() const {
  assert(p_);
  return p_->mdepth;
}
uint64_t Formula::id() const {
  assert(p_);
  return p_->id;
}
std::strong_ordering Formula::operator<=>(const Formula& o) const {
  uint64_t x = p_ ? p_->id + 1 : 0, y = o.p_ ? o.p_->id + 1 : 0;
  return x <=> y;
}

Formula assignment_formula(std::span<const unsigned> params, uint64_t t) {
  std::vector<Formula> lits;
  lits.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i)
    lits.push_back(Formula::lit(Formula::par(params[i]), (t >> i) & 1));
  return Formula::conj_all(lits);
}

}  // namespace tml
