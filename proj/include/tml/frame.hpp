#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tml/formula.hpp"

namespace tml {

struct FrameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite transitive frame. The strict order is kept as a reachability matrix
// without self-loops; per-point reflexivity is a separate flag. Members of a
// proper cluster (mutually related distinct points) must carry the flag,
// which is what transitivity of the combined relation demands.
class Frame {
 public:
  Frame() = default;
  explicit Frame(unsigned n) : n_(n), lt_(n, std::vector<bool>(n, false)), refl_(n, false) {}

  unsigned size() const { return n_; }
  bool lt(unsigned w, unsigned v) const { return lt_[w][v]; }
  bool le(unsigned w, unsigned v) const { return w == v || lt_[w][v]; }
  bool refl(unsigned w) const { return refl_[w]; }
  // Accessibility of the modal relation: strict order plus reflexive loops.
  bool sees(unsigned w, unsigned v) const { return lt_[w][v] || (w == v && refl_[w]); }

  void set_refl(unsigned w, bool r) { refl_[w] = r; }
  void add_lt(unsigned w, unsigned v);  // raw edge; close_transitive() after

  void close_transitive();
  // Throws FrameError unless lt is transitive and every point on a strict
  // cycle is flagged reflexive.
  void validate() const;

  const std::vector<unsigned>& successors(unsigned w) const;  // strict, cached

  bool operator==(const Frame&) const;

 private:
  unsigned n_ = 0;
  std::vector<std::vector<bool>> lt_;
  std::vector<bool> refl_;
  mutable std::vector<std::vector<unsigned>> succ_;  // lazy cache
};

struct FrameStats {
  std::vector<std::vector<unsigned>> clusters;  // point lists, deterministic order
  std::vector<unsigned> cluster_of;             // point -> cluster index
  std::vector<bool> cluster_refl;               // cluster reflexivity
  std::vector<std::vector<bool>> cluster_lt;    // strict order on clusters
  unsigned depth = 0;                           // longest chain of clusters
  unsigned width = 0;                           // max antichain within a cone
  unsigned max_cluster = 0;
  bool rooted = false;
  std::optional<unsigned> root_cluster;
  std::vector<unsigned> final_clusters;  // maximal clusters
};

FrameStats analyze(const Frame& f);

// Frame constructions.  generated_subframe requires an upward-closed point
// set and throws FrameError otherwise; induced_subframe restricts to any
// point set.  Point order inside the result follows the given list.
Frame generated_subframe(const Frame& f, const std::vector<unsigned>& points);
Frame induced_subframe(const Frame& f, const std::vector<unsigned>& points);
Frame disjoint_sum(const std::vector<Frame>& parts);
Frame reflexivization(const Frame& f);
Frame skeleton(const Frame& f);  // rejects frames with irreflexive points

// Upward closure check used by generated_subframe callers.
bool upward_closed(const Frame& f, const std::vector<bool>& set);

// Sorted point set {u} plus all strict successors of u.
std::vector<unsigned> cone_points(const Frame& f, unsigned u);
// The subframe generated by u.
Frame cone(const Frame& f, unsigned u);

// Model: frame plus valuations. Valuations are per-atom bit vectors over
// points; parameters and variables are independent maps.
class Model {
 public:
  Model() = default;
  explicit Model(Frame f) : frame_(std::move(f)) {}

  const Frame& frame() const { return frame_; }
  Frame& frame() { return frame_; }

  void set_par(unsigned index, std::vector<bool> bits);
  void set_var(unsigned index, std::vector<bool> bits);
  void set_par_at(unsigned index, unsigned point, bool value);
  void set_var_at(unsigned index, unsigned point, bool value);
  bool has_par(unsigned index) const { return par_.count(index) != 0; }
  bool has_var(unsigned index) const { return var_.count(index) != 0; }
  const std::map<unsigned, std::vector<bool>>& pars() const { return par_; }
  const std::map<unsigned, std::vector<bool>>& vars() const { return var_; }

  bool atom_value(Conn kind, unsigned index, unsigned point) const;

 private:
  Frame frame_;
  std::map<unsigned, std::vector<bool>> par_, var_;
};

// Satisfaction sweep with per-subformula memoization; share one evaluator
// across queries against the same model.
class Evaluator {
 public:
  explicit Evaluator(const Model& m) : m_(m) {}
  const std::vector<bool>& values(const Formula& f);
  bool at(unsigned point, const Formula& f) { return values(f)[point]; }
  bool everywhere(const Formula& f);

 private:
  const Model& m_;
  std::unordered_map<uint64_t, std::vector<bool>> memo_;
};

bool model_check(const Model& m, unsigned point, const Formula& f);
bool valid_in(const Model& m, const Formula& f);  // all points

// JSON de/serialization per the documented schema.
Model model_from_json(const std::string& text);
std::string model_to_json(const Model& m);

}  // namespace tml
