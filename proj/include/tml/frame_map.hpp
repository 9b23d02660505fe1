#pragma once

#include "tml/frame.hpp"

namespace tml {

enum class MapKind { PMorphism, Subreduction, WeakSubreduction };

// Partial map between frames; -1 marks points outside the domain.
struct FrameMap {
  std::vector<int> image;  // indexed by source point
  MapKind kind = MapKind::Subreduction;
  bool require_onto = false;
  bool require_cofinal = false;
};

// Validates the declared conditions:
//   forward:    w < w' implies f(w) < f(w')   (orders include reflexive loops)
//   back:       f(w) < v implies some w' > w with f(w') = v
//   weak back:  same with w' >= w
// P-morphisms are total maps with forward and back; preimage admissibility is
// vacuous on finite frames. Cofinality reads dom(f)up within dom(f)down.
bool check_map(const FrameMap& m, const Frame& source, const Frame& target);

}  // namespace tml
