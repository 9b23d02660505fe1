#include "tml/frame_map.hpp"

namespace tml {

bool check_map(const FrameMap& m, const Frame& source, const Frame& target) {
  unsigned n = source.size();
  if (m.image.size() != n) throw FrameError("map size mismatch");
  for (unsigned w = 0; w < n; ++w)
    if (m.image[w] >= static_cast<int>(target.size()))
      throw FrameError("map targets outside target frame");

  auto defined = [&](unsigned w) { return m.image[w] >= 0; };

  if (m.kind == MapKind::PMorphism)
    for (unsigned w = 0; w < n; ++w)
      if (!defined(w)) return false;

  // forward condition on the full relations (strict plus loops)
  for (unsigned w = 0; w < n; ++w) {
    if (!defined(w)) continue;
    for (unsigned v = 0; v < n; ++v) {
      if (!defined(v) || !source.sees(w, v)) continue;
      if (!target.sees(m.image[w], m.image[v])) return false;
    }
  }

  // back condition
  bool weak = m.kind == MapKind::WeakSubreduction;
  for (unsigned w = 0; w < n; ++w) {
    if (!defined(w)) continue;
    for (unsigned v = 0; v < target.size(); ++v) {
      if (!target.sees(m.image[w], v)) continue;
      bool found = weak && m.image[w] == static_cast<int>(v);
      for (unsigned w2 = 0; w2 < n && !found; ++w2)
        if (source.sees(w, w2) && m.image[w2] == static_cast<int>(v)) found = true;
      if (!found) return false;
    }
  }

  if (m.require_onto) {
    std::vector<bool> hit(target.size(), false);
    for (unsigned w = 0; w < n; ++w)
      if (defined(w)) hit[m.image[w]] = true;
    for (bool h : hit)
      if (!h) return false;
  }

  if (m.require_cofinal) {
    // dom up subset of dom down: anything above a domain point lies below one
    for (unsigned x = 0; x < n; ++x) {
      bool above = false, below = false;
      for (unsigned d = 0; d < n; ++d) {
        if (!defined(d)) continue;
        if (d == x || source.lt(d, x)) above = true;
        if (d == x || source.lt(x, d)) below = true;
      }
      if (above && !below) return false;
    }
  }
  return true;
}

}  // namespace tml
