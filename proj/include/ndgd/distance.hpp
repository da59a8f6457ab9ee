#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "ndgd/error.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

struct ReferenceDistance {
  double distance = 0.0;
  std::size_t index = 0;
};

// dist(x, refs) with ties going to the lowest index.
inline ReferenceDistance dist_to_reference(const Vector& x, const std::vector<Vector>& refs) {
  if (refs.empty()) throw ValidationError("dist_to_reference: reference set is empty");
  ReferenceDistance best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t r = 0; r < refs.size(); ++r) {
    if (refs[r].size() != x.size()) throw ValidationError("dist_to_reference: dimension mismatch");
    const double d = (x - refs[r]).norm();
    if (d < best.distance) best = {d, r};
  }
  return best;
}

}  // namespace ndgd
