#pragma once

#include <cstdint>
#include <vector>

#include "pseudoflow/errors.hpp"

namespace pseudoflow {

// Per-pixel displacement map in pixels, backward-warp convention: the value
// at p addresses the source location p + f(p).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;  // row-major, height*width
  std::vector<float> dy;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), dx(static_cast<std::size_t>(w) * h, 0.f),
        dy(static_cast<std::size_t>(w) * h, 0.f) {
    if (w < 1 || h < 1) throw ShapeError("flow field dimensions must be positive");
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }

  std::size_t pixels() const { return dx.size(); }

  bool same_size(const FlowField& o) const { return width == o.width && height == o.height; }
};

}  // namespace pseudoflow
