#pragma once

#include <vector>

#include "rqmap/scene.hpp"
#include "rqmap/tensor.hpp"

namespace rqmap {

// Top-down height grid, values normalized to [0,1] by the ceiling height.
struct DepthMap {
    int h = 0, w = 0;
    double cell_x_m = 0, cell_y_m = 0;
    double ceiling_m = 0;
    std::vector<float> values;  // row-major, row <-> y, col <-> x

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * w + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * w + c]; }
};

// Max-height projection of the scene onto an h x w grid. A cell is covered by
// an object iff its centre lies inside the footprint (half-open [x0,x1)).
DepthMap project_depth(const SceneState& scene, int h = 64, int w = 64);

// Stack k same-shape maps into a (k,h,w) tensor, oldest first.
Tensor<float> stack_window(const std::vector<DepthMap>& maps, int k);

}  // namespace rqmap
