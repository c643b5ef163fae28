#include "rqmap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace rqmap {

namespace {

// Paint max(height) over the cells whose centre lies in [x0,x1) x [y0,y1).
void paint_box(DepthMap& d, double x0, double x1, double y0, double y1, double height_m) {
    const float norm = static_cast<float>(std::clamp(height_m / d.ceiling_m, 0.0, 1.0));
    // cell centre of column c is (c + 0.5) * cell_x; centre >= x0 and centre < x1
    int c0 = static_cast<int>(std::ceil(x0 / d.cell_x_m - 0.5));
    int c1 = static_cast<int>(std::ceil(x1 / d.cell_x_m - 0.5));  // exclusive
    int r0 = static_cast<int>(std::ceil(y0 / d.cell_y_m - 0.5));
    int r1 = static_cast<int>(std::ceil(y1 / d.cell_y_m - 0.5));
    c0 = std::max(c0, 0);
    r0 = std::max(r0, 0);
    c1 = std::min(c1, d.w);
    r1 = std::min(r1, d.h);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) d.at(r, c) = std::max(d.at(r, c), norm);
}

}  // namespace

DepthMap project_depth(const SceneState& scene, int h, int w) {
    if (h < 8 || w < 8) throw ArgumentError("project_depth: grid must be at least 8x8");
    DepthMap d;
    d.h = h;
    d.w = w;
    d.ceiling_m = scene.spec.ceiling_m;
    d.cell_x_m = scene.spec.floor_x_m / w;
    d.cell_y_m = scene.spec.floor_y_m / h;
    d.values.assign(static_cast<std::size_t>(h) * w, 0.0f);

    for (const auto& sh : scene.shelves) {
        const int ncells = static_cast<int>(sh.goods_height_m.size());
        const double cell_len = sh.len_m / ncells;
        const double x_start = sh.cx_m - sh.len_m / 2;
        const double y0 = sh.cy_m - sh.wid_m / 2;
        const double y1 = sh.cy_m + sh.wid_m / 2;
        for (int j = 0; j < ncells; ++j)
            paint_box(d, x_start + j * cell_len, x_start + (j + 1) * cell_len, y0, y1,
                      sh.goods_height_m[static_cast<std::size_t>(j)]);
    }
    for (const auto& o : scene.obstacles)
        paint_box(d, o.cx_m - o.sx_m / 2, o.cx_m + o.sx_m / 2, o.cy_m - o.sy_m / 2,
                  o.cy_m + o.sy_m / 2, o.height_m);
    return d;
}

Tensor<float> stack_window(const std::vector<DepthMap>& maps, int k) {
    if (static_cast<int>(maps.size()) != k) throw ArgumentError("stack_window: need exactly k maps");
    if (k < 1) throw ArgumentError("stack_window: k must be >= 1");
    const int h = maps[0].h, w = maps[0].w;
    for (const auto& m : maps)
        if (m.h != h || m.w != w) throw ArgumentError("stack_window: map shapes differ");
    Tensor<float> t({k, h, w});
    for (int i = 0; i < k; ++i)
        std::copy(maps[static_cast<std::size_t>(i)].values.begin(),
                  maps[static_cast<std::size_t>(i)].values.end(),
                  t.v.begin() + static_cast<std::ptrdiff_t>(i) * h * w);
    return t;
}

}  // namespace rqmap
