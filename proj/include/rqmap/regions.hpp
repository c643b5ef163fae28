#pragma once

#include <array>
#include <string>
#include <vector>

#include "rqmap/errors.hpp"

namespace rqmap {

// Rectangular region in grid coordinates, half-open [r0,r1) x [c0,c1).
struct RegionRect {
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;
    bool contains(int r, int c) const { return r >= r0 && r < r1 && c >= c0 && c < c1; }
    int cells() const { return (r1 - r0) * (c1 - c0); }
};

// The five evaluation areas: four quadrant boxes inset from the corners plus
// a central horizontal strip. Region ids are 1-based; "Global" is implicit.
struct RegionMap {
    int grid_h = 64;
    int grid_w = 64;
    std::array<RegionRect, 5> areas;

    static RegionMap standard(int h = 64, int w = 64) {
        RegionMap m;
        m.grid_h = h;
        m.grid_w = w;
        const int inset = h / 16;       // 4 cells at 64
        const int box = (h * 20) / 64;  // 20x20 at 64
        m.areas[0] = {inset, inset + box, inset, inset + box};                  // area 1: top-left
        m.areas[1] = {inset, inset + box, w - inset - box, w - inset};          // area 2: top-right
        m.areas[2] = {h - inset - box, h - inset, inset, inset + box};          // area 3: bottom-left
        m.areas[3] = {h - inset - box, h - inset, w - inset - box, w - inset};  // area 4: bottom-right
        const int strip = (h * 16) / 64;  // 16x64 central strip
        m.areas[4] = {(h - strip) / 2, (h + strip) / 2, 0, w};                  // area 5
        return m;
    }

    const RegionRect& area(int id) const {
        if (id < 1 || id > 5) throw ArgumentError("region id " + std::to_string(id) + " not in 1..5");
        return areas[static_cast<std::size_t>(id - 1)];
    }
};

}  // namespace rqmap
