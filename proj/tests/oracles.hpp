#pragma once

// Independent reference implementations used by tests only. They must stay
// decoupled from the production code paths they verify.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "rqmap/fields.hpp"
#include "rqmap/geometry.hpp"

namespace rqmap::oracle {

// Supersampling occlusion count: walk n_samples points along the segment,
// group the probes by grid cell, then recursively bisect between probes that
// land in different cells. The bisection resolves corner-clipped cells whose
// crossing interval is shorter than the sample step and pins each cell's
// entry/exit parameters, after which the midpoint blocking rule is applied.
// Endpoint cells excluded. Pure point classification; shares no code with
// the production boundary-stepping traversal.
inline int count_occlusions_sampled(const DepthMap& depth, const std::array<double, 3>& a,
                                    const std::array<double, 3>& b, int n_samples = 10000) {
    auto cell_of_point = [&](double s) {
        const double x = a[0] + (b[0] - a[0]) * s;
        const double y = a[1] + (b[1] - a[1]) * s;
        const int c = std::clamp(static_cast<int>(x / depth.cell_x_m), 0, depth.w - 1);
        const int r = std::clamp(static_cast<int>(y / depth.cell_y_m), 0, depth.h - 1);
        return std::pair<int, int>{r, c};
    };
    // endpoint cells taken a hair inside the segment so an endpoint that sits
    // exactly on a grid line resolves to the cell the segment actually
    // occupies, matching the "endpoints' own cells" exclusion
    const double eps = 1e-12;
    const auto cell_a = cell_of_point(eps);
    const auto cell_b = cell_of_point(1.0 - eps);

    // parameter span of each visited cell, tightened by every probe
    std::map<std::pair<int, int>, std::pair<double, double>> spans;
    auto probe = [&](double s) {
        const auto cell = cell_of_point(s);
        auto it = spans.find(cell);
        if (it == spans.end())
            spans[cell] = {s, s};
        else {
            it->second.first = std::min(it->second.first, s);
            it->second.second = std::max(it->second.second, s);
        }
        return cell;
    };

    // bisect until adjacent probes agree or the interval is fully resolved
    auto refine = [&](auto&& self, double s0, std::pair<int, int> c0, double s1,
                      std::pair<int, int> c1, int budget) -> void {
        if (c0 == c1 || budget <= 0) return;
        const double sm = 0.5 * (s0 + s1);
        if (sm <= s0 || sm >= s1) return;  // double resolution exhausted
        const auto cm = probe(sm);
        self(self, s0, c0, sm, cm, budget - 1);
        self(self, sm, cm, s1, c1, budget - 1);
    };

    std::vector<std::pair<double, std::pair<int, int>>> coarse;
    coarse.reserve(static_cast<std::size_t>(n_samples) + 2);
    coarse.push_back({eps, probe(eps)});
    for (int i = 0; i < n_samples; ++i) {
        const double s = (i + 0.5) / n_samples;
        coarse.push_back({s, probe(s)});
    }
    coarse.push_back({1.0 - eps, probe(1.0 - eps)});
    for (std::size_t i = 0; i + 1 < coarse.size(); ++i)
        refine(refine, coarse[i].first, coarse[i].second, coarse[i + 1].first,
               coarse[i + 1].second, 60);

    std::set<std::pair<int, int>> blocked;
    for (const auto& [cell, span] : spans) {
        if (cell == cell_a || cell == cell_b) continue;
        // a span that bisection could not widen beyond a few ulps is a
        // corner touch, not a crossing
        if (span.second - span.first < 1e-12) continue;
        const double sm = (span.first + span.second) / 2;
        const double z = a[2] + (b[2] - a[2]) * sm;
        if (depth.at(cell.first, cell.second) * depth.ceiling_m > z) blocked.insert(cell);
    }
    return static_cast<int>(blocked.size());
}

// Brute-force illumination recomputation on top of the sampled occlusion oracle.
inline FieldMap illumination_sampled(const DepthMap& depth, const std::vector<SourceSpec>& lights,
                                     double receiver_height_m = 1.5) {
    FieldMap f;
    f.h = depth.h;
    f.w = depth.w;
    f.modality = Modality::illumination;
    f.values.resize(depth.values.size());
    double e_max = 0.0;
    for (const auto& l : lights) {
        double best = 1e300;
        for (int r = 0; r < depth.h; ++r)
            for (int c = 0; c < depth.w; ++c) {
                const double dx = (c + 0.5) * depth.cell_x_m - l.position_m[0];
                const double dy = (r + 0.5) * depth.cell_y_m - l.position_m[1];
                const double dz = receiver_height_m - l.position_m[2];
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
        e_max += l.power / std::max(best, 1e-9);
    }
    f.raw_range = {0.0, e_max};
    for (int r = 0; r < depth.h; ++r)
        for (int c = 0; c < depth.w; ++c) {
            const std::array<double, 3> rcv{(c + 0.5) * depth.cell_x_m, (r + 0.5) * depth.cell_y_m,
                                            receiver_height_m};
            double e = 0.0;
            for (const auto& l : lights) {
                if (count_occlusions_sampled(depth, l.position_m, rcv) != 0) continue;
                const double dx = rcv[0] - l.position_m[0];
                const double dy = rcv[1] - l.position_m[1];
                const double dz = rcv[2] - l.position_m[2];
                e += l.power / std::max(dx * dx + dy * dy + dz * dz, 1e-9);
            }
            f.at(r, c) = static_cast<float>(std::clamp(e / e_max, 0.0, 1.0));
        }
    return f;
}

// Dense direct solve of the same discrete Laplace system the relaxation
// solver iterates: Dirichlet 1 at sources, 0 outside the border, no-flux at
// blocked cells.
inline std::vector<double> temperature_dense(const DepthMap& depth,
                                             const std::vector<SourceSpec>& sources,
                                             double block_threshold = 0.25) {
    const int h = depth.h, w = depth.w;
    const int n = h * w;
    std::vector<char> blocked(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) blocked[static_cast<std::size_t>(i)] = depth.values[static_cast<std::size_t>(i)] >= block_threshold;
    std::vector<char> is_source(static_cast<std::size_t>(n), 0);
    for (const auto& s : sources) {
        const int c = std::clamp(static_cast<int>(s.position_m[0] / depth.cell_x_m), 0, w - 1);
        const int r = std::clamp(static_cast<int>(s.position_m[1] / depth.cell_y_m), 0, h - 1);
        is_source[static_cast<std::size_t>(r) * w + c] = 1;
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int i = r * w + c;
            if (blocked[static_cast<std::size_t>(i)]) {
                A(i, i) = 1.0;
                continue;
            }
            if (is_source[static_cast<std::size_t>(i)]) {
                A(i, i) = 1.0;
                rhs(i) = 1.0;
                continue;
            }
            int nweight = 0;
            auto add = [&](int rr, int cc) {
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) {
                    ++nweight;  // border: Dirichlet 0
                } else if (!blocked[static_cast<std::size_t>(rr) * w + cc]) {
                    A(i, rr * w + cc) -= 1.0;
                    ++nweight;
                }
            };
            add(r - 1, c);
            add(r + 1, c);
            add(r, c - 1);
            add(r, c + 1);
            if (nweight == 0) {
                A(i, i) = 1.0;
                continue;
            }
            A(i, i) += nweight;
        }
    }
    Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = x(i);
    return out;
}

// Direct per-cell recomputation of the depth projection: test the cell
// center against every footprint rectangle and keep the tallest hit.
inline float pointwise_depth(const SceneState& scene, int r, int c, int h, int w) {
    const double cell_x = scene.spec.floor_x_m / w;
    const double cell_y = scene.spec.floor_y_m / h;
    const double px = (c + 0.5) * cell_x;
    const double py = (r + 0.5) * cell_y;
    double best = 0.0;
    for (const auto& sh : scene.shelves) {
        const int ncells = static_cast<int>(sh.goods_height_m.size());
        const double cl = sh.len_m / ncells;
        const double x0 = sh.cx_m - sh.len_m / 2;
        if (py < sh.cy_m - sh.wid_m / 2 || py >= sh.cy_m + sh.wid_m / 2) continue;
        for (int j = 0; j < ncells; ++j)
            if (px >= x0 + j * cl && px < x0 + (j + 1) * cl)
                best = std::max(best, sh.goods_height_m[static_cast<std::size_t>(j)]);
    }
    for (const auto& o : scene.obstacles)
        if (px >= o.cx_m - o.sx_m / 2 && px < o.cx_m + o.sx_m / 2 && py >= o.cy_m - o.sy_m / 2 &&
            py < o.cy_m + o.sy_m / 2)
            best = std::max(best, o.height_m);
    return static_cast<float>(std::clamp(best / scene.spec.ceiling_m, 0.0, 1.0));
}

}  // namespace rqmap::oracle
