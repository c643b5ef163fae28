#include "rqmap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace rqmap {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::radio: return "radio";
        case Modality::illumination: return "illumination";
        case Modality::temperature: return "temperature";
    }
    return "?";
}

Modality modality_from_name(const std::string& name) {
    if (name == "radio") return Modality::radio;
    if (name == "illumination") return Modality::illumination;
    if (name == "temperature") return Modality::temperature;
    throw ArgumentError("unknown modality '" + name + "'");
}

namespace {

void check_inside(const DepthMap& d, const std::array<double, 3>& p, const char* which) {
    const double fx = d.w * d.cell_x_m;
    const double fy = d.h * d.cell_y_m;
    if (p[0] < 0 || p[0] > fx || p[1] < 0 || p[1] > fy || p[2] < 0 || p[2] > d.ceiling_m)
        throw ArgumentError(std::string("count_occlusions: endpoint ") + which + " outside the volume");
}

std::pair<int, int> cell_of(const DepthMap& d, double x, double y) {
    const int c = std::clamp(static_cast<int>(x / d.cell_x_m), 0, d.w - 1);
    const int r = std::clamp(static_cast<int>(y / d.cell_y_m), 0, d.h - 1);
    return {r, c};
}

}  // namespace

int count_occlusions(const DepthMap& depth, const std::array<double, 3>& a,
                     const std::array<double, 3>& b) {
    check_inside(depth, a, "a");
    check_inside(depth, b, "b");

    // parameters where the xy-projection of the segment crosses grid lines
    std::vector<double> ss;
    ss.push_back(0.0);
    ss.push_back(1.0);
    const double dx = b[0] - a[0];
    const double dy = b[1] - a[1];
    if (std::abs(dx) > 1e-12) {
        const int c_lo = static_cast<int>(std::ceil(std::min(a[0], b[0]) / depth.cell_x_m));
        const int c_hi = static_cast<int>(std::floor(std::max(a[0], b[0]) / depth.cell_x_m));
        for (int c = c_lo; c <= c_hi; ++c) {
            const double s = (c * depth.cell_x_m - a[0]) / dx;
            if (s > 0.0 && s < 1.0) ss.push_back(s);
        }
    }
    if (std::abs(dy) > 1e-12) {
        const int r_lo = static_cast<int>(std::ceil(std::min(a[1], b[1]) / depth.cell_y_m));
        const int r_hi = static_cast<int>(std::floor(std::max(a[1], b[1]) / depth.cell_y_m));
        for (int r = r_lo; r <= r_hi; ++r) {
            const double s = (r * depth.cell_y_m - a[1]) / dy;
            if (s > 0.0 && s < 1.0) ss.push_back(s);
        }
    }
    std::sort(ss.begin(), ss.end());

    const auto cell_a = cell_of(depth, a[0], a[1]);
    const auto cell_b = cell_of(depth, b[0], b[1]);
    std::set<std::pair<int, int>> blocked;
    for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
        const double width = ss[i + 1] - ss[i];
        if (width < 1e-12) continue;
        const double sm = (ss[i] + ss[i + 1]) / 2;
        const auto cell = cell_of(depth, a[0] + dx * sm, a[1] + dy * sm);
        if (cell == cell_a || cell == cell_b) continue;
        const double z = a[2] + (b[2] - a[2]) * sm;
        if (depth.at(cell.first, cell.second) * depth.ceiling_m > z) blocked.insert(cell);
    }
    return static_cast<int>(blocked.size());
}

FieldMap radio_map(const DepthMap& depth, const SourceSpec& antenna, const FieldConstants& k) {
    if (antenna.kind != SourceKind::radio_antenna)
        throw ArgumentError("radio_map: source kind must be radio_antenna");
    FieldMap f;
    f.h = depth.h;
    f.w = depth.w;
    f.modality = Modality::radio;
    f.raw_range = {k.rx_min_dbm, k.rx_max_dbm};
    f.values.resize(depth.values.size());
    const double span = k.rx_max_dbm - k.rx_min_dbm;
    for (int r = 0; r < depth.h; ++r) {
        for (int c = 0; c < depth.w; ++c) {
            const std::array<double, 3> rcv{(c + 0.5) * depth.cell_x_m, (r + 0.5) * depth.cell_y_m,
                                            k.receiver_height_m};
            const int occ = count_occlusions(depth, antenna.position_m, rcv);
            const double ddx = rcv[0] - antenna.position_m[0];
            const double ddy = rcv[1] - antenna.position_m[1];
            const double ddz = rcv[2] - antenna.position_m[2];
            const double d = std::max(std::sqrt(ddx * ddx + ddy * ddy + ddz * ddz), 1.0);
            double rx = antenna.power - k.pl0_db - 10.0 * k.path_loss_exp * std::log10(d) -
                        std::min(k.occlusion_db * occ, k.occlusion_cap_db);
            rx = std::clamp(rx, k.rx_min_dbm, k.rx_max_dbm);
            f.at(r, c) = static_cast<float>((rx - k.rx_min_dbm) / span);
        }
    }
    return f;
}

FieldMap illumination_map(const DepthMap& depth, const std::vector<SourceSpec>& lights,
                          const FieldConstants& k) {
    if (lights.empty()) throw ArgumentError("illumination_map: need at least one light");
    for (const auto& l : lights)
        if (l.kind != SourceKind::light) throw ArgumentError("illumination_map: source kind must be light");

    FieldMap f;
    f.h = depth.h;
    f.w = depth.w;
    f.modality = Modality::illumination;
    f.values.resize(depth.values.size());

    // normalization from the light layout itself: peak irradiance if every
    // light were visible from its nearest cell centre
    double e_max = 0.0;
    for (const auto& l : lights) {
        double best = 1e300;
        for (int r = 0; r < depth.h; ++r)
            for (int c = 0; c < depth.w; ++c) {
                const double ddx = (c + 0.5) * depth.cell_x_m - l.position_m[0];
                const double ddy = (r + 0.5) * depth.cell_y_m - l.position_m[1];
                const double ddz = k.receiver_height_m - l.position_m[2];
                best = std::min(best, ddx * ddx + ddy * ddy + ddz * ddz);
            }
        e_max += l.power / std::max(best, 1e-9);
    }
    f.raw_range = {0.0, e_max};

    for (int r = 0; r < depth.h; ++r) {
        for (int c = 0; c < depth.w; ++c) {
            const std::array<double, 3> rcv{(c + 0.5) * depth.cell_x_m, (r + 0.5) * depth.cell_y_m,
                                            k.receiver_height_m};
            double e = 0.0;
            for (const auto& l : lights) {
                if (count_occlusions(depth, l.position_m, rcv) != 0) continue;
                const double ddx = rcv[0] - l.position_m[0];
                const double ddy = rcv[1] - l.position_m[1];
                const double ddz = rcv[2] - l.position_m[2];
                e += l.power / std::max(ddx * ddx + ddy * ddy + ddz * ddz, 1e-9);
            }
            f.at(r, c) = static_cast<float>(std::clamp(e / e_max, 0.0, 1.0));
        }
    }
    return f;
}

FieldMap temperature_map(const DepthMap& depth, const std::vector<SourceSpec>& sources, double tol,
                         const FieldConstants& k) {
    if (tol <= 0) throw ArgumentError("temperature_map: tol must be > 0");
    for (const auto& s : sources)
        if (s.kind != SourceKind::heat) throw ArgumentError("temperature_map: source kind must be heat");

    const int h = depth.h, w = depth.w;
    std::vector<char> blocked(static_cast<std::size_t>(h) * w, 0);
    for (std::size_t i = 0; i < blocked.size(); ++i)
        blocked[i] = depth.values[i] >= k.heat_block_threshold ? 1 : 0;

    std::vector<char> is_source(blocked.size(), 0);
    for (const auto& s : sources) {
        const auto [r, c] = cell_of(depth, s.position_m[0], s.position_m[1]);
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        if (blocked[i]) throw ArgumentError("temperature_map: heat source inside a blocked cell");
        is_source[i] = 1;
    }

    // Laplace with Dirichlet T=1 at sources, T=0 outside the grid border, and
    // no-flux at blocked cells; SOR with a deterministic row-major sweep.
    std::vector<double> T(blocked.size(), 0.0);
    for (std::size_t i = 0; i < T.size(); ++i)
        if (is_source[i]) T[i] = 1.0;

    const double omega = 1.8;
    double residual = 0.0;
    int iter = 0;
    for (; iter < k.heat_max_iters; ++iter) {
        residual = 0.0;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                if (blocked[i] || is_source[i]) continue;
                double sum = 0.0;
                int nweight = 0;
                // off-grid neighbours are the T=0 floor boundary
                auto add = [&](int rr, int cc) {
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) {
                        ++nweight;  // contributes 0
                    } else if (!blocked[static_cast<std::size_t>(rr) * w + cc]) {
                        sum += T[static_cast<std::size_t>(rr) * w + cc];
                        ++nweight;
                    }
                };
                add(r - 1, c);
                add(r + 1, c);
                add(r, c - 1);
                add(r, c + 1);
                const double g = nweight ? sum / nweight : 0.0;
                const double delta = g - T[i];
                residual = std::max(residual, std::abs(delta));
                T[i] += omega * delta;
            }
        }
        if (residual < tol) break;
    }
    if (residual >= tol)
        throw NumericError("temperature_map: no convergence after " + std::to_string(k.heat_max_iters) +
                           " sweeps, residual " + std::to_string(residual));

    FieldMap f;
    f.h = h;
    f.w = w;
    f.modality = Modality::temperature;
    f.raw_range = {0.0, 1.0};
    f.values.resize(T.size());
    for (std::size_t i = 0; i < T.size(); ++i)
        f.values[i] = static_cast<float>(std::clamp(T[i], 0.0, 1.0));
    return f;
}

std::pair<DepthMap, FieldMap> generate_labeled_sample(const SceneState& scene, Modality modality,
                                                      int h, int w, const FieldConstants& k) {
    DepthMap depth = project_depth(scene, h, w);
    switch (modality) {
        case Modality::radio: {
            const SourceSpec* ant = nullptr;
            for (const auto& s : scene.sources)
                if (s.kind == SourceKind::radio_antenna) ant = &s;
            if (!ant) throw ArgumentError("generate_labeled_sample: scene has no radio antenna");
            return {depth, radio_map(depth, *ant, k)};
        }
        case Modality::illumination: {
            std::vector<SourceSpec> lights;
            for (const auto& s : scene.sources)
                if (s.kind == SourceKind::light) lights.push_back(s);
            return {depth, illumination_map(depth, lights, k)};
        }
        case Modality::temperature: {
            std::vector<SourceSpec> heats;
            for (const auto& s : scene.sources)
                if (s.kind == SourceKind::heat) heats.push_back(s);
            return {depth, temperature_map(depth, heats, k.heat_tol, k)};
        }
    }
    throw ArgumentError("generate_labeled_sample: unknown modality");
}

}  // namespace rqmap
