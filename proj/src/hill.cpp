#include "wsb/hill.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <unordered_map>

namespace wsb {

const char* to_string(HillRegion r) {
    switch (r) {
        case HillRegion::H1: return "H1";
        case HillRegion::H2: return "H2";
        case HillRegion::HO: return "HO";
        case HillRegion::Forbidden: return "forbidden";
    }
    return "?";
}

namespace {

constexpr std::uint8_t kSeedP1 = 1, kSeedP2 = 2, kSeedFar = 4;

void validate_grid(const GridSpec& g) {
    if (g.nx < 2 || g.ny < 2 || !(g.x_max > g.x_min) || !(g.y_max > g.y_min)) {
        throw DomainError("invalid Hill grid");
    }
}

HillRegion region_from_seeds(std::uint8_t seeds) {
    if (seeds & kSeedP2) return HillRegion::H2;
    if (seeds & kSeedP1) return HillRegion::H1;
    return HillRegion::HO;
}

}  // namespace

HillMap::HillMap(double C, MassRatio mu, const GridSpec& grid) : C_(C), mu_(mu), grid_(grid) {
    validate_grid(grid_);
    const std::size_t n = static_cast<std::size_t>(grid_.nx) * grid_.ny;
    allowed_.assign(n, 0);
    seeds_.assign(n, 0);
    const double dx = grid_.dx(), dy = grid_.dy();
    for (int j = 0; j < grid_.ny; ++j) {
        const double y = grid_.y_min + j * dy;
        for (int i = 0; i < grid_.nx; ++i) {
            const double x = grid_.x_min + i * dx;
            allowed_[static_cast<std::size_t>(j) * grid_.nx + i] = 2.0 * effective_potential(x, y, mu_) >= C_ ? 1 : 0;
        }
    }

    auto nearest = [&](double x, double y) {
        const int i = std::clamp(static_cast<int>(std::lround((x - grid_.x_min) / dx)), 0, grid_.nx - 1);
        const int j = std::clamp(static_cast<int>(std::lround((y - grid_.y_min) / dy)), 0, grid_.ny - 1);
        return std::pair{i, j};
    };

    auto fill = [&](std::pair<int, int> start, std::uint8_t bit) {
        const auto idx0 = static_cast<std::size_t>(start.second) * grid_.nx + start.first;
        if (!allowed_[idx0] || (seeds_[idx0] & bit)) return;
        std::deque<std::size_t> queue{idx0};
        seeds_[idx0] |= bit;
        while (!queue.empty()) {
            const std::size_t idx = queue.front();
            queue.pop_front();
            const int i = static_cast<int>(idx % grid_.nx);
            const int j = static_cast<int>(idx / grid_.nx);
            const std::array<std::pair<int, int>, 4> nbrs{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
            for (auto [a, b] : nbrs) {
                if (a < 0 || b < 0 || a >= grid_.nx || b >= grid_.ny) continue;
                const auto k = static_cast<std::size_t>(b) * grid_.nx + a;
                if (allowed_[k] && !(seeds_[k] & bit)) {
                    seeds_[k] |= bit;
                    queue.push_back(k);
                }
            }
        }
    };

    fill(nearest(0.0, 0.0), kSeedP1);
    fill(nearest(1.0, 0.0), kSeedP2);
    const std::array<std::pair<int, int>, 4> corners{
        {{0, 0}, {grid_.nx - 1, 0}, {0, grid_.ny - 1}, {grid_.nx - 1, grid_.ny - 1}}};
    for (auto c : corners) fill(c, kSeedFar);
}

HillLabel HillMap::classify(double y1, double y2) const {
    HillLabel label;
    label.region = 2.0 * effective_potential(y1, y2, mu_) < C_ ? HillRegion::Forbidden : HillRegion::HO;
    const double fx = (y1 - grid_.x_min) / grid_.dx();
    const double fy = (y2 - grid_.y_min) / grid_.dy();
    if (fx < 0.0 || fy < 0.0 || fx >= grid_.nx - 1 || fy >= grid_.ny - 1) {
        // Outside the window everything accessible is far field.
        if (label.region != HillRegion::Forbidden) {
            label.region = HillRegion::HO;
            label.connected_seeds = kSeedFar;
        }
        return label;
    }
    const int i = static_cast<int>(fx), j = static_cast<int>(fy);
    int n_allowed = 0;
    std::uint8_t seeds = 0;
    for (int dj = 0; dj <= 1; ++dj) {
        for (int di = 0; di <= 1; ++di) {
            if (node_allowed(i + di, j + dj)) {
                ++n_allowed;
                seeds |= node_seeds(i + di, j + dj);
            }
        }
    }
    label.boundary_uncertain = (n_allowed != 0 && n_allowed != 4);
    if (label.region == HillRegion::Forbidden) return label;
    label.connected_seeds = seeds;
    if (seeds == 0) {
        label.boundary_uncertain = true;
        label.region = HillRegion::HO;
        return label;
    }
    label.region = region_from_seeds(seeds);
    return label;
}

bool HillMap::connected(HillRegion a, HillRegion b) const {
    auto bit = [](HillRegion r) -> std::uint8_t {
        switch (r) {
            case HillRegion::H1: return kSeedP1;
            case HillRegion::H2: return kSeedP2;
            case HillRegion::HO: return kSeedFar;
            default: return 0;
        }
    };
    const std::uint8_t want = bit(a) | bit(b);
    if (want == 0) return false;
    return std::any_of(seeds_.begin(), seeds_.end(), [want](std::uint8_t s) { return (s & want) == want; });
}

HillLabel hill_classify(double y1, double y2, double C, MassRatio mu, const GridSpec& grid) {
    if ((y1 == 0.0 && y2 == 0.0) || (y1 == 1.0 && y2 == 0.0)) {
        throw DomainError("hill_classify: point coincides with a primary");
    }
    return HillMap(C, mu, grid).classify(y1, y2);
}

std::vector<Polyline> zero_velocity_curve(double C, MassRatio mu, const GridSpec& grid) {
    validate_grid(grid);
    if (C <= 3.0) return {};
    const int nx = grid.nx, ny = grid.ny;
    const double dx = grid.dx(), dy = grid.dy();
    constexpr double big = 1e12;

    std::vector<double> f(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v = 2.0 * effective_potential(grid.x_min + i * dx, grid.y_min + j * dy, mu) - C;
            f[static_cast<std::size_t>(j) * nx + i] = std::isfinite(v) ? std::min(v, big) : big;
        }
    }
    auto F = [&](int i, int j) { return f[static_cast<std::size_t>(j) * nx + i]; };

    // Edge ids: 2*node for the edge to the right, 2*node+1 for the edge upward.
    auto h_edge = [&](int i, int j) { return 2 * (static_cast<long long>(j) * nx + i); };
    auto v_edge = [&](int i, int j) { return 2 * (static_cast<long long>(j) * nx + i) + 1; };

    std::unordered_map<long long, Point2> edge_point;
    auto point_on = [&](long long e) -> Point2 {
        auto it = edge_point.find(e);
        if (it != edge_point.end()) return it->second;
        const long long node = e / 2;
        const int i = static_cast<int>(node % nx), j = static_cast<int>(node / nx);
        const int i2 = (e % 2 == 0) ? i + 1 : i;
        const int j2 = (e % 2 == 0) ? j : j + 1;
        const double a = F(i, j), b = F(i2, j2);
        const double s = a / (a - b);
        Point2 p{grid.x_min + (i + s * (i2 - i)) * dx, grid.y_min + (j + s * (j2 - j)) * dy};
        edge_point.emplace(e, p);
        return p;
    };

    std::vector<std::pair<long long, long long>> segments;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const double f00 = F(i, j), f10 = F(i + 1, j), f11 = F(i + 1, j + 1), f01 = F(i, j + 1);
            const int idx = (f00 >= 0) | ((f10 >= 0) << 1) | ((f11 >= 0) << 2) | ((f01 >= 0) << 3);
            if (idx == 0 || idx == 15) continue;
            const long long bottom = h_edge(i, j), top = h_edge(i, j + 1);
            const long long left = v_edge(i, j), right = v_edge(i + 1, j);
            switch (idx) {
                case 1: case 14: segments.emplace_back(left, bottom); break;
                case 2: case 13: segments.emplace_back(bottom, right); break;
                case 3: case 12: segments.emplace_back(left, right); break;
                case 4: case 11: segments.emplace_back(right, top); break;
                case 6: case 9: segments.emplace_back(bottom, top); break;
                case 7: case 8: segments.emplace_back(left, top); break;
                case 5: case 10: {
                    const bool center_pos = 0.25 * (f00 + f10 + f11 + f01) >= 0;
                    // idx 5: corners 00 and 11 positive.
                    if ((idx == 5) == center_pos) {
                        segments.emplace_back(left, top);
                        segments.emplace_back(bottom, right);
                    } else {
                        segments.emplace_back(left, bottom);
                        segments.emplace_back(right, top);
                    }
                    break;
                }
                default: break;
            }
        }
    }

    std::unordered_map<long long, std::vector<std::size_t>> by_edge;
    by_edge.reserve(segments.size() * 2);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        by_edge[segments[s].first].push_back(s);
        by_edge[segments[s].second].push_back(s);
    }
    std::vector<char> used(segments.size(), 0);

    auto walk = [&](std::size_t seg, long long from_edge, std::vector<long long>& chain) {
        // Extends chain starting at from_edge through the other end of seg.
        while (true) {
            used[seg] = 1;
            const long long next = segments[seg].first == from_edge ? segments[seg].second : segments[seg].first;
            chain.push_back(next);
            std::size_t cont = segments.size();
            for (std::size_t cand : by_edge[next]) {
                if (!used[cand]) {
                    cont = cand;
                    break;
                }
            }
            if (cont == segments.size()) return;
            seg = cont;
            from_edge = next;
        }
    };

    std::vector<Polyline> out;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        std::vector<long long> fwd{segments[s].first};
        walk(s, segments[s].first, fwd);
        // Extend backward from the first edge if the chain did not close.
        std::vector<long long> back;
        if (fwd.back() != fwd.front()) {
            for (std::size_t cand : by_edge[segments[s].first]) {
                if (!used[cand]) {
                    back.push_back(segments[s].first);
                    walk(cand, segments[s].first, back);
                    break;
                }
            }
        }
        Polyline poly;
        for (auto it = back.rbegin(); it != back.rend(); ++it) {
            if (std::next(it) == back.rend()) break;  // shared first edge
            poly.push_back(point_on(*it));
        }
        for (long long e : fwd) poly.push_back(point_on(e));
        out.push_back(std::move(poly));
    }
    return out;
}

double polygon_area(const Polyline& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

}  // namespace wsb
