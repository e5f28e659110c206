// Hill's regions and zero-velocity curves on a fixed grid.
#pragma once

#include <cstdint>
#include <vector>

#include "wsb/dynamics.hpp"

namespace wsb {

enum class HillRegion { H1, H2, HO, Forbidden };

const char* to_string(HillRegion r);

/// Rectangular sampling window in the P1-centered frame.
struct GridSpec {
    double x_min = -2.0, x_max = 3.0;
    double y_min = -2.5, y_max = 2.5;
    int nx = 2048, ny = 2048;

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dy() const { return (y_max - y_min) / (ny - 1); }
};

struct HillLabel {
    HillRegion region = HillRegion::Forbidden;
    // Set when the point is within one cell of the zero-velocity curve.
    bool boundary_uncertain = false;
    // Bitmask of the seeds (1: P1, 2: P2, 4: far field) connected to the point.
    std::uint8_t connected_seeds = 0;
};

/// Flood-filled accessibility map for one (C, mu). Component labels are seeded
/// at P1, P2 and the far-field corner of the grid. When components merge the
/// label prefers H2, then H1, then HO.
class HillMap {
public:
    HillMap(double C, MassRatio mu, const GridSpec& grid = {});

    HillLabel classify(double y1, double y2) const;

    double jacobi() const { return C_; }
    const GridSpec& grid() const { return grid_; }

    // Whether the seeds' components are connected to each other.
    bool connected(HillRegion a, HillRegion b) const;

private:
    std::uint8_t node_seeds(int i, int j) const { return seeds_[static_cast<std::size_t>(j) * grid_.nx + i]; }
    bool node_allowed(int i, int j) const { return allowed_[static_cast<std::size_t>(j) * grid_.nx + i] != 0; }

    double C_;
    MassRatio mu_;
    GridSpec grid_;
    std::vector<std::uint8_t> allowed_;
    std::vector<std::uint8_t> seeds_;
};

// Builds a HillMap and labels one point. Prefer HillMap for repeated queries.
HillLabel hill_classify(double y1, double y2, double C, MassRatio mu, const GridSpec& grid = {});

struct Point2 {
    double x = 0.0, y = 0.0;
};

using Polyline = std::vector<Point2>;

// Contour 2 Omega = C by marching squares. Returns an empty set for C <= 3,
// where no forbidden region exists.
std::vector<Polyline> zero_velocity_curve(double C, MassRatio mu, const GridSpec& grid = {});

// Signed shoelace area of a closed polyline.
double polygon_area(const Polyline& poly);

}  // namespace wsb
