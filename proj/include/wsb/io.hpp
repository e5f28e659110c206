// Run configuration (INI-style key/value file with sections), JSON manifests,
// a small CSV reader for the products written by this library and
// deterministic SVG figures.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsb/sweep.hpp"

namespace wsb {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
    MassRatio mu{0.01215};
    // Jacobi range of interest. c_max defaults to C1; c_a overrides the lower
    // bound (default C3).
    std::optional<double> c_a;
    std::optional<double> c_max;
    IntegratorConfig integrator{};
    std::vector<double> thetas;
    std::vector<double> eccentricities;
    std::vector<int> ns;
    double r_lo = 1e-3;
    double r_hi = 0.0;  // 0 selects the default scan range
    int K = 500;
    double refine_tol = kDefaultRefineTol;
    bool refine = true;
    std::string output_dir = "wsb_out";
    std::uint64_t seed = 1;
    int threads = 0;
    bool svg = true;

    double regime_c_min() const;
    double regime_c_max() const;
    void validate() const;
    SweepConfig sweep_config() const;
};

// Sections and keys:
//   [model]      mu, c_a, c_max
//   [integrator] rel_tol, abs_tol, h_init, h_min, h_max, t_max, r_min,
//                event_tol, tangent_tol
//   [grid]       theta, e, n, r_lo, r_hi, K
//   [refine]     enabled, tol
//   [output]     dir, svg
//   [run]        seed, threads
// Grid values are comma-separated lists, "linspace(lo, hi, count)" or, for
// angles, "uniform(count)" = 2 pi k / count. Unknown keys are rejected.
// Throws DomainError on malformed input.
RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::string& path);

std::vector<double> parse_real_list(const std::string& text);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const IntegratorConfig& cfg);

// Manifest of one output directory; products are file names relative to it.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& parameters,
                             const std::vector<std::string>& products);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  // throws DomainError when absent
    double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

// Deterministic SVG: fixed canvas, fixed number formatting, no timestamps.
struct SvgFigure {
    std::string title;
    std::string x_label, y_label;
    struct Point {
        double x, y;
        std::string color;
    };
    struct Segment {
        double x0, y0, x1, y1;
        std::string color;
    };
    std::vector<Point> points;
    std::vector<Segment> segments;

    void write(std::ostream& os) const;
};

// Product kinds: scan, intervals, boundaries, cuts, iterates, trajectory.
// Throws DomainError for an unknown kind or a table missing its columns.
SvgFigure figure_for(const CsvTable& table, const std::string& kind);

const std::vector<std::string>& plot_kinds();

}  // namespace wsb
