#include "wsb/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wsb/parallel.hpp"

namespace wsb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw DomainError("not a number: '" + t + "'");
    }
    if (used != t.size() || !std::isfinite(v)) throw DomainError("not a finite number: '" + t + "'");
    return v;
}

long long parse_integer(const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        throw DomainError("not an integer: '" + t + "'");
    }
    if (used != t.size()) throw DomainError("not an integer: '" + t + "'");
    return v;
}

bool parse_bool(const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw DomainError("not a boolean: '" + t + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// Arguments of "name(a, b, ...)" or nullopt when text has another form.
std::optional<std::vector<std::string>> call_args(const std::string& text, const std::string& name) {
    const std::string t = trim(text);
    if (t.rfind(name + "(", 0) != 0 || t.back() != ')') return std::nullopt;
    return split(t.substr(name.size() + 1, t.size() - name.size() - 2), ',');
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
    if (auto args = call_args(text, "linspace")) {
        if (args->size() != 3) throw DomainError("linspace takes (lo, hi, count)");
        const double lo = parse_real((*args)[0]), hi = parse_real((*args)[1]);
        const long long count = parse_integer((*args)[2]);
        if (count < 1) throw DomainError("linspace count must be positive");
        if (count == 1) return {lo};
        std::vector<double> v(static_cast<std::size_t>(count));
        for (long long i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
        return v;
    }
    if (auto args = call_args(text, "uniform")) {
        if (args->size() != 1) throw DomainError("uniform takes (count)");
        const long long count = parse_integer((*args)[0]);
        if (count < 1) throw DomainError("uniform count must be positive");
        std::vector<double> v(static_cast<std::size_t>(count));
        for (long long i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = kTwoPi * i / count;
        return v;
    }
    std::vector<double> v;
    if (trim(text).empty()) return v;
    for (const auto& item : split(text, ',')) v.push_back(parse_real(item));
    return v;
}

double RunConfig::regime_c_min() const { return c_a ? *c_a : lagrange_points(mu).C(3); }
double RunConfig::regime_c_max() const { return c_max ? *c_max : lagrange_points(mu).C(1); }

void RunConfig::validate() const {
    if (!(regime_c_min() < regime_c_max())) throw DomainError("Jacobi regime is empty: c_a must be below c_max");
    if (K < 2) throw DomainError("K must be at least 2");
    if (threads < 0) throw DomainError("threads must be non-negative");
    if (output_dir.empty()) throw DomainError("output directory must not be empty");
    sweep_config().validate();
}

SweepConfig RunConfig::sweep_config() const {
    SweepConfig sc;
    sc.mu = mu;
    sc.thetas = thetas;
    sc.eccentricities = eccentricities;
    sc.ns = ns;
    const auto [lo, hi] = default_scan_range(mu);
    sc.r_lo = r_lo > 0.0 ? r_lo : lo;
    sc.r_hi = r_hi > 0.0 ? r_hi : hi;
    sc.K = K;
    sc.integrator = integrator;
    sc.refine_tol = refine_tol;
    sc.refine = refine;
    sc.threads = resolve_threads(threads);
    return sc;
}

RunConfig parse_run_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& ex) {
        throw DomainError(std::string("config: ") + ex.what());
    }
    static const std::map<std::string, std::set<std::string>> known{
        {"model", {"mu", "c_a", "c_max"}},
        {"integrator", {"rel_tol", "abs_tol", "h_init", "h_min", "h_max", "t_max", "r_min", "event_tol", "tangent_tol"}},
        {"grid", {"theta", "e", "n", "r_lo", "r_hi", "K"}},
        {"refine", {"enabled", "tol"}},
        {"output", {"dir", "svg"}},
        {"run", {"seed", "threads"}},
    };
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw DomainError("config: unknown section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw DomainError("config: key '" + section + "' outside a section");
        for (const auto& kv : body) {
            if (!it->second.count(kv.first)) throw DomainError("config: unknown key " + section + "." + kv.first);
        }
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
        return std::nullopt;
    };
    RunConfig cfg;
    if (auto v = get("model.mu")) cfg.mu = MassRatio(parse_real(*v));
    if (auto v = get("model.c_a")) cfg.c_a = parse_real(*v);
    if (auto v = get("model.c_max")) cfg.c_max = parse_real(*v);
    IntegratorConfig& ic = cfg.integrator;
    const std::pair<const char*, double*> reals[] = {
        {"integrator.rel_tol", &ic.rel_tol}, {"integrator.abs_tol", &ic.abs_tol},   {"integrator.h_init", &ic.h_init},
        {"integrator.h_min", &ic.h_min},     {"integrator.h_max", &ic.h_max},       {"integrator.t_max", &ic.t_max},
        {"integrator.r_min", &ic.r_min},     {"integrator.event_tol", &ic.event_tol}, {"integrator.tangent_tol", &ic.tangent_tol},
        {"grid.r_lo", &cfg.r_lo},            {"grid.r_hi", &cfg.r_hi},              {"refine.tol", &cfg.refine_tol},
    };
    for (const auto& [key, dst] : reals)
        if (auto v = get(key)) *dst = parse_real(*v);
    if (auto v = get("grid.theta")) cfg.thetas = parse_real_list(*v);
    if (auto v = get("grid.e")) cfg.eccentricities = parse_real_list(*v);
    if (auto v = get("grid.n")) {
        for (const auto& item : split(*v, ',')) {
            if (trim(item).empty()) continue;
            cfg.ns.push_back(static_cast<int>(parse_integer(item)));
        }
    }
    if (auto v = get("grid.K")) cfg.K = static_cast<int>(parse_integer(*v));
    if (auto v = get("refine.enabled")) cfg.refine = parse_bool(*v);
    if (auto v = get("output.dir")) cfg.output_dir = *v;
    if (auto v = get("output.svg")) cfg.svg = parse_bool(*v);
    if (auto v = get("run.seed")) {
        const long long s = parse_integer(*v);
        if (s < 0) throw DomainError("seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("run.threads")) cfg.threads = static_cast<int>(parse_integer(*v));
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    return parse_run_config(in);
}

nlohmann::json to_json(const IntegratorConfig& c) {
    return {{"rel_tol", c.rel_tol},     {"abs_tol", c.abs_tol},     {"h_init", c.h_init},
            {"h_min", c.h_min},         {"h_max", c.h_max},         {"t_max", c.t_max},
            {"r_min", c.r_min},         {"event_tol", c.event_tol}, {"tangent_tol", c.tangent_tol}};
}

nlohmann::json to_json(const RunConfig& cfg) {
    const SweepConfig sc = cfg.sweep_config();
    return {
        {"mu", cfg.mu.value()},
        {"regime", {{"c_min", cfg.regime_c_min()}, {"c_max", cfg.regime_c_max()}}},
        {"integrator", to_json(cfg.integrator)},
        {"grid", {{"theta", cfg.thetas}, {"e", cfg.eccentricities}, {"n", cfg.ns}, {"r_lo", sc.r_lo}, {"r_hi", sc.r_hi},
                  {"K", cfg.K}}},
        {"refine", {{"enabled", cfg.refine}, {"tol", cfg.refine_tol}}},
        {"output", {{"dir", cfg.output_dir}, {"svg", cfg.svg}}},
        {"run", {{"seed", cfg.seed}}},
    };
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& parameters,
                             const std::vector<std::string>& products) {
    return {{"tool", "wsb"},
            {"version", kToolVersion},
            {"command", command},
            {"timestamp", utc_timestamp()},
            {"parameters", parameters},
            {"products", products}};
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DomainError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    const std::size_t c = column(name);
    if (row >= rows.size() || c >= rows[row].size()) throw DomainError("CSV row too short");
    return parse_real(rows[row][c]);
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size()) throw DomainError("CSV row width differs from the header");
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw DomainError("CSV is empty (no header)");
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open product " + path);
    return read_csv(in);
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    return colors[i % 7];
}

}  // namespace

void SvgFigure::write(std::ostream& os) const {
    constexpr double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto grow = [&](double x, double y) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    };
    for (const auto& p : points) grow(p.x, p.y);
    for (const auto& s : segments) {
        grow(s.x0, s.y0);
        grow(s.x1, s.y1);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 <= 0.0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0.0) y0 -= 0.5, y1 += 0.5;
    const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
    x0 -= px, x1 += px, y0 -= py, y1 += py;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n";
    os << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n";
    os << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(W - ml - mr) << "\" height=\""
       << num(H - mt - mb) << "\"/>\n</g>\n";
    os << "<g id=\"ticks\" font-size=\"11\">\n";
    os << "<text x=\"" << num(ml) << "\" y=\"" << num(H - mb + 16) << "\" text-anchor=\"start\">" << label(x0)
       << "</text>\n";
    os << "<text x=\"" << num(W - mr) << "\" y=\"" << num(H - mb + 16) << "\" text-anchor=\"end\">" << label(x1)
       << "</text>\n";
    os << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(H - mb) << "\" text-anchor=\"end\">" << label(y0)
       << "</text>\n";
    os << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(mt + 10) << "\" text-anchor=\"end\">" << label(y1)
       << "</text>\n";
    os << "<text x=\"" << num((ml + W - mr) / 2) << "\" y=\"" << num(H - 12) << "\" text-anchor=\"middle\">"
       << escape(x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num((mt + H - mb) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num((mt + H - mb) / 2) << ")\">" << escape(y_label) << "</text>\n</g>\n";
    os << "<g id=\"segments\" stroke-width=\"1.5\">\n";
    for (const auto& s : segments) {
        os << "<line x1=\"" << num(sx(s.x0)) << "\" y1=\"" << num(sy(s.y0)) << "\" x2=\"" << num(sx(s.x1))
           << "\" y2=\"" << num(sy(s.y1)) << "\" stroke=\"" << s.color << "\"/>\n";
    }
    os << "</g>\n<g id=\"points\">\n";
    for (const auto& p : points) {
        os << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y)) << "\" r=\"2\" fill=\"" << p.color
           << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
}

const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> kinds{"scan", "intervals", "boundaries", "cuts", "iterates", "trajectory"};
    return kinds;
}

SvgFigure figure_for(const CsvTable& t, const std::string& kind) {
    SvgFigure f;
    const std::size_t n = t.rows.size();
    if (kind == "scan") {
        f.title = "Radial scan verdicts";
        f.x_label = "r";
        f.y_label = "scan index";
        const std::size_t cv = t.column("verdict");
        std::map<std::tuple<double, double, double>, std::size_t> level;
        for (std::size_t i = 0; i < n; ++i) {
            const auto key = std::make_tuple(t.number(i, "theta"), t.number(i, "e"), t.number(i, "n"));
            const auto [it, fresh] = level.emplace(key, level.size());
            (void)fresh;
            const bool stable = t.rows[i][cv] == "stable";
            f.points.push_back({t.number(i, "r"), static_cast<double>(it->second), stable ? "#2ca02c" : "#d62728"});
        }
    } else if (kind == "intervals") {
        f.title = "Stable intervals";
        f.x_label = "Y1";
        f.y_label = "Y2";
        for (std::size_t i = 0; i < n; ++i) {
            const double th = t.number(i, "theta"), a = t.number(i, "a"), b = t.number(i, "b");
            f.segments.push_back({a * std::cos(th), a * std::sin(th), b * std::cos(th), b * std::sin(th),
                                  palette(static_cast<std::size_t>(t.number(i, "n")))});
        }
    } else if (kind == "boundaries") {
        f.title = "Boundary points";
        f.x_label = "Y1";
        f.y_label = "Y2";
        for (std::size_t i = 0; i < n; ++i) {
            const double th = t.number(i, "theta"), r = t.number(i, "r_star");
            f.points.push_back({r * std::cos(th), r * std::sin(th), palette(static_cast<std::size_t>(t.number(i, "n")))});
        }
    } else if (kind == "cuts") {
        f.title = "Manifold cuts";
        f.x_label = "r";
        f.y_label = "rdot";
        for (std::size_t i = 0; i < n; ++i)
            f.points.push_back({t.number(i, "r"), t.number(i, "rdot"), palette(static_cast<std::size_t>(t.number(i, "k")))});
    } else if (kind == "iterates") {
        f.title = "Section iterates";
        f.x_label = "r";
        f.y_label = "rdot";
        for (std::size_t i = 0; i < n; ++i) f.points.push_back({t.number(i, "r"), t.number(i, "rdot"), palette(0)});
    } else if (kind == "trajectory") {
        f.title = "Trajectory";
        f.x_label = "y1";
        f.y_label = "y2";
        for (std::size_t i = 0; i + 1 < n; ++i) {
            f.segments.push_back({t.number(i, "y1"), t.number(i, "y2"), t.number(i + 1, "y1"), t.number(i + 1, "y2"),
                                  palette(0)});
        }
    } else {
        throw DomainError("unknown product kind '" + kind + "'");
    }
    return f;
}

}  // namespace wsb
