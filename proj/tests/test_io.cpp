#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "wsb/io.hpp"

using namespace wsb;

namespace {

std::size_t count_of(const std::string& s, const std::string& what) {
    std::size_t n = 0;
    for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
    return n;
}

std::string render(const SvgFigure& f) {
    std::ostringstream os;
    f.write(os);
    return os.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("run configuration") {
    std::istringstream is(R"(
[model]
mu = 0.00095
[integrator]
rel_tol = 1e-11
[grid]
theta = uniform(4)
e = 0, 0.4, 0.9
n = 1, 2
r_lo = 0.002
r_hi = 0.05
K = 100
[refine]
enabled = true
tol = 1e-9
[output]
dir = out
svg = false
[run]
seed = 7
threads = 2
)");
    const RunConfig c = parse_run_config(is);
    CHECK(c.mu.value() == 0.00095);
    CHECK(c.integrator.rel_tol == 1e-11);
    REQUIRE(c.thetas.size() == 4);
    CHECK(c.thetas[2] == doctest::Approx(M_PI));
    CHECK(c.eccentricities == std::vector<double>{0.0, 0.4, 0.9});
    CHECK(c.ns == std::vector<int>{1, 2});
    CHECK(c.K == 100);
    CHECK(c.refine_tol == 1e-9);
    CHECK(c.output_dir == "out");
    CHECK_FALSE(c.svg);
    CHECK(c.seed == 7);
    CHECK(c.threads == 2);
    CHECK_NOTHROW(c.validate());
    const SweepConfig s = c.sweep_config();
    CHECK(s.r_hi == 0.05);
    CHECK(s.threads == 2);
    CHECK(c.regime_c_max() == doctest::Approx(lagrange_points(c.mu).C(1)));
    CHECK(c.regime_c_min() == doctest::Approx(lagrange_points(c.mu).C(3)));
    const auto j = to_json(c);
    CHECK(j.at("mu").get<double>() == 0.00095);
    CHECK_FALSE(j.contains("threads"));
}

TEST_CASE("malformed configurations") {
    auto bad = [](const std::string& text) {
        std::istringstream is(text);
        return parse_run_config(is);
    };
    CHECK_THROWS_AS(bad("[model]\nmu = 0.7\n"), DomainError);
    CHECK_THROWS_AS(bad("[model]\nmu = abc\n"), DomainError);
    CHECK_THROWS_AS(bad("[nosuch]\nx = 1\n"), DomainError);
    CHECK_THROWS_AS(bad("[grid]\nbogus = 1\n"), DomainError);
    CHECK_THROWS_AS(bad("[grid]\ne = 1.5\n"), DomainError);
    CHECK_THROWS_AS(bad("[grid]\nK = 1\n"), DomainError);
    CHECK_THROWS_AS(bad("[model]\nc_a = 3.3\nc_max = 3.1\n"), DomainError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.ini"), DomainError);
}

TEST_CASE("real lists") {
    CHECK(parse_real_list("") .empty());
    CHECK(parse_real_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
    const auto l = parse_real_list("linspace(0, 1, 5)");
    REQUIRE(l.size() == 5);
    CHECK(l[1] == 0.25);
    CHECK(l.back() == 1.0);
    CHECK(parse_real_list("uniform(2)") == std::vector<double>{0.0, M_PI});
    CHECK_THROWS_AS(parse_real_list("linspace(0, 1)"), DomainError);
    CHECK_THROWS_AS(parse_real_list("1, x"), DomainError);
}

TEST_CASE("manifest") {
    const auto m = make_manifest("sweep", {{"K", 10}}, {"scans.csv"});
    CHECK(m.at("command") == "sweep");
    CHECK(m.at("version") == kToolVersion);
    CHECK(m.at("products").size() == 1);
    CHECK(m.contains("timestamp"));
}

TEST_CASE("CSV reader") {
    std::istringstream is("a,b\n1,2\n3,4.5\n");
    const CsvTable t = read_csv(is);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(1, "b") == 4.5);
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS(t.column("c"), DomainError);
    std::istringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS(read_csv(ragged), DomainError);
}

TEST_CASE("SVG output is deterministic") {
    SvgFigure f;
    f.title = "t & <u>";
    f.points = {{0.1, 0.2, "#000000"}, {0.3, 0.4, "#ff0000"}};
    const std::string a = render(f), b = render(f);
    CHECK(a == b);
    CHECK(a.find("t &amp; &lt;u&gt;") != std::string::npos);
    CHECK(count_of(a, "<circle") == 2);
    CHECK(a.find("width=\"640\" height=\"480\"") != std::string::npos);
}

TEST_CASE("figures for products") {
    std::ostringstream bs;
    write_boundaries_csv(bs, {});
    std::istringstream bi(bs.str());
    const std::string empty = render(figure_for(read_csv(bi), "boundaries"));
    CHECK(empty.find("id=\"axes\"") != std::string::npos);
    CHECK(count_of(empty, "<circle") == 0);

    IntervalSet s;
    s.theta = 0.5;
    s.intervals = {{0.01, 0.02}, {0.03, 0.05}};
    IntervalSet u;
    u.theta = 1.5;
    u.intervals = {{0.001, 0.04}};
    std::ostringstream is_;
    write_intervals_csv(is_, {s, u});
    std::istringstream ii(is_.str());
    const std::string fig = render(figure_for(read_csv(ii), "intervals"));
    CHECK(count_of(fig, "<line") == 3);

    std::istringstream other("x\n1\n");
    CHECK_THROWS_AS(figure_for(read_csv(other), "nosuch"), DomainError);
    std::istringstream missing("x\n1\n");
    CHECK_THROWS_AS(figure_for(read_csv(missing), "scan"), DomainError);
    CHECK(plot_kinds().size() == 6);
}

}  // TEST_SUITE
