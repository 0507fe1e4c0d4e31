#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "cgc/mongeampere.hpp"
#include "cgc/probe.hpp"

using namespace cgc;

namespace {

Scenario cap_scenario(double t = 0.25) { return make_scenario(1.0, 0.8, t, 3); }

// solved once per h and shared between tests
const SolveResult& cap_solution(int div)
{
    static std::map<int, SolveResult> cache;
    auto it = cache.find(div);
    if (it == cache.end()) {
        const Scenario s = cap_scenario();
        it = cache.emplace(div, solve(build_patch(s, s.rim_radius() / div), s.t, StencilSet::width(2))).first;
    }
    return it->second;
}

void fill(GraphPatch& p, const std::function<double(double, double)>& f)
{
    for (std::size_t n = 0; n < p.nodes.size(); ++n) p.v[n] = f(p.nodes[n].x, p.nodes[n].y);
}

}  // namespace

TEST(Stencil, Validation)
{
    EXPECT_EQ(StencilSet::width(1).pairs().size(), 2u);
    EXPECT_EQ(StencilSet::width(2).pairs().size(), 4u);
    EXPECT_EQ(StencilSet::width(2).reach(), 2);
    EXPECT_THROW(StencilSet::width(3), std::invalid_argument);
    EXPECT_THROW(StencilSet({{{1, 0}, {1, 1}}, {{0, 1}, {1, 0}}}), std::invalid_argument);
    EXPECT_THROW(StencilSet({{{2, 0}, {0, 1}}, {{1, 1}, {-1, 1}}}), std::invalid_argument);
    EXPECT_THROW(StencilSet({{{1, 0}, {0, 1}}}), std::invalid_argument);
}

TEST(Patch, CapScenarioSetup)
{
    const Scenario s = cap_scenario();
    const GraphPatch p = build_patch(s, s.rim_radius() / 16);
    EXPECT_NEAR(p.rho, 0.6, 1e-15);
    for (double th : {0.0, 1.0, 4.0}) EXPECT_DOUBLE_EQ(p.g(th), -0.8);
    for (const auto& [q, g] : rim_nodes(p, StencilSet::width(2))) {
        EXPECT_NEAR(std::hypot(q.x, q.y), 0.6, 1e-12);
        EXPECT_DOUBLE_EQ(g, -0.8);
    }
    EXPECT_GE(min_second_difference(p, StencilSet::width(2)), -1e-12);
    for (std::size_t n = 0; n < p.nodes.size(); ++n) EXPECT_GE(p.v[n], p.obstacle[n]);
    EXPECT_THROW(build_patch(s, s.rim_radius() / 4), std::invalid_argument);
    EXPECT_THROW(build_patch(make_scenario(1.0, 1.0, 0.5, 2), 0.05), std::invalid_argument);
}

TEST(Operator, ExactOnQuadratics)
{
    const double rho = 0.6, h = rho / 12;
    for (double a : {1.0, 2.0, 0.5}) {
        // v = a|x|^2 / 2 has det D^2 v = a^2 with rim value a rho^2 / 2
        GraphPatch p = make_disk_patch(rho, h, RimData{0.5 * a * rho * rho, {}, {}});
        fill(p, [a](double x, double y) { return 0.5 * a * (x * x + y * y); });
        const StencilTopology topo = build_topology(p, StencilSet::width(2));
        for (std::size_t n = 0; n < p.nodes.size(); ++n) EXPECT_NEAR(ma_operator_at(p, topo, n, a * a), 0.0, 1e-9);
    }
}

TEST(Operator, MinimumOverPairs)
{
    const double rho = 0.6, h = rho / 12;
    // v = (3x^2 + y^2) / 2: the axis pair sees 3 * 1, the diagonal pair 2 * 2
    GraphPatch p = make_disk_patch(rho, h, RimData{rho * rho, {0.0, 0.5 * rho * rho}, {}});
    fill(p, [](double x, double y) { return 0.5 * (3.0 * x * x + y * y); });
    const StencilTopology topo = build_topology(p, StencilSet::width(1));
    const auto n = static_cast<std::size_t>(p.node_at(0, 0));
    ASSERT_EQ(topo.pairs[n].size(), 2u);
    EXPECT_NEAR(second_difference(p, n, topo.pairs[n][0].a) * second_difference(p, n, topo.pairs[n][0].b), 3.0, 1e-12);
    EXPECT_NEAR(second_difference(p, n, topo.pairs[n][1].a) * second_difference(p, n, topo.pairs[n][1].b), 4.0, 1e-12);
    EXPECT_NEAR(ma_det_at(p, topo, n), 3.0, 1e-12);
}

TEST(Operator, SaddleIsClamped)
{
    const double rho = 0.6, h = rho / 12;
    GraphPatch p = make_disk_patch(rho, h, RimData{0.0, {0.0, 0.5 * rho * rho}, {}});
    fill(p, [](double x, double y) { return 0.5 * (x * x - y * y); });
    const StencilTopology topo = build_topology(p, StencilSet::width(2));
    const auto n = static_cast<std::size_t>(p.node_at(0, 0));
    const double rhs = curvature_rhs(0.25, node_gradient(p, topo, n));
    EXPECT_NEAR(rhs, 0.25, 1e-15);
    EXPECT_NEAR(ma_operator_at(p, topo, n, rhs), -rhs, 1e-11);
}

TEST(Operator, SecondOrderConsistency)
{
    // v = r^2/2 + r^4/4: Hessian eigenvalues 1 + 3 r^2 (radial) and 1 + r^2 (tangential)
    auto v = [](double x, double y) {
        const double r2 = x * x + y * y;
        return 0.5 * r2 + 0.25 * r2 * r2;
    };
    const double rho = 0.6;
    for (const Vec2 q : {Vec2{0.2, 0.0}, Vec2{0.2, 0.2}}) {
        const double r2 = q.x * q.x + q.y * q.y;
        const double exact = (1.0 + 3.0 * r2) * (1.0 + r2);
        double prev = 0.0;
        for (double h : {0.05, 0.025, 0.0125}) {
            GraphPatch p = make_disk_patch(rho, h, RimData{v(rho, 0.0), {}, {}});
            fill(p, v);
            const StencilTopology topo = build_topology(p, StencilSet::width(2));
            const int n = p.node_at(static_cast<int>(std::lround(q.x / h)), static_cast<int>(std::lround(q.y / h)));
            ASSERT_GE(n, 0);
            const double err = std::abs(ma_det_at(p, topo, static_cast<std::size_t>(n)) - exact);
            if (prev > 0.0) {
                EXPECT_GE(prev / err, 3.0) << "h=" << h;
            }
            prev = err;
        }
        EXPECT_LT(prev, 1e-3);
    }
}

TEST(Solver, CapBenchmark)
{
    const Scenario s = cap_scenario();
    const SolveResult& r = cap_solution(32);
    EXPECT_NEAR(cap_apex(s), 0.892122, 1e-6);
    EXPECT_NEAR(apex_height(r.patch), cap_apex(s), 1e-4);
    EXPECT_LE(compare_to_cap(r.patch, s).max_error, 1e-4);
    EXPECT_LE(r.history.back(), 1e-8 * s.t);
    EXPECT_EQ(static_cast<int>(r.history.size()), r.sweeps);
}

TEST(Solver, ConvexAndAboveObstacle)
{
    const SolveResult& r = cap_solution(32);
    EXPECT_GE(min_second_difference(r.patch, StencilSet::width(2)), -1e-6);
    for (std::size_t n = 0; n < r.patch.nodes.size(); ++n) EXPECT_GE(r.patch.v[n], r.patch.obstacle[n]);
}

TEST(Solver, RefinementRatio)
{
    const Scenario s = cap_scenario();
    const double e16 = compare_to_cap(cap_solution(16).patch, s).max_error;
    const double e32 = compare_to_cap(cap_solution(32).patch, s).max_error;
    EXPECT_GE(e16 / e32, 1.5);
}

TEST(Solver, CriticalCurvatureGivesUnitSphere)
{
    // t = k = 1: the graph is the unit sphere itself and no node rests on the obstacle
    const Scenario s = make_scenario(1.0, 0.8, 1.0, 3);
    const SolveResult r = solve(build_patch(s, s.rim_radius() / 16), s.t, StencilSet::width(2));
    EXPECT_LE(compare_to_cap(r.patch, s).max_error, 1e-3);
    for (std::size_t n = 0; n < r.patch.nodes.size(); ++n)
        EXPECT_NEAR(r.patch.u(n), std::sqrt(1.0 - r.patch.nodes[n].x * r.patch.nodes[n].x - r.patch.nodes[n].y * r.patch.nodes[n].y), 1e-3);
}

TEST(Solver, IteratesDecreaseNodewise)
{
    const Scenario s = cap_scenario();
    SolveOptions opt;
    std::vector<double> last;
    int bad = 0;
    opt.on_sweep = [&](int, const GraphPatch& p) {
        if (!last.empty())
            for (std::size_t n = 0; n < p.v.size(); ++n) bad += p.v[n] > last[n] + 1e-15 ? 1 : 0;
        last = p.v;
    };
    solve(build_patch(s, s.rim_radius() / 16), s.t, StencilSet::width(2), opt);
    EXPECT_EQ(bad, 0);
}

TEST(Solver, ComparisonPrinciple)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> amp(-0.03, 0.03), lift(0.0, 0.05);
    const double rho = 0.6, h = rho / 10, t = 0.25;
    for (int k = 0; k < 10; ++k) {
        RimData g1{-0.8, {amp(rng), amp(rng)}, {amp(rng), amp(rng)}};
        RimData g2 = g1;
        g2.c0 += lift(rng) + 0.07;  // covers the Fourier part, so g2 >= g1 everywhere
        g2.cos_terms[0] += amp(rng);
        auto solve_with = [&](const RimData& g) {
            GraphPatch p = make_disk_patch(rho, h, g);
            double top = -1e9;
            for (int i = 0; i < 360; ++i) top = std::max(top, g(kTwoPi * i / 360.0));
            for (double& v : p.v) v = top;
            return solve(std::move(p), t, StencilSet::width(2)).patch;
        };
        const GraphPatch p1 = solve_with(g1), p2 = solve_with(g2);
        for (std::size_t n = 0; n < p1.v.size(); ++n) EXPECT_LE(p1.v[n], p2.v[n] + 1e-8) << "pair " << k;
    }
}

TEST(Solver, ParallelMatchesSequential)
{
    const Scenario s = cap_scenario();
    SolveOptions opt;
    opt.parallel = true;
    opt.threads = 4;
    const SolveResult par = solve(build_patch(s, s.rim_radius() / 16), s.t, StencilSet::width(2), opt);
    const SolveResult& seq = cap_solution(16);
    double d = 0.0;
    for (std::size_t n = 0; n < seq.patch.v.size(); ++n) d = std::max(d, std::abs(seq.patch.v[n] - par.patch.v[n]));
    EXPECT_LE(d, 10.0 * 1e-8 * s.t);
}

TEST(Solver, NonConvergenceKeepsHistory)
{
    const Scenario s = cap_scenario();
    SolveOptions opt;
    opt.max_sweeps = 5;
    try {
        solve(build_patch(s, s.rim_radius() / 16), s.t, StencilSet::width(2), opt);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.history.size(), 5u);
        EXPECT_GT(e.history.back(), 0.0);
    }
}

TEST(Oracle, ExactCapHasZeroError)
{
    const Scenario s = cap_scenario();
    GraphPatch p = build_patch(s, s.rim_radius() / 16);
    fill(p, [&s](double x, double y) { return -cap_height(s, x, y); });
    EXPECT_EQ(compare_to_cap(p, s).max_error, 0.0);
    EXPECT_NEAR(cap_height(s, 0.6, 0.0), 0.8, 1e-15);
}

TEST(Hypograph, SolutionPassesAndControlsFire)
{
    const Scenario s = cap_scenario();
    const GraphPatch& p = cap_solution(32).patch;
    const HypographRegion region(p, s.R);
    const double lim = p.rho - 0.2 * s.R - 2.0 * p.h;
    ProbeGrid g;
    g.exclude = [lim](Vec3 q) { return std::hypot(q.x, q.y) > lim; };
    const auto f = check_type_F(region, s.t, 0.05 * s.t, g);
    const auto d = check_type_F_dual(region, s.t, 0.05 * s.t, g);
    EXPECT_GT(f.points_tested, 10u);
    EXPECT_TRUE(f.empty());
    EXPECT_TRUE(d.empty());
    // the same surface is too flat for t = 0.5 and too curved for t = 0.1
    EXPECT_EQ(check_type_F(region, 0.5, 0.025, g).violations.size(), f.points_tested);
    EXPECT_EQ(check_type_F_dual(region, 0.1, 0.005, g).violations.size(), f.points_tested);
}

TEST(Hypograph, MissingNeighborsGiveNaN)
{
    const Scenario s = cap_scenario();
    const GraphPatch p = build_patch(s, s.rim_radius() / 16);
    const HypographRegion region(p, s.R);
    EXPECT_TRUE(std::isnan(region.signed_distance({0.6, 0.0, 0.0})));
    EXPECT_FALSE(std::isnan(region.signed_distance({0.0, 0.0, 0.0})));
}

TEST(Export, CsvRoundTrip)
{
    const Scenario s = cap_scenario();
    const GraphPatch& p = cap_solution(16).patch;
    GraphPatch q = build_patch(s, s.rim_radius() / 16);
    load_patch_csv(q, patch_csv(p));
    for (std::size_t n = 0; n < p.v.size(); ++n) EXPECT_EQ(q.v[n], p.v[n]);
    GraphPatch wrong = build_patch(s, s.rim_radius() / 20);
    EXPECT_THROW(load_patch_csv(wrong, patch_csv(p)), std::invalid_argument);
    EXPECT_THROW(load_patch_csv(q, "x,y,v\n0,0,zz\n"), std::invalid_argument);
}

TEST(Export, ObjAndHistory)
{
    const GraphPatch& p = cap_solution(16).patch;
    const std::string obj = patch_obj(p);
    std::size_t verts = 0, faces = 0;
    std::istringstream in(obj);
    for (std::string line; std::getline(in, line);) {
        verts += line.rfind("v ", 0) == 0;
        faces += line.rfind("f ", 0) == 0;
    }
    EXPECT_EQ(verts, p.nodes.size());
    EXPECT_GT(faces, p.nodes.size());
    EXPECT_EQ(history_csv({0.5, 0.25}), "sweep,residual\n1,0.5\n2,0.25\n");
}
