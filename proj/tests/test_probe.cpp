#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "cgc/perron2d.hpp"
#include "cgc/probe.hpp"

using namespace cgc;

namespace {

SymMat q2(double a, double b) { return SymMat::diag({a, b}); }

std::set<double> params(const ProbeReport& r)
{
    std::set<double> s;
    for (const auto& v : r.violations) s.insert(v.param);
    return s;
}

// exclude points on the unit ball boundary, as done for bodies inside K^
ProbeGrid interior_grid(double R)
{
    ProbeGrid g;
    g.exclude = [R](Vec3 q) { return std::hypot(q.x, q.y) >= R - 1e-9; };
    return g;
}

}  // namespace

TEST(ReducedShape, WorkedExamples)
{
    for (double c : {-1.0, 0.0, 0.7, 3.0}) {
        const Probe p{2, {0, 0, 0}, {0, 1, 0}, q2(c, 0.0), 0.1};
        EXPECT_NEAR(reduced_shape(p)(0, 0), c, 1e-15);
    }
    const Probe scaled{2, {0, 0, 0}, {0, 2, 0}, q2(2.0, 0.0), 0.1};
    EXPECT_NEAR(reduced_shape(scaled)(0, 0), 1.0, 1e-15);

    const Probe p3{3, {0, 0, 0}, {0, 0, 1}, SymMat::diag({0.4, 1.7, 0.0}), 0.1};
    const SymMat r = reduced_shape(p3);
    ASSERT_EQ(r.dim(), 2);
    EXPECT_NEAR(r(0, 0), 0.4, 1e-15);
    EXPECT_NEAR(r(1, 1), 1.7, 1e-15);
    EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
}

TEST(ReducedShape, ZeroGradientIsRejected)
{
    EXPECT_THROW(reduced_shape(Probe{2, {0, 0, 0}, {0, 0, 0}, q2(1, 1), 0.1}), std::invalid_argument);
}

TEST(ReducedShape, RotationOnlyConjugates)
{
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    const ConeSpec cones[] = {ConeSpec::det_cone(0.5, 2), ConeSpec::closure_complement(0.5, 2), ConeSpec::psd(2)};
    for (int k = 0; k < 1000; ++k) {
        const Vec3 a{g(rng), g(rng), g(rng)};
        const SymMat q = detail::gaussian_sym(3, rng);
        const SquareMat m = random_orthogonal(3, rng);
        // rotated probe: a' = M^T a, Q' = M^T Q M
        const Vec3 ar{m(0, 0) * a.x + m(1, 0) * a.y + m(2, 0) * a.z, m(0, 1) * a.x + m(1, 1) * a.y + m(2, 1) * a.z,
                      m(0, 2) * a.x + m(1, 2) * a.y + m(2, 2) * a.z};
        const SymMat r0 = reduced_shape({3, {}, a, q, 0.1});
        const SymMat r1 = reduced_shape({3, {}, ar, q.conjugate(m), 0.1});
        const auto e0 = eig_sym(r0), e1 = eig_sym(r1);
        EXPECT_NEAR(e0[0], e1[0], 1e-10 * (1.0 + std::abs(e0[0])));
        EXPECT_NEAR(e0[1], e1[1], 1e-10 * (1.0 + std::abs(e0[1])));
        for (const ConeSpec& c : cones) EXPECT_EQ(cone_member(r0, c, 1e-9), cone_member(r1, c, 1e-9));
    }
}

TEST(Ladder, ContainsThresholdNeighbours)
{
    const auto k = curvature_ladder(1.0, 0.05);
    EXPECT_EQ(k.front(), 0.0);
    EXPECT_TRUE(std::is_sorted(k.begin(), k.end()));
    EXPECT_NE(std::find(k.begin(), k.end(), 0.95), k.end());
    EXPECT_NE(std::find(k.begin(), k.end(), 1.05), k.end());
    EXPECT_LE(k.back(), 80.0 + 1e-12);
}

TEST(TypeF, UnitDiskAtItsCurvature)
{
    const auto rep = check_type_F(disk({0.0, 0.0}, 1.0), 1.0, 0.05);
    EXPECT_TRUE(rep.empty());
    EXPECT_EQ(rep.points_tested, 256u);
    EXPECT_GT(rep.probes_tried, 0u);
}

TEST(TypeF, UnitDiskBelowTarget)
{
    const auto rep = check_type_F(disk({0.0, 0.0}, 1.0), 2.0, 0.05);
    EXPECT_EQ(rep.violations.size(), rep.points_tested);
    for (const auto& v : rep.violations) {
        EXPECT_LE(v.kappa1, 1.95 + 1e-12);
        EXPECT_GT(v.margin, 0.0);
    }
}

TEST(TypeF, UnitSquareEdgeMidpoints)
{
    const Body2D sq = polygon({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
    for (double t : {0.5, 1.0, 4.0}) {
        const auto rep = check_type_F(sq, t, t / 2.0);
        const double spacing = 4.0 / static_cast<double>(rep.points_tested);
        int mids[4] = {0, 0, 0, 0};
        for (const auto& v : rep.violations) {
            const Vec2 m[4] = {{0.0, -0.5}, {0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}};
            for (int e = 0; e < 4; ++e)
                if (std::hypot(v.point.x - m[e].x, v.point.y - m[e].y) <= spacing) mids[e] = 1;
            // corners never host a fitting interior probe
            EXPECT_FALSE(std::abs(std::abs(v.point.x) - 0.5) < 1e-9 && std::abs(std::abs(v.point.y) - 0.5) < 1e-9);
        }
        EXPECT_EQ(mids[0] + mids[1] + mids[2] + mids[3], 4) << "t=" << t;
    }
}

TEST(TypeF, InvalidMargins)
{
    EXPECT_THROW(check_type_F(disk({0, 0}, 1.0), 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(check_type_F_dual(disk({0, 0}, 1.0), 0.0, 0.1), std::invalid_argument);
}

TEST(TypeFDual, UnitDisk)
{
    EXPECT_TRUE(check_type_F_dual(disk({0.0, 0.0}, 1.0), 1.0, 0.05).empty());
    const auto rep = check_type_F_dual(disk({0.0, 0.0}, 1.0), 0.5, 0.05);
    EXPECT_EQ(rep.violations.size(), rep.points_tested);
    bool saw_08 = false;
    for (const auto& v : rep.violations) {
        EXPECT_GE(v.kappa1, 0.55 - 1e-12);
        EXPECT_LT(v.kappa1, 1.0);
    }
    // the probe of curvature 0.8 fits everywhere
    ProbeGrid g;
    g.points = 32;
    const auto strict = check_type_F_dual(disk({0.0, 0.0}, 1.0), 0.75, 0.05, g);
    for (const auto& v : strict.violations) saw_08 = saw_08 || std::abs(v.kappa1 - 0.8) < 1e-12;
    EXPECT_EQ(strict.violations.size(), strict.points_tested);
    EXPECT_TRUE(saw_08);
}

TEST(ViscosityPair, ClosedFormFreeArc)
{
    for (double t : {0.25, 0.5, 0.9}) {
        const Scenario s = make_scenario(1.0, kPi / 2.0, t, 2);
        const Body2D kt = analytic_Kt(s);
        const auto f = check_type_F(kt, t, 0.05 * t, interior_grid(1.0));
        const auto d = check_type_F_dual(kt, t, 0.05 * t, interior_grid(1.0));
        EXPECT_GT(f.points_tested, 40u);
        EXPECT_TRUE(f.empty()) << "t=" << t;
        EXPECT_TRUE(d.empty()) << "t=" << t;
    }
}

TEST(ViscosityPair, AgreesWithSmoothTestOnCircles)
{
    const double eps = 0.05;
    for (double r : {0.3, 0.5, 1.0, 2.0, 4.0})
        for (double t : {0.2, 0.5, 1.0, 2.0, 3.0}) {
            if (std::abs(t * r - 1.0) < 2.0 * eps) continue;
            const Body2D c = disk({0.2, -0.1}, r);
            ProbeGrid g;
            g.points = 48;
            EXPECT_EQ(check_type_F(c, t, eps, g).empty(), is_type_F_smooth(c, t)) << "r=" << r << " t=" << t;
        }
}

TEST(ViscosityPair, OneSided)
{
    const Body2D bodies[] = {
        disk({0.0, 0.0}, 1.0), polygon({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}),
        body_intersect(disk({-0.5, 0.0}, 1.0), disk({0.5, 0.0}, 1.0)), analytic_Kt(make_scenario(1.0, 1.0, 0.5, 2))};
    for (const Body2D& b : bodies)
        for (double t : {0.5, 1.0, 2.0}) {
            ProbeGrid g;
            g.points = 96;
            const auto f = params(check_type_F(b, t, 0.05, g));
            const auto d = params(check_type_F_dual(b, t, 0.05, g));
            for (double p : f) EXPECT_EQ(d.count(p), 0u) << "t=" << t;
        }
}

TEST(ViscosityPair, MarginMonotone)
{
    const Body2D sq = polygon({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
    const Body2D unit = disk({0.0, 0.0}, 1.0);
    ProbeGrid g;
    g.points = 64;
    for (double eps : {0.5, 0.2}) {
        const auto wide = params(check_type_F(unit, 2.0, eps, g));
        const auto narrow = params(check_type_F(unit, 2.0, eps / 3.0, g));
        for (double p : wide) EXPECT_EQ(narrow.count(p), 1u);
        const auto wide_d = params(check_type_F_dual(unit, 0.5, eps / 2.0, g));
        const auto narrow_d = params(check_type_F_dual(unit, 0.5, eps / 6.0, g));
        for (double p : wide_d) EXPECT_EQ(narrow_d.count(p), 1u);
        const auto sq_wide = params(check_type_F(sq, 1.0, eps, g));
        const auto sq_narrow = params(check_type_F(sq, 1.0, eps / 3.0, g));
        for (double p : sq_wide) EXPECT_EQ(sq_narrow.count(p), 1u);
    }
}

TEST(Corners, IntersectionOfCurvatureDisks)
{
    const double t = 1.0;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> c(-0.6, 0.6), r(0.35, 1.0 / t);
    int done = 0;
    while (done < 25) {
        const Body2D a = disk({c(rng), c(rng)}, r(rng)), b = disk({c(rng), c(rng)}, r(rng));
        Body2D x;
        try {
            x = body_intersect(a, b);
        } catch (const DegenerateIntersection&) {
            continue;
        }
        ProbeGrid g;
        g.points = 128;
        const auto rep = check_type_F(x, t, 0.05, g);
        EXPECT_TRUE(rep.empty()) << "pair " << done;
        ++done;
    }
}

TEST(Report, CsvRows)
{
    ProbeGrid g;
    g.points = 8;
    const auto f = check_type_F(disk({0.0, 0.0}, 1.0), 2.0, 0.05, g);
    const auto d = check_type_F_dual(disk({0.0, 0.0}, 1.0), 1.0, 0.05, g);
    const std::string csv = report_csv(f, d);
    EXPECT_EQ(csv.rfind("test,x,y,z,kappa1,kappa2,margin\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1 + f.violations.size());
}

TEST(Report, SortedByBoundaryParameter)
{
    const auto f = check_type_F(disk({0.0, 0.0}, 1.0), 2.0, 0.05);
    EXPECT_TRUE(std::is_sorted(f.violations.begin(), f.violations.end(),
                               [](const Violation& a, const Violation& b) { return a.param < b.param; }));
}
