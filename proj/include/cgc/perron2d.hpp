#pragma once

// Perron construction in the plane. Every disk of radius 1/t is a convex
// body of type F_t, so the intersection of all such disks containing K0 is
// the smallest type-F_t body containing it (its ball hull). The solver
// realizes that intersection with m extremal disks, one per support
// direction; the closed form for a disk K^ serves as oracle.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cgc/bodies.hpp"
#include "cgc/geometry.hpp"

namespace cgc {

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-form K_t for K^ a disk: the arc of the complement of Omega joined
/// by the circular arc of radius 1/t through the two rim points.
inline Body2D analytic_Kt(const Scenario& s)
{
    if (s.dim != 2) throw std::invalid_argument("analytic_Kt: scenario is not two-dimensional");
    const double rho = 1.0 / s.t;
    const double a = s.alpha();
    const double half_chord = s.R * std::sin(a);
    const double offset = std::sqrt(std::max(0.0, rho * rho - half_chord * half_chord));
    const double xc = s.R * std::cos(a) - offset;
    const double beta = std::atan2(half_chord, offset);
    return Body2D({Arc{{0.0, 0.0}, s.R, a, kTwoPi - a}, Arc{{xc, 0.0}, rho, -beta, beta}});
}

/// Inner radial function of the core {c : |c - q| <= rho for all q} seen from c0.
class DiskCore {
public:
    DiskCore(std::vector<Vec2> points, double rho, Vec2 c0) : pts_(std::move(points)), rho_(rho), c0_(c0)
    {
        for (const Vec2& q : pts_)
            if (norm(q - c0_) > rho_ * (1.0 + 1e-12))
                throw InfeasibleError("ball hull: no disk of radius 1/t around the reference center contains K0");
    }

    double radial(double phi) const
    {
        const Vec2 e = polar(phi);
        double r = std::numeric_limits<double>::infinity();
        for (const Vec2& q : pts_) {
            const Vec2 d = q - c0_;
            const double b = dot(e, d);
            r = std::min(r, b + std::sqrt(std::max(0.0, rho_ * rho_ - dot(d, d) + b * b)));
        }
        return std::max(0.0, r);
    }

    Vec2 boundary(double phi) const { return c0_ + polar(phi) * radial(phi); }

    /// Center in the core minimizing <c, u>, by golden-section search on the core boundary.
    Vec2 extreme(Vec2 u) const
    {
        const double mid = std::atan2(-u.y, -u.x);
        double lo = mid - 0.5 * kPi, hi = mid + 0.5 * kPi;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = dot(boundary(x1), u), f2 = dot(boundary(x2), u);
        for (int it = 0; it < 90 && hi - lo > 1e-13; ++it) {
            if (f1 <= f2) {
                hi = x2, x2 = x1, f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = dot(boundary(x1), u);
            } else {
                lo = x1, x1 = x2, f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = dot(boundary(x2), u);
            }
        }
        return boundary(0.5 * (lo + hi));
    }

private:
    std::vector<Vec2> pts_;
    double rho_;
    Vec2 c0_;
};

/// Intersection of the m extremal radius-rho disks containing the sampled points.
inline Body2D ball_hull(const std::vector<Vec2>& points, double rho, std::size_t m, Vec2 c0)
{
    if (m < 16) throw std::invalid_argument("ball_hull: need at least 16 directions");
    const DiskCore core(points, rho, c0);
    std::vector<Vec2> centers;
    centers.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
        centers.push_back(core.extreme(polar(kTwoPi * static_cast<double>(i) / static_cast<double>(m))));
    Body2D body = disk(centers[0], rho);
    for (std::size_t i = 1; i < m; ++i) body = body_intersect(body, disk(centers[i], rho));
    return body;
}

/// Perron body K_t: intersection of the family of radius-1/t disks containing K0.
inline Body2D perron_solve2d(const Scenario& s, std::size_t m = 720)
{
    if (s.dim != 2) throw std::invalid_argument("perron_solve2d: scenario is not two-dimensional");
    if (m < 16) throw std::invalid_argument("perron_solve2d: need m >= 16 directions");
    const Body2D k0 = hull_k0_2d(s);
    // K0 lies in K^, which lies in every disk of radius 1/t >= R about the origin
    return ball_hull(k0.boundary_points(4 * m), 1.0 / s.t, m, {0.0, 0.0});
}

/// Boundary sampling scale tied to the direction count.
inline double resolution_2d(const Scenario& s, std::size_t m) { return s.R * kTwoPi / static_cast<double>(m); }

struct ContactTrace {
    double max_mismatch = 0.0;  // largest angular distance from the rim of Omega of a wrong classification
    double distance_tol = 0.0;  // radial tolerance used to call a point "on the ball boundary"
};

/// Compares the contact set of a body with the ball boundary against the complement of Omega.
inline ContactTrace contact_trace(const Body2D& body, const Scenario& s, std::size_t m)
{
    ContactTrace ct;
    const double dtheta = kTwoPi / static_cast<double>(m);
    ct.distance_tol = s.R * dtheta * dtheta;
    const double a = s.alpha();
    auto off_rim = [a](double theta) { return std::abs(std::abs(theta) - a); };

    for (const Vec2& p : body.boundary_points(8 * m)) {
        const double theta = std::atan2(p.y, p.x);
        const bool touching = s.R - norm(p) <= ct.distance_tol;
        if (touching && std::abs(theta) < a) ct.max_mismatch = std::max(ct.max_mismatch, off_rim(theta));
    }
    const std::size_t n = 8 * m;
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = a + (kTwoPi - 2.0 * a) * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        const Vec2 q = polar(theta) * s.R;
        if (std::abs(body.signed_distance(q)) > ct.distance_tol) {
            const double th = std::atan2(q.y, q.x);
            ct.max_mismatch = std::max(ct.max_mismatch, off_rim(th));
        }
    }
    return ct;
}

}  // namespace cgc
