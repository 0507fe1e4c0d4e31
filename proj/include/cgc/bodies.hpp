#pragma once

// Convex planar bodies bounded by circular arcs and segments, the ball
// scenarios they are built from, and the curvature formulas shared by the
// 2D and 3D solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cgc/geometry.hpp"
#include "cgc/symcone.hpp"

namespace cgc {

class NotSmoothError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DegenerateIntersection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenario

struct Scenario {
    int dim = 2;           // ambient dimension n + 1
    double R = 1.0;        // radius of the ball K^
    double opening = 0.0;  // half-angle alpha (dim 2) or cap height z0 (dim 3)
    double t = 1.0;        // target Gaussian curvature
    double k = 1.0;        // curvature of the ball boundary, R^-n

    double alpha() const { return opening; }
    double z0() const { return opening; }
    /// Rim radius of the cap {z > z0} (dim 3).
    double rim_radius() const { return std::sqrt(R * R - opening * opening); }
};

inline Scenario make_scenario(double R, double opening, double t, int dim)
{
    if (dim != 2 && dim != 3) throw std::invalid_argument("make_scenario: dim must be 2 or 3");
    if (!(R > 0.0)) throw std::invalid_argument("make_scenario: R must be positive");
    if (dim == 2) {
        constexpr double margin = 1e-6;
        if (!(opening > margin && opening < kPi - margin))
            throw std::invalid_argument("make_scenario: alpha must lie strictly inside (0, pi); Omega would be degenerate");
    } else {
        const double margin = 1e-6 * R;
        if (!(opening > -R + margin && opening < R - margin))
            throw std::invalid_argument("make_scenario: z0 must lie strictly inside (-R, R); Omega would be degenerate");
    }
    const int n = dim - 1;
    const double k = std::pow(R, -n);
    if (!(t > 0.0) || t > k * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "make_scenario: curvature t = " << t << " outside (0, k] with k = R^-n = " << k
           << " (the ball boundary has Gaussian curvature k, and a solution exists only for 0 < t <= k)";
        throw std::out_of_range(os.str());
    }
    return Scenario{dim, R, opening, t, k};
}

// ---------------------------------------------------------------------------
// Pieces

/// Counterclockwise circular arc from angle a0 to a1 (a0 < a1 <= a0 + 2 pi).
struct Arc {
    Vec2 center;
    double radius = 1.0;
    double a0 = 0.0;
    double a1 = kTwoPi;
};

struct Segment {
    Vec2 p0;
    Vec2 p1;
};

using Piece = std::variant<Arc, Segment>;

inline Vec2 piece_point(const Piece& pc, double u)
{
    if (const auto* a = std::get_if<Arc>(&pc)) return a->center + polar(a->a0 + u * (a->a1 - a->a0)) * a->radius;
    const auto& s = std::get<Segment>(pc);
    return s.p0 + (s.p1 - s.p0) * u;
}

inline Vec2 piece_start(const Piece& pc) { return piece_point(pc, 0.0); }
inline Vec2 piece_end(const Piece& pc) { return piece_point(pc, 1.0); }

inline Vec2 piece_tangent(const Piece& pc, double u)
{
    if (const auto* a = std::get_if<Arc>(&pc)) return rot_ccw(polar(a->a0 + u * (a->a1 - a->a0)));
    const auto& s = std::get<Segment>(pc);
    return unit(s.p1 - s.p0);
}

inline Vec2 piece_normal(const Piece& pc, double u) { return rot_cw(piece_tangent(pc, u)); }

inline double piece_length(const Piece& pc)
{
    if (const auto* a = std::get_if<Arc>(&pc)) return a->radius * (a->a1 - a->a0);
    const auto& s = std::get<Segment>(pc);
    return norm(s.p1 - s.p0);
}

inline double piece_curvature(const Piece& pc)
{
    if (const auto* a = std::get_if<Arc>(&pc)) return 1.0 / a->radius;
    return 0.0;
}

/// Turning of the tangent along the piece.
inline double piece_turning(const Piece& pc)
{
    if (const auto* a = std::get_if<Arc>(&pc)) return a->a1 - a->a0;
    return 0.0;
}

inline Piece sub_piece(const Piece& pc, double u0, double u1)
{
    if (const auto* a = std::get_if<Arc>(&pc)) {
        const double span = a->a1 - a->a0;
        return Arc{a->center, a->radius, a->a0 + u0 * span, a->a0 + u1 * span};
    }
    return Segment{piece_point(pc, u0), piece_point(pc, u1)};
}

/// Parameter of the closest point of the piece to q, clamped to [0, 1].
inline double piece_project(const Piece& pc, Vec2 q)
{
    if (const auto* a = std::get_if<Arc>(&pc)) {
        const Vec2 d = q - a->center;
        if (norm(d) == 0.0) return 0.0;
        const double span = a->a1 - a->a0;
        const double ang = wrap_from(std::atan2(d.y, d.x), a->a0);
        if (ang <= a->a1) return (ang - a->a0) / span;
        // outside the angular span: nearer endpoint
        const double gap_end = ang - a->a1;
        const double gap_start = a->a0 + kTwoPi - ang;
        return gap_end < gap_start ? 1.0 : 0.0;
    }
    const auto& s = std::get<Segment>(pc);
    const Vec2 e = s.p1 - s.p0;
    const double l2 = dot(e, e);
    if (l2 == 0.0) return 0.0;
    return std::clamp(dot(q - s.p0, e) / l2, 0.0, 1.0);
}

inline double piece_distance(const Piece& pc, Vec2 q) { return norm(q - piece_point(pc, piece_project(pc, q))); }

namespace detail {

inline std::vector<Vec2> circle_circle(Vec2 c1, double r1, Vec2 c2, double r2, double tol)
{
    const Vec2 d = c2 - c1;
    const double dist = norm(d);
    if (dist < tol) return {};
    if (dist > r1 + r2 + tol || dist < std::abs(r1 - r2) - tol) return {};
    const double a = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist);
    const double h2 = r1 * r1 - a * a;
    const Vec2 e = d * (1.0 / dist);
    const Vec2 base = c1 + e * a;
    if (h2 <= 0.0) return {base};
    const double h = std::sqrt(h2);
    return {base + rot_ccw(e) * h, base - rot_ccw(e) * h};
}

inline std::vector<Vec2> line_circle(Vec2 p, Vec2 dir, Vec2 c, double r, double tol)
{
    // p + s dir, dir not normalized
    const Vec2 f = p - c;
    const double A = dot(dir, dir);
    const double B = 2.0 * dot(f, dir);
    const double C = dot(f, f) - r * r;
    double disc = B * B - 4.0 * A * C;
    const double scale = std::max(1.0, B * B);
    if (disc < -tol * scale) return {};
    if (disc <= 0.0) return {p + dir * (-B / (2.0 * A))};
    const double sq = std::sqrt(disc);
    return {p + dir * ((-B - sq) / (2.0 * A)), p + dir * ((-B + sq) / (2.0 * A))};
}

// Candidate crossing points between two pieces (not yet filtered to the pieces' extents).
inline std::vector<Vec2> crossing_candidates(const Piece& a, const Piece& b, double tol)
{
    const auto* aa = std::get_if<Arc>(&a);
    const auto* ba = std::get_if<Arc>(&b);
    if (aa && ba) return circle_circle(aa->center, aa->radius, ba->center, ba->radius, tol);
    if (aa || ba) {
        const Arc& arc = aa ? *aa : *ba;
        const Segment& seg = aa ? std::get<Segment>(b) : std::get<Segment>(a);
        return line_circle(seg.p0, seg.p1 - seg.p0, arc.center, arc.radius, tol);
    }
    const auto& s = std::get<Segment>(a);
    const auto& t = std::get<Segment>(b);
    const Vec2 r = s.p1 - s.p0, q = t.p1 - t.p0;
    const double den = cross(r, q);
    if (std::abs(den) <= 1e-14 * norm(r) * norm(q)) return {};
    const double u = cross(t.p0 - s.p0, q) / den;
    return {s.p0 + r * u};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Body2D

struct BoundarySample {
    Vec2 point;
    std::vector<Vec2> normals;  // one outward normal on smooth points, a fan at corners
    double s = 0.0;             // arc-length parameter
    std::size_t piece = 0;
    bool vertex = false;
};

struct ConvexityAudit {
    double closure_gap = 0.0;    // largest endpoint mismatch between consecutive pieces
    double min_turning = 0.0;    // smallest turning at a vertex or along a piece
    double total_turning = 0.0;  // should be 2 pi
    bool ok(double scale) const
    {
        return closure_gap <= 1e-9 * std::max(1.0, scale) && min_turning >= -1e-9 &&
               std::abs(total_turning - kTwoPi) <= 1e-6;
    }
};

/// Convex body with a counterclockwise boundary chain of arcs and segments.
class Body2D {
public:
    Body2D() = default;

    explicit Body2D(std::vector<Piece> pieces) : pieces_(std::move(pieces))
    {
        if (pieces_.empty()) throw std::invalid_argument("Body2D: empty boundary");
        for (const auto& pc : pieces_)
            if (const auto* a = std::get_if<Arc>(&pc))
                if (!(a->radius > 0.0) || !(a->a1 > a->a0) || a->a1 - a->a0 > kTwoPi + 1e-12)
                    throw std::invalid_argument("Body2D: arcs need positive radius and a0 < a1 <= a0 + 2 pi");
        cumulative_.reserve(pieces_.size() + 1);
        cumulative_.push_back(0.0);
        double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
        Vec2 acc;
        for (const auto& pc : pieces_) {
            cumulative_.push_back(cumulative_.back() + piece_length(pc));
            for (double u : {0.0, 0.5}) {
                const Vec2 p = piece_point(pc, u);
                lo_x = std::min(lo_x, p.x), hi_x = std::max(hi_x, p.x);
                lo_y = std::min(lo_y, p.y), hi_y = std::max(hi_y, p.y);
                acc = acc + p;
            }
        }
        scale_ = std::max(hi_x - lo_x, hi_y - lo_y);
        interior_ = acc * (1.0 / (2.0 * static_cast<double>(pieces_.size())));
        if (pieces_.size() == 1)
            if (const auto* a = std::get_if<Arc>(&pieces_[0])) interior_ = a->center;
        const ConvexityAudit au = audit();
        if (!au.ok(scale_)) {
            std::ostringstream os;
            os << "Body2D: boundary is not a closed convex chain (gap " << au.closure_gap << ", min turning "
               << au.min_turning << ", total turning " << au.total_turning << ")";
            throw std::invalid_argument(os.str());
        }
    }

    const std::vector<Piece>& pieces() const { return pieces_; }
    double perimeter() const { return cumulative_.back(); }
    /// Largest bounding-box side.
    double scale() const { return scale_; }
    Vec2 interior_point() const { return interior_; }

    ConvexityAudit audit() const
    {
        ConvexityAudit au;
        au.min_turning = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const Piece& cur = pieces_[i];
            const Piece& nxt = pieces_[(i + 1) % pieces_.size()];
            au.closure_gap = std::max(au.closure_gap, norm(piece_end(cur) - piece_start(nxt)));
            const double along = piece_turning(cur);
            const double corner = vertex_turning(i);
            au.min_turning = std::min({au.min_turning, along, corner});
            au.total_turning += along + corner;
        }
        return au;
    }

    /// Turning from the end of piece i to the start of piece i + 1.
    double vertex_turning(std::size_t i) const
    {
        const Vec2 t0 = piece_tangent(pieces_[i], 1.0);
        const Vec2 t1 = piece_tangent(pieces_[(i + 1) % pieces_.size()], 0.0);
        return std::atan2(cross(t0, t1), dot(t0, t1));
    }

    bool is_vertex(std::size_t i) const { return vertex_turning(i) > 1e-9; }

    bool has_vertices() const
    {
        for (std::size_t i = 0; i < pieces_.size(); ++i)
            if (is_vertex(i)) return true;
        return false;
    }

    Vec2 point_at(double s) const
    {
        const auto [i, u] = locate(s);
        return piece_point(pieces_[i], u);
    }

    /// Piece index and local parameter of arc length s (taken modulo the perimeter).
    std::pair<std::size_t, double> locate(double s) const
    {
        const double L = perimeter();
        s = std::fmod(s, L);
        if (s < 0.0) s += L;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - cumulative_.begin() - 1));
        i = std::min(i, pieces_.size() - 1);
        const double len = cumulative_[i + 1] - cumulative_[i];
        const double u = len > 0.0 ? std::clamp((s - cumulative_[i]) / len, 0.0, 1.0) : 0.0;
        return {i, u};
    }

    double distance_to_boundary(Vec2 q) const
    {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& pc : pieces_) d = std::min(d, piece_distance(pc, q));
        return d;
    }

    /// Distance from the interior point to the boundary along a unit direction.
    double radial(Vec2 dir) const
    {
        double best = -1.0;
        for (const auto& pc : pieces_) {
            for (double s : ray_hits(pc, interior_, dir)) best = std::max(best, s);
        }
        if (best < 0.0) {
            // ray slipped through a joint; take the nearest boundary point in that direction
            best = 0.0;
            for (std::size_t i = 0; i < pieces_.size(); ++i) {
                const Vec2 v = piece_start(pieces_[i]) - interior_;
                if (dot(unit(v), dir) > 1.0 - 1e-12) best = std::max(best, norm(v));
            }
        }
        return best;
    }

    bool inside(Vec2 q) const
    {
        const Vec2 d = q - interior_;
        const double r = norm(d);
        if (r == 0.0) return true;
        return r <= radial(d * (1.0 / r));
    }

    /// Negative inside, positive outside.
    double signed_distance(Vec2 q) const
    {
        const double d = distance_to_boundary(q);
        return inside(q) ? -d : d;
    }

    bool contains(Vec2 q, double tol) const { return signed_distance(q) <= tol; }

    double area() const
    {
        double a = 0.0;
        for (const auto& pc : pieces_) {
            if (const auto* arc = std::get_if<Arc>(&pc)) {
                const double r = arc->radius;
                a += r * arc->center.x * (std::sin(arc->a1) - std::sin(arc->a0)) -
                     r * arc->center.y * (std::cos(arc->a1) - std::cos(arc->a0)) + r * r * (arc->a1 - arc->a0);
            } else {
                const auto& s = std::get<Segment>(pc);
                a += cross(s.p0, s.p1);
            }
        }
        return 0.5 * a;
    }

    /// Boundary samples uniform in arc length plus every corner; corners carry a fan of normals.
    std::vector<BoundarySample> sample(std::size_t n, std::size_t corner_fan = 9) const
    {
        std::vector<BoundarySample> out;
        const double L = perimeter();
        for (std::size_t k = 0; k < n; ++k) {
            const double s = L * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
            const auto [i, u] = locate(s);
            out.push_back({piece_point(pieces_[i], u), {piece_normal(pieces_[i], u)}, s, i, false});
        }
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (!is_vertex(i)) continue;
            const std::size_t j = (i + 1) % pieces_.size();
            const Vec2 n0 = piece_normal(pieces_[i], 1.0);
            const double turn = vertex_turning(i);
            BoundarySample bs{piece_end(pieces_[i]), {}, cumulative_[i + 1], j, true};
            const double base = std::atan2(n0.y, n0.x);
            for (std::size_t f = 0; f < corner_fan; ++f)
                bs.normals.push_back(polar(base + turn * static_cast<double>(f) / static_cast<double>(corner_fan - 1)));
            out.push_back(std::move(bs));
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
        return out;
    }

    /// Dense boundary points including every piece endpoint.
    std::vector<Vec2> boundary_points(std::size_t n) const
    {
        std::vector<Vec2> pts;
        pts.reserve(n + pieces_.size());
        const double L = perimeter();
        for (std::size_t k = 0; k < n; ++k) pts.push_back(point_at(L * static_cast<double>(k) / static_cast<double>(n)));
        for (const auto& pc : pieces_) pts.push_back(piece_start(pc));
        return pts;
    }

private:
    static std::vector<double> ray_hits(const Piece& pc, Vec2 o, Vec2 dir)
    {
        std::vector<double> hits;
        constexpr double ptol = 1e-12;
        if (const auto* a = std::get_if<Arc>(&pc)) {
            for (const Vec2& p : detail::line_circle(o, dir, a->center, a->radius, 0.0)) {
                const double s = dot(p - o, dir);
                if (s <= 0.0) continue;
                const Vec2 d = p - a->center;
                const double ang = wrap_from(std::atan2(d.y, d.x), a->a0 - ptol);
                if (ang <= a->a1 + ptol) hits.push_back(s);
            }
            return hits;
        }
        const auto& sg = std::get<Segment>(pc);
        const Vec2 e = sg.p1 - sg.p0;
        const double den = cross(dir, e);
        if (std::abs(den) < 1e-15 * norm(e)) return hits;
        const double s = cross(sg.p0 - o, e) / den;
        const double u = cross(sg.p0 - o, dir) / den;
        if (s > 0.0 && u >= -ptol && u <= 1.0 + ptol) hits.push_back(s);
        return hits;
    }

    std::vector<Piece> pieces_;
    std::vector<double> cumulative_;
    double scale_ = 0.0;
    Vec2 interior_;
};

inline Body2D disk(Vec2 center, double radius) { return Body2D({Arc{center, radius, 0.0, kTwoPi}}); }

inline Body2D polygon(const std::vector<Vec2>& ccw_vertices)
{
    std::vector<Piece> pcs;
    for (std::size_t i = 0; i < ccw_vertices.size(); ++i)
        pcs.push_back(Segment{ccw_vertices[i], ccw_vertices[(i + 1) % ccw_vertices.size()]});
    return Body2D(std::move(pcs));
}

// ---------------------------------------------------------------------------
// Intersection

namespace detail {

inline bool same_circle(const Piece& a, const Piece& b, double tol)
{
    const auto* x = std::get_if<Arc>(&a);
    const auto* y = std::get_if<Arc>(&b);
    return x && y && norm(x->center - y->center) <= tol && std::abs(x->radius - y->radius) <= tol;
}

// Splits piece `pc` at every crossing with, or endpoint of, the pieces of `other`.
inline std::vector<Piece> split_against(const Piece& pc, const Body2D& other, double tol)
{
    std::vector<double> cuts{0.0, 1.0};
    const double len = piece_length(pc);
    auto add_if_on = [&](Vec2 p) {
        const double u = piece_project(pc, p);
        if (norm(piece_point(pc, u) - p) <= tol && u > 0.0 && u < 1.0) cuts.push_back(u);
    };
    for (const auto& q : other.pieces()) {
        for (const Vec2& p : crossing_candidates(pc, q, tol))
            if (piece_distance(q, p) <= tol) add_if_on(p);
        add_if_on(piece_start(q));
        add_if_on(piece_end(q));
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Piece> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if ((cuts[i + 1] - cuts[i]) * len <= 1e-3 * tol) continue;
        out.push_back(sub_piece(pc, cuts[i], cuts[i + 1]));
    }
    return out;
}

inline bool try_merge(Piece& into, const Piece& next, double tol)
{
    if (!same_circle(into, next, tol)) return false;
    auto& a = std::get<Arc>(into);
    const auto& b = std::get<Arc>(next);
    if (norm(piece_end(into) - piece_start(next)) > tol) return false;
    const double span = b.a1 - b.a0;
    if (a.a1 - a.a0 + span > kTwoPi + 1e-12) return false;
    a.a1 += span;
    return true;
}

}  // namespace detail

/// Boundary chain of a ∩ b, with pieces inherited from both bodies.
inline Body2D body_intersect(const Body2D& a, const Body2D& b)
{
    const double scale = std::max(a.scale(), b.scale());
    const double tol = 1e-10 * std::max(1.0, scale);

    std::vector<Piece> kept;
    for (const auto& pc : a.pieces())
        for (const auto& sp : detail::split_against(pc, b, tol))
            if (b.signed_distance(piece_point(sp, 0.5)) <= tol) kept.push_back(sp);
    for (const auto& pc : b.pieces())
        for (const auto& sp : detail::split_against(pc, a, tol))
            if (a.signed_distance(piece_point(sp, 0.5)) < -tol) kept.push_back(sp);

    if (kept.empty()) throw DegenerateIntersection("body_intersect: bodies do not overlap");

    Vec2 c;
    for (const auto& pc : kept) c = c + piece_point(pc, 0.5);
    c = c * (1.0 / static_cast<double>(kept.size()));
    if (kept.size() == 1)
        if (const auto* arc = std::get_if<Arc>(&kept[0])) c = arc->center;
    std::vector<std::pair<double, Piece>> ordered;
    for (auto& pc : kept) {
        const Vec2 m = piece_point(pc, 0.5) - c;
        ordered.emplace_back(std::atan2(m.y, m.x), std::move(pc));
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    std::vector<Piece> chain;
    for (auto& [ang, pc] : ordered) {
        if (!chain.empty() && detail::try_merge(chain.back(), pc, tol)) continue;
        chain.push_back(std::move(pc));
    }
    while (chain.size() > 1 && detail::try_merge(chain.back(), chain.front(), tol)) chain.erase(chain.begin());

    double area2 = 0.0;
    {
        // quick area check before the constructor audits the chain
        for (const auto& pc : chain) {
            if (const auto* arc = std::get_if<Arc>(&pc)) {
                const double r = arc->radius;
                area2 += r * arc->center.x * (std::sin(arc->a1) - std::sin(arc->a0)) -
                         r * arc->center.y * (std::cos(arc->a1) - std::cos(arc->a0)) + r * r * (arc->a1 - arc->a0);
            } else {
                const auto& s = std::get<Segment>(pc);
                area2 += cross(s.p0, s.p1);
            }
        }
    }
    if (0.5 * area2 <= 1e-12 * scale * scale)
        throw DegenerateIntersection("body_intersect: intersection has zero area");
    try {
        return Body2D(std::move(chain));
    } catch (const std::invalid_argument& e) {
        throw DegenerateIntersection(std::string("body_intersect: degenerate result: ") + e.what());
    }
}

/// Symmetric Hausdorff distance between the bodies, by boundary sampling.
inline double hausdorff(const Body2D& a, const Body2D& b, std::size_t samples = 4096)
{
    samples = std::max<std::size_t>(samples, 1024);
    auto directed = [samples](const Body2D& x, const Body2D& y) {
        double d = 0.0;
        for (const Vec2& p : x.boundary_points(samples)) d = std::max(d, std::max(0.0, y.signed_distance(p)));
        return d;
    };
    return std::max(directed(a, b), directed(b, a));
}

inline bool body_contains(const Body2D& b, Vec2 p, double tol) { return b.contains(p, tol); }

// ---------------------------------------------------------------------------
// Curvature

struct BoundaryLocation {
    std::size_t piece = 0;
    double u = 0.5;
};

inline SymMat curvature_matrix(double kappa)
{
    SymMat a(1);
    a.set(0, 0, kappa);
    return a;
}

/// 1x1 shape operator [kappa] for the outward normal; fails at corners.
inline SymMat shape_operator_at(const Body2D& b, BoundaryLocation loc)
{
    const auto& pcs = b.pieces();
    if (loc.piece >= pcs.size()) throw std::out_of_range("shape_operator_at: piece index out of range");
    constexpr double end_tol = 1e-12;
    if (loc.u <= end_tol) {
        const std::size_t prev = (loc.piece + pcs.size() - 1) % pcs.size();
        if (b.is_vertex(prev)) throw NotSmoothError("shape_operator_at: point is a boundary vertex");
    }
    if (loc.u >= 1.0 - end_tol && b.is_vertex(loc.piece))
        throw NotSmoothError("shape_operator_at: point is a boundary vertex");
    return curvature_matrix(piece_curvature(pcs[loc.piece]));
}

inline SymMat shape_operator_at(const Body2D& b, Vec2 p)
{
    const auto& pcs = b.pieces();
    std::size_t best = 0;
    double dbest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pcs.size(); ++i) {
        const double d = piece_distance(pcs[i], p);
        if (d < dbest) dbest = d, best = i;
    }
    const double tol = 1e-9 * std::max(1.0, b.scale());
    for (std::size_t i = 0; i < pcs.size(); ++i)
        if (b.is_vertex(i) && norm(piece_end(pcs[i]) - p) <= tol)
            throw NotSmoothError("shape_operator_at: point is a boundary vertex");
    return shape_operator_at(b, BoundaryLocation{best, piece_project(pcs[best], p)});
}

/// Smooth-boundary type-F_t test: the shape operator lies in F_t everywhere.
inline bool is_type_F_smooth(const Body2D& b, double t, std::size_t per_piece = 64)
{
    if (b.has_vertices()) throw NotSmoothError("is_type_F_smooth: body has vertices; use the probe verifier");
    const ConeSpec cone = ConeSpec::det_cone(t, 1);
    per_piece = std::max<std::size_t>(per_piece, 64);
    for (std::size_t i = 0; i < b.pieces().size(); ++i)
        for (std::size_t k = 0; k < per_piece; ++k) {
            const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(per_piece);
            if (!cone_member(shape_operator_at(b, BoundaryLocation{i, u}), cone)) return false;
        }
    return true;
}

/// Gaussian curvature of the graph of v: det(hess) / (1 + |grad|^2)^((n + 2) / 2).
inline double graph_gauss_curvature(std::span<const double> grad, const SymMat& hess)
{
    const int n = hess.dim();
    if (n < 1 || n > 2 || static_cast<int>(grad.size()) != n)
        throw std::invalid_argument("graph_gauss_curvature: need n in {1, 2} and a matching gradient");
    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    return det_sym(hess) / std::pow(1.0 + g2, 0.5 * (n + 2));
}

// ---------------------------------------------------------------------------
// Convex hull of the complement of Omega

/// Convex hull of the arc |theta| >= alpha of the ball boundary.
inline Body2D hull_k0_2d(const Scenario& s)
{
    if (s.dim != 2) throw std::invalid_argument("hull_k0_2d: scenario is not two-dimensional");
    const double a = s.alpha();
    const Vec2 p_plus = polar(a) * s.R;
    const Vec2 p_minus = polar(-a) * s.R;
    return Body2D({Arc{{0.0, 0.0}, s.R, a, kTwoPi - a}, Segment{p_minus, p_plus}});
}

/// Lower spherical cap {z <= z0} closed by the flat lid at height z0.
struct CapLid {
    double rim_radius = 0.0;
    double lid_height = 0.0;
};

inline CapLid hull_k0_3d(const Scenario& s)
{
    if (s.dim != 3) throw std::invalid_argument("hull_k0_3d: scenario is not three-dimensional");
    return {s.rim_radius(), s.z0()};
}

// ---------------------------------------------------------------------------
// Text formats

/// One piece per line: `arc cx cy r a0 a1` or `seg x0 y0 x1 y1`.
inline std::string to_piece_list(const Body2D& b)
{
    std::ostringstream os;
    os << std::setprecision(17);
    for (const auto& pc : b.pieces()) {
        if (const auto* a = std::get_if<Arc>(&pc))
            os << "arc " << a->center.x << ' ' << a->center.y << ' ' << a->radius << ' ' << a->a0 << ' ' << a->a1 << '\n';
        else {
            const auto& s = std::get<Segment>(pc);
            os << "seg " << s.p0.x << ' ' << s.p0.y << ' ' << s.p1.x << ' ' << s.p1.y << '\n';
        }
    }
    return os.str();
}

inline Body2D parse_piece_list(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<Piece> pcs;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "arc") {
            Arc a;
            if (!(ls >> a.center.x >> a.center.y >> a.radius >> a.a0 >> a.a1))
                throw std::invalid_argument("piece list line " + std::to_string(lineno) + ": malformed arc");
            pcs.emplace_back(a);
        } else if (tag == "seg") {
            Segment s;
            if (!(ls >> s.p0.x >> s.p0.y >> s.p1.x >> s.p1.y))
                throw std::invalid_argument("piece list line " + std::to_string(lineno) + ": malformed segment");
            pcs.emplace_back(s);
        } else {
            throw std::invalid_argument("piece list line " + std::to_string(lineno) + ": unknown piece '" + tag + "'");
        }
    }
    return Body2D(std::move(pcs));
}

inline std::string svg_path(const Body2D& b)
{
    std::ostringstream os;
    os << std::setprecision(10);
    const Vec2 s0 = piece_start(b.pieces().front());
    os << "M " << s0.x << ' ' << s0.y;
    for (const auto& pc : b.pieces()) {
        if (const auto* a = std::get_if<Arc>(&pc)) {
            // full circles are emitted as two half arcs
            const int parts = (a->a1 - a->a0) > kPi ? 2 : 1;
            for (int k = 1; k <= parts; ++k) {
                const Vec2 e = piece_point(pc, static_cast<double>(k) / parts);
                os << " A " << a->radius << ' ' << a->radius << " 0 0 1 " << e.x << ' ' << e.y;
            }
        } else {
            const Vec2 e = std::get<Segment>(pc).p1;
            os << " L " << e.x << ' ' << e.y;
        }
    }
    os << " Z";
    return os.str();
}

struct SvgLayer {
    const Body2D* body;
    std::string stroke;
    std::string label;
};

inline std::string to_svg(std::span<const SvgLayer> layers, double half_width)
{
    std::ostringstream os;
    const double w = 2.0 * half_width;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << -half_width << ' ' << -half_width << ' ' << w
       << ' ' << w << "\" width=\"600\" height=\"600\">\n";
    os << "<g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"" << w / 400.0 << "\">\n";
    for (const auto& l : layers)
        os << "  <path d=\"" << svg_path(*l.body) << "\" stroke=\"" << l.stroke << "\"><title>" << l.label
           << "</title></path>\n";
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace cgc
