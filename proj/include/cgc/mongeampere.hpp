#pragma once

// Graph-chart solver for the constant Gauss curvature patch in R^3.
//
// Over the rim disk of the cap Omega = {z > z0} the free surface is the
// graph of a concave function u. The solver works with v = -u, which is
// convex and satisfies
//
//     det D^2 v = t (1 + |grad v|^2)^2,   v = -z0 on the rim,
//
// together with v >= -sqrt(R^2 - |x|^2) (the surface stays inside the ball).
// The determinant is discretized by the monotone wide-stencil formula
// min over orthogonal direction pairs of the product of the two directional
// second differences, and solved by nonlinear Gauss-Seidel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cgc/bodies.hpp"
#include "cgc/geometry.hpp"
#include "cgc/probe.hpp"

namespace cgc {

struct Offset {
    int di = 0;
    int dj = 0;
    double length() const { return std::hypot(static_cast<double>(di), static_cast<double>(dj)); }
};

/// Orthogonal pairs of integer grid directions.
class StencilSet {
public:
    explicit StencilSet(std::vector<std::pair<Offset, Offset>> pairs) : pairs_(std::move(pairs))
    {
        if (pairs_.size() < 2) throw std::invalid_argument("StencilSet: need at least two direction pairs");
        for (const auto& [a, b] : pairs_) {
            if (a.di * b.di + a.dj * b.dj != 0) throw std::invalid_argument("StencilSet: pair is not orthogonal");
            for (const Offset& o : {a, b})
                if (std::gcd(std::abs(o.di), std::abs(o.dj)) != 1)
                    throw std::invalid_argument("StencilSet: offsets must be coprime");
        }
    }

    /// Axes and diagonals (width 1), plus the (2,1) family (width 2).
    static StencilSet width(int w)
    {
        std::vector<std::pair<Offset, Offset>> p{{{1, 0}, {0, 1}}, {{1, 1}, {-1, 1}}};
        if (w >= 2) {
            p.push_back({{2, 1}, {-1, 2}});
            p.push_back({{1, 2}, {-2, 1}});
        }
        if (w < 1 || w > 2) throw std::invalid_argument("StencilSet: supported widths are 1 and 2");
        return StencilSet(std::move(p));
    }

    const std::vector<std::pair<Offset, Offset>>& pairs() const { return pairs_; }

    int reach() const
    {
        int r = 0;
        for (const auto& [a, b] : pairs_) r = std::max({r, std::abs(a.di), std::abs(a.dj), std::abs(b.di), std::abs(b.dj)});
        return r;
    }

private:
    std::vector<std::pair<Offset, Offset>> pairs_;
};

/// Rim data g(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta).
struct RimData {
    double c0 = 0.0;
    std::vector<double> cos_terms;
    std::vector<double> sin_terms;

    double operator()(double theta) const
    {
        double g = c0;
        for (std::size_t k = 0; k < cos_terms.size(); ++k) g += cos_terms[k] * std::cos(static_cast<double>(k + 1) * theta);
        for (std::size_t k = 0; k < sin_terms.size(); ++k) g += sin_terms[k] * std::sin(static_cast<double>(k + 1) * theta);
        return g;
    }
};

struct GridNode {
    int i = 0;
    int j = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Grid function over the disk of radius rho; unknowns live at nodes strictly inside.
struct GraphPatch {
    double h = 0.0;
    double rho = 0.0;
    int half = 0;                    // grid indices run over [-half, half]^2
    std::vector<int> mask;           // node id or -1, row-major over (2 half + 1)^2
    std::vector<GridNode> nodes;
    std::vector<double> v;
    std::vector<double> obstacle;    // lower bound for v, empty when unused
    RimData g;

    int width() const { return 2 * half + 1; }

    int node_at(int i, int j) const
    {
        if (std::abs(i) > half || std::abs(j) > half) return -1;
        return mask[static_cast<std::size_t>((j + half) * width() + (i + half))];
    }

    double u(std::size_t n) const { return -v[n]; }
};

inline GraphPatch make_disk_patch(double rho, double h, RimData g)
{
    if (!(rho > 0.0) || !(h > 0.0)) throw std::invalid_argument("make_disk_patch: rho and h must be positive");
    GraphPatch p;
    p.h = h;
    p.rho = rho;
    p.g = std::move(g);
    p.half = static_cast<int>(std::ceil(rho / h));
    p.mask.assign(static_cast<std::size_t>(p.width() * p.width()), -1);
    for (int j = -p.half; j <= p.half; ++j)
        for (int i = -p.half; i <= p.half; ++i) {
            const double x = i * h, y = j * h;
            if (std::hypot(x, y) < rho * (1.0 - 1e-9)) {
                p.mask[static_cast<std::size_t>((j + p.half) * p.width() + (i + p.half))] = static_cast<int>(p.nodes.size());
                p.nodes.push_back({i, j, x, y});
            }
        }
    p.v.assign(p.nodes.size(), 0.0);
    return p;
}

/// Patch for the 3D cap scenario: rim data -z0, ball obstacle, cone initial iterate.
inline GraphPatch build_patch(const Scenario& s, double h)
{
    if (s.dim != 3) throw std::invalid_argument("build_patch: scenario is not three-dimensional");
    const double rho = s.rim_radius();
    if (!(h > 0.0) || h > rho / 8.0 * (1.0 + 1e-12))
        throw std::invalid_argument("build_patch: grid spacing must satisfy 0 < h <= rho / 8");
    GraphPatch p = make_disk_patch(rho, h, RimData{-s.z0(), {}, {}});
    const double lift = 1e-3 * rho;
    p.obstacle.resize(p.nodes.size());
    for (std::size_t n = 0; n < p.nodes.size(); ++n) {
        const double r = std::hypot(p.nodes[n].x, p.nodes[n].y);
        p.obstacle[n] = -std::sqrt(std::max(0.0, s.R * s.R - r * r));
        p.v[n] = std::max(-s.z0() - lift * (1.0 - r / rho), p.obstacle[n]);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Stencil topology

/// Neighbor along an offset: an interior node, or a rim point at exact distance.
struct Neighbor {
    int node = -1;
    double dist = 0.0;
    double rim_value = 0.0;
};

struct DirectionalNeighbors {
    Neighbor plus;
    Neighbor minus;
};

struct PairArms {
    std::size_t pair = 0;  // index into StencilSet::pairs()
    DirectionalNeighbors a;
    DirectionalNeighbors b;
};

/// Per node: the usable stencil pairs with their neighbors, plus the axis neighbors.
/// Near the rim a node keeps only the pairs whose four arms land on grid nodes;
/// the first pair is always kept, with arms shortened to the rim.
struct StencilTopology {
    std::vector<std::vector<PairArms>> pairs;
    std::vector<std::pair<DirectionalNeighbors, DirectionalNeighbors>> axes;
};

namespace detail {

inline Neighbor find_neighbor(const GraphPatch& p, const GridNode& nd, Offset o)
{
    const int n = p.node_at(nd.i + o.di, nd.j + o.dj);
    const double step = o.length() * p.h;
    if (n >= 0) return {n, step, 0.0};
    // ray from the node to the rim circle
    const double ex = o.di / o.length(), ey = o.dj / o.length();
    const double b = nd.x * ex + nd.y * ey;
    const double c = nd.x * nd.x + nd.y * nd.y - p.rho * p.rho;
    const double s = -b + std::sqrt(std::max(0.0, b * b - c));
    const double rx = nd.x + s * ex, ry = nd.y + s * ey;
    return {-1, std::min(s, step), p.g(std::atan2(ry, rx))};
}

inline DirectionalNeighbors neighbors(const GraphPatch& p, const GridNode& nd, Offset o)
{
    return {find_neighbor(p, nd, o), find_neighbor(p, nd, Offset{-o.di, -o.dj})};
}

inline double value_of(const GraphPatch& p, const Neighbor& nb) { return nb.node >= 0 ? p.v[static_cast<std::size_t>(nb.node)] : nb.rim_value; }

}  // namespace detail

inline StencilTopology build_topology(const GraphPatch& p, const StencilSet& st)
{
    StencilTopology topo;
    topo.pairs.resize(p.nodes.size());
    topo.axes.resize(p.nodes.size());
    for (std::size_t n = 0; n < p.nodes.size(); ++n) {
        const GridNode& nd = p.nodes[n];
        for (std::size_t k = 0; k < st.pairs().size(); ++k) {
            const auto& [a, b] = st.pairs()[k];
            PairArms arms{k, detail::neighbors(p, nd, a), detail::neighbors(p, nd, b)};
            const bool cut = arms.a.plus.node < 0 || arms.a.minus.node < 0 || arms.b.plus.node < 0 || arms.b.minus.node < 0;
            if (cut && k > 0) continue;
            topo.pairs[n].push_back(arms);
        }
        topo.axes[n] = {detail::neighbors(p, nd, {1, 0}), detail::neighbors(p, nd, {0, 1})};
    }
    return topo;
}

/// Rim points reached by the stencil, with their boundary values.
inline std::vector<std::pair<Vec2, double>> rim_nodes(const GraphPatch& p, const StencilSet& st)
{
    std::vector<std::pair<Vec2, double>> out;
    const StencilTopology topo = build_topology(p, st);
    for (std::size_t n = 0; n < p.nodes.size(); ++n) {
        const GridNode& nd = p.nodes[n];
        for (const PairArms& arms : topo.pairs[n]) {
            const auto& [a, b] = st.pairs()[arms.pair];
            const std::pair<Offset, const DirectionalNeighbors*> dirs[] = {{a, &arms.a}, {b, &arms.b}};
            for (const auto& [o, dn] : dirs) {
                const double ex = o.di / o.length(), ey = o.dj / o.length();
                if (dn->plus.node < 0) out.push_back({{nd.x + ex * dn->plus.dist, nd.y + ey * dn->plus.dist}, dn->plus.rim_value});
                if (dn->minus.node < 0) out.push_back({{nd.x - ex * dn->minus.dist, nd.y - ey * dn->minus.dist}, dn->minus.rim_value});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discrete operator

inline constexpr double kConvexityClamp = 1e-12;

/// Second difference along one direction with unequal arms.
inline double second_difference(const GraphPatch& p, std::size_t n, const DirectionalNeighbors& d)
{
    const double v0 = p.v[n];
    const double sp = d.plus.dist, sm = d.minus.dist;
    return 2.0 / (sp + sm) * ((detail::value_of(p, d.plus) - v0) / sp + (detail::value_of(p, d.minus) - v0) / sm);
}

/// Three-point derivative along one direction with unequal arms.
inline double first_difference(const GraphPatch& p, std::size_t n, const DirectionalNeighbors& d)
{
    const double v0 = p.v[n];
    const double sp = d.plus.dist, sm = d.minus.dist;
    return (sm * sm * detail::value_of(p, d.plus) - sp * sp * detail::value_of(p, d.minus) + (sp * sp - sm * sm) * v0) /
           (sp * sm * (sp + sm));
}

inline std::array<double, 2> node_gradient(const GraphPatch& p, const StencilTopology& topo, std::size_t n)
{
    return {first_difference(p, n, topo.axes[n].first), first_difference(p, n, topo.axes[n].second)};
}

/// Right-hand side t (1 + |grad v|^2)^2.
inline double curvature_rhs(double t, std::array<double, 2> grad)
{
    const double q = 1.0 + grad[0] * grad[0] + grad[1] * grad[1];
    return t * q * q;
}

/// Wide-stencil determinant: min over pairs of the clamped product of second differences.
inline double ma_det_at(const GraphPatch& p, const StencilTopology& topo, std::size_t n)
{
    double best = std::numeric_limits<double>::infinity();
    for (const PairArms& pa : topo.pairs[n])
        best = std::min(best, std::max(second_difference(p, n, pa.a), kConvexityClamp) *
                                  std::max(second_difference(p, n, pa.b), kConvexityClamp));
    return best;
}

/// Residual of the discrete equation at an interior node for a given right-hand side.
inline double ma_operator_at(const GraphPatch& p, const StencilTopology& topo, std::size_t n, double rhs)
{
    return ma_det_at(p, topo, n) - rhs;
}

// ---------------------------------------------------------------------------
// Solver

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history(std::move(history))
    {
    }
    std::vector<double> history;
};

struct SolveOptions {
    double tol = 0.0;          // max-norm residual target; 0 selects 1e-8 t
    int max_sweeps = 20000;
    bool parallel = false;     // colored sweeps on several threads
    unsigned threads = 0;      // 0 selects hardware concurrency
    std::function<void(int, const GraphPatch&)> on_sweep;  // called after every sweep
};

struct SolveResult {
    GraphPatch patch;
    std::vector<double> history;  // max-norm residual after each sweep
    int sweeps = 0;
};

namespace detail {

// Node value making the smallest pair product equal rhs, neighbors held fixed.
inline double local_solve(const GraphPatch& p, const StencilTopology& topo, std::size_t n, double rhs)
{
    double best = std::numeric_limits<double>::infinity();
    for (const PairArms& pa : topo.pairs[n]) {
        auto coeffs = [&](const DirectionalNeighbors& d) {
            const double sp = d.plus.dist, sm = d.minus.dist;
            const double w = 2.0 / (sp + sm);
            return std::pair{w * (value_of(p, d.plus) / sp + value_of(p, d.minus) / sm), 2.0 / (sp * sm)};
        };
        const auto [a1, b1] = coeffs(pa.a);
        const auto [a2, b2] = coeffs(pa.b);
        // (a1 - b1 v)(a2 - b2 v) = rhs, smaller root keeps both factors nonnegative
        const double B = a1 * b2 + a2 * b1;
        const double disc = (a1 * b2 - a2 * b1) * (a1 * b2 - a2 * b1) + 4.0 * b1 * b2 * rhs;
        const double root = (B - std::sqrt(std::max(0.0, disc))) / (2.0 * b1 * b2);
        best = std::min(best, root);
    }
    return best;
}

inline double node_residual(const GraphPatch& p, const StencilTopology& topo, std::size_t n, double t)
{
    const double r = ma_operator_at(p, topo, n, curvature_rhs(t, node_gradient(p, topo, n)));
    const bool on_obstacle = !p.obstacle.empty() && p.v[n] <= p.obstacle[n] + 1e-14 * (1.0 + std::abs(p.obstacle[n]));
    return on_obstacle ? std::max(r, 0.0) : r;
}

}  // namespace detail

inline double max_residual(const GraphPatch& p, const StencilTopology& topo, double t)
{
    double r = 0.0;
    for (std::size_t n = 0; n < p.nodes.size(); ++n) r = std::max(r, std::abs(detail::node_residual(p, topo, n, t)));
    return r;
}

/// Nonlinear Gauss-Seidel with lagged gradient and obstacle projection.
inline SolveResult solve(GraphPatch patch, double t, const StencilSet& stencil, SolveOptions opt = {})
{
    if (!(t > 0.0)) throw std::invalid_argument("solve: t must be positive");
    const double tol = opt.tol > 0.0 ? opt.tol : 1e-8 * t;
    const StencilTopology topo = build_topology(patch, stencil);
    const std::size_t N = patch.nodes.size();

    bool colored = opt.parallel;
    for (const auto& [a, b] : stencil.pairs())
        for (const Offset& o : {a, b})
            if ((o.di % 3 + 3) % 3 == 0 && (o.dj % 3 + 3) % 3 == 0) colored = false;
    std::vector<std::vector<std::size_t>> colors;
    if (colored) {
        colors.resize(9);
        for (std::size_t n = 0; n < N; ++n)
            colors[static_cast<std::size_t>(((patch.nodes[n].i % 3 + 3) % 3) * 3 + (patch.nodes[n].j % 3 + 3) % 3)].push_back(n);
    }
    const unsigned nthreads = std::max(1u, opt.threads ? opt.threads : std::thread::hardware_concurrency());

    std::vector<double> rhs(N);
    SolveResult res;
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        for (std::size_t n = 0; n < N; ++n) rhs[n] = curvature_rhs(t, node_gradient(patch, topo, n));
        auto update = [&](std::size_t n) {
            double nv = detail::local_solve(patch, topo, n, rhs[n]);
            if (!patch.obstacle.empty()) nv = std::max(nv, patch.obstacle[n]);
            patch.v[n] = nv;
        };
        if (colored) {
            for (const auto& cls : colors) {
                std::vector<std::thread> pool;
                const std::size_t chunk = (cls.size() + nthreads - 1) / nthreads;
                for (unsigned k = 0; k < nthreads; ++k) {
                    const std::size_t lo = k * chunk, hi = std::min(cls.size(), lo + chunk);
                    if (lo >= hi) break;
                    pool.emplace_back([&, lo, hi] {
                        for (std::size_t q = lo; q < hi; ++q) update(cls[q]);
                    });
                }
                for (auto& th : pool) th.join();
            }
        } else {
            for (std::size_t n = 0; n < N; ++n) update(n);
        }
        const double r = max_residual(patch, topo, t);
        res.history.push_back(r);
        if (opt.on_sweep) opt.on_sweep(sweep, patch);
        if (r <= tol) {
            res.sweeps = sweep;
            res.patch = std::move(patch);
            return res;
        }
    }
    std::ostringstream os;
    os << "solve: residual " << res.history.back() << " above tolerance " << tol << " after " << opt.max_sweeps
       << " sweeps";
    throw NonConvergence(os.str(), std::move(res.history));
}

/// Smallest second difference over all stencil directions and nodes.
inline double min_second_difference(const GraphPatch& p, const StencilSet& st)
{
    const StencilTopology topo = build_topology(p, st);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < p.nodes.size(); ++n)
        for (const PairArms& pa : topo.pairs[n]) m = std::min({m, second_difference(p, n, pa.a), second_difference(p, n, pa.b)});
    return m;
}

// ---------------------------------------------------------------------------
// Cap oracle

/// Spherical cap of radius t^(-1/2) through the rim circle at height z0.
inline double cap_height(const Scenario& s, double x, double y)
{
    const double r = 1.0 / std::sqrt(s.t);
    const double rho = s.rim_radius();
    return s.z0() - std::sqrt(r * r - rho * rho) + std::sqrt(std::max(0.0, r * r - x * x - y * y));
}

inline double cap_apex(const Scenario& s) { return cap_height(s, 0.0, 0.0); }

struct CapComparison {
    double max_error = 0.0;
    std::vector<double> errors;  // per interior node
};

inline CapComparison compare_to_cap(const GraphPatch& p, const Scenario& s)
{
    CapComparison c;
    c.errors.resize(p.nodes.size());
    for (std::size_t n = 0; n < p.nodes.size(); ++n) {
        c.errors[n] = std::abs(p.u(n) - cap_height(s, p.nodes[n].x, p.nodes[n].y));
        c.max_error = std::max(c.max_error, c.errors[n]);
    }
    return c;
}

/// u at the node nearest the disk center.
inline double apex_height(const GraphPatch& p)
{
    const int n = p.node_at(0, 0);
    return n >= 0 ? p.u(static_cast<std::size_t>(n)) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Hypograph adapter for the probe verifier

/// The region below the graph of u = -v over the disk.
class HypographRegion {
public:
    static constexpr int dim = 3;

    HypographRegion(const GraphPatch& p, double scale) : p_(&p), scale_(scale), topo_(build_topology(p, StencilSet::width(1))) {}

    double default_scale() const { return scale_; }

    /// Vertical offset above the local quadratic interpolant of u; NaN where the
    /// 3x3 node block around the query is not fully interior.
    double signed_distance(Vec3 q) const
    {
        const double fi = q.x / p_->h, fj = q.y / p_->h;
        const int i0 = static_cast<int>(std::lround(fi)), j0 = static_cast<int>(std::lround(fj));
        const auto weights = [](double s) { return std::array<double, 3>{0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)}; };
        const auto wx = weights(fi - i0), wy = weights(fj - j0);
        double acc = 0.0;
        for (int b = -1; b <= 1; ++b)
            for (int a = -1; a <= 1; ++a) {
                const int n = p_->node_at(i0 + a, j0 + b);
                if (n < 0) return std::numeric_limits<double>::quiet_NaN();
                acc += wx[static_cast<std::size_t>(a + 1)] * wy[static_cast<std::size_t>(b + 1)] * p_->u(static_cast<std::size_t>(n));
            }
        return q.z - acc;
    }

    std::vector<ProbePoint> probe_points(const ProbeGrid& grid) const
    {
        const std::size_t stride = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p_->nodes.size()) / std::max<std::size_t>(1, grid.points))));
        std::vector<ProbePoint> out;
        for (std::size_t n = 0; n < p_->nodes.size(); ++n) {
            const GridNode& nd = p_->nodes[n];
            if (nd.i % static_cast<int>(stride) != 0 || nd.j % static_cast<int>(stride) != 0) continue;
            const auto g = node_gradient(*p_, topo_, n);  // gradient of v = -u
            const Vec3 nu = unit(Vec3{g[0], g[1], 1.0});
            out.push_back({{nd.x, nd.y, p_->u(n)}, {nu}, static_cast<double>(n)});
        }
        return out;
    }

private:
    const GraphPatch* p_;
    double scale_;
    StencilTopology topo_;
};

// ---------------------------------------------------------------------------
// Export

inline std::string patch_csv(const GraphPatch& p)
{
    std::ostringstream os;
    os << std::setprecision(17) << "x,y,v\n";
    for (std::size_t n = 0; n < p.nodes.size(); ++n) os << p.nodes[n].x << ',' << p.nodes[n].y << ',' << p.v[n] << '\n';
    return os.str();
}

/// Reads values written by patch_csv back into a patch with the same grid.
inline void load_patch_csv(GraphPatch& p, const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x, y, v;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> x >> c1 >> y >> c2 >> v) || n >= p.nodes.size())
            throw std::invalid_argument("load_patch_csv: malformed row " + std::to_string(n + 2));
        if (std::abs(x - p.nodes[n].x) > 1e-9 || std::abs(y - p.nodes[n].y) > 1e-9)
            throw std::invalid_argument("load_patch_csv: grid does not match the patch");
        p.v[n++] = v;
    }
    if (n != p.nodes.size()) throw std::invalid_argument("load_patch_csv: row count does not match the patch");
}

/// Triangle mesh of the graph z = u over grid cells whose corners are all interior.
inline std::string patch_obj(const GraphPatch& p)
{
    std::ostringstream os;
    os << std::setprecision(12) << "# constant Gauss curvature patch, z = u(x, y)\n";
    for (std::size_t n = 0; n < p.nodes.size(); ++n) os << "v " << p.nodes[n].x << ' ' << p.nodes[n].y << ' ' << p.u(n) << '\n';
    for (const GridNode& nd : p.nodes) {
        const int a = p.node_at(nd.i, nd.j), b = p.node_at(nd.i + 1, nd.j), c = p.node_at(nd.i + 1, nd.j + 1),
                  d = p.node_at(nd.i, nd.j + 1);
        if (b < 0 || c < 0 || d < 0) continue;
        os << "f " << a + 1 << ' ' << b + 1 << ' ' << c + 1 << '\n';
        os << "f " << a + 1 << ' ' << c + 1 << ' ' << d + 1 << '\n';
    }
    return os.str();
}

inline std::string history_csv(const std::vector<double>& history)
{
    std::ostringstream os;
    os << std::setprecision(17) << "sweep,residual\n";
    for (std::size_t k = 0; k < history.size(); ++k) os << k + 1 << ',' << history[k] << '\n';
    return os.str();
}

}  // namespace cgc
