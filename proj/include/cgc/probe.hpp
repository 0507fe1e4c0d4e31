#pragma once

// Touching-function verifier for the type-F_t and type-F_t' conditions.
//
// A boundary point p of a closed set X fails type F_t when some smooth f
// with f(p) = 0, nonvanishing gradient and reduced Hessian outside F_t has
// its sublevel set {f <= 0} locally inside X. The dual condition fails when
// some f whose reduced Hessian lies inside F_t has {f >= 0} locally inside
// the closure of the complement of X. The search below is restricted to the
// paraboloids f(x) = <nu, x - p> + 1/2 <Q (x - p), x - p> with Q acting on
// the tangent plane only, so a reported violation is a genuine witness while
// an empty report only means none was found at the stated margin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgc/bodies.hpp"
#include "cgc/geometry.hpp"
#include "cgc/symcone.hpp"

namespace cgc {

struct Probe {
    int dim = 2;        // ambient dimension
    Vec3 p;             // base point
    Vec3 a;             // gradient of f at p
    SymMat q;           // Hessian of f, ambient dimension
    double r_test = 0;  // radius of the test ball
};

namespace detail {

// Orthonormal basis of the hyperplane orthogonal to a (a normalized).
inline std::vector<Vec3> complement_basis(int dim, Vec3 a)
{
    if (dim == 2) return {Vec3{-a.y, a.x, 0.0}};
    const Vec3 helper = std::abs(a.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    const Vec3 e1 = unit(helper - a * dot(helper, a));
    return {e1, cross(a, e1)};
}

inline double quad_form(const SymMat& q, Vec3 u, Vec3 v)
{
    const double uu[3] = {u.x, u.y, u.z};
    const double vv[3] = {v.x, v.y, v.z};
    double s = 0.0;
    for (int i = 0; i < q.dim(); ++i)
        for (int j = 0; j < q.dim(); ++j) s += uu[i] * q(i, j) * vv[j];
    return s;
}

inline SymMat tangent_quadratic(int dim, const std::vector<Vec3>& frame, const std::vector<double>& kappas)
{
    SymMat q(dim);
    const auto comp = [](Vec3 v, int i) { return i == 0 ? v.x : (i == 1 ? v.y : v.z); };
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < frame.size(); ++k) s += kappas[k] * comp(frame[k], i) * comp(frame[k], j);
            q.set(i, j, s);
        }
    return q;
}

}  // namespace detail

/// Hess(f) restricted to the hyperplane orthogonal to grad f, divided by |grad f|.
inline SymMat reduced_shape(const Probe& pr)
{
    const double na = norm(pr.a);
    if (!(na > 0.0)) throw std::invalid_argument("reduced_shape: probe gradient must be nonzero");
    if (pr.q.dim() != pr.dim) throw std::invalid_argument("reduced_shape: Hessian dimension mismatch");
    const std::vector<Vec3> basis = detail::complement_basis(pr.dim, pr.a * (1.0 / na));
    SymMat out(pr.dim - 1);
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j)
            out.set(static_cast<int>(i), static_cast<int>(j), detail::quad_form(pr.q, basis[i], basis[j]) / na);
    return out;
}

/// Boundary point offered to the verifier with its outward normals (a fan at corners).
struct ProbePoint {
    Vec3 p;
    std::vector<Vec3> normals;
    double param = 0.0;
};

struct ProbeGrid {
    std::size_t points = 256;        // boundary sample count (2D) or node stride target (3D)
    double scale = 0.0;              // length scale for r_test; 0 selects the region's own
    std::size_t directions = 16;     // tangent directions for 3D region sampling
    std::size_t region_samples = 256;
    std::function<bool(Vec3)> exclude;  // points to skip, e.g. those on the ball boundary
};

struct Violation {
    Vec3 point;
    double param = 0.0;
    Probe probe;
    double kappa1 = 0.0;  // principal curvatures of the probe level set at p
    double kappa2 = 0.0;
    double margin = 0.0;  // smallest clearance of the probe region samples
};

struct ProbeReport {
    std::vector<Violation> violations;
    std::size_t points_tested = 0;
    std::size_t probes_tried = 0;

    bool empty() const { return violations.empty(); }
};

enum class ProbeSide { TypeF, TypeFDual };

/// Probe curvature ladder: 0, powers 2^(j/4) inside [eps/4, 4/eps], and t -/+ eps.
inline std::vector<double> curvature_ladder(double t, double eps)
{
    std::vector<double> k{0.0};
    const double lo = eps / 4.0, hi = 4.0 / eps;
    for (int j = static_cast<int>(std::ceil(4.0 * std::log2(lo))); std::pow(2.0, j / 4.0) <= hi; ++j)
        k.push_back(std::pow(2.0, j / 4.0));
    if (t - eps > 0.0) k.push_back(t - eps);
    k.push_back(t + eps);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
}

namespace detail {

struct ProbeShape {
    std::vector<double> kappas;  // along frame directions
    double phase = 0.0;          // rotation of the frame in the tangent plane (3D)
};

inline bool admissible(const SymMat& reduced, ProbeSide side, double t, double eps)
{
    const int n = reduced.dim();
    if (side == ProbeSide::TypeF) {
        if (t - eps <= 0.0) return eig_sym(reduced).front() <= 0.0;
        return cone_member(reduced, ConeSpec::closure_complement(t - eps, n), 0.0);
    }
    return cone_member(reduced, ConeSpec::det_cone(t + eps, n), 0.0);
}

inline std::vector<ProbeShape> probe_shapes(int dim, ProbeSide side, double t, double eps)
{
    const std::vector<double> ladder = curvature_ladder(t, eps);
    std::vector<ProbeShape> out;
    if (dim == 2) {
        for (double k : ladder) out.push_back({{k}, 0.0});
        return out;
    }
    // 3D: umbilic probes plus anisotropic probes on the det = t -/+ eps boundary
    const double target = side == ProbeSide::TypeF ? (t - eps) * (1.0 - 1e-12) : (t + eps) * (1.0 + 1e-12);
    for (double k : ladder) out.push_back({{k, k}, 0.0});
    if (target > 0.0) {
        const double umb = std::sqrt(target);
        out.push_back({{umb, umb}, 0.0});
        for (double k : ladder) {
            if (k <= umb) continue;
            for (int a = 0; a < 4; ++a) out.push_back({{k, target / k}, a * kPi / 4.0});
        }
    }
    return out;
}

// Samples of the boundary of the probe region ({f <= 0} or {f >= 0}) inside B(p, r).
inline std::vector<Vec3> region_boundary(int dim, Vec3 p, Vec3 nu, const std::vector<Vec3>& frame,
                                         const ProbeShape& sh, double r, ProbeSide side, std::size_t total,
                                         std::size_t directions)
{
    std::vector<Vec3> dirs;
    std::vector<double> qs;
    if (dim == 2) {
        dirs = {frame[0], -frame[0]};
        qs = {sh.kappas[0], sh.kappas[0]};
    } else {
        const double c = std::cos(sh.phase), s = std::sin(sh.phase);
        const Vec3 e1 = frame[0] * c + frame[1] * s;
        const Vec3 e2 = frame[1] * c - frame[0] * s;
        for (std::size_t k = 0; k < directions; ++k) {
            const double ph = kTwoPi * static_cast<double>(k) / static_cast<double>(directions);
            const double cp = std::cos(ph), sp = std::sin(ph);
            dirs.push_back(e1 * cp + e2 * sp);
            qs.push_back(sh.kappas[0] * cp * cp + sh.kappas[1] * sp * sp);
        }
    }
    const std::size_t per_dir = std::max<std::size_t>(2, total / (2 * dirs.size()));
    std::vector<Vec3> pts;
    pts.reserve(2 * per_dir * dirs.size());
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double q = qs[d];
        double rho_max = r;
        double cstar = 0.0;
        if (q > 0.0) {
            rho_max = std::sqrt((-1.0 + std::sqrt(1.0 + q * q * r * r)) / (0.5 * q * q));
            cstar = (-1.0 + std::sqrt(1.0 + r * r * q * q)) / (r * q);
        }
        // level set, avoiding p itself
        for (std::size_t k = 0; k < per_dir; ++k) {
            const double rho = rho_max * (static_cast<double>(k) + 0.5) / static_cast<double>(per_dir);
            pts.push_back(p + dirs[d] * rho - nu * (0.5 * q * rho * rho));
        }
        const double th_star = std::acos(std::clamp(cstar, -1.0, 1.0));
        const double lo = side == ProbeSide::TypeF ? 0.0 : th_star;
        const double hi = side == ProbeSide::TypeF ? th_star : kPi;
        for (std::size_t k = 0; k < per_dir; ++k) {
            const double th = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(per_dir - 1);
            pts.push_back(p + (dirs[d] * std::sin(th) - nu * std::cos(th)) * r);
        }
    }
    return pts;
}

template <class Region>
ProbeReport run_probe(const Region& X, double t, double eps, const ProbeGrid& grid, ProbeSide side)
{
    if (!(eps > 0.0)) throw std::invalid_argument("probe: margin eps must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("probe: curvature t must be positive");
    constexpr int dim = Region::dim;
    constexpr double clearance = 1e-9;
    const double scale = grid.scale > 0.0 ? grid.scale : X.default_scale();
    const std::vector<ProbeShape> shapes = probe_shapes(dim, side, t, eps);

    ProbeReport rep;
    for (const ProbePoint& pp : X.probe_points(grid)) {
        if (grid.exclude && grid.exclude(pp.p)) continue;
        ++rep.points_tested;
        bool found = false;
        for (const Vec3& nu : pp.normals) {
            const std::vector<Vec3> frame = complement_basis(dim, nu);
            for (const ProbeShape& sh : shapes) {
                std::vector<Vec3> rot = frame;
                if (dim == 3) {
                    const double c = std::cos(sh.phase), s = std::sin(sh.phase);
                    rot = {frame[0] * c + frame[1] * s, frame[1] * c - frame[0] * s};
                }
                Probe pr{dim, pp.p, nu, tangent_quadratic(dim, rot, sh.kappas), 0.0};
                if (!admissible(reduced_shape(pr), side, t, eps)) continue;
                const double kmax = *std::max_element(sh.kappas.begin(), sh.kappas.end());
                pr.r_test = kmax > 0.0 ? std::min(0.2 * scale, 0.5 / kmax) : 0.2 * scale;
                ++rep.probes_tried;
                double margin = std::numeric_limits<double>::infinity();
                bool fits = true;
                for (const Vec3& q :
                     region_boundary(dim, pp.p, nu, frame, sh, pr.r_test, side, grid.region_samples, grid.directions)) {
                    const double sd = X.signed_distance(q);
                    const double clear = side == ProbeSide::TypeF ? -sd : sd;
                    if (!(clear > clearance)) {
                        fits = false;
                        break;
                    }
                    margin = std::min(margin, clear);
                }
                if (fits) {
                    rep.violations.push_back({pp.p, pp.param, pr, sh.kappas[0],
                                              sh.kappas.size() > 1 ? sh.kappas[1] : sh.kappas[0], margin});
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
    }
    std::sort(rep.violations.begin(), rep.violations.end(),
              [](const Violation& a, const Violation& b) { return a.param < b.param; });
    return rep;
}

}  // namespace detail

/// Adapter presenting a Body2D to the verifier.
class BodyRegion {
public:
    static constexpr int dim = 2;

    explicit BodyRegion(const Body2D& b) : body_(&b) {}

    double default_scale() const { return 0.5 * body_->scale(); }

    double signed_distance(Vec3 q) const { return body_->signed_distance({q.x, q.y}); }

    std::vector<ProbePoint> probe_points(const ProbeGrid& grid) const
    {
        std::vector<ProbePoint> out;
        for (const BoundarySample& s : body_->sample(grid.points)) {
            ProbePoint pp{{s.point.x, s.point.y, 0.0}, {}, s.s};
            for (const Vec2& n : s.normals) pp.normals.push_back({n.x, n.y, 0.0});
            out.push_back(std::move(pp));
        }
        return out;
    }

private:
    const Body2D* body_;
};

/// Searches for witnesses that X is not of type F_t.
template <class Region>
ProbeReport check_type_F(const Region& X, double t, double eps, const ProbeGrid& grid = {})
{
    return detail::run_probe(X, t, eps, grid, ProbeSide::TypeF);
}

inline ProbeReport check_type_F(const Body2D& X, double t, double eps, const ProbeGrid& grid = {})
{
    return check_type_F(BodyRegion(X), t, eps, grid);
}

/// Searches for witnesses that X is not of type F_t'.
template <class Region>
ProbeReport check_type_F_dual(const Region& X, double t, double eps, const ProbeGrid& grid = {})
{
    return detail::run_probe(X, t, eps, grid, ProbeSide::TypeFDual);
}

inline ProbeReport check_type_F_dual(const Body2D& X, double t, double eps, const ProbeGrid& grid = {})
{
    return check_type_F_dual(BodyRegion(X), t, eps, grid);
}

/// CSV rows `test,x,y,z,kappa1,kappa2,margin`.
inline std::string report_csv(const ProbeReport& type_f, const ProbeReport& type_f_dual)
{
    std::ostringstream os;
    os << std::setprecision(12) << "test,x,y,z,kappa1,kappa2,margin\n";
    auto rows = [&](const ProbeReport& r, const char* tag) {
        for (const auto& v : r.violations)
            os << tag << ',' << v.point.x << ',' << v.point.y << ',' << v.point.z << ',' << v.kappa1 << ','
               << v.kappa2 << ',' << v.margin << '\n';
    };
    rows(type_f, "F");
    rows(type_f_dual, "Fdual");
    return os.str();
}

}  // namespace cgc
