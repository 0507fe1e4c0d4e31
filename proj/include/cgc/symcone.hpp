#pragma once

// Small symmetric matrices (dimension 1..3) and the closed cones of
// symmetric matrices used as curvature conditions: the positive
// semi-definite cone P, the determinant cone F_t = {A in P : det A >= t},
// the closure of its complement, and the dual -closure(F_t^c).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cgc {

/// Square matrix of dimension 1..3, row-major, used for orthogonal frames.
struct SquareMat {
    int n = 0;
    std::array<double, 9> m{};

    double& operator()(int i, int j) { return m[static_cast<std::size_t>(3 * i + j)]; }
    double operator()(int i, int j) const { return m[static_cast<std::size_t>(3 * i + j)]; }

    static SquareMat identity(int n)
    {
        SquareMat r;
        r.n = n;
        for (int i = 0; i < n; ++i) r(i, i) = 1.0;
        return r;
    }
};

/// Symmetric matrix; only the upper triangle is stored.
class SymMat {
public:
    SymMat() = default;

    explicit SymMat(int dim) : dim_(dim)
    {
        if (dim < 1 || dim > 3) throw std::invalid_argument("SymMat: dimension must be 1, 2 or 3");
    }

    static SymMat zero(int dim) { return SymMat(dim); }

    static SymMat identity(int dim)
    {
        SymMat a(dim);
        for (int i = 0; i < dim; ++i) a.set(i, i, 1.0);
        return a;
    }

    static SymMat diag(std::initializer_list<double> d)
    {
        SymMat a(static_cast<int>(d.size()));
        int i = 0;
        for (double v : d) {
            a.set(i, i, v);
            ++i;
        }
        return a;
    }

    /// Row-major full matrix; the lower triangle is ignored.
    static SymMat from_rows(std::initializer_list<std::initializer_list<double>> rows)
    {
        SymMat a(static_cast<int>(rows.size()));
        int i = 0;
        for (const auto& row : rows) {
            int j = 0;
            for (double v : row) {
                if (j >= i) a.set(i, j, v);
                ++j;
            }
            ++i;
        }
        return a;
    }

    int dim() const { return dim_; }

    double operator()(int i, int j) const { return e_[index(i, j)]; }
    void set(int i, int j, double v) { e_[index(i, j)] = v; }

    SymMat operator+(const SymMat& o) const
    {
        require_same(o);
        SymMat r = *this;
        for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] += o.e_[k];
        return r;
    }

    SymMat operator-(const SymMat& o) const
    {
        require_same(o);
        SymMat r = *this;
        for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] -= o.e_[k];
        return r;
    }

    SymMat operator-() const
    {
        SymMat r = *this;
        for (double& v : r.e_) v = -v;
        return r;
    }

    SymMat operator*(double s) const
    {
        SymMat r = *this;
        for (double& v : r.e_) v *= s;
        return r;
    }

    double frobenius() const
    {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    /// M^T A M.
    SymMat conjugate(const SquareMat& m) const
    {
        if (m.n != dim_) throw std::invalid_argument("SymMat::conjugate: dimension mismatch");
        SymMat r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = i; j < dim_; ++j) {
                double s = 0.0;
                for (int k = 0; k < dim_; ++k)
                    for (int l = 0; l < dim_; ++l) s += m(k, i) * (*this)(k, l) * m(l, j);
                r.set(i, j, s);
            }
        return r;
    }

    bool operator==(const SymMat& o) const { return dim_ == o.dim_ && e_ == o.e_; }

private:
    // upper-triangle packing: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
    static std::size_t index(int i, int j)
    {
        if (i > j) std::swap(i, j);
        static constexpr std::array<std::array<std::size_t, 3>, 3> idx{{{0, 1, 2}, {1, 3, 4}, {2, 4, 5}}};
        return idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    void require_same(const SymMat& o) const
    {
        if (o.dim_ != dim_) throw std::invalid_argument("SymMat: dimension mismatch");
    }

    int dim_ = 0;
    std::array<double, 6> e_{};
};

struct SpectralData {
    std::vector<double> values;  // ascending
    SquareMat vectors;           // column k is the eigenvector of values[k]
};

/// Eigen-decomposition: closed form for dim 1-2, cyclic Jacobi for dim 3.
inline SpectralData eig_sym_full(const SymMat& a)
{
    const int n = a.dim();
    SpectralData out;
    out.vectors = SquareMat::identity(n);
    if (n == 1) {
        out.values = {a(0, 0)};
        return out;
    }
    if (n == 2) {
        const double p = a(0, 0), q = a(1, 1), b = a(0, 1);
        const double mean = 0.5 * (p + q);
        const double rad = std::hypot(0.5 * (p - q), b);
        const double theta = 0.5 * std::atan2(2.0 * b, p - q);
        const double c = std::cos(theta), s = std::sin(theta);
        // (c, s) belongs to mean + rad, (-s, c) to mean - rad
        out.values = {mean - rad, mean + rad};
        out.vectors(0, 0) = -s;
        out.vectors(1, 0) = c;
        out.vectors(0, 1) = c;
        out.vectors(1, 1) = s;
        return out;
    }

    std::array<std::array<double, 3>, 3> m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = a(i, j);
    SquareMat v = SquareMat::identity(3);
    const double scale = std::max(a.frobenius(), 1e-300);
    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = std::sqrt(m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2]);
        if (off <= 1e-13 * scale) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (m[p][q] == 0.0) continue;
                const double zeta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) { return m[x][x] < m[y][y]; });
    out.values.resize(3);
    for (int k = 0; k < 3; ++k) {
        out.values[static_cast<std::size_t>(k)] = m[order[k]][order[k]];
        for (int r = 0; r < 3; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

/// Ascending eigenvalues.
inline std::vector<double> eig_sym(const SymMat& a) { return eig_sym_full(a).values; }

/// Determinant as the product of eigenvalues.
inline double det_sym(const SymMat& a)
{
    double d = 1.0;
    for (double l : eig_sym(a)) d *= l;
    return d;
}

enum class ConeKind { PSD, DetCone, ClosureComplement, DualTilde };

inline const char* to_string(ConeKind k)
{
    switch (k) {
    case ConeKind::PSD: return "PSD";
    case ConeKind::DetCone: return "DetCone";
    case ConeKind::ClosureComplement: return "ClosureComplement";
    case ConeKind::DualTilde: return "DualTilde";
    }
    return "?";
}

struct ConeSpec {
    ConeKind kind = ConeKind::PSD;
    double t = 0.0;
    int dim = 2;

    static ConeSpec psd(int dim) { return {ConeKind::PSD, 0.0, dim}; }
    static ConeSpec det_cone(double t, int dim) { return make(ConeKind::DetCone, t, dim); }
    static ConeSpec closure_complement(double t, int dim) { return make(ConeKind::ClosureComplement, t, dim); }
    static ConeSpec dual_tilde(double t, int dim) { return make(ConeKind::DualTilde, t, dim); }

    std::string name() const
    {
        std::string s = to_string(kind);
        if (kind != ConeKind::PSD) s += "(" + std::to_string(t) + ")";
        return s + "[n=" + std::to_string(dim) + "]";
    }

private:
    static ConeSpec make(ConeKind k, double t, int dim)
    {
        if (!(t > 0.0)) throw std::invalid_argument("ConeSpec: threshold t must be positive");
        if (dim < 1 || dim > 3) throw std::invalid_argument("ConeSpec: dimension must be 1, 2 or 3");
        return {k, t, dim};
    }
};

inline constexpr double kDefaultConeTol = 1e-9;

/// Tolerance-qualified membership; boundary matrices count as members.
inline bool cone_member(const SymMat& a, const ConeSpec& c, double tol = kDefaultConeTol)
{
    if (a.dim() != c.dim) throw std::invalid_argument("cone_member: matrix dimension does not match cone");
    if (tol < 0.0) throw std::invalid_argument("cone_member: tol must be non-negative");
    if (c.kind == ConeKind::DualTilde) return cone_member(-a, ConeSpec::closure_complement(c.t, c.dim), tol);

    const std::vector<double> ev = eig_sym(a);
    double det = 1.0;
    for (double l : ev) det *= l;
    const double min_ev = ev.front();
    switch (c.kind) {
    case ConeKind::PSD: return min_ev >= -tol;
    case ConeKind::DetCone: return min_ev >= -tol && det >= c.t - tol;
    case ConeKind::ClosureComplement: return min_ev <= tol || det <= c.t + tol;
    default: return false;
    }
}

namespace detail {

inline SymMat gaussian_sym(int n, std::mt19937_64& rng, double sigma = 1.0)
{
    std::normal_distribution<double> g(0.0, sigma);
    SymMat a(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) a.set(i, j, g(rng));
    return a;
}

// G^T G for a Gaussian n x n matrix G
inline SymMat gram_sample(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    SquareMat G;
    G.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = g(rng);
    SymMat a(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += G(k, i) * G(k, j);
            a.set(i, j, s);
        }
    return a;
}

inline SymMat sample_cone_rng(const ConeSpec& c, std::mt19937_64& rng)
{
    if (c.kind == ConeKind::PSD) {
        // exact PSD is not guaranteed by rounding; redraw until the spectrum confirms it
        for (;;) {
            SymMat a = gram_sample(c.dim, rng);
            if (cone_member(a, c, 0.0)) return a;
        }
    }
    if (c.kind == ConeKind::DetCone) {
        std::uniform_real_distribution<double> u(1.0, 10.0);
        for (;;) {
            SymMat a = gram_sample(c.dim, rng);
            const double d = det_sym(a);
            if (!(d > 1e-8) || eig_sym(a).front() <= 0.0) continue;
            const double target = c.t * u(rng);
            SymMat s = a * std::pow(target / d, 1.0 / c.dim);
            for (int k = 0; k < 8 && !cone_member(s, c, 0.0); ++k) s = s * (1.0 + 1e-15);
            if (cone_member(s, c, 0.0)) return s;
        }
    }
    throw std::invalid_argument("sample_cone: only PSD and DetCone can be sampled directly");
}

// Rejection sampler over Gaussian matrices at log-uniform scales.
inline SymMat sample_by_rejection(const ConeSpec& c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> logscale(-2.0, 2.0);
    for (;;) {
        const double sigma = std::pow(10.0, logscale(rng)) * std::pow(c.t > 0 ? c.t : 1.0, 1.0 / c.dim);
        SymMat a = gaussian_sym(c.dim, rng, sigma);
        if (cone_member(a, c, 0.0)) return a;
    }
}

inline SymMat sample_member(const ConeSpec& c, std::mt19937_64& rng)
{
    if (c.kind == ConeKind::PSD || c.kind == ConeKind::DetCone) return sample_cone_rng(c, rng);
    return sample_by_rejection(c, rng);
}

}  // namespace detail

/// Seeded draw from P or F_t.
inline SymMat sample_cone(const ConeSpec& c, std::uint64_t seed)
{
    if (c.kind != ConeKind::PSD && c.kind != ConeKind::DetCone)
        throw std::invalid_argument("sample_cone: only PSD and DetCone can be sampled directly");
    std::mt19937_64 rng(seed);
    return detail::sample_cone_rng(c, rng);
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline SquareMat random_orthogonal(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    for (;;) {
        SquareMat q;
        q.n = n;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            std::array<double, 3> v{};
            for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = g(rng);
            for (int k = 0; k < j; ++k) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += v[static_cast<std::size_t>(i)] * q(i, k);
                for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= d * q(i, k);
            }
            double nrm = 0.0;
            for (int i = 0; i < n; ++i) nrm += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
            nrm = std::sqrt(nrm);
            if (nrm < 1e-8) ok = false;
            for (int i = 0; i < n && ok; ++i) q(i, j) = v[static_cast<std::size_t>(i)] / nrm;
        }
        if (ok) return q;
    }
}

struct DirichletViolation {
    SymMat a;
    SymMat b;
};

struct InvarianceViolation {
    SymMat a;
    SquareMat m;
};

using MembershipRule = std::function<bool(const SymMat&, double)>;

inline constexpr double kDirichletTol = 1e-9;
inline constexpr double kInvarianceTol = 1e-7;

/// Every pair (A, B) with A in the rule, B in P, and A + B rejected.
inline std::vector<DirichletViolation> dirichlet_check(const MembershipRule& member,
                                                       std::span<const std::pair<SymMat, SymMat>> pairs,
                                                       double tol = kDirichletTol)
{
    std::vector<DirichletViolation> out;
    for (const auto& [a, b] : pairs)
        if (!member(a + b, tol)) out.push_back({a, b});
    return out;
}

inline std::vector<DirichletViolation> dirichlet_check(const ConeSpec& c, int sample_count, std::uint64_t seed)
{
    if (sample_count < 1) throw std::invalid_argument("dirichlet_check: sample_count must be >= 1");
    std::mt19937_64 rng(seed);
    const ConeSpec p = ConeSpec::psd(c.dim);
    std::vector<std::pair<SymMat, SymMat>> pairs;
    pairs.reserve(static_cast<std::size_t>(sample_count));
    for (int i = 0; i < sample_count; ++i) {
        SymMat a = detail::sample_member(c, rng);
        SymMat b = detail::sample_cone_rng(p, rng);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return dirichlet_check([&](const SymMat& x, double tol) { return cone_member(x, c, tol); }, pairs);
}

/// Every case where exact membership of A and of M^T A M disagree beyond tol.
inline std::vector<InvarianceViolation> invariance_check(const MembershipRule& member,
                                                         std::span<const std::pair<SymMat, SquareMat>> cases,
                                                         double tol = kInvarianceTol)
{
    std::vector<InvarianceViolation> out;
    for (const auto& [a, m] : cases) {
        const SymMat conj = a.conjugate(m);
        const bool lost = member(a, 0.0) && !member(conj, tol);
        const bool gained = member(conj, 0.0) && !member(a, tol);
        if (lost || gained) out.push_back({a, m});
    }
    return out;
}

inline std::vector<InvarianceViolation> invariance_check(const ConeSpec& c, int sample_count, std::uint64_t seed)
{
    if (sample_count < 1) throw std::invalid_argument("invariance_check: sample_count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<std::pair<SymMat, SquareMat>> cases;
    cases.reserve(static_cast<std::size_t>(sample_count));
    const double sigma = c.kind == ConeKind::PSD ? 1.0 : std::pow(c.t, 1.0 / c.dim);
    for (int i = 0; i < sample_count; ++i) {
        // alternate cone members with unconstrained matrices so both outcomes are exercised
        SymMat a = (i % 2 == 0) ? detail::sample_member(c, rng) : detail::gaussian_sym(c.dim, rng, sigma);
        cases.emplace_back(std::move(a), random_orthogonal(c.dim, rng));
    }
    return invariance_check([&](const SymMat& x, double tol) { return cone_member(x, c, tol); }, cases);
}

}  // namespace cgc
