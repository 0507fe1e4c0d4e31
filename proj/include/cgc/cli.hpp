#pragma once

// Config parsing, scenario dispatch and artifact writing for the cgc tool.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgc/bodies.hpp"
#include "cgc/mongeampere.hpp"
#include "cgc/perron2d.hpp"
#include "cgc/probe.hpp"
#include "cgc/symcone.hpp"

namespace cgc {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNonConvergence = 2, kExitViolations = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // [run]
    std::string command = "solve2d";
    std::uint64_t seed = 0;
    // [scenario]; dim 0 means no scenario (selftest only)
    int dim = 0;
    double R = 1.0;
    double alpha = 0.0;
    double z0 = 0.0;
    double t = 0.0;
    // [solver]
    int m = 720;
    int m_base = 180;
    int h_div = 32;
    int h_div_base = 8;
    int stencil_width = 2;
    double tol = 0.0;  // 0 = 1e-8 t
    int max_sweeps = 20000;
    int levels = 3;
    bool parallel = false;
    // [verify]
    double epsilon = 0.0;  // 0 = 0.05 t
    int points = 256;
    int samples = 256;
    int cone_samples = 10000;
    std::string body = "solution";
    double disk_radius = 1.0;
    std::string interior_only = "auto";
    // [output]
    bool svg = true;
    bool obj = true;
    bool csv = true;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string fmt_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline double parse_double(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s)
{
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("expected an integer, got '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
}

struct KeySpec {
    const char* section;
    const char* key;
    const char* fallback;  // default shown in --help
    const char* help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
KeySpec int_key(const char* sec, const char* key, const char* def, const char* help, T RunConfig::*f)
{
    return {sec, key, def, help, [f](RunConfig& c, const std::string& v) { c.*f = static_cast<T>(parse_int(v)); },
            [f](const RunConfig& c) { return std::to_string(c.*f); }};
}

inline KeySpec dbl_key(const char* sec, const char* key, const char* def, const char* help, double RunConfig::*f)
{
    return {sec, key, def, help, [f](RunConfig& c, const std::string& v) { c.*f = parse_double(v); },
            [f](const RunConfig& c) { return fmt_double(c.*f); }};
}

inline KeySpec bool_key(const char* sec, const char* key, const char* def, const char* help, bool RunConfig::*f)
{
    return {sec, key, def, help, [f](RunConfig& c, const std::string& v) { c.*f = parse_bool(v); },
            [f](const RunConfig& c) { return std::string(c.*f ? "true" : "false"); }};
}

inline KeySpec str_key(const char* sec, const char* key, const char* def, const char* help, std::string RunConfig::*f)
{
    return {sec, key, def, help, [f](RunConfig& c, const std::string& v) { c.*f = v; },
            [f](const RunConfig& c) { return c.*f; }};
}

inline const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table{
        str_key("run", "command", "solve2d", "solve2d | solve3d | verify | selftest | convergence", &RunConfig::command),
        int_key("run", "seed", "0", "seed for randomized checks", &RunConfig::seed),
        int_key("scenario", "dim", "(required)", "ambient dimension, 2 or 3", &RunConfig::dim),
        dbl_key("scenario", "R", "1", "radius of the ball K^ centered at the origin", &RunConfig::R),
        dbl_key("scenario", "alpha", "(dim 2)", "half-angle of the arc Omega = {|theta| < alpha}, radians", &RunConfig::alpha),
        dbl_key("scenario", "z0", "(dim 3)", "cap height, Omega = {z > z0} on the sphere", &RunConfig::z0),
        dbl_key("scenario", "t", "(required)", "target curvature, 0 < t <= R^-dim+1", &RunConfig::t),
        int_key("solver", "m", "720", "direction count of the 2D disk family", &RunConfig::m),
        int_key("solver", "m_base", "180", "coarsest m of a 2D convergence study", &RunConfig::m_base),
        int_key("solver", "h_div", "32", "3D grid spacing h = rho / h_div", &RunConfig::h_div),
        int_key("solver", "h_div_base", "8", "coarsest h_div of a 3D convergence study", &RunConfig::h_div_base),
        int_key("solver", "stencil_width", "2", "wide-stencil width, 1 or 2", &RunConfig::stencil_width),
        dbl_key("solver", "tol", "1e-8 t", "max-norm residual target", &RunConfig::tol),
        int_key("solver", "max_sweeps", "20000", "Gauss-Seidel sweep limit", &RunConfig::max_sweeps),
        int_key("solver", "levels", "3", "refinement levels of a convergence study (>= 3)", &RunConfig::levels),
        bool_key("solver", "parallel", "false", "colored multi-threaded sweeps", &RunConfig::parallel),
        dbl_key("verify", "epsilon", "0.05 t", "probe margin", &RunConfig::epsilon),
        int_key("verify", "points", "256", "boundary points probed", &RunConfig::points),
        int_key("verify", "samples", "256", "samples per probe region boundary", &RunConfig::samples),
        int_key("verify", "cone_samples", "10000", "samples per cone check in selftest", &RunConfig::cone_samples),
        str_key("verify", "body", "solution", "oracle | solution | disk | path to a stored body", &RunConfig::body),
        dbl_key("verify", "disk_radius", "1", "radius used by body=disk", &RunConfig::disk_radius),
        str_key("verify", "interior_only", "auto", "skip boundary points on the ball; auto, true or false",
                &RunConfig::interior_only),
        bool_key("output", "svg", "true", "write SVG overlays", &RunConfig::svg),
        bool_key("output", "obj", "true", "write the OBJ mesh", &RunConfig::obj),
        bool_key("output", "csv", "true", "write CSV height fields", &RunConfig::csv),
    };
    return table;
}

inline const KeySpec* find_key(const std::string& section, const std::string& key)
{
    for (const KeySpec& k : key_table())
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

inline bool is_command(const std::string& c)
{
    return c == "solve2d" || c == "solve3d" || c == "verify" || c == "selftest" || c == "convergence";
}

}  // namespace detail

/// Key reference for --help.
inline std::string config_help()
{
    std::ostringstream os;
    os << "Config file: sectioned key=value pairs, several per line allowed, '#' starts a comment.\n"
          "Keys before the first [section] belong to [scenario].\n";
    std::string sec;
    for (const auto& k : detail::key_table()) {
        if (sec != k.section) os << "\n[" << (sec = k.section) << "]\n";
        os << "  " << std::left << std::setw(14) << k.key << std::setw(12) << k.fallback << k.help << '\n';
    }
    os << "\nExit codes: 0 success, 1 config error, 2 solver non-convergence, 3 verification violations.\n"
          "CGC_OUT_ROOT, when set, prefixes relative --out directories.\n";
    return os.str();
}

/// Scenario described by a resolved config.
inline Scenario scenario_of(const RunConfig& c)
{
    return make_scenario(c.R, c.dim == 2 ? c.alpha : c.z0, c.t, c.dim);
}

/// Fills automatic values and checks semantic constraints.
inline RunConfig resolve(RunConfig c)
{
    if (!detail::is_command(c.command)) throw ConfigError("unknown command '" + c.command + "'");
    if (c.dim == 0 && c.command != "selftest") throw ConfigError("scenario: dim is required");
    if (c.dim == 0) {
        const RunConfig d;
        c.R = d.R, c.alpha = d.alpha, c.z0 = d.z0, c.t = d.t;
    }
    if (c.dim != 0) {
        if (c.dim != 2 && c.dim != 3) throw ConfigError("scenario: dim must be 2 or 3");
        if (!(c.t > 0.0)) throw ConfigError("scenario: t is required and must be positive");
        if (c.dim == 2 && c.z0 != 0.0) throw ConfigError("scenario: z0 applies to dim=3 only");
        if (c.dim == 3 && c.alpha != 0.0) throw ConfigError("scenario: alpha applies to dim=2 only");
        if (c.dim == 2 && c.alpha == 0.0) throw ConfigError("scenario: alpha is required for dim=2");
        try {
            scenario_of(c);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
        if (c.tol == 0.0) c.tol = 1e-8 * c.t;
        if (c.epsilon == 0.0) c.epsilon = 0.05 * c.t;
    }
    if (c.tol < 0.0) throw ConfigError("solver: tol must be positive");
    if (c.epsilon < 0.0) throw ConfigError("verify: epsilon must be positive");
    if (c.m < 16 || c.m_base < 16) throw ConfigError("solver: m and m_base must be at least 16");
    if (c.h_div < 8 || c.h_div_base < 8) throw ConfigError("solver: h_div and h_div_base must be at least 8");
    if (c.stencil_width != 1 && c.stencil_width != 2) throw ConfigError("solver: stencil_width must be 1 or 2");
    if (c.max_sweeps < 1) throw ConfigError("solver: max_sweeps must be positive");
    if (c.levels < 3) throw ConfigError("solver: levels must be at least 3");
    if (c.points < 1 || c.samples < 8 || c.cone_samples < 1)
        throw ConfigError("verify: points, samples and cone_samples must be positive (samples >= 8)");
    if (!(c.disk_radius > 0.0)) throw ConfigError("verify: disk_radius must be positive");
    if (c.interior_only == "auto") {
        c.interior_only = (c.body == "oracle" || c.body == "solution" || c.dim == 3) ? "true" : "false";
    } else if (c.interior_only != "true" && c.interior_only != "false") {
        throw ConfigError("verify: interior_only must be auto, true or false");
    }
    return c;
}

/// Parses config text; errors carry the line number.
inline RunConfig parse_config_text(const std::string& text, bool resolve_values = true)
{
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    std::string section = "scenario";
    int lineno = 0;
    static const std::regex spaced_eq(R"(\s*=\s*)");
    while (std::getline(in, line)) {
        ++lineno;
        const auto err = [&](const std::string& what) {
            return ConfigError("line " + std::to_string(lineno) + ": " + what);
        };
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = std::regex_replace(line, spaced_eq, "=");
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            if (tok.front() == '[') {
                if (tok.back() != ']' || tok.size() < 3) throw err("malformed section header '" + tok + "'");
                section = tok.substr(1, tok.size() - 2);
                if (section != "run" && section != "scenario" && section != "solver" && section != "verify" &&
                    section != "output")
                    throw err("unknown section [" + section + "]");
                continue;
            }
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size()) throw err("expected key=value, got '" + tok + "'");
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            const detail::KeySpec* spec = detail::find_key(section, key);
            if (!spec) throw err("unknown key '" + key + "' in [" + section + "]");
            try {
                spec->set(c, value);
            } catch (const ConfigError& e) {
                throw err(key + ": " + e.what());
            }
        }
    }
    return resolve_values ? resolve(c) : c;
}

inline RunConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

/// Re-parseable listing of every effective value.
inline std::string emit_config(const RunConfig& c)
{
    std::ostringstream os;
    std::string sec;
    for (const auto& k : detail::key_table()) {
        if (std::string(k.section) == "scenario") {
            if (c.dim == 0) continue;
            if (std::string(k.key) == "alpha" && c.dim != 2) continue;
            if (std::string(k.key) == "z0" && c.dim != 3) continue;
        }
        if (sec != k.section) os << (sec.empty() ? "" : "\n") << '[' << (sec = k.section) << "]\n";
        os << k.key << '=' << k.get(c) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Self-test suite

struct SelftestRow {
    std::string cone;
    std::string check;
    int samples = 0;
    std::size_t violations = 0;
    bool expect_violations = false;

    bool ok() const { return expect_violations ? violations > 0 : violations == 0; }
};

/// Dirichlet and invariance checks on the implemented cones plus two negative controls.
inline std::vector<SelftestRow> selftest_suite(std::uint64_t seed, int samples, std::vector<int> dims = {2, 3})
{
    std::vector<SelftestRow> rows;
    for (int n : dims) {
        std::vector<ConeSpec> cones{ConeSpec::psd(n)};
        for (double t : {0.25, 1.0, 4.0}) cones.push_back(ConeSpec::det_cone(t, n));
        for (double t : {0.25, 1.0, 4.0}) cones.push_back(ConeSpec::dual_tilde(t, n));
        for (const ConeSpec& c : cones) {
            rows.push_back({c.name(), "dirichlet", samples, dirichlet_check(c, samples, seed).size(), false});
            rows.push_back({c.name(), "invariance", samples, invariance_check(c, samples, seed + 1).size(), false});
        }
    }
    const MembershipRule det_only = [](const SymMat& a, double tol) { return det_sym(a) >= 1.0 - tol; };
    const std::pair<SymMat, SymMat> pair{SymMat::diag({-2.0, -2.0}), SymMat::diag({4.0, 0.0})};
    rows.push_back({"det>=1 without PSD", "dirichlet (control)", 1,
                    dirichlet_check(det_only, std::span(&pair, 1)).size(), true});
    const MembershipRule corner = [](const SymMat& a, double tol) { return a(0, 0) >= 1.0 - tol; };
    SquareMat rot = SquareMat::identity(2);
    rot(0, 0) = 0.0, rot(0, 1) = -1.0, rot(1, 0) = 1.0, rot(1, 1) = 0.0;
    const std::pair<SymMat, SquareMat> inv_case{SymMat::diag({2.0, 0.0}), rot};
    rows.push_back({"A11>=1", "invariance (control)", 1, invariance_check(corner, std::span(&inv_case, 1)).size(), true});
    return rows;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
    double resolution = 0.0;
    double error = 0.0;
    double ratio = 0.0;  // error of the previous row over this one; 0 on the first row
};

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows)
{
    std::ostringstream os;
    os << std::setprecision(12) << "resolution,error,ratio\n";
    for (const auto& r : rows) {
        os << r.resolution << ',' << r.error << ',';
        if (r.ratio > 0.0) os << r.ratio;
        os << '\n';
    }
    return os.str();
}

/// Geometric refinement against the closed-form oracle: m doubles in 2D, h halves in 3D.
inline std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg, int levels,
                                                     const std::function<void(const std::vector<ConvergenceRow>&)>& on_row = {})
{
    if (levels < 3) throw std::invalid_argument("convergence_study: need at least 3 levels");
    const Scenario s = scenario_of(cfg);
    std::vector<ConvergenceRow> rows;
    for (int k = 0; k < levels; ++k) {
        ConvergenceRow row;
        if (s.dim == 2) {
            const int m = cfg.m_base << k;
            row.resolution = m;
            row.error = hausdorff(perron_solve2d(s, static_cast<std::size_t>(m)), analytic_Kt(s));
        } else {
            const double h = s.rim_radius() / static_cast<double>(cfg.h_div_base << k);
            row.resolution = h;
            SolveOptions opt;
            opt.tol = cfg.tol;
            opt.max_sweeps = cfg.max_sweeps;
            opt.parallel = cfg.parallel;
            const SolveResult r = solve(build_patch(s, h), s.t, StencilSet::width(cfg.stencil_width), opt);
            row.error = compare_to_cap(r.patch, s).max_error;
        }
        if (!rows.empty()) row.ratio = rows.back().error / row.error;
        rows.push_back(row);
        if (on_row) on_row(rows);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Running

struct RunOutcome {
    int exit_code = kExitOk;
    std::vector<std::string> errors;
    std::vector<std::string> artifacts;
    std::vector<std::string> summary;  // short human-readable lines
};

namespace detail {

inline void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                       RunOutcome& out)
{
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
    out.artifacts.push_back(name);
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream f(p);
    if (!f) throw ConfigError("cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline SolveOptions solve_options(const RunConfig& c)
{
    SolveOptions o;
    o.tol = c.tol;
    o.max_sweeps = c.max_sweeps;
    o.parallel = c.parallel;
    return o;
}

inline std::string kv_csv(const std::vector<std::pair<std::string, double>>& rows)
{
    std::ostringstream os;
    os << std::setprecision(12) << "quantity,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
    return os.str();
}

inline void run_solve2d(const RunConfig& c, const std::filesystem::path& dir, RunOutcome& out)
{
    const Scenario s = scenario_of(c);
    const std::size_t m = static_cast<std::size_t>(c.m);
    const Body2D kt = perron_solve2d(s, m);
    const Body2D oracle = analytic_Kt(s);
    const Body2D khat = disk({0.0, 0.0}, s.R);
    const Body2D k0 = hull_k0_2d(s);
    const double hd = hausdorff(kt, oracle);
    const double tol = 2.0 * kTwoPi / static_cast<double>(m);
    const ContactTrace ct = contact_trace(kt, s, m);
    write_file(dir, "body.txt", to_piece_list(kt), out);
    write_file(dir, "oracle.txt", to_piece_list(oracle), out);
    if (c.svg) {
        const SvgLayer layers[] = {{&khat, "#888888", "ball"},
                                   {&k0, "#1f77b4", "hull of the fixed boundary"},
                                   {&oracle, "#2ca02c", "closed form"},
                                   {&kt, "#d62728", "computed body"}};
        write_file(dir, "overlay.svg", to_svg(layers, 1.1 * s.R), out);
    }
    write_file(dir, "report.csv",
               kv_csv({{"hausdorff_to_oracle", hd},
                       {"hausdorff_tolerance", tol},
                       {"contact_mismatch", ct.max_mismatch},
                       {"contact_tolerance", kTwoPi / static_cast<double>(m)},
                       {"area", kt.area()},
                       {"oracle_area", oracle.area()},
                       {"pieces", static_cast<double>(kt.pieces().size())}}),
               out);
    std::ostringstream os;
    os << "hausdorff to closed form " << hd << " (tolerance " << tol << "), contact mismatch " << ct.max_mismatch;
    out.summary.push_back(os.str());
}

inline void run_solve3d(const RunConfig& c, const std::filesystem::path& dir, RunOutcome& out)
{
    const Scenario s = scenario_of(c);
    const double h = s.rim_radius() / c.h_div;
    SolveResult r;
    try {
        r = solve(build_patch(s, h), s.t, StencilSet::width(c.stencil_width), solve_options(c));
    } catch (const NonConvergence& e) {
        write_file(dir, "history.csv", history_csv(e.history), out);
        throw;
    }
    write_file(dir, "history.csv", history_csv(r.history), out);
    if (c.csv) write_file(dir, "surface.csv", patch_csv(r.patch), out);
    if (c.obj) write_file(dir, "surface.obj", patch_obj(r.patch), out);
    const CapComparison cmp = compare_to_cap(r.patch, s);
    double above_ball = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < r.patch.nodes.size(); ++n) above_ball = std::max(above_ball, r.patch.obstacle[n] - r.patch.v[n]);
    write_file(dir, "report.csv",
               kv_csv({{"h", h},
                       {"nodes", static_cast<double>(r.patch.nodes.size())},
                       {"sweeps", static_cast<double>(r.sweeps)},
                       {"final_residual", r.history.back()},
                       {"apex", apex_height(r.patch)},
                       {"oracle_apex", cap_apex(s)},
                       {"max_error_to_cap", cmp.max_error},
                       {"min_second_difference", min_second_difference(r.patch, StencilSet::width(c.stencil_width))},
                       {"max_height_above_ball", above_ball}}),
               out);
    std::ostringstream os;
    os << "converged in " << r.sweeps << " sweeps, apex " << apex_height(r.patch) << " (closed form " << cap_apex(s)
       << "), max error " << cmp.max_error;
    out.summary.push_back(os.str());
}

inline void run_verify(const RunConfig& c, const std::filesystem::path& dir, RunOutcome& out)
{
    const Scenario s = scenario_of(c);
    ProbeGrid grid;
    grid.points = static_cast<std::size_t>(c.points);
    grid.region_samples = static_cast<std::size_t>(c.samples);
    ProbeReport f, fd;
    if (s.dim == 2) {
        Body2D body = [&] {
            if (c.body == "oracle") return analytic_Kt(s);
            if (c.body == "solution") return perron_solve2d(s, static_cast<std::size_t>(c.m));
            if (c.body == "disk") return disk({0.0, 0.0}, c.disk_radius);
            return parse_piece_list(read_file(c.body));
        }();
        if (c.interior_only == "true") {
            const double dtheta = kTwoPi / static_cast<double>(c.m);
            const double lim = s.R - std::max(1e-9 * s.R, 4.0 * s.R * dtheta * dtheta);
            grid.exclude = [lim](Vec3 q) { return std::hypot(q.x, q.y) >= lim; };
        }
        f = check_type_F(body, s.t, c.epsilon, grid);
        fd = check_type_F_dual(body, s.t, c.epsilon, grid);
    } else {
        GraphPatch patch = build_patch(s, s.rim_radius() / c.h_div);
        if (c.body == "oracle") {
            for (std::size_t n = 0; n < patch.nodes.size(); ++n) patch.v[n] = -cap_height(s, patch.nodes[n].x, patch.nodes[n].y);
        } else if (c.body == "solution") {
            patch = solve(std::move(patch), s.t, StencilSet::width(c.stencil_width), solve_options(c)).patch;
        } else if (c.body == "disk") {
            throw ConfigError("verify: body=disk applies to dim=2 only");
        } else {
            load_patch_csv(patch, read_file(c.body));
        }
        const double lim = patch.rho - 0.2 * s.R - 2.0 * patch.h;
        if (!(lim > 0.0)) throw ConfigError("verify: rim disk too small for the probe radius 0.2 R");
        grid.exclude = [lim](Vec3 q) { return std::hypot(q.x, q.y) > lim; };
        const HypographRegion region(patch, s.R);
        f = check_type_F(region, s.t, c.epsilon, grid);
        fd = check_type_F_dual(region, s.t, c.epsilon, grid);
    }
    write_file(dir, "violations.csv", report_csv(f, fd), out);
    write_file(dir, "report.csv",
               kv_csv({{"typeF_points_tested", static_cast<double>(f.points_tested)},
                       {"typeF_probes_tried", static_cast<double>(f.probes_tried)},
                       {"typeF_violations", static_cast<double>(f.violations.size())},
                       {"typeFdual_points_tested", static_cast<double>(fd.points_tested)},
                       {"typeFdual_probes_tried", static_cast<double>(fd.probes_tried)},
                       {"typeFdual_violations", static_cast<double>(fd.violations.size())}}),
               out);
    std::ostringstream os;
    os << "type F: " << f.violations.size() << " violations at " << f.points_tested << " points; type F': "
       << fd.violations.size() << " violations at " << fd.points_tested << " points";
    out.summary.push_back(os.str());
    if (!f.empty() || !fd.empty()) out.exit_code = kExitViolations;
}

inline void run_selftest(const RunConfig& c, const std::filesystem::path& dir, RunOutcome& out)
{
    const auto rows = selftest_suite(c.seed, c.cone_samples);
    std::ostringstream os;
    os << "cone,check,samples,violations,expected\n";
    std::size_t bad = 0;
    for (const auto& r : rows) {
        os << r.cone << ',' << r.check << ',' << r.samples << ',' << r.violations << ','
           << (r.expect_violations ? "some" : "none") << '\n';
        bad += r.ok() ? 0 : 1;
    }
    write_file(dir, "selftest.csv", os.str(), out);
    out.summary.push_back(std::to_string(rows.size() - bad) + " of " + std::to_string(rows.size()) + " cone checks as expected");
    if (bad) out.exit_code = kExitViolations;
}

inline void run_convergence(const RunConfig& c, const std::filesystem::path& dir, RunOutcome& out)
{
    const auto persist = [&](const std::vector<ConvergenceRow>& rows) {
        std::ofstream(dir / "convergence.csv", std::ios::binary) << convergence_csv(rows);
    };
    const auto rows = convergence_study(c, c.levels, persist);
    out.artifacts.push_back("convergence.csv");
    std::ostringstream os;
    os << "errors:";
    for (const auto& r : rows) os << ' ' << r.error;
    out.summary.push_back(os.str());
}

}  // namespace detail

/// Output directory after applying CGC_OUT_ROOT to relative paths.
inline std::filesystem::path resolve_out_dir(const std::filesystem::path& out)
{
    if (out.is_relative())
        if (const char* root = std::getenv("CGC_OUT_ROOT"); root && *root) return std::filesystem::path(root) / out;
    return out;
}

inline std::string manifest_text(const RunConfig* cfg, const RunOutcome& out, double wall_s)
{
    std::ostringstream os;
    os << "# cgc " << kVersion << " run manifest\n";
    os << "# compiler " << __VERSION__ << '\n';
    os << "# wall_time_s " << std::setprecision(6) << wall_s << '\n';
    os << "# exit_code " << out.exit_code << '\n';
    for (const auto& e : out.errors) os << "# error: " << e << '\n';
    for (const auto& a : out.artifacts) os << "# artifact: " << a << '\n';
    for (const auto& s : out.summary) os << "# summary: " << s << '\n';
    if (cfg) os << emit_config(*cfg);
    return os.str();
}

/// Executes cfg.command into dir and writes manifest.txt there.
inline RunOutcome run_scenario(const RunConfig& cfg, const std::filesystem::path& dir)
{
    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;
    std::filesystem::create_directories(dir);
    try {
        if (cfg.command == "solve2d") {
            if (cfg.dim != 2) throw ConfigError("solve2d needs dim=2");
            detail::run_solve2d(cfg, dir, out);
        } else if (cfg.command == "solve3d") {
            if (cfg.dim != 3) throw ConfigError("solve3d needs dim=3");
            detail::run_solve3d(cfg, dir, out);
        } else if (cfg.command == "verify") {
            detail::run_verify(cfg, dir, out);
        } else if (cfg.command == "selftest") {
            detail::run_selftest(cfg, dir, out);
        } else if (cfg.command == "convergence") {
            detail::run_convergence(cfg, dir, out);
        } else {
            throw ConfigError("unknown command '" + cfg.command + "'");
        }
    } catch (const NonConvergence& e) {
        out.exit_code = kExitNonConvergence;
        out.errors.push_back(e.what());
    } catch (const ConfigError& e) {
        out.exit_code = kExitConfig;
        out.errors.push_back(e.what());
    } catch (const std::invalid_argument& e) {
        out.exit_code = kExitConfig;
        out.errors.push_back(e.what());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(dir / "manifest.txt", std::ios::binary) << manifest_text(&cfg, out, wall);
    return out;
}

}  // namespace cgc
