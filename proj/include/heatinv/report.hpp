#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatinv/errors.hpp"
#include "heatinv/fdsolver.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/spectral.hpp"

namespace heatinv::report {

enum class RunMethod { UniformTrapezoid, UniformSimpson, NonUniformLobatto, SpectralFixedPoint };

inline const char* run_method_name(RunMethod m) {
    switch (m) {
        case RunMethod::UniformTrapezoid:
            return "uniform-trapezoid";
        case RunMethod::UniformSimpson:
            return "uniform-simpson";
        case RunMethod::NonUniformLobatto:
            return "nonuniform-lobatto";
        case RunMethod::SpectralFixedPoint:
            return "spectral-fixed-point";
    }
    return "?";
}

inline RunMethod parse_method(const std::string& s) {
    if (s == "uniform-trapezoid" || s == "trapezoid" || s == "trap") {
        return RunMethod::UniformTrapezoid;
    }
    if (s == "uniform-simpson" || s == "simpson") {
        return RunMethod::UniformSimpson;
    }
    if (s == "nonuniform-lobatto" || s == "lobatto") {
        return RunMethod::NonUniformLobatto;
    }
    if (s == "spectral-fixed-point" || s == "spectral") {
        return RunMethod::SpectralFixedPoint;
    }
    throw InvalidArgumentError("unknown method '" + s + "'");
}

struct RunSpec {
    int example = 1;  // 1 or 2
    RunMethod method = RunMethod::UniformTrapezoid;
    int nx = 26;
    int ny = 26;
    long nt = 2700;
    int M = 25;        // spectral truncation, SpectralFixedPoint only
    int K = 25;
    double T = 0.0;    // horizon override; 0 keeps the example's own T
    std::string output_dir;  // empty: write nothing
    bool emit_slices = false;
};

struct ErrorReport {
    double u_error_max = 0.0;
    double p_error_max = 0.0;
    double r0 = 0.0;
    double stability_margin = 0.0;
    long wall_ms = 0;
    RunSpec spec;
};

/// Max absolute difference between two equally shaped arrays.
inline double error_max(const Array2D& a, const Array2D& b) {
    if (a.nx() != b.nx() || a.ny() != b.ny()) {
        throw InvalidArgumentError("error_max: shape mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

inline double error_max(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw InvalidArgumentError("error_max: length mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline problems::ProblemData problem_for(int example) {
    if (example == 1) return problems::example1();
    if (example == 2) return problems::example2();
    throw InvalidArgumentError("example must be 1 or 2, got " + std::to_string(example));
}

inline std::string file_stem(const RunSpec& spec) {
    return "ex" + std::to_string(spec.example) + "_" + run_method_name(spec.method);
}

inline void ensure_writable_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    }
    fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream out(probe);
    if (!out) {
        throw IoError("output directory '" + dir + "' is not writable");
    }
    out.close();
    fs::remove(probe, ec);
}

inline void write_p_trace(const std::string& path, const grid::TimeGrid& tg,
                          const std::vector<double>& p,
                          const std::function<double(double)>& p_exact) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << "t,p_approx,p_exact,abs_err\n";
    for (long n = 0; n <= tg.step_count; ++n) {
        double t = tg.t(n);
        double pe = p_exact ? p_exact(t) : std::numeric_limits<double>::quiet_NaN();
        out << fmt17(t) << ',' << fmt17(p[n]) << ',' << fmt17(pe) << ','
            << fmt17(std::abs(p[n] - pe)) << '\n';
    }
}

inline void write_u_slice(const std::string& path, const std::vector<double>& xs,
                          const std::vector<double>& ys, const Array2D& u, double T,
                          const std::function<double(double, double, double)>& u_exact) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << "x,y,u_approx,u_exact,abs_err\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            double ue =
                u_exact ? u_exact(xs[i], ys[j], T) : std::numeric_limits<double>::quiet_NaN();
            out << fmt17(xs[i]) << ',' << fmt17(ys[j]) << ',' << fmt17(u(i, j)) << ','
                << fmt17(ue) << ',' << fmt17(std::abs(u(i, j) - ue)) << '\n';
        }
    }
}

inline nlohmann::ordered_json to_json(const ErrorReport& rep) {
    nlohmann::ordered_json j;
    j["example"] = rep.spec.example;
    j["method"] = run_method_name(rep.spec.method);
    j["nx"] = rep.spec.nx;
    j["ny"] = rep.spec.ny;
    j["nt"] = rep.spec.nt;
    if (rep.spec.method == RunMethod::SpectralFixedPoint) {
        j["M"] = rep.spec.M;
        j["K"] = rep.spec.K;
    }
    if (rep.spec.T > 0.0) {
        j["T"] = rep.spec.T;
    }
    j["u_error_max"] = rep.u_error_max;
    j["p_error_max"] = rep.p_error_max;
    j["r0"] = rep.r0;
    j["stability_margin"] = rep.stability_margin;
    j["wall_ms"] = rep.wall_ms;
    return j;
}

inline void write_summary(const std::string& path, const ErrorReport& rep) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << to_json(rep).dump(2) << '\n';
}

}  // namespace detail

/// Interior-grid max error of the recovered p against the exact one
/// (endpoints excluded: one-sided differencing of ln r degrades them).
inline double p_error_interior(const std::vector<double>& p, const grid::TimeGrid& tg,
                               const std::function<double(double)>& p_exact) {
    double worst = 0.0;
    for (long n = 1; n < tg.step_count; ++n) {
        worst = std::max(worst, std::abs(p[n] - p_exact(tg.t(n))));
    }
    return worst;
}

/// Execute one configured experiment and emit its outputs.
inline ErrorReport run(const RunSpec& spec) {
    problems::ProblemData prob = detail::problem_for(spec.example);
    if (spec.T > 0.0) {
        prob.T = spec.T;
    }
    grid::TimeGrid tg = grid::time_grid(prob.T, spec.nt);
    if (!spec.output_dir.empty()) {
        detail::ensure_writable_dir(spec.output_dir);
    }

    ErrorReport rep;
    rep.spec = spec;

    std::vector<double> xs, ys;
    Array2D u_final;
    std::vector<double> p_samples;

    if (spec.method == RunMethod::SpectralFixedPoint) {
        auto t0 = std::chrono::steady_clock::now();
        grid::Grid2D qg =
            grid::make_grid(grid::lobatto_axis(spec.nx), grid::lobatto_axis(spec.ny));
        quad::ProductRule rule = quad::lobatto_rule(qg);
        spectral::Truncation trunc{spec.M, spec.K};
        spectral::CoefficientTable table = spectral::expand(prob, trunc, rule, tg);
        spectral::EData e = spectral::sample_E(prob, tg);
        spectral::InverseResult inv = spectral::solve_inverse(table, e, 1e-6, 100);
        if (!inv.converged) {
            throw DivergenceError("spectral fixed point did not converge; last residual " +
                                      std::to_string(inv.residual),
                                  inv.iterations);
        }
        p_samples = inv.p.samples;
        // evaluate the series on a fixed sample lattice at the final time
        const int ns = 21;
        xs.resize(ns);
        ys.resize(ns);
        for (int i = 0; i < ns; ++i) {
            xs[i] = static_cast<double>(i) / (ns - 1);
            ys[i] = xs[i];
        }
        u_final = spectral::series_solution_grid(inv.p, table, xs, ys, tg.step_count);
        rep.r0 = 1.0;  // r(0) = exp(0) by definition of the transform
        rep.stability_margin = 0.0;
        rep.wall_ms = static_cast<long>(std::chrono::duration<double, std::milli>(
                                            std::chrono::steady_clock::now() - t0)
                                            .count());
    } else {
        fd::SolveConfig cfg;
        cfg.method = spec.method == RunMethod::UniformTrapezoid ? fd::Method::UniformTrapezoid
                     : spec.method == RunMethod::UniformSimpson ? fd::Method::UniformSimpson
                                                                : fd::Method::NonUniformLobatto;
        cfg.nx = spec.nx;
        cfg.ny = spec.ny;
        cfg.time_grid = tg;
        fd::SolveResult sol = fd::march(prob, cfg);
        grid::Grid2D g = fd::build_grid(cfg);
        xs = g.x.nodes;
        ys = g.y.nodes;
        u_final = std::move(sol.u_final);
        p_samples = std::move(sol.p_samples);
        rep.r0 = sol.r_samples[0];
        rep.stability_margin = sol.stability_margin;
        rep.wall_ms = static_cast<long>(sol.wall_ms);
    }

    if (prob.exact_u) {
        Array2D u_exact(xs.size(), ys.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ys.size(); ++j) {
                u_exact(i, j) = prob.exact_u(xs[i], ys[j], prob.T);
            }
        }
        rep.u_error_max = error_max(u_final, u_exact);
    } else {
        rep.u_error_max = std::numeric_limits<double>::quiet_NaN();
    }
    rep.p_error_max = prob.exact_p ? p_error_interior(p_samples, tg, prob.exact_p)
                                   : std::numeric_limits<double>::quiet_NaN();

    if (!spec.output_dir.empty()) {
        namespace fs = std::filesystem;
        std::string stem = detail::file_stem(spec);
        detail::write_p_trace((fs::path(spec.output_dir) / (stem + "_p.csv")).string(), tg,
                              p_samples, prob.exact_p);
        if (spec.emit_slices) {
            detail::write_u_slice((fs::path(spec.output_dir) / (stem + "_u.csv")).string(), xs,
                                  ys, u_final, prob.T, prob.exact_u);
        }
        detail::write_summary((fs::path(spec.output_dir) / (stem + "_summary.json")).string(),
                              rep);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Table reproduction
// ---------------------------------------------------------------------------

struct TableCell {
    bool ok = false;
    double u_error = 0.0;
    double p_error = 0.0;
    double u_ref = 0.0;
    double p_ref = 0.0;
    std::string message;  // failure reason when !ok
};

struct TableResult {
    int example = 1;
    // order: trapezoid, simpson, lobatto
    std::array<TableCell, 3> cells;
};

/// Reference error values of the reproduced tables, by example and method.
inline const std::array<std::array<double, 3>, 2>& table_u_refs() {
    static const std::array<std::array<double, 3>, 2> refs = {
        {{0.0017, 0.0012, 1.1715e-4}, {4.1218e-4, 3.8541e-4, 1.9697e-4}}};
    return refs;
}

inline const std::array<std::array<double, 3>, 2>& table_p_refs() {
    static const std::array<std::array<double, 3>, 2> refs = {
        {{0.0609, 0.0724, 0.0059}, {0.3114, 0.2113, 0.0196}}};
    return refs;
}

inline long table_nt(int example, RunMethod m) {
    if (example == 1) {
        return m == RunMethod::NonUniformLobatto ? 147000 : 2700;
    }
    return m == RunMethod::NonUniformLobatto ? 49000 : 900;
}

/// Run the three finite-difference methods at the reference resolutions
/// (concurrently; they share nothing) and collect errors next to the
/// reference values. A failing sub-run marks its cell and the rest proceed.
inline TableResult table_reproduction(int example, const std::string& output_dir = "") {
    const std::array<RunMethod, 3> methods = {
        RunMethod::UniformTrapezoid, RunMethod::UniformSimpson, RunMethod::NonUniformLobatto};
    TableResult result;
    result.example = example;

    std::array<std::future<ErrorReport>, 3> futures;
    for (int i = 0; i < 3; ++i) {
        RunSpec spec;
        spec.example = example;
        spec.method = methods[i];
        spec.nx = spec.ny = 26;
        spec.nt = table_nt(example, methods[i]);
        spec.output_dir = output_dir;
        spec.emit_slices = !output_dir.empty();
        futures[i] = std::async(std::launch::async, [spec] { return run(spec); });
    }
    for (int i = 0; i < 3; ++i) {
        TableCell& cell = result.cells[i];
        cell.u_ref = table_u_refs()[example - 1][i];
        cell.p_ref = table_p_refs()[example - 1][i];
        try {
            ErrorReport rep = futures[i].get();
            cell.ok = true;
            cell.u_error = rep.u_error_max;
            cell.p_error = rep.p_error_max;
        } catch (const std::exception& ex) {
            cell.ok = false;
            cell.message = ex.what();
        }
    }
    return result;
}

/// Text rendering of a reproduced table, shaped like the original plus
/// reference and ratio columns.
inline std::string format_table(const TableResult& t) {
    std::ostringstream os;
    const char* headers[3] = {"Trapezoidal", "Simpson's", "Non-uniform"};
    os << "Example " << t.example << " (nx=ny=26, Nt="
       << table_nt(t.example, RunMethod::UniformTrapezoid) << " uniform / "
       << table_nt(t.example, RunMethod::NonUniformLobatto) << " non-uniform)\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %14s %14s %14s %10s\n", "", "error", "reference",
                  "ratio", "status");
    for (int row = 0; row < 2; ++row) {
        os << (row == 0 ? "u(x,y,T):\n" : "p(t):\n");
        for (int i = 0; i < 3; ++i) {
            const TableCell& c = t.cells[i];
            double err = row == 0 ? c.u_error : c.p_error;
            double ref = row == 0 ? c.u_ref : c.p_ref;
            if (c.ok) {
                std::snprintf(buf, sizeof(buf), "  %-12s %12.5e   ref %10.4e   ratio %6.3f\n",
                              headers[i], err, ref, err / ref);
            } else {
                std::snprintf(buf, sizeof(buf), "  %-12s FAILED: %s\n", headers[i],
                              c.message.c_str());
            }
            os << buf;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Flat key = value configuration files
// ---------------------------------------------------------------------------

/// Parse a flat `key = value` file ('#' starts a comment). Later keys win.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config file '" + path + "'");
    }
    std::map<std::string, std::string> kv;
    std::string line;
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgumentError("config '" + path + "' line " + std::to_string(lineno) +
                                       ": expected key = value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

/// Apply config-file values onto a spec; keys absent in the file keep their
/// current (default or CLI-provided) values.
inline void apply_config(RunSpec& spec, const std::map<std::string, std::string>& kv) {
    auto geti = [&](const char* key, auto& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        try {
            out = static_cast<std::decay_t<decltype(out)>>(std::stol(it->second));
        } catch (...) {
            throw InvalidArgumentError(std::string("config: bad integer for '") + key + "': " +
                                       it->second);
        }
    };
    geti("example", spec.example);
    geti("nx", spec.nx);
    geti("ny", spec.ny);
    geti("nt", spec.nt);
    geti("M", spec.M);
    geti("K", spec.K);
    if (auto it = kv.find("T"); it != kv.end()) {
        try {
            spec.T = std::stod(it->second);
        } catch (...) {
            throw InvalidArgumentError("config: bad number for 'T': " + it->second);
        }
    }
    if (auto it = kv.find("method"); it != kv.end()) {
        spec.method = parse_method(it->second);
    }
    if (auto it = kv.find("out"); it != kv.end()) {
        spec.output_dir = it->second;
    }
    if (auto it = kv.find("emit_slices"); it != kv.end()) {
        spec.emit_slices = (it->second == "true" || it->second == "1" || it->second == "yes");
    }
    for (const auto& [key, value] : kv) {
        static const std::set<std::string> known = {"example", "nx", "ny",     "nt",    "M",
                                                    "K",       "T",  "method", "out",
                                                    "emit_slices"};
        if (!known.count(key)) {
            throw InvalidArgumentError("config: unknown key '" + key + "'");
        }
    }
}

}  // namespace heatinv::report
