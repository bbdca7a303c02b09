// Command-line driver: single runs, error-table reproduction, assumption
// audits, and stability queries for the 2D nonlocal inverse heat problem.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heatinv/fdsolver.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/report.hpp"
#include "heatinv/spectral.hpp"

namespace {

constexpr int kExitInvalidSpec = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitIo = 5;

struct CliOptions {
    int example = 1;
    std::string method = "uniform-trapezoid";
    int nx = 26;
    int ny = 26;
    long nt = 2700;
    int M = 25;
    int K = 25;
    double T = 0.0;
    std::string out;
    std::string config;
    bool emit_slices = false;
};

void add_spec_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--example", opt.example, "Example problem (1 or 2)");
    cmd->add_option("--method", opt.method,
                    "uniform-trapezoid | uniform-simpson | nonuniform-lobatto | "
                    "spectral-fixed-point");
    cmd->add_option("--nx", opt.nx, "x resolution");
    cmd->add_option("--ny", opt.ny, "y resolution");
    cmd->add_option("--nt", opt.nt, "time steps");
    cmd->add_option("--M", opt.M, "spectral truncation in m");
    cmd->add_option("--K", opt.K, "spectral truncation in k");
    cmd->add_option("--T", opt.T, "horizon override (default: the example's T)");
    cmd->add_option("--out", opt.out, "output directory for CSV/JSON");
    cmd->add_option("--config", opt.config, "flat key = value config file");
    cmd->add_flag("--emit-slices", opt.emit_slices, "write the u-slice CSV");
}

// Precedence: defaults < config file < explicit CLI flags < HEATINV_OUT
// only when nothing else set the output directory.
heatinv::report::RunSpec build_spec(const CLI::App* cmd, const CliOptions& opt) {
    heatinv::report::RunSpec spec;
    if (!opt.config.empty()) {
        auto kv = heatinv::report::parse_config_file(opt.config);
        heatinv::report::apply_config(spec, kv);
    }
    if (cmd->count("--example")) spec.example = opt.example;
    if (cmd->count("--method")) spec.method = heatinv::report::parse_method(opt.method);
    if (cmd->count("--nx")) spec.nx = opt.nx;
    if (cmd->count("--ny")) spec.ny = opt.ny;
    if (cmd->count("--nt")) spec.nt = opt.nt;
    if (cmd->count("--M")) spec.M = opt.M;
    if (cmd->count("--K")) spec.K = opt.K;
    if (cmd->count("--T")) spec.T = opt.T;
    if (cmd->count("--out")) spec.output_dir = opt.out;
    if (cmd->count("--emit-slices")) spec.emit_slices = opt.emit_slices;
    if (spec.output_dir.empty()) {
        if (const char* env = std::getenv("HEATINV_OUT")) {
            spec.output_dir = env;
        }
    }
    if (spec.example != 1 && spec.example != 2) {
        throw heatinv::InvalidArgumentError("example must be 1 or 2");
    }
    return spec;
}

int cmd_run(const CLI::App* cmd, const CliOptions& opt) {
    auto spec = build_spec(cmd, opt);
    auto rep = heatinv::report::run(spec);
    std::printf("example %d, %s, %dx%d, Nt=%ld\n", spec.example,
                heatinv::report::run_method_name(spec.method), spec.nx, spec.ny, spec.nt);
    std::printf("  u error (max, t=T):  %.6e\n", rep.u_error_max);
    std::printf("  p error (max, int.): %.6e\n", rep.p_error_max);
    std::printf("  r(0) = %.12f   stability margin = %.4f   wall = %ld ms\n", rep.r0,
                rep.stability_margin, rep.wall_ms);
    if (!spec.output_dir.empty()) {
        std::printf("  outputs in %s\n", spec.output_dir.c_str());
    }
    return 0;
}

int cmd_table(int example, const CLI::App* cmd, const CliOptions& opt) {
    std::string out = opt.out;
    if (!cmd->count("--out")) {
        if (const char* env = std::getenv("HEATINV_OUT")) {
            out = env;
        }
    }
    auto result = heatinv::report::table_reproduction(example, out);
    std::fputs(heatinv::report::format_table(result).c_str(), stdout);
    for (const auto& cell : result.cells) {
        if (!cell.ok) return kExitDivergence;
    }
    return 0;
}

int cmd_check(int example, const CliOptions& opt) {
    auto prob = example == 1 ? heatinv::problems::example1() : heatinv::problems::example2();
    heatinv::spectral::Truncation trunc{opt.M, opt.K};
    int nodes = std::max(64, 8 * std::max(2 * trunc.M, trunc.K));
    auto axis = heatinv::grid::lobatto_axis(nodes);
    auto rule = heatinv::quad::lobatto_rule(heatinv::grid::make_grid(axis, axis));
    auto tg = heatinv::grid::time_grid(prob.T, 100);
    auto report = heatinv::spectral::check_compatibility(prob, trunc, rule, tg);
    std::printf("compatibility audit: %s (M=%d, K=%d, %d-node Lobatto rule)\n",
                prob.label.c_str(), trunc.M, trunc.K, nodes + 1);
    for (const auto& c : report.checks) {
        std::printf("  [%s] %-22s value=% .6e  %s\n", c.passed ? "PASS" : "VIOLATED",
                    c.name.c_str(), c.value, c.detail.c_str());
    }
    std::printf("%d of %zu conditions violated (violations are warnings; the solvers run "
                "regardless)\n",
                report.violations(), report.checks.size());
    return 0;
}

int cmd_stability(const CLI::App* cmd, const CliOptions& opt) {
    auto spec = build_spec(cmd, opt);
    if (spec.method == heatinv::report::RunMethod::SpectralFixedPoint) {
        std::printf("spectral method has no explicit stability limit\n");
        return 0;
    }
    heatinv::fd::SolveConfig cfg;
    cfg.method = spec.method == heatinv::report::RunMethod::UniformTrapezoid
                     ? heatinv::fd::Method::UniformTrapezoid
                 : spec.method == heatinv::report::RunMethod::UniformSimpson
                     ? heatinv::fd::Method::UniformSimpson
                     : heatinv::fd::Method::NonUniformLobatto;
    cfg.nx = spec.nx;
    cfg.ny = spec.ny;
    auto g = heatinv::fd::build_grid(cfg);
    double ht_max = heatinv::fd::stability_limit(g);
    double T = spec.T > 0.0 ? spec.T : (spec.example == 1 ? 1.0 : 1.0 / 3.0);
    double ht = T / static_cast<double>(spec.nt);
    std::printf("%s %dx%d, example %d (T=%g):\n",
                heatinv::report::run_method_name(spec.method), spec.nx, spec.ny, spec.example, T);
    std::printf("  ht_max = %.6e   smallest stable Nt = %ld\n", ht_max,
                static_cast<long>(std::ceil(T / ht_max)));
    std::printf("  requested Nt=%ld -> ht = %.6e, margin ht/ht_max = %.4f (%s)\n", spec.nt, ht,
                ht / ht_max,
                ht <= ht_max * heatinv::fd::kStabilitySlack ? "admitted" : "refused by march");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D heat equation with nonlocal boundary: recovery of the time-dependent "
                 "reaction coefficient from total-energy data"};
    app.require_subcommand(1);

    CliOptions opt;
    int table_example = 1;
    int check_example = 1;

    CLI::App* c_run = app.add_subcommand("run", "run one configured experiment");
    add_spec_flags(c_run, opt);

    CLI::App* c_table =
        app.add_subcommand("table", "reproduce an error table with all three FD methods");
    c_table->add_option("example", table_example, "1 or 2")->required();
    c_table->add_option("--out", opt.out, "output directory for CSV/JSON");

    CLI::App* c_check = app.add_subcommand("check", "audit the theorem's assumptions");
    c_check->add_option("example", check_example, "1 or 2")->required();
    c_check->add_option("--M", opt.M, "truncation in m")->default_val(8);
    c_check->add_option("--K", opt.K, "truncation in k")->default_val(8);

    CLI::App* c_stab = app.add_subcommand("stability", "report the explicit stability limit");
    add_spec_flags(c_stab, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalidSpec;
    }

    try {
        if (c_run->parsed()) return cmd_run(c_run, opt);
        if (c_table->parsed()) {
            if (table_example != 1 && table_example != 2) {
                throw heatinv::InvalidArgumentError("table: example must be 1 or 2");
            }
            return cmd_table(table_example, c_table, opt);
        }
        if (c_check->parsed()) {
            if (check_example != 1 && check_example != 2) {
                throw heatinv::InvalidArgumentError("check: example must be 1 or 2");
            }
            return cmd_check(check_example, opt);
        }
        if (c_stab->parsed()) return cmd_stability(c_stab, opt);
    } catch (const heatinv::UnstableConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUnstable;
    } catch (const heatinv::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const heatinv::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const heatinv::InvalidArgumentError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidSpec;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidSpec;
    }
    return 0;
}
