#pragma once

#include "config.hpp"
#include "scenarios.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace wildscalar {

struct RunConfig {
    std::string command;
    ConstructionParams params;
    std::map<std::string, std::string> settings;  // config file overlaid by flags
    std::string config_path, input, output;
    int samples = 100;
    std::string state;
    int verbosity = 0;
};

namespace detail {

inline void write_text(const std::string& dir, const std::string& name, const std::string& body) {
    std::ofstream o(std::filesystem::path(dir) / name);
    if (!o) throw Error(ErrorKind::IoError, "cannot write " + (std::filesystem::path(dir) / name).string());
    o << body;
}

inline void prepare_out(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir + ": " + ec.message());
}

inline int finish(const DiagnosticsReport& r, std::ostream& out) {
    out << r.table();
    out << (r.all_pass() ? "all checks pass\n" : "some checks FAIL\n");
    return r.all_pass() ? 0 : 1;
}

inline int cmd_symbol_check(const RunConfig& rc, std::ostream& out) {
    SymbolPtr sym = resolve_symbol(rc.settings.count("symbol") ? rc.settings.at("symbol") : "pm2d");
    AdmissibilityReport a = check_admissibility(*sym, 1000, 1e-12);
    out << "symbol: " << sym->name << "\n";
    out << "even: " << (a.even ? "true" : "false") << "\n";
    out << "zero_homogeneous: " << (a.zero_homogeneous ? "true" : "false") << "\n";
    out << "tangent: " << (a.tangent ? "true" : "false") << "\n";
    DiagnosticsReport r = symbol_gate(*sym);
    if (!rc.output.empty()) {
        prepare_out(rc.output);
        write_text(rc.output, "symbol_check.csv", r.csv());
    }
    return finish(r, out);
}

inline int cmd_wave_build(const RunConfig& rc, std::ostream& out) {
    WavePacketSetup s;
    const auto& kv = rc.settings;
    if (kv.count("symbol")) s.symbol = kv.at("symbol");
    if (kv.count("grid")) {
        GridSpec g{2, s.nx, s.nt, s.T, false};
        parse_grid(kv.at("grid"), g);
        s.nx = g.nx;
        s.nt = g.nt;
    }
    if (kv.count("T")) s.T = parse_real("T", kv.at("T"));
    if (kv.count("lambda")) s.lambda = parse_real("lambda", kv.at("lambda"));
    if (kv.count("epsilon")) s.eps = parse_real("epsilon", kv.at("epsilon"));
    if (kv.count("delta0")) s.delta = parse_real("delta0", kv.at("delta0"));
    if (kv.count("cone_width")) s.cone_width = parse_real("cone_width", kv.at("cone_width"));
    if (kv.count("time_scheme")) s.scheme = rc.params.scheme;
    WavePacketOutcome w = wave_packet(s);
    out << "wave: symbol " << s.symbol << ", grid " << s.nx << "x" << s.nt << ", delta " << s.delta << ", order "
        << w.wave.report.truncation_order << ", " << w.seconds << " s\n";
    if (!rc.output.empty()) {
        prepare_out(rc.output);
        write_text(rc.output, "wave.csv", wave_csv_header() + "\n" + wave_csv_row(w.wave.report) + "\n");
        write_text(rc.output, "checks.csv", w.checks.csv());
        write_wsf1(w.wave.Z.data, (std::filesystem::path(rc.output) / "wave.wsf1").string());
    }
    return finish(w.checks, out);
}

inline int cmd_t4_solve(const RunConfig& rc, std::ostream& out) {
    Construction c = prepare(rc.params);
    if (!rc.state.empty()) {
        Vec v = parse_vec("state", rc.state);
        if (v.size() != 2 * c.screens.n() + 1) throw Error(ErrorKind::UsageError, "state needs 2n+1 entries");
        StateMatrix A = StateMatrix::from(v);
        T4Configuration cfg = t4_construct(A, c.screens);
        out << "|A - A0| = " << (A - c.screens.A0()).norm() << " (certified delta " << c.screens.delta << ")\n";
        for (int j = 0; j < 4; ++j)
            out << "T" << j + 1 << " = " << cfg.T[j].vec().transpose() << "  lambda = " << cfg.lambda[j] << "\n";
        return 0;
    }
    T4Sweep s = t4_sweep(c.screens, rc.samples, rc.params.seed);
    DiagnosticsReport r = t4_checks(s);
    if (!s.first_error.empty()) out << "first failure: " << s.first_error << "\n";
    if (!rc.output.empty()) {
        prepare_out(rc.output);
        write_text(rc.output, "t4.csv", r.csv());
    }
    return finish(r, out);
}

inline int cmd_integrate(const RunConfig& rc, std::ostream& out) {
    const std::string dir = rc.output.empty() ? "wildscalar_out" : rc.output;
    prepare_out(dir);
    auto t0 = std::chrono::steady_clock::now();
    Construction c = prepare(rc.params);
    StateField U = init_state(c);
    std::vector<StageReport> reps(1);
    observe(c, U, reps[0]);
    std::string csv = stage_csv_header() + "\n" + stage_csv_row(reps[0]) + "\n";
    for (int k = 1; k <= rc.params.stages; ++k) {
        StageResult sr = perturb_stage(c, U, k);
        U = std::move(sr.U);
        reps.push_back(sr.report);
        csv += stage_csv_row(sr.report) + "\n";
        if (rc.verbosity > 0)
            out << "stage " << k << ": gain " << sr.report.gain_ratio << ", mean dist " << sr.report.mean_dist << ", "
                << sr.report.wall_seconds << " s\n";
    }
    DiagnosticsReport r = stage_checks(reps);
    write_wsf1(U.data, (std::filesystem::path(dir) / "field.wsf1").string());
    write_text(dir, "stages.csv", csv);
    write_text(dir, "checks.csv", r.csv());
    std::ostringstream sum;
    sum << "symbol " << rc.params.symbol << ", grid " << rc.params.grid.nx << "^" << rc.params.grid.n << " x "
        << rc.params.grid.nt << ", T " << rc.params.grid.T << ", stages " << rc.params.stages << ", seed " << rc.params.seed
        << "\n\n";
    sum << "stage  mean_dist  gain_ratio  median_theta_gap  weak_residual  regions  branches\n";
    for (const auto& s : reps) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%5d  %9.4f  %10.4f  %16.4f  %13.4g  %7d  %s\n", s.stage, s.mean_dist, s.gain_ratio,
                      s.median_theta_gap, s.weak_residual, s.regions, s.branches.empty() ? "-" : s.branches.c_str());
        sum << buf;
    }
    sum << "\n" << r.table();
    write_text(dir, "summary.txt", sum.str());
    out << sum.str();
    out << "wrote " << dir << "/field.wsf1, stages.csv, checks.csv, summary.txt (" << seconds_since(t0) << " s)\n";
    return r.all_pass() ? 0 : 1;
}

inline int cmd_verify(const RunConfig& rc, std::ostream& out) {
    PhysicalField f = read_wsf1(rc.input);
    ConstructionParams p = rc.params;
    p.grid = f.grid;
    Construction c = prepare(p);
    if (f.channels != 2 * f.grid.n + 1)
        throw Error(ErrorKind::GridMismatch, "field has " + std::to_string(f.channels) + " channels, expected 2n+1");
    StateField U(f.grid, c.symbol);
    U.data = std::move(f);
    ConstraintOptions opt;
    opt.cones = c.cones;
    opt.t_lo = p.window_lo * p.grid.T;
    opt.t_hi = p.window_hi * p.grid.T;
    DiagnosticsReport r = constraint_report(U, opt);
    r.add("div_residual", divergence_residual_relative(U, p.scheme), 1e-8);
    const int n = p.grid.n;
    PhysicalField th = channel(U.data, 0), u(p.grid, n);
    for (int k = 0; k < n; ++k) {
        const double* src = U.data.at(U.u_channel(k), 0);
        std::copy(src, src + U.data.slice() * p.grid.nt, u.at(k, 0));
    }
    r.info("weak_residual", weak_form_residual(th, u, p.basket, p.seed));
    if (!rc.output.empty()) {
        prepare_out(rc.output);
        write_text(rc.output, "verify.csv", r.csv());
    }
    return finish(r, out);
}

inline bool usage_kind(ErrorKind k) {
    return k == ErrorKind::UsageError || k == ErrorKind::IoError || k == ErrorKind::PreconditionViolation ||
           k == ErrorKind::EtaTooLarge || k == ErrorKind::UnknownSymbol || k == ErrorKind::GridMismatch ||
           k == ErrorKind::ShapeMismatch;
}

}

// exit codes: 0 all checks pass, 1 a check failed, 2 usage error
inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"wildscalar: spectral convex-integration kit for active scalar equations"};
    app.require_subcommand(1);
    RunConfig rc;
    std::map<std::string, std::string> flags;

    auto setting = [&](CLI::App* s, const std::string& flag, const std::string& key, const std::string& help) {
        s->add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    auto common = [&](CLI::App* s) {
        s->add_option("--config", rc.config_path, "key = value config file (flags override it)");
        s->add_option("--out", rc.output, "output directory");
        s->add_flag("-v,--verbose", rc.verbosity, "more output");
        setting(s, "--seed", "seed", "RNG seed");
        setting(s, "--stages", "stages", "number of perturbation stages");
        setting(s, "--grid", "grid", "N_x or N_x x N_t, e.g. 64 or 64x32");
        setting(s, "--cone-width", "cone_width", "half-width of the Fourier cones (rad)");
        setting(s, "--eta", "eta", "cascade step eta");
        setting(s, "--steps", "steps", "cascade length N");
        setting(s, "--epsilon", "epsilon", "tolerance epsilon");
        setting(s, "--lambda", "lambda", "wave duty cycle lambda");
        setting(s, "--delta0", "delta0", "first-stage wavelength delta");
    };

    auto* sc = app.add_subcommand("symbol-check", "admissibility gate for a symbol");
    sc->add_option_function<std::string>("--name,--symbol", [&flags](const std::string& v) { flags["symbol"] = v; },
                                         "pm2d, pm3d, mg, sqg, or table:<path>");
    common(sc);
    auto* wb = app.add_subcommand("wave-build", "single localized plane wave and its property checks");
    setting(wb, "--symbol", "symbol", "symbol name");
    common(wb);
    auto* ts = app.add_subcommand("t4-solve", "T4 splits around A0, or of one state");
    setting(ts, "--symbol", "symbol", "symbol name");
    ts->add_option("--samples", rc.samples, "random states in B_{delta/2}(A0)")->check(CLI::PositiveNumber);
    ts->add_option("--state", rc.state, "comma list theta,q...,u... to split");
    common(ts);
    auto* in = app.add_subcommand("integrate", "staged perturbation run");
    setting(in, "--symbol", "symbol", "symbol name");
    common(in);
    auto* ve = app.add_subcommand("verify", "constraint and weak-form report for a WSF1 state field");
    setting(ve, "--symbol", "symbol", "symbol name");
    ve->add_option("--input", rc.input, "WSF1 file")->required();
    common(ve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        out << sub->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    }
    rc.command = app.get_subcommands().front()->get_name();

    try {
        if (!rc.config_path.empty()) rc.settings = read_key_values(rc.config_path);
        for (const auto& [k, v] : flags) rc.settings[k] = v;
        rc.params = params_from(rc.settings);
        if (rc.command == "symbol-check") return detail::cmd_symbol_check(rc, out);
        if (rc.command == "wave-build") return detail::cmd_wave_build(rc, out);
        rc.params.validate();
        if (rc.command == "t4-solve") return detail::cmd_t4_solve(rc, out);
        if (rc.command == "integrate") return detail::cmd_integrate(rc, out);
        return detail::cmd_verify(rc, out);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return detail::usage_kind(e.kind()) ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}
