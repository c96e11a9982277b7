// Configuration-driven front end: every result here is reproducible through
// direct library calls with the same values.
#include "oncolyap/json_io.hpp"
#include "oncolyap/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace oncolyap;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    bool plot = false;
    bool require_certificate = false;
    std::optional<uint64_t> seed;
    std::optional<Tolerances> tol;
};

void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DomainError("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw DomainError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

Json load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("config: cannot open " + path);
    try {
        return Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("config: " + std::string(e.what()));
    }
}

const Json& require_block(const Json& cfg, const std::string& name) {
    if (!cfg.contains(name))
        throw DomainError("config: missing block \"" + name + "\"");
    return cfg.at(name);
}

ModelParams config_params(const Json& cfg) {
    return params_from_json(require_block(cfg, "params"));
}

DrugSchedule config_schedule(const Json& cfg) {
    if (!cfg.contains("schedule")) return DrugSchedule::zero();
    return schedule_from_json(cfg.at("schedule"));
}

Tolerances resolve_tol(const Json& block, const GlobalArgs& g, Tolerances fallback) {
    Tolerances t = fallback;
    if (block.contains("tol")) {
        const Json& jt = block.at("tol");
        reject_unknown_keys(jt, {"abs", "rel"}, "tol");
        t.abs = require_number(jt, "abs", "tol");
        t.rel = require_number(jt, "rel", "tol");
    }
    if (g.tol) t = *g.tol;
    if (!(t.abs > 0) || !(t.rel > 0))
        throw DomainError("tol: tolerances must be positive");
    return t;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    ModelParams params = config_params(cfg);
    DrugSchedule schedule = config_schedule(cfg);
    const Json& b = require_block(cfg, "simulate");
    reject_unknown_keys(b, {"initial", "u0", "span", "tol"}, "simulate");

    Eigen::Vector3d x0 = require_vec3(b, "initial", "simulate");
    double u0 = b.contains("u0") ? require_number(b, "u0", "simulate") : 0.0;
    if (!b.contains("span") || !b.at("span").is_array() || b.at("span").size() != 2 ||
        !b.at("span")[0].is_number() || !b.at("span")[1].is_number())
        throw DomainError("simulate.span: expected [t0, tf]");
    double t0 = b.at("span")[0].get<double>();
    double tf = b.at("span")[1].get<double>();

    IntegrateOptions io;
    io.tol = resolve_tol(b, g, Tolerances{});
    Trajectory traj =
        integrate(SystemState::from(x0, u0), params, schedule, t0, tf, io);

    write_atomic(out / "trajectory.csv", trajectory_csv(traj));
    if (g.plot) write_atomic(out / "trajectory.svg", trajectory_svg(traj));
    return 0;
}

int cmd_stability(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    (void)g;
    ModelParams params = config_params(cfg);
    const Json& b = require_block(cfg, "stability");
    reject_unknown_keys(b, {"v_bar"}, "stability");
    if (!b.contains("v_bar") || !b.at("v_bar").is_array() || b.at("v_bar").empty())
        throw DomainError("stability.v_bar: expected a non-empty array of dose levels");

    Json outj = Json::array();
    for (const Json& jv : b.at("v_bar")) {
        if (!jv.is_number())
            throw DomainError("stability.v_bar: expected a number");
        double vb = jv.get<double>();
        Json entry;
        entry["v_bar"] = vb;
        Json eqs = Json::array();
        for (const Equilibrium& e : boundary_equilibria(params, vb)) {
            Json je = equilibrium_to_json(e);
            if (e.feasible)
                je["report"] = stability_report_to_json(classify(e, params, vb));
            else
                je["report"] = nullptr;
            eqs.push_back(je);
        }
        entry["equilibria"] = eqs;
        entry["audit"] = hypothesis_audit_to_json(check_hypotheses(params, vb));
        outj.push_back(entry);
    }
    write_atomic(out / "stability.json", dump(outj));
    return 0;
}

int cmd_lyapunov(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    ModelParams params = config_params(cfg);
    const Json& b = require_block(cfg, "lyapunov");
    reject_unknown_keys(b, {"v_bar", "box", "budget", "eps_inner", "seed"},
                        "lyapunov");
    double vb = require_number(b, "v_bar", "lyapunov");

    CertificateOptions co;
    co.K = require_vec3(b, "box", "lyapunov");
    if (b.contains("budget"))
        co.budget = static_cast<long>(require_number(b, "budget", "lyapunov"));
    if (b.contains("eps_inner"))
        co.eps_inner = require_number(b, "eps_inner", "lyapunov");
    if (b.contains("seed"))
        co.seed = static_cast<uint64_t>(require_number(b, "seed", "lyapunov"));
    if (g.seed) co.seed = *g.seed;
    co.parallel = false;  // only basin/sweep fan out workers

    Json certs = Json::array();
    Json fails = Json::array();
    for (const Equilibrium& e : boundary_equilibria(params, vb)) {
        if (!e.feasible) continue;
        try {
            certs.push_back(certificate_to_json(build_certificate(e, params, vb, co)));
        } catch (const Error& err) {
            fails.push_back(Json{{"equilibrium", e.id()}, {"error", err.what()}});
        }
    }
    Json outj;
    outj["v_bar"] = vb;
    outj["certificates"] = certs;
    outj["failures"] = fails;
    write_atomic(out / "lyapunov.json", dump(outj));

    if (certs.empty()) return 3;
    if (g.require_certificate && !fails.empty()) return 3;
    return 0;
}

int cmd_basin(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    ModelParams params = config_params(cfg);
    DrugSchedule schedule = config_schedule(cfg);
    const Json& b = require_block(cfg, "basin");
    reject_unknown_keys(b,
                        {"domain", "n", "seed", "horizon", "eps_conv", "mode",
                         "u0", "slice_n", "slice_x3", "budget"},
                        "basin");

    Box3 domain = box_from_json(require_block(b, "domain"));
    BasinOptions bo;
    if (b.contains("n"))
        bo.n = static_cast<long>(require_number(b, "n", "basin"));
    if (b.contains("seed"))
        bo.seed = static_cast<uint64_t>(require_number(b, "seed", "basin"));
    if (g.seed) bo.seed = *g.seed;
    if (b.contains("horizon")) bo.horizon = require_number(b, "horizon", "basin");
    if (b.contains("eps_conv")) bo.eps_conv = require_number(b, "eps_conv", "basin");
    if (b.contains("u0")) bo.u0 = require_number(b, "u0", "basin");
    if (b.contains("mode")) {
        if (!b.at("mode").is_string())
            throw DomainError("basin.mode: expected \"grid\" or \"random\"");
        std::string m = b.at("mode").get<std::string>();
        if (m == "grid")
            bo.mode = SamplingMode::Grid;
        else if (m == "random")
            bo.mode = SamplingMode::Random;
        else
            throw DomainError("basin.mode: expected \"grid\" or \"random\"");
    }
    if (g.tol) bo.tol = *g.tol;

    BasinEstimate est = map_basin(params, schedule, domain, bo);
    write_atomic(out / "basin.csv", basin_csv(est));

    // quadratic certificates for every locally stable candidate, checked
    // against the empirical map
    double v_term = schedule.terminal_level();
    CertificateOptions co;
    co.K = domain.hi;
    if (b.contains("budget"))
        co.budget = static_cast<long>(require_number(b, "budget", "basin"));
    Json jcerts = Json::array();
    Json jfails = Json::array();
    for (const Equilibrium& e : boundary_equilibria(params, v_term)) {
        if (!e.feasible) continue;
        if (classify(e, params, v_term).label != StabilityLabel::Stable) continue;
        try {
            LyapunovCertificate cert = build_certificate(e, params, v_term, co);
            Json jc;
            jc["certificate"] = certificate_to_json(cert);
            try {
                jc["containment"] = containment_to_json(containment_report(cert, est));
            } catch (const Error& err) {
                jc["containment"] = Json{{"error", err.what()}};
            }
            jcerts.push_back(jc);
        } catch (const Error& err) {
            jfails.push_back(Json{{"equilibrium", e.id()}, {"error", err.what()}});
        }
    }
    Json outj;
    outj["estimate"] = basin_summary_to_json(est);
    outj["certificates"] = jcerts;
    outj["certificate_failures"] = jfails;
    write_atomic(out / "basin.json", dump(outj));

    // raster over a plane of fixed x3, reusing the exact mapping pipeline
    long slice_n = 33;
    if (b.contains("slice_n"))
        slice_n = static_cast<long>(require_number(b, "slice_n", "basin"));
    if (slice_n < 1) throw DomainError("basin.slice_n: must be >= 1");
    double slice_x3 = 0.5 * (domain.lo[2] + domain.hi[2]);
    if (b.contains("slice_x3")) slice_x3 = require_number(b, "slice_x3", "basin");
    Box3 sdom = domain;
    sdom.lo[2] = sdom.hi[2] = slice_x3;
    BasinOptions so = bo;
    so.mode = SamplingMode::Grid;
    so.grid_dims = {slice_n, slice_n, 1};
    BasinEstimate sest = map_basin(params, schedule, sdom, so);
    write_atomic(out / "slice.csv", basin_csv(sest));
    if (g.plot) write_atomic(out / "slice.svg", slice_svg(sest, slice_n, slice_n));

    if (g.require_certificate && (jcerts.empty() || !jfails.empty())) return 3;
    return 0;
}

int cmd_multipoint(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    ModelParams params = config_params(cfg);
    DrugSchedule schedule = config_schedule(cfg);
    const Json& b = require_block(cfg, "multipoint");
    reject_unknown_keys(b, {"spec", "tol", "max_iter", "region"}, "multipoint");

    MultipointSpec spec = multipoint_spec_from_json(require_block(b, "spec"));
    double tol = b.contains("tol") ? require_number(b, "tol", "multipoint") : 1e-12;
    if (g.tol) tol = g.tol->abs;
    int picard_iters = 100, newton_iters = 50;
    if (b.contains("max_iter")) {
        int mi = static_cast<int>(require_number(b, "max_iter", "multipoint"));
        picard_iters = newton_iters = mi;
    }
    Box3 region{Eigen::Vector3d::Zero(), Eigen::Vector3d(2, 2, 2)};
    if (b.contains("region")) region = box_from_json(b.at("region"));

    Json outj;
    bool ok = false;
    try {
        outj["picard"] = multipoint_solution_to_json(
            solve_picard(spec, params, schedule, tol, picard_iters));
        ok = true;
    } catch (const Error& e) {
        outj["picard"] = Json{{"error", e.what()}};
    }
    try {
        outj["newton"] = multipoint_solution_to_json(
            solve_newton(spec, params, schedule, tol, newton_iters));
        ok = true;
    } catch (const Error& e) {
        outj["newton"] = Json{{"error", e.what()}};
    }
    outj["diagnostics"] = contraction_report_to_json(
        contraction_diagnostics(spec, params, schedule, region));
    write_atomic(out / "multipoint.json", dump(outj));
    return ok ? 0 : 4;
}

int run_command(const std::string& name, const Json& cfg, const GlobalArgs& g,
                const fs::path& out);

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

void set_config_path(Json& root, const std::string& path, const Json& value) {
    std::vector<std::string> keys;
    size_t start = 0;
    while (true) {
        size_t dot = path.find('.', start);
        keys.push_back(path.substr(start, dot == std::string::npos
                                              ? std::string::npos
                                              : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (const std::string& k : keys)
        if (k.empty())
            throw DomainError("sweep: malformed override path \"" + path + "\"");
    Json* cur = &root;
    for (size_t k = 0; k + 1 < keys.size(); ++k) {
        if (!cur->is_object() || !cur->contains(keys[k]))
            throw DomainError("sweep: override path \"" + path +
                              "\" does not resolve in the config");
        cur = &cur->at(keys[k]);
    }
    if (!cur->is_object())
        throw DomainError("sweep: override path \"" + path +
                          "\" does not land in an object");
    (*cur)[keys.back()] = value;
}

int cmd_sweep(const Json& cfg, const GlobalArgs& g, const fs::path& out) {
    const Json& b = require_block(cfg, "sweep");
    reject_unknown_keys(b, {"command", "overrides"}, "sweep");
    if (!b.contains("command") || !b.at("command").is_string())
        throw DomainError("sweep.command: expected a subcommand name");
    std::string cmd = b.at("command").get<std::string>();
    if (cmd == "sweep")
        throw DomainError("sweep.command: nested sweeps are not supported");
    if (cmd != "simulate" && cmd != "stability" && cmd != "lyapunov" &&
        cmd != "basin" && cmd != "multipoint")
        throw DomainError("sweep.command: unknown subcommand \"" + cmd + "\"");

    if (!b.contains("overrides") || !b.at("overrides").is_array() ||
        b.at("overrides").empty())
        throw DomainError("sweep.overrides: expected a non-empty array");
    std::vector<std::string> paths;
    std::vector<Json> values;
    for (const Json& o : b.at("overrides")) {
        reject_unknown_keys(o, {"path", "values"}, "sweep.overrides[]");
        if (!o.contains("path") || !o.at("path").is_string())
            throw DomainError("sweep.overrides[].path: expected a string");
        if (!o.contains("values") || !o.at("values").is_array() ||
            o.at("values").empty())
            throw DomainError("sweep.overrides[].values: expected a non-empty array");
        paths.push_back(o.at("path").get<std::string>());
        values.push_back(o.at("values"));
    }

    long total = 1;
    for (const Json& v : values) {
        total *= static_cast<long>(v.size());
        if (total > 100000)
            throw DomainError("sweep: more than 100000 combinations");
    }

    Json index = Json::array();
    int first_bad = 0;
    for (long i = 0; i < total; ++i) {
        Json cfg_i = cfg;
        cfg_i.erase("sweep");
        std::vector<size_t> pick(paths.size());
        long rem = i;
        for (size_t k = paths.size(); k-- > 0;) {  // last override varies fastest
            long m = static_cast<long>(values[k].size());
            pick[k] = static_cast<size_t>(rem % m);
            rem /= m;
        }
        Json applied;
        for (size_t k = 0; k < paths.size(); ++k) {
            set_config_path(cfg_i, paths[k], values[k][pick[k]]);
            applied[paths[k]] = values[k][pick[k]];
        }
        std::string dir = "sweep_" + std::to_string(i);
        fs::path sub = out / dir;
        fs::create_directories(sub);
        int code = guarded([&] { return run_command(cmd, cfg_i, g, sub); });
        if (code != 0 && first_bad == 0) first_bad = code;
        Json entry;
        entry["dir"] = dir;
        entry["overrides"] = applied;
        entry["exit"] = code;
        index.push_back(entry);
    }
    write_atomic(out / "sweep_index.json", dump(index));
    return first_bad;
}

int run_command(const std::string& name, const Json& cfg, const GlobalArgs& g,
                const fs::path& out) {
    reject_unknown_keys(cfg,
                        {"params", "schedule", "simulate", "stability",
                         "lyapunov", "basin", "multipoint", "sweep"},
                        "config");
    if (name == "simulate") return cmd_simulate(cfg, g, out);
    if (name == "stability") return cmd_stability(cfg, g, out);
    if (name == "lyapunov") return cmd_lyapunov(cfg, g, out);
    if (name == "basin") return cmd_basin(cfg, g, out);
    if (name == "multipoint") return cmd_multipoint(cfg, g, out);
    if (name == "sweep") return cmd_sweep(cfg, g, out);
    throw DomainError("unknown command " + name);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and stability analysis for a three-population "
                 "tumor-host-immune system under chemotherapy"};
    app.require_subcommand(1);

    GlobalArgs g;
    std::string tol_str;
    uint64_t seed_val = 0;
    app.add_option("--config", g.config_path, "experiment config (JSON)")
        ->required();
    app.add_option("--out", g.out_dir, "output directory (default .)");
    app.add_flag("--plot", g.plot, "also write SVG plots");
    auto* seed_opt =
        app.add_option("--seed", seed_val, "override the config's RNG seed");
    app.add_option("--tol", tol_str,
                   "override integration tolerances, as abs,rel");
    app.add_flag("--require-certificate", g.require_certificate,
                 "fail when any certificate cannot be built");

    const char* names[] = {"simulate", "stability", "lyapunov",
                           "basin",    "multipoint", "sweep"};
    const char* descs[] = {
        "integrate one orbit and write trajectory.csv",
        "equilibria, eigenvalues and hypothesis audit per dose level",
        "quadratic certificates for the boundary equilibria",
        "attractor map, certificates and containment over a state box",
        "solve the nonlocal initial condition with both solvers",
        "cartesian product of config overrides, re-running a subcommand"};
    for (int i = 0; i < 6; ++i)
        app.add_subcommand(names[i], descs[i])->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // bad invocation is a config error
    }

    if (*seed_opt) g.seed = seed_val;
    if (!tol_str.empty()) {
        size_t comma = tol_str.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("no comma");
            size_t used = 0;
            double a = std::stod(tol_str.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("trailing characters");
            std::string rest = tol_str.substr(comma + 1);
            double r = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing characters");
            g.tol = Tolerances{a, r};
        } catch (const std::exception&) {
            std::cerr << "error: --tol expects abs,rel\n";
            return 2;
        }
    }

    std::string cmd = app.get_subcommands().front()->get_name();
    return guarded([&] {
        Json cfg = load_config(g.config_path);
        fs::path out(g.out_dir);
        fs::create_directories(out);
        return run_command(cmd, cfg, g, out);
    });
}
