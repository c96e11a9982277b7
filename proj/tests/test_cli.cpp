#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oncolyap/json_io.hpp"
#include "oncolyap/svg.hpp"
#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace oncolyap;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("ONCOLYAP_CLI");
    REQUIRE_MESSAGE(p != nullptr, "ONCOLYAP_CLI must point at the binary");
    return p;
}

fs::path scratch_root() {
    static fs::path root = [] {
        fs::path r = fs::temp_directory_path() /
                     ("oncolyap_cli_" + std::to_string(::getpid()));
        fs::remove_all(r);
        fs::create_directories(r);
        return r;
    }();
    return root;
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = scratch_root() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
    int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    os << s;
}

std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::string where = p.string() + " should exist";
    REQUIRE_MESSAGE(is.good(), where);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path write_config(const std::string& name, const Json& cfg) {
    fs::path p = scratch_root() / name;
    write_text(p, cfg.dump(2) + "\n");
    return p;
}

Json base_config() {
    Json cfg;
    cfg["params"] = params_to_json(testsup::canonical());
    return cfg;
}

std::vector<std::string> csv_rows(const std::string& text) {
    std::vector<std::string> rows;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        rows.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return rows;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t c = s.find(sep, pos);
        out.push_back(s.substr(pos, c == std::string::npos ? std::string::npos
                                                           : c - pos));
        if (c == std::string::npos) break;
        pos = c + 1;
    }
    return out;
}

} // namespace

TEST_CASE("simulate writes a deterministic trajectory") {
    Json cfg = base_config();
    cfg["schedule"] = Json{{"kind", "piecewise"},
                           {"segments", {{0.0, 3.0, 2.0}, {6.0, 9.0, 2.0}}}};
    cfg["simulate"] = Json{{"initial", {0.9, 0.6, 0.15}},
                           {"u0", 0.0},
                           {"span", {0.0, 10.0}},
                           {"tol", {{"abs", 1e-10}, {"rel", 1e-10}}}};
    fs::path cp = write_config("sim.json", cfg);

    fs::path o1 = fresh_dir("sim1");
    CHECK(run("simulate --config " + cp.string() + " --out " + o1.string()) == 0);
    std::string csv = read_text(o1 / "trajectory.csv");
    auto rows = csv_rows(csv);
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == "t,x1,x2,x3,u");
    auto first = split(rows[1], ',');
    REQUIRE(first.size() == 5);
    CHECK(std::stod(first[0]) == 0.0);
    CHECK(std::stod(first[1]) == 0.9);
    CHECK(std::stod(first[2]) == 0.6);
    CHECK(std::stod(first[3]) == 0.15);
    auto last = split(rows.back(), ',');
    CHECK(std::stod(last[0]) == 10.0);

    SUBCASE("reruns are byte-identical") {
        fs::path o2 = fresh_dir("sim2");
        CHECK(run("simulate --config " + cp.string() + " --out " + o2.string()) ==
              0);
        CHECK(read_text(o2 / "trajectory.csv") == csv);
    }
    SUBCASE("no stray temp files after an atomic write") {
        for (const auto& e : fs::directory_iterator(o1))
            CHECK(e.path().extension() != ".tmp");
    }
    SUBCASE("plots are opt-in") {
        CHECK(!fs::exists(o1 / "trajectory.svg"));
        fs::path o3 = fresh_dir("sim3");
        CHECK(run("simulate --plot --config " + cp.string() + " --out " +
                  o3.string()) == 0);
        std::string svg = read_text(o3 / "trajectory.svg");
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
    SUBCASE("tolerance flag overrides the config block") {
        fs::path oa = fresh_dir("sim_tol_same");
        CHECK(run("simulate --tol 1e-10,1e-10 --config " + cp.string() +
                  " --out " + oa.string()) == 0);
        CHECK(read_text(oa / "trajectory.csv") == csv);

        fs::path ob = fresh_dir("sim_tol_loose");
        CHECK(run("simulate --tol 1e-4,1e-4 --config " + cp.string() +
                  " --out " + ob.string()) == 0);
        CHECK(read_text(ob / "trajectory.csv") != csv);
    }
}

TEST_CASE("simulate holds the empty rest state") {
    Json cfg = base_config();
    cfg["simulate"] = Json{{"initial", {0.0, 0.0, 0.0}}, {"span", {0.0, 5.0}}};
    fs::path cp = write_config("rest.json", cfg);
    fs::path o = fresh_dir("rest");
    CHECK(run("simulate --config " + cp.string() + " --out " + o.string()) == 0);
    auto rows = csv_rows(read_text(o / "trajectory.csv"));
    for (size_t i = 1; i < rows.size(); ++i) {
        auto f = split(rows[i], ',');
        REQUIRE(f.size() == 5);
        CHECK(std::stod(f[1]) == 0.0);
        CHECK(std::stod(f[2]) == 0.0);
        CHECK(std::stod(f[3]) == 0.0);
        CHECK(std::stod(f[4]) == 0.0);
    }
}

TEST_CASE("exit codes distinguish config, numeric and solver failures") {
    Json good = base_config();
    good["simulate"] = Json{{"initial", {0.9, 0.6, 0.15}}, {"span", {0.0, 5.0}}};
    fs::path out = fresh_dir("codes");
    std::string o = " --out " + out.string();

    SUBCASE("unreadable config") {
        CHECK(run("simulate --config " + (scratch_root() / "nope.json").string() +
                  o) == 2);
    }
    SUBCASE("malformed json") {
        fs::path cp = scratch_root() / "broken.json";
        write_text(cp, "{\"params\": ");
        CHECK(run("simulate --config " + cp.string() + o) == 2);
    }
    SUBCASE("unknown top-level block") {
        Json cfg = good;
        cfg["extra"] = 1;
        CHECK(run("simulate --config " +
                  write_config("extra.json", cfg).string() + o) == 2);
    }
    SUBCASE("missing command block") {
        Json cfg = good;
        cfg.erase("simulate");
        CHECK(run("simulate --config " +
                  write_config("noblock.json", cfg).string() + o) == 2);
    }
    SUBCASE("bad span") {
        Json cfg = good;
        cfg["simulate"]["span"] = {5.0};
        CHECK(run("simulate --config " +
                  write_config("badspan.json", cfg).string() + o) == 2);
    }
    SUBCASE("reversed span") {
        Json cfg = good;
        cfg["simulate"]["span"] = {5.0, 0.0};
        CHECK(run("simulate --config " +
                  write_config("revspan.json", cfg).string() + o) == 2);
    }
    SUBCASE("divergent orbit") {
        Json cfg = good;
        // without a tumor the host equation blows up from below in finite time
        cfg["simulate"]["initial"] = {0.0, -0.5, 0.0};
        cfg["simulate"]["span"] = {0.0, 20.0};
        CHECK(run("simulate --config " +
                  write_config("diverge.json", cfg).string() + o) == 3);
    }
    SUBCASE("unsolvable nonlocal condition") {
        Json cfg = base_config();
        cfg["multipoint"] =
            Json{{"spec", Json{{"t0", 0.0},
                               {"T", 2.0},
                               {"nodes", {1.0}},
                               {"alpha", {{0.0}, {0.0}, {2.5}}},
                               {"x0", {0.8, 0.5, 0.1}},
                               {"u0", 0.0}}}};
        CHECK(run("multipoint --config " +
                  write_config("unsolvable.json", cfg).string() + o) == 4);
    }
    SUBCASE("usage errors") {
        fs::path cp = write_config("usage.json", good);
        CHECK(run("") == 2);                                     // no subcommand
        CHECK(run("simulate") == 2);                             // missing --config
        CHECK(run("warp --config " + cp.string()) == 2);         // unknown command
        CHECK(run("simulate --config " + cp.string() + " --frobnicate") == 2);
        CHECK(run("simulate --tol nonsense --config " + cp.string() + o) == 2);
        CHECK(run("simulate --tol 1e-8 --config " + cp.string() + o) == 2);
        CHECK(run("--help") == 0);
    }
}

TEST_CASE("stability command matches the library exactly") {
    Json cfg = base_config();
    cfg["stability"] = Json{{"v_bar", {0.0, 2.0}}};
    fs::path cp = write_config("stab.json", cfg);
    fs::path o = fresh_dir("stab");
    CHECK(run("stability --config " + cp.string() + " --out " + o.string()) == 0);

    Json doc = Json::parse(read_text(o / "stability.json"));
    REQUIRE(doc.size() == 2);
    CHECK(doc[0]["v_bar"] == 0.0);
    REQUIRE(doc[0]["equilibria"].size() == 3);

    ModelParams p = testsup::canonical();
    for (size_t vi = 0; vi < 2; ++vi) {
        double vb = doc[vi]["v_bar"].get<double>();
        auto eqs = boundary_equilibria(p, vb);
        for (size_t ei = 0; ei < eqs.size(); ++ei) {
            const Json& je = doc[vi]["equilibria"][ei];
            CHECK(je["id"] == eqs[ei].id());
            CHECK(je["feasible"] == eqs[ei].feasible);
            if (eqs[ei].feasible)
                CHECK(je["report"] ==
                      stability_report_to_json(classify(eqs[ei], p, vb)));
            else
                CHECK(je["report"].is_null());
        }
        CHECK(doc[vi]["audit"] ==
              hypothesis_audit_to_json(check_hypotheses(p, vb)));
    }

    // no dose: tumor-only and host-only states are stable, origin is not
    CHECK(doc[0]["equilibria"][1]["report"]["label"] ==
          "locally-asymptotically-stable");
    CHECK(doc[0]["equilibria"][2]["report"]["label"] ==
          "locally-asymptotically-stable");
    CHECK(doc[0]["equilibria"][0]["report"]["label"] == "unstable");
    // strong dosing: only the origin survives, and it is stable
    CHECK(doc[1]["equilibria"][0]["report"]["label"] ==
          "locally-asymptotically-stable");
    CHECK(doc[1]["equilibria"][1]["report"].is_null());
    CHECK(doc[1]["equilibria"][2]["report"].is_null());
    CHECK(doc[1]["audit"]["theorem_5_0"] == "holds");
}

TEST_CASE("lyapunov command") {
    Json cfg = base_config();
    cfg["lyapunov"] = Json{{"v_bar", 2.0}, {"box", {2.0, 2.0, 2.0}}};
    fs::path cp = write_config("lyap.json", cfg);
    fs::path o = fresh_dir("lyap");
    CHECK(run("lyapunov --config " + cp.string() + " --out " + o.string()) == 0);

    Json doc = Json::parse(read_text(o / "lyapunov.json"));
    CHECK(doc["v_bar"] == 2.0);
    REQUIRE(doc["certificates"].size() == 1);
    CHECK(doc["failures"].empty());
    CHECK(doc["certificates"][0]["equilibrium"]["id"] == "E0");

    ModelParams p = testsup::canonical();
    CertificateOptions co;
    co.K = Eigen::Vector3d(2, 2, 2);
    co.parallel = false;
    Json want = certificate_to_json(
        build_certificate(boundary_equilibria(p, 2.0)[0], p, 2.0, co));
    CHECK(doc["certificates"][0] == want);

    SUBCASE("partial failure passes unless certificates are required") {
        Json c2 = base_config();
        c2["lyapunov"] = Json{{"v_bar", 0.0}, {"box", {2.0, 2.0, 2.0}}};
        fs::path cp2 = write_config("lyap0.json", c2);
        fs::path o2 = fresh_dir("lyap0");
        CHECK(run("lyapunov --config " + cp2.string() + " --out " +
                  o2.string()) == 0);
        Json d2 = Json::parse(read_text(o2 / "lyapunov.json"));
        CHECK(d2["certificates"].size() == 2);  // both survivor states
        REQUIRE(d2["failures"].size() == 1);    // the unstable origin
        CHECK(d2["failures"][0]["equilibrium"] == "E0");

        fs::path o3 = fresh_dir("lyap0r");
        CHECK(run("lyapunov --require-certificate --config " + cp2.string() +
                  " --out " + o3.string()) == 3);
    }
    SUBCASE("no certifiable state is a numeric failure") {
        // weaker competition makes both survivor states unstable at no dose
        ModelParams weak = testsup::canonical();
        weak.a12 = 0.8;
        weak.a21 = 0.3;
        Json c3;
        c3["params"] = params_to_json(weak);
        c3["lyapunov"] = Json{{"v_bar", 0.0}, {"box", {2.0, 2.0, 2.0}}};
        fs::path cp3 = write_config("lyapnone.json", c3);
        fs::path o4 = fresh_dir("lyapnone");
        CHECK(run("lyapunov --config " + cp3.string() + " --out " +
                  o4.string()) == 3);
        Json d3 = Json::parse(read_text(o4 / "lyapunov.json"));
        CHECK(d3["certificates"].empty());
        CHECK(d3["failures"].size() == 3);
    }
}

TEST_CASE("basin command produces a consistent artifact set") {
    Json cfg = base_config();
    cfg["schedule"] = Json{{"kind", "constant"}, {"level", 2.0}};
    cfg["basin"] = Json{{"domain", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {2.0, 2.0, 2.0}}}},
                        {"n", 343},
                        {"horizon", 300.0},
                        {"eps_conv", 1e-6},
                        {"mode", "grid"},
                        {"slice_n", 5}};
    fs::path cp = write_config("basin.json", cfg);
    fs::path o1 = fresh_dir("basin1");
    CHECK(run("basin --config " + cp.string() + " --out " + o1.string()) == 0);

    Json doc = Json::parse(read_text(o1 / "basin.json"));
    long n = doc["estimate"]["n"].get<long>();
    CHECK(n >= 343);
    CHECK(doc["estimate"]["candidates"].size() == 1);
    CHECK(doc["estimate"]["candidates"][0]["id"] == "E0");
    CHECK(doc["estimate"]["candidates"][0]["fraction"] == 1.0);
    REQUIRE(doc["certificates"].size() == 1);
    CHECK(doc["certificate_failures"].empty());
    CHECK(doc["certificates"][0]["containment"]["soundness"] == 1.0);
    CHECK(doc["certificates"][0]["containment"]["inside"].get<long>() >= 30);

    auto basin_rows = csv_rows(read_text(o1 / "basin.csv"));
    CHECK(basin_rows.size() == size_t(n) + 1);
    auto slice_rows = csv_rows(read_text(o1 / "slice.csv"));
    CHECK(slice_rows.size() == 26);  // 5x5 raster plus header
    for (size_t i = 1; i < slice_rows.size(); ++i) {
        auto f = split(slice_rows[i], ',');
        REQUIRE(f.size() == 4);
        CHECK(std::stod(f[2]) == 1.0);  // slice plane defaults to the z midpoint
        CHECK(f[3] == "E0");
    }

    SUBCASE("reruns are byte-identical") {
        fs::path o2 = fresh_dir("basin2");
        CHECK(run("basin --config " + cp.string() + " --out " + o2.string()) ==
              0);
        CHECK(read_text(o2 / "basin.csv") == read_text(o1 / "basin.csv"));
        CHECK(read_text(o2 / "basin.json") == read_text(o1 / "basin.json"));
        CHECK(read_text(o2 / "slice.csv") == read_text(o1 / "slice.csv"));
    }
}

TEST_CASE("slice plot cells agree with the slice csv") {
    Json cfg = base_config();  // no dose: competing attractors color the plane
    cfg["basin"] = Json{{"domain", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {2.0, 2.0, 2.0}}}},
                        {"n", 8},
                        {"horizon", 300.0},
                        {"slice_n", 4},
                        {"slice_x3", 0.25}};
    fs::path cp = write_config("slice.json", cfg);
    fs::path o = fresh_dir("slice");
    CHECK(run("basin --plot --config " + cp.string() + " --out " + o.string()) ==
          0);

    auto rows = csv_rows(read_text(o / "slice.csv"));
    REQUIRE(rows.size() == 17);
    std::vector<std::string> labels;
    std::set<std::string> distinct;
    for (size_t i = 1; i < rows.size(); ++i) {
        auto f = split(rows[i], ',');
        CHECK(std::stod(f[2]) == 0.25);
        labels.push_back(f[3]);
        distinct.insert(f[3]);
    }
    CHECK(distinct.size() >= 2);  // the plane crosses the separatrix

    Json doc = Json::parse(read_text(o / "basin.json"));
    std::vector<std::string> ids;
    for (const auto& c : doc["estimate"]["candidates"]) ids.push_back(c["id"]);

    std::string svg = read_text(o / "slice.svg");
    std::vector<std::string> fills;
    size_t pos = 0;
    while ((pos = svg.find("<rect", pos)) != std::string::npos) {
        size_t f = svg.find("fill=\"", pos);
        REQUIRE(f != std::string::npos);
        f += 6;
        fills.push_back(svg.substr(f, svg.find('"', f) - f));
        pos = f;
    }
    // background rect, then one cell per sample in csv order
    REQUIRE(fills.size() >= labels.size() + 1);
    for (size_t i = 0; i < labels.size(); ++i)
        CHECK(fills[i + 1] == label_color(labels[i], ids));
}

TEST_CASE("seed flag overrides the config seed") {
    Json cfg = base_config();
    cfg["schedule"] = Json{{"kind", "constant"}, {"level", 2.0}};
    cfg["basin"] = Json{{"domain", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {2.0, 2.0, 2.0}}}},
                        {"n", 20},
                        {"horizon", 150.0},
                        {"mode", "random"},
                        {"seed", 1},
                        {"slice_n", 2}};
    fs::path cp = write_config("seed.json", cfg);

    fs::path o1 = fresh_dir("seed1");
    CHECK(run("basin --seed 42 --config " + cp.string() + " --out " +
              o1.string()) == 0);
    Json d1 = Json::parse(read_text(o1 / "basin.json"));
    CHECK(d1["estimate"]["seed"] == 42);

    fs::path o2 = fresh_dir("seed2");
    CHECK(run("basin --seed 42 --config " + cp.string() + " --out " +
              o2.string()) == 0);
    CHECK(read_text(o2 / "basin.csv") == read_text(o1 / "basin.csv"));

    fs::path o3 = fresh_dir("seed3");
    CHECK(run("basin --config " + cp.string() + " --out " + o3.string()) == 0);
    Json d3 = Json::parse(read_text(o3 / "basin.json"));
    CHECK(d3["estimate"]["seed"] == 1);
    CHECK(read_text(o3 / "basin.csv") != read_text(o1 / "basin.csv"));
}

TEST_CASE("multipoint command reports both solvers and the diagnostics") {
    Json cfg = base_config();
    cfg["multipoint"] =
        Json{{"spec", Json{{"t0", 0.0},
                           {"T", 5.0},
                           {"nodes", {1.0, 2.0}},
                           {"alpha", {{0.05, 0.02}, {0.03, 0.01}, {0.04, 0.02}}},
                           {"x0", {0.8, 0.5, 0.1}},
                           {"u0", 0.0}}},
             {"region", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {2.0, 2.0, 2.0}}}}};
    fs::path cp = write_config("mp.json", cfg);
    fs::path o = fresh_dir("mp");
    CHECK(run("multipoint --config " + cp.string() + " --out " + o.string()) == 0);

    Json doc = Json::parse(read_text(o / "multipoint.json"));
    CHECK(doc["picard"]["feasible"] == true);
    CHECK(doc["newton"]["feasible"] == true);
    CHECK(doc["picard"]["residual_norm"].get<double>() <= 1e-10);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(doc["picard"]["y"][i].get<double>() -
                       doc["newton"]["y"][i].get<double>()) <= 1e-10);
    CHECK(doc["diagnostics"]["alpha_mass"].get<double>() ==
          doctest::Approx(0.07).epsilon(1e-15));
    CHECK(doc["diagnostics"].contains("sufficient"));

    // the API produces the same document body
    ModelParams p = testsup::canonical();
    MultipointSpec spec =
        multipoint_spec_from_json(cfg["multipoint"]["spec"]);
    Json want = multipoint_solution_to_json(
        solve_picard(spec, p, DrugSchedule::zero(), 1e-12, 100));
    CHECK(doc["picard"] == want);
}

TEST_CASE("sweep expands the override grid") {
    Json cfg = base_config();
    cfg["schedule"] = Json{{"kind", "constant"}, {"level", 1.0}};
    cfg["simulate"] = Json{{"initial", {0.9, 0.6, 0.15}}, {"span", {0.0, 5.0}}};
    cfg["sweep"] = Json{
        {"command", "simulate"},
        {"overrides", Json::array({Json{{"path", "params.a13"},
                                        {"values", {2.0, 2.5}}},
                                   Json{{"path", "schedule.level"},
                                        {"values", {0.5, 2.0}}}})}};
    fs::path cp = write_config("sweep.json", cfg);
    fs::path o = fresh_dir("sweep");
    CHECK(run("sweep --config " + cp.string() + " --out " + o.string()) == 0);

    Json idx = Json::parse(read_text(o / "sweep_index.json"));
    REQUIRE(idx.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(idx[i]["dir"] == "sweep_" + std::to_string(i));
        CHECK(idx[i]["exit"] == 0);
        CHECK(fs::exists(o / ("sweep_" + std::to_string(i)) / "trajectory.csv"));
    }
    // last override varies fastest
    CHECK(idx[0]["overrides"] == Json{{"params.a13", 2.0}, {"schedule.level", 0.5}});
    CHECK(idx[1]["overrides"] == Json{{"params.a13", 2.0}, {"schedule.level", 2.0}});
    CHECK(idx[2]["overrides"] == Json{{"params.a13", 2.5}, {"schedule.level", 0.5}});
    CHECK(idx[3]["overrides"] == Json{{"params.a13", 2.5}, {"schedule.level", 2.0}});

    SUBCASE("per-run failures are recorded and propagated") {
        Json bad = cfg;
        bad["sweep"]["overrides"] = Json::array(
            {Json{{"path", "simulate.span"},
                  {"values", Json::array({Json::array({0.0, 5.0}),
                                          Json::array({5.0, 0.0})})}}});
        fs::path cpb = write_config("sweep_bad.json", bad);
        fs::path ob = fresh_dir("sweep_bad");
        CHECK(run("sweep --config " + cpb.string() + " --out " + ob.string()) ==
              2);
        Json bidx = Json::parse(read_text(ob / "sweep_index.json"));
        REQUIRE(bidx.size() == 2);
        CHECK(bidx[0]["exit"] == 0);
        CHECK(bidx[1]["exit"] == 2);
    }
    SUBCASE("unresolvable override paths abort the sweep") {
        Json bad = cfg;
        bad["sweep"]["overrides"] = Json::array(
            {Json{{"path", "params.missing.knob"}, {"values", {1.0}}}});
        fs::path cpb = write_config("sweep_path.json", bad);
        fs::path ob = fresh_dir("sweep_path");
        CHECK(run("sweep --config " + cpb.string() + " --out " + ob.string()) ==
              2);
        CHECK(!fs::exists(ob / "sweep_index.json"));
    }
}
