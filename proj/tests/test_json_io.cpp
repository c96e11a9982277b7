#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oncolyap/json_io.hpp"
#include "test_support.hpp"

using namespace oncolyap;

TEST_CASE("parameter documents round-trip losslessly") {
    ModelParams p = testsup::canonical();
    p.r2 = 0.6123456789012345;  // exercise shortest-round-trip serialization

    ModelParams q = params_from_json(params_to_json(p));
    CHECK(q.r2 == p.r2);
    CHECK(q.a12 == p.a12);
    CHECK(q.a13 == p.a13);
    CHECK(q.a21 == p.a21);
    CHECK(q.a31 == p.a31);
    CHECK(q.r3 == p.r3);
    CHECK(q.k3 == p.k3);
    CHECK(q.d3 == p.d3);
    CHECK(q.d2 == p.d2);
    CHECK(q.response.a == p.response.a);
    CHECK(q.response.nu == p.response.nu);
    CHECK(!q.dimensional.has_value());

    SUBCASE("with the dimensional block") {
        p.dimensional = DimensionalParams{0.18, 5e8, 3e8, 1e7, 1.3e4};
        ModelParams r = params_from_json(params_to_json(p));
        REQUIRE(r.dimensional.has_value());
        CHECK(r.dimensional->r1 == 0.18);
        CHECK(r.dimensional->k1 == 5e8);
        CHECK(r.dimensional->s == 1.3e4);
    }
    SUBCASE("zero response kind") {
        p.response = ResponseCurve::zero();
        Json j = params_to_json(p);
        CHECK(j["response"]["kind"] == "zero");
        CHECK(!j["response"].contains("a"));
        ModelParams r = params_from_json(j);
        CHECK(r.response.kind == ResponseCurve::Kind::Zero);
    }
}

TEST_CASE("parameter parsing is strict") {
    Json ok = params_to_json(testsup::canonical());

    SUBCASE("unknown top-level key") {
        Json j = ok;
        j["bogus"] = 1;
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("unknown response key") {
        Json j = ok;
        j["response"]["gamma"] = 1;
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("missing rate") {
        Json j = ok;
        j.erase("r2");
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("rate of the wrong type") {
        Json j = ok;
        j["r2"] = "fast";
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("missing response") {
        Json j = ok;
        j.erase("response");
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("response vector of the wrong arity") {
        Json j = ok;
        j["response"]["a"] = {1.0, 2.0};
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("zero kind takes no curve data") {
        Json j = ok;
        j["response"] = Json{{"kind", "zero"}, {"a", {1.0, 1.0, 1.0}}};
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("unknown response kind") {
        Json j = ok;
        j["response"]["kind"] = "linear";
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("unknown dimensional key") {
        Json j = ok;
        j["dimensional"] =
            Json{{"r1", 1.0}, {"k1", 1.0}, {"k2", 1.0}, {"k3", 1.0}, {"q", 1.0}};
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("domain validation runs on parse") {
        Json j = ok;
        j["k3"] = 0.0;  // saturation constant must be positive
        CHECK_THROWS_AS(params_from_json(j), DomainError);
    }
    SUBCASE("not an object") {
        CHECK_THROWS_AS(params_from_json(Json::array()), DomainError);
    }
}

TEST_CASE("schedule documents round-trip and validate") {
    DrugSchedule z = schedule_from_json(Json{{"kind", "zero"}});
    CHECK(z.kind == DrugSchedule::Kind::Zero);

    DrugSchedule c =
        schedule_from_json(Json{{"kind", "constant"}, {"level", 1.25}});
    CHECK(c.kind == DrugSchedule::Kind::Constant);
    CHECK(c.level == 1.25);
    CHECK(schedule_to_json(c) == Json{{"kind", "constant"}, {"level", 1.25}});

    Json pw{{"kind", "piecewise"},
            {"segments", {{0.0, 3.0, 2.0}, {6.0, 9.0, 1.5}}}};
    DrugSchedule s = schedule_from_json(pw);
    REQUIRE(s.segments.size() == 2);
    CHECK(s.segments[1].t0 == 6.0);
    CHECK(s.segments[1].level == 1.5);
    CHECK(schedule_from_json(schedule_to_json(s)).segments.size() == 2);

    SUBCASE("strictness") {
        CHECK_THROWS_AS(schedule_from_json(Json{{"level", 1.0}}), DomainError);
        CHECK_THROWS_AS(
            schedule_from_json(Json{{"kind", "zero"}, {"level", 1.0}}),
            DomainError);
        CHECK_THROWS_AS(schedule_from_json(Json{{"kind", "constant"}}),
                        DomainError);
        CHECK_THROWS_AS(schedule_from_json(Json{{"kind", "ramp"}}), DomainError);
        CHECK_THROWS_AS(
            schedule_from_json(Json{{"kind", "piecewise"}, {"segments", 3}}),
            DomainError);
        // overlap is caught by schedule validation
        Json bad{{"kind", "piecewise"},
                 {"segments", {{0.0, 3.0, 2.0}, {2.0, 4.0, 1.0}}}};
        CHECK_THROWS_AS(schedule_from_json(bad), DomainError);
        // negative dose level
        CHECK_THROWS_AS(
            schedule_from_json(Json{{"kind", "constant"}, {"level", -1.0}}),
            DomainError);
    }
}

TEST_CASE("multipoint documents round-trip and validate") {
    Json j{{"t0", 0.0},
           {"T", 5.0},
           {"nodes", {1.0, 2.0}},
           {"alpha", {{0.05, 0.02}, {0.03, 0.01}, {0.04, 0.02}}},
           {"x0", {0.8, 0.5, 0.1}},
           {"u0", 0.25}};
    MultipointSpec s = multipoint_spec_from_json(j);
    CHECK(s.T == 5.0);
    CHECK(s.nodes == std::vector<double>{1.0, 2.0});
    CHECK(s.alpha[2] == std::vector<double>{0.04, 0.02});
    CHECK(s.x0 == Eigen::Vector3d(0.8, 0.5, 0.1));
    CHECK(s.u0 == 0.25);

    MultipointSpec r = multipoint_spec_from_json(multipoint_spec_to_json(s));
    CHECK(r.nodes == s.nodes);
    CHECK(r.alpha == s.alpha);
    CHECK(r.x0 == s.x0);

    SUBCASE("strictness") {
        Json bad = j;
        bad["weights"] = 1;
        CHECK_THROWS_AS(multipoint_spec_from_json(bad), DomainError);
        bad = j;
        bad.erase("x0");
        CHECK_THROWS_AS(multipoint_spec_from_json(bad), DomainError);
        bad = j;
        bad["alpha"] = {{0.05, 0.02}, {0.03, 0.01}};  // only two rows
        CHECK_THROWS_AS(multipoint_spec_from_json(bad), DomainError);
        bad = j;
        bad["nodes"] = {1.0, 6.0};  // beyond the horizon
        CHECK_THROWS_AS(multipoint_spec_from_json(bad), DomainError);
        bad = j;
        bad["nodes"] = "all";
        CHECK_THROWS_AS(multipoint_spec_from_json(bad), DomainError);
    }
}

TEST_CASE("box documents") {
    Box3 b = box_from_json(Json{{"lo", {0.0, 0.0, 0.0}}, {"hi", {2.0, 2.0, 2.0}}});
    CHECK(b.hi == Eigen::Vector3d(2, 2, 2));
    Box3 r = box_from_json(box_to_json(b));
    CHECK(r.lo == b.lo);
    CHECK(r.hi == b.hi);

    CHECK_THROWS_AS(
        box_from_json(Json{{"lo", {1.0, 0.0, 0.0}}, {"hi", {0.0, 2.0, 2.0}}}),
        DomainError);
    CHECK_THROWS_AS(box_from_json(Json{{"lo", {0.0, 0.0, 0.0}}}), DomainError);
    CHECK_THROWS_AS(box_from_json(Json{{"lo", {0.0, 0.0, 0.0}},
                                       {"hi", {2.0, 2.0, 2.0}},
                                       {"mid", {1.0, 1.0, 1.0}}}),
                    DomainError);
}

TEST_CASE("analysis reports serialize with the documented shapes") {
    ModelParams p = testsup::canonical();
    auto eqs = boundary_equilibria(p, 0.0);

    SUBCASE("equilibrium") {
        Json j = equilibrium_to_json(eqs[1]);
        CHECK(j["id"] == "E1");
        CHECK(j["point"] == Json::array({1.0, 0.0, 0.0}));
        CHECK(j["u_bar"] == 0.0);
        CHECK(j["v_bar"] == 0.0);
        CHECK(j["feasible"] == true);
    }

    SUBCASE("stability report") {
        StabilityReport rep = classify(eqs[1], p, 0.0);
        Json j = stability_report_to_json(rep);
        CHECK(j["equilibrium"]["id"] == "E1");
        REQUIRE(j["jacobian"].size() == 3);
        CHECK(j["jacobian"][0].size() == 3);
        REQUIRE(j["eigenvalues"].size() == 3);
        CHECK(j["eigenvalues"][0].size() == 2);  // [re, im]
        CHECK(j["label"] == to_string(rep.label));
        CHECK(j["dims"]["stable"] == rep.dims.stable);
        CHECK(j["margin"].get<double>() == rep.margin);
        CHECK(j["eps_eig"].get<double>() == rep.eps_eig);
        CHECK(j["diagnostics"].is_object());
        CHECK(!j["diagnostics"].empty());
        // all-negative tumor-only spectrum: the one-per-family count applies
        REQUIRE(rep.informational_dims.applicable);
        CHECK(j["informational_dims"]["stable"] == 1);
        CHECK(j["informational_dims"]["unstable"] == 1);
        CHECK(j["informational_dims"]["saddle"] == 0);
    }

    SUBCASE("informational dims are null when no sign case applies") {
        // at this dose the host kill crosses its threshold before the tumor
        // kill does, so neither origin sign case holds
        StabilityReport rep = classify(boundary_equilibria(p, 0.6)[0], p, 0.6);
        REQUIRE(!rep.informational_dims.applicable);
        Json j = stability_report_to_json(rep);
        CHECK(j["informational_dims"].is_null());
    }

    SUBCASE("hypothesis audit") {
        Json j = hypothesis_audit_to_json(check_hypotheses(p, 2.0));
        CHECK(j["theorem_5_0"] == "holds");
        CHECK(j["theorem_4_1_E0_stable"] == "holds");
        std::string v = j["theorem_5_2"].get<std::string>();
        CHECK(v.rfind("fails(", 0) == 0);
        for (const auto& [key, val] : j.items()) {
            (void)key;
            std::string s = val.get<std::string>();
            bool wellformed = s == "holds" || s.rfind("fails", 0) == 0 ||
                              s.rfind("indeterminate(", 0) == 0;
            CHECK(wellformed);
        }
    }

    SUBCASE("certificate carries exactly the published fields") {
        LyapunovCertificate cert =
            build_certificate(boundary_equilibria(p, 2.0)[0], p, 2.0);
        Json j = certificate_to_json(cert);
        std::vector<std::string> keys;
        for (const auto& [k, v] : j.items()) {
            (void)v;
            keys.push_back(k);
        }
        CHECK(keys == std::vector<std::string>{"equilibrium", "B", "lambda_min",
                                               "r", "C", "halfspace",
                                               "verified_samples", "worst_vdot"});
        CHECK(j["B"].size() == 3);
        CHECK(j["halfspace"].is_null());
        CHECK(j["lambda_min"].get<double>() == cert.lambda_min);
        CHECK(j["r"].get<double>() == cert.r);
        CHECK(j["C"].get<double>() == cert.C);
        CHECK(j["verified_samples"].get<long>() == cert.verification.samples);
        CHECK(j["worst_vdot"].get<double>() == cert.verification.worst_vdot);
    }

    SUBCASE("halfspace is an object when present") {
        LyapunovCertificate cert;
        cert.halfspace = Halfspace{Eigen::Vector3d(1, 2, 3), 4.0, {}};
        Json j = certificate_to_json(cert);
        CHECK(j["halfspace"]["w"] == Json::array({1.0, 2.0, 3.0}));
        CHECK(j["halfspace"]["c"] == 4.0);
    }
}

TEST_CASE("basin and solver summaries") {
    ModelParams p = testsup::canonical();
    Box3 dom{Eigen::Vector3d::Zero(), Eigen::Vector3d(2, 2, 2)};
    BasinOptions bo;
    bo.n = 8;
    bo.horizon = 200;
    BasinEstimate est = map_basin(p, DrugSchedule::constant(2.0), dom, bo);

    Json j = basin_summary_to_json(est);
    CHECK(j["domain"]["hi"] == Json::array({2.0, 2.0, 2.0}));
    CHECK(j["schedule"]["kind"] == "constant");
    CHECK(j["mode"] == "grid");
    CHECK(j["n"].get<long>() == est.n());
    REQUIRE(j["candidates"].size() == 1);
    CHECK(j["candidates"][0]["id"] == "E0");
    CHECK(j["candidates"][0]["count"].get<long>() == est.counts[0]);
    CHECK(j["candidates"][0]["fraction"].get<double>() == est.fraction(0));
    CHECK(j["no_convergence"].get<long>() == est.no_convergence);
    CHECK(j["infeasible"].get<long>() == 0);

    SUBCASE("containment report") {
        ContainmentReport rep;
        rep.inside = 100;
        rep.inside_converged = 100;
        rep.soundness = 1.0;
        rep.empirical_basin = 120;
        rep.conservativeness = 100.0 / 120.0;
        Json c = containment_to_json(rep);
        CHECK(c["inside"] == 100);
        CHECK(c["soundness"] == 1.0);
        CHECK(c["conservativeness"].get<double>() == 100.0 / 120.0);
    }

    SUBCASE("multipoint solution") {
        MultipointSolution sol;
        sol.y = Eigen::Vector3d(0.9, 0.6, 0.2);
        sol.residual_norm = 1e-13;
        sol.iterations = 4;
        sol.method = "newton";
        Json m = multipoint_solution_to_json(sol);
        CHECK(m["y"] == Json::array({0.9, 0.6, 0.2}));
        CHECK(m["method"] == "newton");
        CHECK(m["iterations"] == 4);
        CHECK(m["feasible"] == true);
    }

    SUBCASE("contraction report horizon is null when unbounded") {
        ContractionReport r;
        r.horizon_unbounded = true;
        Json a = contraction_report_to_json(r);
        CHECK(a["horizon_bound"].is_null());
        CHECK(a["horizon_unbounded"] == true);

        r.horizon_unbounded = false;
        r.horizon_bound = 12.5;
        Json b = contraction_report_to_json(r);
        CHECK(b["horizon_bound"].get<double>() == 12.5);
    }
}

TEST_CASE("schema helpers") {
    Json j{{"a", 1.0}, {"b", {1.0, 2.0, 3.0}}};
    CHECK_NOTHROW(reject_unknown_keys(j, {"a", "b"}, "ctx"));
    CHECK_THROWS_AS(reject_unknown_keys(j, {"a"}, "ctx"), DomainError);
    CHECK_THROWS_AS(reject_unknown_keys(Json(3), {"a"}, "ctx"), DomainError);
    CHECK(require_number(j, "a", "ctx") == 1.0);
    CHECK_THROWS_AS(require_number(j, "z", "ctx"), DomainError);
    CHECK_THROWS_AS(require_number(j, "b", "ctx"), DomainError);
    CHECK(require_vec3(j, "b", "ctx") == Eigen::Vector3d(1, 2, 3));
    CHECK_THROWS_AS(require_vec3(j, "a", "ctx"), DomainError);
}
