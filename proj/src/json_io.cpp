#include "oncolyap/json_io.hpp"

#include <algorithm>

namespace oncolyap {

namespace {

void expect_object(const Json& j, const std::string& context) {
    if (!j.is_object())
        throw DomainError(context + ": expected a JSON object");
}

double as_number(const Json& j, const std::string& context) {
    if (!j.is_number())
        throw DomainError(context + ": expected a number");
    return j.get<double>();
}

std::array<double, 3> as_triple(const Json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 3)
        throw DomainError(context + ": expected an array of 3 numbers");
    return {as_number(j[0], context), as_number(j[1], context),
            as_number(j[2], context)};
}

} // namespace

void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         const std::string& context) {
    expect_object(j, context);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw DomainError(context + ": unknown key \"" + key + "\"");
    }
}

double require_number(const Json& j, const std::string& key,
                      const std::string& context) {
    if (!j.contains(key))
        throw DomainError(context + ": missing key \"" + key + "\"");
    return as_number(j.at(key), context + "." + key);
}

Eigen::Vector3d require_vec3(const Json& j, const std::string& key,
                             const std::string& context) {
    if (!j.contains(key))
        throw DomainError(context + ": missing key \"" + key + "\"");
    auto t = as_triple(j.at(key), context + "." + key);
    return {t[0], t[1], t[2]};
}

ModelParams params_from_json(const Json& j) {
    const std::string ctx = "params";
    reject_unknown_keys(j, {"r2", "a12", "a13", "a21", "a31", "r3", "k3", "d3",
                            "d2", "response", "dimensional"},
                        ctx);
    ModelParams p;
    p.r2 = require_number(j, "r2", ctx);
    p.a12 = require_number(j, "a12", ctx);
    p.a13 = require_number(j, "a13", ctx);
    p.a21 = require_number(j, "a21", ctx);
    p.a31 = require_number(j, "a31", ctx);
    p.r3 = require_number(j, "r3", ctx);
    p.k3 = require_number(j, "k3", ctx);
    p.d3 = require_number(j, "d3", ctx);
    p.d2 = require_number(j, "d2", ctx);

    if (!j.contains("response"))
        throw DomainError("params: missing key \"response\"");
    const Json& r = j.at("response");
    reject_unknown_keys(r, {"kind", "a", "nu"}, "params.response");
    std::string kind = "exponential-saturation";
    if (r.contains("kind")) {
        if (!r.at("kind").is_string())
            throw DomainError("params.response.kind: expected a string");
        kind = r.at("kind").get<std::string>();
    }
    if (kind == "zero") {
        p.response = ResponseCurve::zero();
        if (r.contains("a") || r.contains("nu"))
            throw DomainError("params.response: zero kind takes no a/nu");
    } else if (kind == "exponential-saturation") {
        p.response.kind = ResponseCurve::Kind::ExponentialSaturation;
        auto a = as_triple(r.contains("a") ? r.at("a") : Json(),
                           "params.response.a");
        auto nu = as_triple(r.contains("nu") ? r.at("nu") : Json(),
                            "params.response.nu");
        for (int i = 0; i < 3; ++i) {
            p.response.a[i] = a[i];
            p.response.nu[i] = nu[i];
        }
    } else {
        throw DomainError("params.response.kind: unknown kind \"" + kind + "\"");
    }

    if (j.contains("dimensional")) {
        const Json& d = j.at("dimensional");
        reject_unknown_keys(d, {"r1", "k1", "k2", "k3", "s"}, "params.dimensional");
        DimensionalParams dim;
        dim.r1 = require_number(d, "r1", "params.dimensional");
        dim.k1 = require_number(d, "k1", "params.dimensional");
        dim.k2 = require_number(d, "k2", "params.dimensional");
        dim.k3 = require_number(d, "k3", "params.dimensional");
        dim.s = d.contains("s") ? require_number(d, "s", "params.dimensional") : 0.0;
        p.dimensional = dim;
    }
    p.validate();
    return p;
}

Json params_to_json(const ModelParams& p) {
    Json j;
    j["r2"] = p.r2;
    j["a12"] = p.a12;
    j["a13"] = p.a13;
    j["a21"] = p.a21;
    j["a31"] = p.a31;
    j["r3"] = p.r3;
    j["k3"] = p.k3;
    j["d3"] = p.d3;
    j["d2"] = p.d2;
    Json r;
    if (p.response.kind == ResponseCurve::Kind::Zero) {
        r["kind"] = "zero";
    } else {
        r["kind"] = "exponential-saturation";
        r["a"] = {p.response.a[0], p.response.a[1], p.response.a[2]};
        r["nu"] = {p.response.nu[0], p.response.nu[1], p.response.nu[2]};
    }
    j["response"] = r;
    if (p.dimensional) {
        Json d;
        d["r1"] = p.dimensional->r1;
        d["k1"] = p.dimensional->k1;
        d["k2"] = p.dimensional->k2;
        d["k3"] = p.dimensional->k3;
        d["s"] = p.dimensional->s;
        j["dimensional"] = d;
    }
    return j;
}

DrugSchedule schedule_from_json(const Json& j) {
    const std::string ctx = "schedule";
    expect_object(j, ctx);
    if (!j.contains("kind"))
        throw DomainError("schedule: missing key \"kind\"");
    if (!j.at("kind").is_string())
        throw DomainError("schedule.kind: expected a string");
    std::string kind = j.at("kind").get<std::string>();

    DrugSchedule s;
    if (kind == "zero") {
        reject_unknown_keys(j, {"kind"}, ctx);
        s = DrugSchedule::zero();
    } else if (kind == "constant") {
        reject_unknown_keys(j, {"kind", "level"}, ctx);
        s = DrugSchedule::constant(require_number(j, "level", ctx));
    } else if (kind == "piecewise") {
        reject_unknown_keys(j, {"kind", "segments"}, ctx);
        if (!j.contains("segments") || !j.at("segments").is_array())
            throw DomainError("schedule.segments: expected an array");
        std::vector<DrugSchedule::Segment> segs;
        for (const auto& e : j.at("segments")) {
            auto t = as_triple(e, "schedule.segments[]");
            segs.push_back({t[0], t[1], t[2]});
        }
        s = DrugSchedule::piecewise(segs);
    } else {
        throw DomainError("schedule.kind: unknown kind \"" + kind + "\"");
    }
    s.validate();
    return s;
}

Json schedule_to_json(const DrugSchedule& s) {
    Json j;
    switch (s.kind) {
        case DrugSchedule::Kind::Zero:
            j["kind"] = "zero";
            break;
        case DrugSchedule::Kind::Constant:
            j["kind"] = "constant";
            j["level"] = s.level;
            break;
        case DrugSchedule::Kind::Piecewise: {
            j["kind"] = "piecewise";
            Json segs = Json::array();
            for (const auto& seg : s.segments)
                segs.push_back({seg.t0, seg.t1, seg.level});
            j["segments"] = segs;
            break;
        }
    }
    return j;
}

MultipointSpec multipoint_spec_from_json(const Json& j) {
    const std::string ctx = "multipoint";
    reject_unknown_keys(j, {"t0", "T", "nodes", "alpha", "x0", "u0"}, ctx);
    MultipointSpec s;
    s.t0 = require_number(j, "t0", ctx);
    s.T = require_number(j, "T", ctx);
    if (!j.contains("nodes") || !j.at("nodes").is_array())
        throw DomainError("multipoint.nodes: expected an array");
    for (const auto& e : j.at("nodes"))
        s.nodes.push_back(as_number(e, "multipoint.nodes[]"));
    if (!j.contains("alpha") || !j.at("alpha").is_array() ||
        j.at("alpha").size() != 3)
        throw DomainError("multipoint.alpha: expected 3 coefficient rows");
    for (int r = 0; r < 3; ++r) {
        const auto& row = j.at("alpha")[r];
        if (!row.is_array())
            throw DomainError("multipoint.alpha: expected 3 coefficient rows");
        for (const auto& e : row)
            s.alpha[r].push_back(as_number(e, "multipoint.alpha[]"));
    }
    s.x0 = require_vec3(j, "x0", ctx);
    s.u0 = require_number(j, "u0", ctx);
    s.validate();
    return s;
}

Json multipoint_spec_to_json(const MultipointSpec& s) {
    Json j;
    j["t0"] = s.t0;
    j["T"] = s.T;
    j["nodes"] = s.nodes;
    j["alpha"] = {s.alpha[0], s.alpha[1], s.alpha[2]};
    j["x0"] = {s.x0[0], s.x0[1], s.x0[2]};
    j["u0"] = s.u0;
    return j;
}

Json equilibrium_to_json(const Equilibrium& e) {
    Json j;
    j["id"] = e.id();
    j["point"] = {e.point[0], e.point[1], e.point[2]};
    j["u_bar"] = e.u_bar;
    j["v_bar"] = e.v_bar;
    j["feasible"] = e.feasible;
    return j;
}

Json stability_report_to_json(const StabilityReport& r) {
    Json j;
    j["equilibrium"] = equilibrium_to_json(r.equilibrium);
    Json jac = Json::array();
    for (int i = 0; i < 3; ++i)
        jac.push_back({r.jacobian(i, 0), r.jacobian(i, 1), r.jacobian(i, 2)});
    j["jacobian"] = jac;
    Json ev = Json::array();
    for (const auto& l : r.eigenvalues) ev.push_back({l.real(), l.imag()});
    j["eigenvalues"] = ev;
    j["dims"] = Json{{"stable", r.dims.stable},
                     {"unstable", r.dims.unstable},
                     {"center", r.dims.center}};
    j["label"] = to_string(r.label);
    j["margin"] = r.margin;
    j["eps_eig"] = r.eps_eig;
    Json d;
    for (const auto& [k, v] : r.diagnostics) d[k] = v;
    j["diagnostics"] = d;
    if (r.informational_dims.applicable) {
        j["informational_dims"] = Json{{"stable", r.informational_dims.stable},
                                       {"unstable", r.informational_dims.unstable},
                                       {"saddle", r.informational_dims.saddle}};
    } else {
        j["informational_dims"] = nullptr;
    }
    return j;
}

Json hypothesis_audit_to_json(const HypothesisAudit& a) {
    Json j;
    for (const auto& [k, v] : a.entries) j[k] = v.str();
    return j;
}

Json certificate_to_json(const LyapunovCertificate& c) {
    Json j;
    j["equilibrium"] = equilibrium_to_json(c.equilibrium);
    Json B = Json::array();
    for (int i = 0; i < 3; ++i)
        B.push_back({c.B(i, 0), c.B(i, 1), c.B(i, 2)});
    j["B"] = B;
    j["lambda_min"] = c.lambda_min;
    j["r"] = c.r;
    j["C"] = c.C;
    if (c.halfspace) {
        j["halfspace"] = Json{
            {"w", {c.halfspace->w[0], c.halfspace->w[1], c.halfspace->w[2]}},
            {"c", c.halfspace->c}};
    } else {
        j["halfspace"] = nullptr;
    }
    j["verified_samples"] = c.verification.samples;
    j["worst_vdot"] = c.verification.worst_vdot;
    return j;
}

Box3 box_from_json(const Json& j) {
    const std::string ctx = "box";
    reject_unknown_keys(j, {"lo", "hi"}, ctx);
    Box3 b;
    b.lo = require_vec3(j, "lo", ctx);
    b.hi = require_vec3(j, "hi", ctx);
    if (b.empty()) throw DomainError("box: lo must be <= hi componentwise");
    return b;
}

Json box_to_json(const Box3& b) {
    Json j;
    j["lo"] = {b.lo[0], b.lo[1], b.lo[2]};
    j["hi"] = {b.hi[0], b.hi[1], b.hi[2]};
    return j;
}

Json basin_summary_to_json(const BasinEstimate& e) {
    Json j;
    j["domain"] = box_to_json(e.domain);
    j["u0"] = e.u0;
    j["schedule"] = schedule_to_json(e.schedule);
    j["mode"] = e.mode;
    j["seed"] = e.seed;
    j["horizon"] = e.horizon;
    j["eps_conv"] = e.eps_conv;
    j["n"] = e.n();
    Json cands = Json::array();
    for (size_t i = 0; i < e.candidates.size(); ++i) {
        Json c;
        c["id"] = e.candidate_ids[i];
        c["point"] = {e.candidates[i][0], e.candidates[i][1], e.candidates[i][2]};
        c["count"] = e.counts[i];
        c["fraction"] = e.fraction(i);
        cands.push_back(c);
    }
    j["candidates"] = cands;
    j["no_convergence"] = e.no_convergence;
    j["diverged"] = e.diverged;
    j["infeasible"] = e.infeasible;
    j["solver_failed"] = e.solver_failed;
    return j;
}

Json containment_to_json(const ContainmentReport& r) {
    Json j;
    j["inside"] = r.inside;
    j["inside_converged"] = r.inside_converged;
    j["soundness"] = r.soundness;
    j["empirical_basin"] = r.empirical_basin;
    j["conservativeness"] = r.conservativeness;
    return j;
}

Json multipoint_solution_to_json(const MultipointSolution& s) {
    Json j;
    j["y"] = {s.y[0], s.y[1], s.y[2]};
    j["residual_norm"] = s.residual_norm;
    j["iterations"] = s.iterations;
    j["method"] = s.method;
    j["feasible"] = s.feasible;
    return j;
}

Json contraction_report_to_json(const ContractionReport& r) {
    Json j;
    j["lipschitz"] = r.lipschitz;
    j["sup_field"] = r.sup_field;
    j["ball_radius"] = r.ball_radius;
    if (r.horizon_unbounded)
        j["horizon_bound"] = nullptr;
    else
        j["horizon_bound"] = r.horizon_bound;
    j["horizon_unbounded"] = r.horizon_unbounded;
    j["alpha_mass"] = r.alpha_mass;
    j["indicator"] = r.indicator;
    j["sufficient"] = r.sufficient;
    return j;
}

} // namespace oncolyap
