#include "oncolyap/model.hpp"

#include <algorithm>
#include <cmath>

namespace oncolyap {

void ResponseCurve::validate() const {
    if (kind == Kind::Zero) return;
    for (int i = 0; i < 3; ++i) {
        if (!(a[i] >= 0) || !std::isfinite(a[i]))
            throw DomainError("response curve: a_i must be >= 0 and finite");
        if (!(nu[i] > 0) || !std::isfinite(nu[i]))
            throw DomainError("response curve: nu_i must be > 0");
    }
}

std::array<double, 3> response_eval(const ResponseCurve& curve, double u) {
    if (!(u >= 0)) throw DomainError("response_eval: drug amount u must be >= 0");
    if (curve.kind == ResponseCurve::Kind::Zero) return {0.0, 0.0, 0.0};
    std::array<double, 3> g;
    for (int i = 0; i < 3; ++i) {
        // -expm1 keeps full precision for small nu*u
        g[i] = curve.a[i] * (-std::expm1(-curve.nu[i] * u));
    }
    return g;
}

void ModelParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v))
            throw DomainError(std::string("model params: ") + name + " must be > 0");
    };
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0) || !std::isfinite(v))
            throw DomainError(std::string("model params: ") + name + " must be >= 0");
    };
    positive(r2, "r2");
    positive(r3, "r3");
    positive(k3, "k3");
    positive(d3, "d3");
    positive(d2, "d2");
    nonneg(a12, "a12");
    nonneg(a13, "a13");
    nonneg(a21, "a21");
    nonneg(a31, "a31");
    response.validate();
    if (dimensional) {
        const auto& d = *dimensional;
        positive(d.r1, "dimensional.r1");
        positive(d.k1, "dimensional.k1");
        positive(d.k2, "dimensional.k2");
        positive(d.k3, "dimensional.k3");
        nonneg(d.s, "dimensional.s");
        // tumor cells proliferate faster than host cells: r1 > r2_dim = r2 * r1
        if (!(r2 < 1.0))
            throw DomainError("model params: scaled r2 must be < 1 (r1 > r2 in raw units)");
    }
}

bool SystemState::finite() const {
    return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3) && std::isfinite(u);
}

DrugSchedule DrugSchedule::constant(double v) {
    DrugSchedule s;
    s.kind = Kind::Constant;
    s.level = v;
    s.validate();
    return s;
}

DrugSchedule DrugSchedule::piecewise(std::vector<Segment> segs) {
    DrugSchedule s;
    s.kind = Kind::Piecewise;
    s.segments = std::move(segs);
    std::sort(s.segments.begin(), s.segments.end(),
              [](const Segment& a, const Segment& b) { return a.t0 < b.t0; });
    s.validate();
    return s;
}

void DrugSchedule::validate() const {
    if (kind == Kind::Constant && !(level >= 0))
        throw DomainError("schedule: constant dose must be >= 0");
    if (kind != Kind::Piecewise) return;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.level >= 0)) throw DomainError("schedule: segment level must be >= 0");
        if (!(s.t1 > s.t0)) throw DomainError("schedule: segment must satisfy t1 > t0");
        if (i > 0 && segments[i].t0 < segments[i - 1].t1 - 1e-15)
            throw DomainError("schedule: segments must be sorted and non-overlapping");
    }
}

double DrugSchedule::value_at(double t) const {
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return level;
    case Kind::Piecewise:
        for (const auto& s : segments)
            if (t >= s.t0 && t < s.t1) return s.level;
        return 0.0;
    }
    return 0.0;
}

double DrugSchedule::terminal_level() const {
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return level;
    case Kind::Piecewise: return 0.0;  // doses end after the last segment
    }
    return 0.0;
}

std::vector<double> DrugSchedule::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    if (kind != Kind::Piecewise) return out;
    for (const auto& s : segments) {
        if (s.t0 > a && s.t0 < b) out.push_back(s.t0);
        if (s.t1 > a && s.t1 < b) out.push_back(s.t1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::array<double, 4> vector_field(const SystemState& state, const ModelParams& params,
                                   double v_t) {
    if (!state.finite()) throw DomainError("vector_field: state must be finite");
    if (!(v_t >= 0)) throw DomainError("vector_field: dose v(t) must be >= 0");
    const double x1 = state.x1, x2 = state.x2, x3 = state.x3, u = state.u;
    if (x1 + params.k3 <= 0)
        throw NumericError("vector_field: singular recognition term, x1 + k3 <= 0");
    const auto g = response_eval(params.response, std::max(u, 0.0));
    std::array<double, 4> f;
    f[0] = x1 * (1.0 - x1) - params.a12 * x1 * x2 - params.a13 * x1 * x3 - g[0] * x1;
    f[1] = params.r2 * x2 * (1.0 - x2) - params.a21 * x1 * x2 - g[1] * x2;
    f[2] = params.r3 * x1 * x3 / (x1 + params.k3) - params.a31 * x1 * x3 - params.d3 * x3 -
           g[2] * x3;
    f[3] = v_t - params.d2 * u;
    return f;
}

Eigen::Vector3d cell_field(const Eigen::Vector3d& x, const ModelParams& params, double u) {
    const double x1 = x.x(), x2 = x.y(), x3 = x.z();
    if (x1 + params.k3 <= 0)
        throw NumericError("cell_field: singular recognition term, x1 + k3 <= 0");
    const auto g = response_eval(params.response, std::max(u, 0.0));
    Eigen::Vector3d f;
    f.x() = x1 * (1.0 - x1) - params.a12 * x1 * x2 - params.a13 * x1 * x3 - g[0] * x1;
    f.y() = params.r2 * x2 * (1.0 - x2) - params.a21 * x1 * x2 - g[1] * x2;
    f.z() = params.r3 * x1 * x3 / (x1 + params.k3) - params.a31 * x1 * x3 -
            params.d3 * x3 - g[2] * x3;
    return f;
}

Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, const ModelParams& params, double u) {
    const double x1 = x.x(), x2 = x.y(), x3 = x.z();
    if (x1 + params.k3 <= 0)
        throw NumericError("jacobian: singular recognition term, x1 + k3 <= 0");
    const auto g = response_eval(params.response, std::max(u, 0.0));
    const double denom = x1 + params.k3;
    Eigen::Matrix3d J;
    J(0, 0) = 1.0 - 2.0 * x1 - params.a12 * x2 - params.a13 * x3 - g[0];
    J(0, 1) = -params.a12 * x1;
    J(0, 2) = -params.a13 * x1;
    J(1, 0) = -params.a21 * x2;
    J(1, 1) = params.r2 * (1.0 - 2.0 * x2) - params.a21 * x1 - g[1];
    J(1, 2) = 0.0;
    J(2, 0) = params.r3 * params.k3 * x3 / (denom * denom) - params.a31 * x3;
    J(2, 1) = 0.0;
    J(2, 2) = params.r3 * x1 / denom - params.a31 * x1 - params.d3 - g[2];
    return J;
}

Eigen::Matrix3d jacobian(const SystemState& state, const ModelParams& params, double u) {
    return jacobian(state.cells(), params, u);
}

double drug_closed_form(double t, double t0, double u0, const DrugSchedule& schedule,
                        double d2) {
    if (t < t0) throw DomainError("drug_closed_form: t must be >= t0");
    if (!(u0 >= 0)) throw DomainError("drug_closed_form: u0 must be >= 0");
    if (!(d2 > 0)) throw DomainError("drug_closed_form: d2 must be > 0");
    double u = std::exp(-d2 * (t - t0)) * u0;
    // contribution of a constant dose v on [lo, hi]: (v/d2)(e^{-d2(t-hi)} - e^{-d2(t-lo)})
    auto segment_term = [&](double lo, double hi, double v) {
        lo = std::max(lo, t0);
        hi = std::min(hi, t);
        if (hi <= lo || v == 0.0) return 0.0;
        return v / d2 * (std::exp(-d2 * (t - hi)) - std::exp(-d2 * (t - lo)));
    };
    switch (schedule.kind) {
    case DrugSchedule::Kind::Zero: break;
    case DrugSchedule::Kind::Constant:
        u += segment_term(t0, t, schedule.level);
        break;
    case DrugSchedule::Kind::Piecewise:
        for (const auto& s : schedule.segments) u += segment_term(s.t0, s.t1, s.level);
        break;
    }
    return u;
}

ScaledState scale_dimensional(double T, double N, double I, const ModelParams& params) {
    if (!params.dimensional)
        throw DomainError("scale_dimensional: dimensional parameter block missing");
    if (!(T >= 0 && N >= 0 && I >= 0))
        throw DomainError("scale_dimensional: densities must be >= 0");
    const auto& d = *params.dimensional;
    return {Eigen::Vector3d{T / d.k1, N / d.k2, I / d.k3}, d.r1};
}

} // namespace oncolyap
