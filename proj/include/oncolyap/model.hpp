#ifndef ONCOLYAP_MODEL_HPP
#define ONCOLYAP_MODEL_HPP

#include "oncolyap/common.hpp"

#include <array>
#include <optional>
#include <vector>

namespace oncolyap {

// Saturating fractional-kill response g_i(u) = a_i (1 - e^{-nu_i u}).
struct ResponseCurve {
    enum class Kind { Zero, ExponentialSaturation };

    Kind kind = Kind::ExponentialSaturation;
    std::array<double, 3> a{0.0, 0.0, 0.0};   // saturation kill rates, a_i >= 0
    std::array<double, 3> nu{1.0, 1.0, 1.0};  // sensitivities, nu_i > 0

    static ResponseCurve zero() { return ResponseCurve{Kind::Zero, {0, 0, 0}, {1, 1, 1}}; }

    void validate() const;
};

// g_i(u) for the three cell populations. Throws DomainError for u < 0.
std::array<double, 3> response_eval(const ResponseCurve& curve, double u);

// Raw-model constants; only needed to map dimensional data into scaled state.
struct DimensionalParams {
    double r1 = 0;  // tumor growth rate; must exceed the dimensional host rate
    double k1 = 0;  // tumor carrying capacity
    double k2 = 0;  // host carrying capacity
    double k3 = 0;  // immune scaling constant
    double s = 0;   // effector influx (zero in the scaled system)
};

// Parameters of the scaled three-population system.
struct ModelParams {
    double r2 = 0;   // host growth rate
    double a12 = 0;  // host -> tumor competition
    double a13 = 0;  // immune -> tumor kill rate
    double a21 = 0;  // tumor -> host inactivation
    double a31 = 0;  // tumor -> immune inactivation
    double r3 = 0;   // immune stimulation rate
    double k3 = 0;   // recognition half-saturation, > 0
    double d3 = 0;   // immune death rate, > 0
    double d2 = 0;   // drug decay rate, > 0
    ResponseCurve response;
    std::optional<DimensionalParams> dimensional;

    void validate() const;
};

// Scaled state (x1, x2, x3) plus the drug amount u at the tumor site.
struct SystemState {
    double x1 = 0, x2 = 0, x3 = 0, u = 0;

    Eigen::Vector3d cells() const { return {x1, x2, x3}; }
    static SystemState from(const Eigen::Vector3d& x, double u) {
        return {x.x(), x.y(), x.z(), u};
    }
    bool finite() const;
};

// Dose v(t): zero, constant, or piecewise-constant segments.
struct DrugSchedule {
    enum class Kind { Zero, Constant, Piecewise };
    struct Segment {
        double t0 = 0, t1 = 0, level = 0;
    };

    Kind kind = Kind::Zero;
    double level = 0;               // constant dose
    std::vector<Segment> segments;  // sorted, non-overlapping; zero outside

    static DrugSchedule zero() { return {}; }
    static DrugSchedule constant(double v);
    static DrugSchedule piecewise(std::vector<Segment> segs);

    void validate() const;
    double value_at(double t) const;
    // dose level as t -> infinity (0 beyond the last piecewise segment)
    double terminal_level() const;
    // discontinuity times inside (a, b), ascending
    std::vector<double> breakpoints_in(double a, double b) const;
};

// Right-hand side of the scaled 4-state system at dose v_t.
std::array<double, 4> vector_field(const SystemState& state, const ModelParams& params,
                                   double v_t);

// Cell subsystem right-hand side with the drug frozen at amount u.
Eigen::Vector3d cell_field(const Eigen::Vector3d& x, const ModelParams& params, double u);

// Analytic Jacobian of the cell subsystem, drug frozen at amount u.
Eigen::Matrix3d jacobian(const SystemState& state, const ModelParams& params, double u);
Eigen::Matrix3d jacobian(const Eigen::Vector3d& x, const ModelParams& params, double u);

// Exact solution of u' + d2 u = v(t), u(t0) = u0, for piecewise-constant v.
double drug_closed_form(double t, double t0, double u0, const DrugSchedule& schedule,
                        double d2);

struct ScaledState {
    Eigen::Vector3d x;
    double time_scale;  // r1; scaled time is r1 * t
};

// Map dimensional densities (T, N, I) to scaled coordinates.
ScaledState scale_dimensional(double T, double N, double I, const ModelParams& params);

} // namespace oncolyap

#endif
