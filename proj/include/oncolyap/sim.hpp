#ifndef ONCOLYAP_SIM_HPP
#define ONCOLYAP_SIM_HPP

#include "oncolyap/model.hpp"

#include <string>
#include <vector>

namespace oncolyap {

struct Tolerances {
    double abs = 1e-10;
    double rel = 1e-10;
};

struct IntegratorStats {
    long steps_accepted = 0;
    long steps_rejected = 0;
    double abs_tol = 0;
    double rel_tol = 0;
};

// Sampled orbit with enough data for cubic Hermite dense output between
// accepted steps.
struct Trajectory {
    std::vector<double> t;
    std::vector<SystemState> y;
    std::vector<SystemState> dy;
    IntegratorStats stats;

    bool empty() const { return t.empty(); }
    double t0() const { return t.front(); }
    double tf() const { return t.back(); }
    const SystemState& back() const { return y.back(); }
    SystemState sample(double ti) const;
};

struct IntegrateOptions {
    Tolerances tol;
    // extra hard step boundaries in addition to schedule breakpoints
    std::vector<double> forced_times;
    double overflow_guard = 1e6;
    long max_steps = 10000000;
};

class DivergedError : public NumericError {
public:
    DivergedError(std::string msg, Trajectory partial_)
        : NumericError(std::move(msg)), partial(std::move(partial_)) {}
    Trajectory partial;
};

class StepUnderflowError : public NumericError {
public:
    StepUnderflowError(double t_, double h_)
        : NumericError("integrate: step size underflow at t = " + fmt17(t_) +
                       ", h = " + fmt17(h_)),
          t(t_), h(h_) {}
    double t, h;
};

// Adaptive Dormand-Prince 4(5) integration of the full 4-state system.
// Schedule breakpoints and forced_times are hard step boundaries, so dose
// discontinuities never straddle a step.
Trajectory integrate(const SystemState& initial, const ModelParams& params,
                     const DrugSchedule& schedule, double t0, double tf,
                     const IntegrateOptions& opts = {});

// Same orbit through the reduced 3-equation form: the drug amount is taken
// from the closed-form solution of u' + d2 u = v instead of being integrated.
Trajectory integrate_reduced(const SystemState& initial, const ModelParams& params,
                             const DrugSchedule& schedule, double t0, double tf,
                             const IntegrateOptions& opts = {});

struct ConvergenceVerdict {
    enum class Label { ConvergedTo, NoConvergence, Diverged };

    Label label = Label::NoConvergence;
    int attractor = -1;  // index into the candidate list when converged
    double terminal_distance = 0;
    double time_of_classification = 0;
};

// Converged iff the cell-space distance to one candidate stays <= eps_conv
// throughout the trailing `window` of the trajectory.
ConvergenceVerdict classify_convergence(const Trajectory& traj,
                                        const std::vector<Eigen::Vector3d>& candidates,
                                        double eps_conv, double window,
                                        double overflow_guard = 1e6);

// Trajectory CSV: header t,x1,x2,x3,u and 17-significant-digit values.
std::string trajectory_csv(const Trajectory& traj);

} // namespace oncolyap

#endif
