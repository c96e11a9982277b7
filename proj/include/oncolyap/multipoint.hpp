#ifndef ONCOLYAP_MULTIPOINT_HPP
#define ONCOLYAP_MULTIPOINT_HPP

#include "oncolyap/sim.hpp"

#include <array>

namespace oncolyap {

// Nonlocal initial condition x_j(t0) = x_j0 + sum_k alpha_jk x_j(t_k),
// u(t0) = u0, solved over [t0, T].
struct MultipointSpec {
    double t0 = 0;
    double T = 0;
    std::vector<double> nodes;                 // t_1..t_m in (t0, T]
    std::array<std::vector<double>, 3> alpha;  // alpha[j][k], component j, node k
    Eigen::Vector3d x0 = Eigen::Vector3d::Zero();
    double u0 = 0;

    size_t m() const { return nodes.size(); }
    double max_node() const;  // t0 when there are no nodes
    void validate() const;
};

struct MultipointSolution {
    Eigen::Vector3d y = Eigen::Vector3d::Zero();  // solved x(t0)
    double residual_norm = 0;
    int iterations = 0;
    std::string method;
    Trajectory trajectory;  // from the solved state over [t0, T]
    bool feasible = true;
};

class NonContractionError : public SolverError {
public:
    NonContractionError(std::string msg, double ratio)
        : SolverError(std::move(msg)), observed_ratio(ratio) {}
    double observed_ratio;
};

class InfeasibleError : public SolverError {
public:
    InfeasibleError(std::string msg, Eigen::Vector3d y_)
        : SolverError(std::move(msg)), y(std::move(y_)) {}
    Eigen::Vector3d y;
};

// R_j(y) = y_j - x_j0 - sum_k alpha_jk x_j(t_k), with x(.) the flow started
// at (y, u0); the nodes are hard step boundaries so the samples carry full
// integrator accuracy.
Eigen::Vector3d residual(const Eigen::Vector3d& y, const MultipointSpec& spec,
                         const ModelParams& params, const DrugSchedule& schedule,
                         const Tolerances& tol = {});

MultipointSolution solve_picard(const MultipointSpec& spec, const ModelParams& params,
                                const DrugSchedule& schedule, double tol = 1e-12,
                                int max_iter = 100);

MultipointSolution solve_newton(const MultipointSpec& spec, const ModelParams& params,
                                const DrugSchedule& schedule, double tol = 1e-12,
                                int max_iter = 50);

struct ContractionReport {
    double lipschitz = 0;    // sup of the cell-Jacobian spectral norm
    double sup_field = 0;    // sup of ||f||
    double ball_radius = 0;  // inscribed-ball radius of the probed region
    double horizon_bound = std::numeric_limits<double>::infinity();
    bool horizon_unbounded = false;  // sup_field == 0
    double alpha_mass = 0;           // sum_k max_j |alpha_jk|
    double indicator = 0;            // alpha_mass * exp(lipschitz * span)
    bool sufficient = false;         // indicator < 1
};

// Grid estimate of the Lipschitz data over `region`, with the drug level
// swept along the closed-form u(t) for t in [t0, max node].
ContractionReport contraction_diagnostics(const MultipointSpec& spec,
                                          const ModelParams& params,
                                          const DrugSchedule& schedule,
                                          const Box3& region, int grid_n = 8);

} // namespace oncolyap

#endif
