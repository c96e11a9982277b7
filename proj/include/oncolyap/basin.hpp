#ifndef ONCOLYAP_BASIN_HPP
#define ONCOLYAP_BASIN_HPP

#include "oncolyap/lyapunov.hpp"
#include "oncolyap/multipoint.hpp"

namespace oncolyap {

class InsufficientCoverageError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class SamplingMode { Grid, Random };

struct BasinOptions {
    long n = 1000;
    double horizon = 500;
    double eps_conv = 1e-6;
    SamplingMode mode = SamplingMode::Grid;
    // explicit per-axis grid counts; all zero = derive a cube from n
    std::array<long, 3> grid_dims{0, 0, 0};
    uint64_t seed = 0;
    double u0 = 0;  // drug amount at the start of every orbit
    double t0 = 0;
    Tolerances tol{1e-8, 1e-8};
    double window_frac = 0.1;  // trailing classification window, as span share
    double first_leg = 50;     // initial horizon leg, doubled until conclusive
    bool parallel = true;
};

struct BasinSample {
    enum class Status { Classified, Infeasible, SolverFailed };
    Eigen::Vector3d x0 = Eigen::Vector3d::Zero();
    Status status = Status::Classified;
    ConvergenceVerdict verdict;
};

struct BasinEstimate {
    Box3 domain;
    double u0 = 0;
    DrugSchedule schedule;
    // feasible boundary equilibria at the schedule's terminal dose level
    std::vector<Eigen::Vector3d> candidates;
    std::vector<std::string> candidate_ids;
    std::vector<BasinSample> samples;
    std::vector<long> counts;  // converged per candidate
    long no_convergence = 0;
    long diverged = 0;
    long infeasible = 0;
    long solver_failed = 0;
    std::string mode;
    uint64_t seed = 0;
    double horizon = 0;
    double eps_conv = 0;

    long n() const { return static_cast<long>(samples.size()); }
    long classified() const;
    double fraction(size_t candidate) const;
};

// Forward-integrates every sampled start and classifies its limit; OpenMP
// parallel over points, bit-identical to map_basin_serial.
BasinEstimate map_basin(const ModelParams& params, const DrugSchedule& schedule,
                        const Box3& domain, const BasinOptions& opts);

// Plain-loop reference implementation.
BasinEstimate map_basin_serial(const ModelParams& params,
                               const DrugSchedule& schedule, const Box3& domain,
                               const BasinOptions& opts);

// Same mapping, but each sampled point is the offset vector of a multipoint
// condition solved first; infeasible and failed solves are counted apart.
BasinEstimate map_multipoint_basin(const ModelParams& params,
                                   const DrugSchedule& schedule,
                                   const MultipointSpec& tmpl, const Box3& domain,
                                   const BasinOptions& opts);

struct ContainmentReport {
    long inside = 0;            // samples with level_set_contains true
    long inside_converged = 0;  // of those, converged to the certified point
    double soundness = 0;       // inside_converged / inside
    long empirical_basin = 0;   // all samples converging to the certified point
    double conservativeness = 0;  // inside / empirical_basin
};

ContainmentReport containment_report(const LyapunovCertificate& cert,
                                     const BasinEstimate& estimate);

// label for one sample: candidate id, "none", "diverged", "infeasible",
// or "solver-failed"
std::string attractor_label(const BasinEstimate& estimate, const BasinSample& sample);

// CSV rows x1,x2,x3,attractor_label
std::string basin_csv(const BasinEstimate& estimate);

} // namespace oncolyap

#endif
