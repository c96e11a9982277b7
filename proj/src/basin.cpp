#include "oncolyap/basin.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oncolyap {

namespace {

struct CandidateSet {
    std::vector<Eigen::Vector3d> points;
    std::vector<std::string> ids;
};

CandidateSet terminal_candidates(const ModelParams& params,
                                 const DrugSchedule& schedule) {
    CandidateSet cs;
    double v_term = schedule.terminal_level();
    for (const Equilibrium& e : boundary_equilibria(params, v_term)) {
        if (!e.feasible) continue;
        bool dup = false;
        for (const auto& p : cs.points)
            if ((p - e.point).norm() <= 1e-12) {
                dup = true;
                break;
            }
        if (!dup) {
            cs.points.push_back(e.point);
            cs.ids.push_back(e.id());
        }
    }
    return cs;
}

// integrate in doubling legs until the verdict is conclusive or the horizon
// is exhausted
ConvergenceVerdict classify_point(const Eigen::Vector3d& x0, double u0,
                                  const ModelParams& params,
                                  const DrugSchedule& schedule,
                                  const std::vector<Eigen::Vector3d>& candidates,
                                  const BasinOptions& opts) {
    double t_end = std::min(opts.horizon, opts.first_leg);
    for (;;) {
        IntegrateOptions io;
        io.tol = opts.tol;
        Trajectory traj;
        try {
            traj = integrate(SystemState::from(x0, u0), params, schedule,
                             opts.t0, opts.t0 + t_end, io);
        } catch (const DivergedError& e) {
            return classify_convergence(e.partial, candidates, opts.eps_conv,
                                        opts.window_frac * t_end,
                                        io.overflow_guard);
        } catch (const NumericError&) {
            ConvergenceVerdict v;
            v.label = ConvergenceVerdict::Label::NoConvergence;
            v.terminal_distance = std::numeric_limits<double>::quiet_NaN();
            v.time_of_classification = opts.t0 + t_end;
            return v;
        }
        ConvergenceVerdict v =
            classify_convergence(traj, candidates, opts.eps_conv,
                                 opts.window_frac * t_end);
        if (v.label != ConvergenceVerdict::Label::NoConvergence ||
            t_end >= opts.horizon)
            return v;
        t_end = std::min(opts.horizon, 2 * t_end);
    }
}

std::vector<Eigen::Vector3d> sample_points(const Box3& domain,
                                           const BasinOptions& opts,
                                           std::string& mode_tag) {
    std::vector<Eigen::Vector3d> pts;
    if (opts.mode == SamplingMode::Grid) {
        mode_tag = "grid";
        long m = static_cast<long>(std::ceil(std::cbrt(double(opts.n))));
        m = std::max<long>(1, m);
        std::array<long, 3> dims{m, m, m};
        if (opts.grid_dims != std::array<long, 3>{0, 0, 0}) dims = opts.grid_dims;
        pts.reserve(dims[0] * dims[1] * dims[2]);
        for (long a = 0; a < dims[0]; ++a)
            for (long b = 0; b < dims[1]; ++b)
                for (long c = 0; c < dims[2]; ++c)
                    pts.push_back(domain.lo +
                                  ((domain.hi - domain.lo).array() *
                                   Eigen::Array3d((a + 0.5) / dims[0],
                                                  (b + 0.5) / dims[1],
                                                  (c + 0.5) / dims[2]))
                                      .matrix());
    } else {
        mode_tag = "random";
        UniformRng rng(opts.seed);
        pts.reserve(opts.n);
        for (long i = 0; i < opts.n; ++i) pts.push_back(rng.point_in(domain));
    }
    return pts;
}

void validate_basin_args(const Box3& domain, const BasinOptions& opts) {
    if (domain.empty()) throw DomainError("basin: empty sampling domain");
    if (domain.lo.minCoeff() < 0)
        throw DomainError("basin: sampling domain leaves the nonnegative orthant");
    if (opts.n < 1) throw DomainError("basin: sample count must be >= 1");
    if (!(opts.horizon > 0)) throw DomainError("basin: horizon must be positive");
    if (!(opts.eps_conv > 0)) throw DomainError("basin: eps_conv must be positive");
    if (opts.u0 < 0) throw DomainError("basin: negative drug start");
    if (!(opts.window_frac > 0 && opts.window_frac <= 1))
        throw DomainError("basin: window fraction must be in (0, 1]");
    if (!(opts.first_leg > 0)) throw DomainError("basin: first leg must be positive");
    if (opts.grid_dims != std::array<long, 3>{0, 0, 0})
        for (long d : opts.grid_dims)
            if (d < 1) throw DomainError("basin: grid dims must all be >= 1");
}

BasinEstimate prepare_estimate(const ModelParams& params,
                               const DrugSchedule& schedule, const Box3& domain,
                               const BasinOptions& opts,
                               std::vector<Eigen::Vector3d>& pts) {
    params.validate();
    schedule.validate();
    validate_basin_args(domain, opts);

    BasinEstimate est;
    est.domain = domain;
    est.u0 = opts.u0;
    est.schedule = schedule;
    CandidateSet cs = terminal_candidates(params, schedule);
    est.candidates = cs.points;
    est.candidate_ids = cs.ids;
    est.counts.assign(cs.points.size(), 0);
    est.seed = opts.seed;
    est.horizon = opts.horizon;
    est.eps_conv = opts.eps_conv;
    pts = sample_points(domain, opts, est.mode);
    est.samples.resize(pts.size());
    return est;
}

void reduce_counts(BasinEstimate& est) {
    for (const BasinSample& s : est.samples) {
        switch (s.status) {
            case BasinSample::Status::Infeasible:
                ++est.infeasible;
                continue;
            case BasinSample::Status::SolverFailed:
                ++est.solver_failed;
                continue;
            case BasinSample::Status::Classified:
                break;
        }
        switch (s.verdict.label) {
            case ConvergenceVerdict::Label::ConvergedTo:
                ++est.counts[static_cast<size_t>(s.verdict.attractor)];
                break;
            case ConvergenceVerdict::Label::NoConvergence:
                ++est.no_convergence;
                break;
            case ConvergenceVerdict::Label::Diverged:
                ++est.diverged;
                break;
        }
    }
}

} // namespace

long BasinEstimate::classified() const {
    return n() - infeasible - solver_failed;
}

double BasinEstimate::fraction(size_t candidate) const {
    long denom = classified();
    if (candidate >= counts.size() || denom <= 0) return 0;
    return static_cast<double>(counts[candidate]) / static_cast<double>(denom);
}

BasinEstimate map_basin(const ModelParams& params, const DrugSchedule& schedule,
                        const Box3& domain, const BasinOptions& opts) {
    std::vector<Eigen::Vector3d> pts;
    BasinEstimate est = prepare_estimate(params, schedule, domain, opts, pts);

    const long n = static_cast<long>(pts.size());
#ifdef _OPENMP
    const int nt = opts.parallel ? effective_threads() : 1;
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
#endif
    for (long i = 0; i < n; ++i) {
        BasinSample s;
        s.x0 = pts[static_cast<size_t>(i)];
        s.verdict = classify_point(s.x0, opts.u0, params, schedule,
                                   est.candidates, opts);
        est.samples[static_cast<size_t>(i)] = s;
    }
    reduce_counts(est);
    return est;
}

BasinEstimate map_basin_serial(const ModelParams& params,
                               const DrugSchedule& schedule, const Box3& domain,
                               const BasinOptions& opts) {
    std::vector<Eigen::Vector3d> pts;
    BasinEstimate est = prepare_estimate(params, schedule, domain, opts, pts);
    for (size_t i = 0; i < pts.size(); ++i) {
        BasinSample s;
        s.x0 = pts[i];
        s.verdict = classify_point(s.x0, opts.u0, params, schedule,
                                   est.candidates, opts);
        est.samples[i] = s;
    }
    reduce_counts(est);
    return est;
}

BasinEstimate map_multipoint_basin(const ModelParams& params,
                                   const DrugSchedule& schedule,
                                   const MultipointSpec& tmpl, const Box3& domain,
                                   const BasinOptions& opts) {
    tmpl.validate();
    std::vector<Eigen::Vector3d> pts;
    BasinOptions inner = opts;
    inner.u0 = tmpl.u0;
    inner.t0 = tmpl.t0;
    BasinEstimate est = prepare_estimate(params, schedule, domain, inner, pts);

    const long n = static_cast<long>(pts.size());
#ifdef _OPENMP
    const int nt = opts.parallel ? effective_threads() : 1;
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
#endif
    for (long i = 0; i < n; ++i) {
        BasinSample s;
        s.x0 = pts[static_cast<size_t>(i)];
        MultipointSpec sp = tmpl;
        sp.x0 = s.x0;
        Eigen::Vector3d y;
        bool solved = false;
        try {
            y = solve_picard(sp, params, schedule, 1e-10, 60).y;
            solved = true;
        } catch (const InfeasibleError&) {
            s.status = BasinSample::Status::Infeasible;
        } catch (const NonContractionError&) {
            try {
                y = solve_newton(sp, params, schedule, 1e-10, 50).y;
                solved = true;
            } catch (const InfeasibleError&) {
                s.status = BasinSample::Status::Infeasible;
            } catch (const Error&) {
                s.status = BasinSample::Status::SolverFailed;
            }
        } catch (const Error&) {
            s.status = BasinSample::Status::SolverFailed;
        }
        if (solved)
            s.verdict = classify_point(y, tmpl.u0, params, schedule,
                                       est.candidates, inner);
        est.samples[static_cast<size_t>(i)] = s;
    }
    reduce_counts(est);
    return est;
}

ContainmentReport containment_report(const LyapunovCertificate& cert,
                                     const BasinEstimate& estimate) {
    if (!cert.valid)
        throw DomainError("containment_report: certificate is not valid");

    // the estimate's domain must cover the certified set
    double rc = std::sqrt(cert.C / cert.lambda_min);
    const Eigen::Vector3d& xb = cert.equilibrium.point;
    for (int i = 0; i < 3; ++i) {
        double lo_c = std::max(0.0, xb[i] - rc);
        double hi_c = std::min(cert.K[i], xb[i] + rc);
        if (estimate.domain.lo[i] > lo_c + 1e-12 ||
            estimate.domain.hi[i] < hi_c - 1e-12)
            throw DomainError("containment_report: estimate domain does not "
                              "cover the certified set");
    }

    int target = -1;
    for (size_t i = 0; i < estimate.candidate_ids.size(); ++i)
        if (estimate.candidate_ids[i] == cert.equilibrium.id())
            target = static_cast<int>(i);
    if (target < 0)
        throw DomainError("containment_report: certified equilibrium " +
                          cert.equilibrium.id() +
                          " is not among the estimate's candidates");

    ContainmentReport rep;
    for (const BasinSample& s : estimate.samples) {
        if (s.status != BasinSample::Status::Classified) continue;
        bool conv_to_target =
            s.verdict.label == ConvergenceVerdict::Label::ConvergedTo &&
            s.verdict.attractor == target;
        if (conv_to_target) ++rep.empirical_basin;
        if (level_set_contains(cert, s.x0)) {
            ++rep.inside;
            if (conv_to_target) ++rep.inside_converged;
        }
    }
    if (rep.inside < 30)
        throw InsufficientCoverageError(
            "containment_report: only " + std::to_string(rep.inside) +
            " samples fall inside the certified set (need 30)");
    rep.soundness = static_cast<double>(rep.inside_converged) /
                    static_cast<double>(rep.inside);
    rep.conservativeness = rep.empirical_basin > 0
                               ? static_cast<double>(rep.inside) /
                                     static_cast<double>(rep.empirical_basin)
                               : std::numeric_limits<double>::infinity();
    return rep;
}

std::string attractor_label(const BasinEstimate& estimate,
                            const BasinSample& sample) {
    switch (sample.status) {
        case BasinSample::Status::Infeasible:
            return "infeasible";
        case BasinSample::Status::SolverFailed:
            return "solver-failed";
        case BasinSample::Status::Classified:
            break;
    }
    switch (sample.verdict.label) {
        case ConvergenceVerdict::Label::ConvergedTo:
            return estimate.candidate_ids[static_cast<size_t>(
                sample.verdict.attractor)];
        case ConvergenceVerdict::Label::NoConvergence:
            return "none";
        case ConvergenceVerdict::Label::Diverged:
            return "diverged";
    }
    return "none";
}

std::string basin_csv(const BasinEstimate& estimate) {
    std::ostringstream os;
    os << "x1,x2,x3,attractor_label\n";
    for (const BasinSample& s : estimate.samples)
        os << fmt17(s.x0[0]) << ',' << fmt17(s.x0[1]) << ',' << fmt17(s.x0[2])
           << ',' << attractor_label(estimate, s) << '\n';
    return os.str();
}

} // namespace oncolyap
