#include "oncolyap/multipoint.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace oncolyap {

namespace {

constexpr double FEAS_SLACK = 10.0;  // multiples of tol below zero tolerated

Trajectory flow(const Eigen::Vector3d& y, const MultipointSpec& sp,
                const ModelParams& params, const DrugSchedule& schedule,
                double tf, const Tolerances& tol) {
    IntegrateOptions opts;
    opts.tol = tol;
    opts.forced_times = sp.nodes;
    return integrate(SystemState::from(y, sp.u0), params, schedule, sp.t0, tf,
                     opts);
}

Eigen::Vector3d residual_from(const Trajectory& traj, const Eigen::Vector3d& y,
                              const MultipointSpec& sp) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (size_t k = 0; k < sp.nodes.size(); ++k) {
        Eigen::Vector3d xk = traj.sample(sp.nodes[k]).cells();
        for (int j = 0; j < 3; ++j) acc[j] += sp.alpha[j][k] * xk[j];
    }
    return y - sp.x0 - acc;
}

Eigen::Vector3d residual_unchecked(const Eigen::Vector3d& y,
                                   const MultipointSpec& sp,
                                   const ModelParams& params,
                                   const DrugSchedule& schedule,
                                   const Tolerances& tol) {
    Trajectory traj = flow(y, sp, params, schedule, sp.max_node(), tol);
    return residual_from(traj, y, sp);
}

MultipointSolution finish(const Eigen::Vector3d& y, int iterations,
                          const char* method, const MultipointSpec& sp,
                          const ModelParams& params, const DrugSchedule& schedule,
                          double tol) {
    MultipointSolution sol;
    sol.y = y;
    sol.iterations = iterations;
    sol.method = method;
    sol.trajectory = flow(y, sp, params, schedule, sp.T, Tolerances{});
    sol.residual_norm =
        residual_from(sol.trajectory, y, sp).lpNorm<Eigen::Infinity>();
    sol.feasible = (y.array() >= -FEAS_SLACK * tol).all();
    if (!sol.feasible)
        throw InfeasibleError(
            std::string(method) + ": solved initial state (" + fmt17(y[0]) +
                ", " + fmt17(y[1]) + ", " + fmt17(y[2]) +
                ") violates the nonnegativity condition",
            y);
    return sol;
}

} // namespace

double MultipointSpec::max_node() const {
    return nodes.empty() ? t0 : *std::max_element(nodes.begin(), nodes.end());
}

void MultipointSpec::validate() const {
    if (!std::isfinite(t0) || !std::isfinite(T) || T < t0)
        throw DomainError("multipoint: invalid horizon [" + fmt17(t0) + ", " +
                          fmt17(T) + "]");
    for (double tk : nodes) {
        if (!std::isfinite(tk) || tk <= t0 || tk > T)
            throw DomainError("multipoint: node " + fmt17(tk) +
                              " outside (" + fmt17(t0) + ", " + fmt17(T) + "]");
    }
    for (int j = 0; j < 3; ++j) {
        if (alpha[j].size() != nodes.size())
            throw DomainError("multipoint: alpha row " + std::to_string(j + 1) +
                              " has " + std::to_string(alpha[j].size()) +
                              " entries for " + std::to_string(nodes.size()) +
                              " nodes");
        for (double a : alpha[j])
            if (!std::isfinite(a))
                throw DomainError("multipoint: non-finite alpha coefficient");
    }
    if (!x0.allFinite()) throw DomainError("multipoint: non-finite offsets");
    if (!std::isfinite(u0) || u0 < 0)
        throw DomainError("multipoint: drug start must be finite and >= 0");
}

Eigen::Vector3d residual(const Eigen::Vector3d& y, const MultipointSpec& spec,
                         const ModelParams& params, const DrugSchedule& schedule,
                         const Tolerances& tol) {
    spec.validate();
    if (!(y.array() >= 0).all())
        throw DomainError("multipoint residual: state has a negative component");
    return residual_unchecked(y, spec, params, schedule, tol);
}

MultipointSolution solve_picard(const MultipointSpec& spec, const ModelParams& params,
                                const DrugSchedule& schedule, double tol,
                                int max_iter) {
    spec.validate();
    params.validate();
    schedule.validate();
    if (!(tol > 0) || max_iter < 1)
        throw DomainError("solve_picard: bad tolerance or iteration budget");

    Eigen::Vector3d y = spec.x0;
    double prev_norm = -1, ratio = 0;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::Vector3d R =
            residual_unchecked(y, spec, params, schedule, Tolerances{});
        double rn = R.lpNorm<Eigen::Infinity>();
        if (prev_norm > 0) ratio = rn / prev_norm;
        if (rn <= tol)
            return finish(y, it, "picard", spec, params, schedule, tol);
        prev_norm = rn;
        y -= R;  // y <- x0 + sum_k alpha o x(t_k)
        if (!y.allFinite())
            throw NonContractionError("solve_picard: iterate left the finite "
                                      "domain", std::numeric_limits<double>::infinity());
    }
    throw NonContractionError(
        "solve_picard: no convergence in " + std::to_string(max_iter) +
            " iterations; last contraction ratio " + fmt17(ratio),
        ratio);
}

MultipointSolution solve_newton(const MultipointSpec& spec, const ModelParams& params,
                                const DrugSchedule& schedule, double tol,
                                int max_iter) {
    spec.validate();
    params.validate();
    schedule.validate();
    if (!(tol > 0) || max_iter < 1)
        throw DomainError("solve_newton: bad tolerance or iteration budget");

    auto R_of = [&](const Eigen::Vector3d& y) {
        return residual_unchecked(y, spec, params, schedule, Tolerances{});
    };

    Eigen::Vector3d y = spec.x0;
    Eigen::Vector3d R = R_of(y);
    for (int it = 1; it <= max_iter; ++it) {
        double rn = R.lpNorm<Eigen::Infinity>();
        if (rn <= tol)
            return finish(y, it, "newton", spec, params, schedule, tol);

        Eigen::Matrix3d J;
        for (int i = 0; i < 3; ++i) {
            double h = 1e-6 * std::max(1.0, std::abs(y[i]));
            Eigen::Vector3d yp = y, ym = y;
            yp[i] += h;
            ym[i] -= h;
            J.col(i) = (R_of(yp) - R_of(ym)) / (2 * h);
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
        if (!lu.isInvertible())
            throw SingularMatrixError("solve_newton: shooting matrix is singular");
        Eigen::Vector3d p = lu.solve(-R);

        double lam = 1.0;
        bool advanced = false;
        for (int half = 0; half < 30; ++half) {
            Eigen::Vector3d yn = y + lam * p;
            Eigen::Vector3d Rn;
            try {
                Rn = R_of(yn);
            } catch (const NumericError&) {
                lam *= 0.5;
                continue;
            }
            if (Rn.lpNorm<Eigen::Infinity>() <= (1 - 1e-4 * lam) * rn) {
                y = yn;
                R = Rn;
                advanced = true;
                break;
            }
            lam *= 0.5;
        }
        if (!advanced)
            throw SolverError("solve_newton: line search made no progress at "
                              "residual " + fmt17(rn));
    }
    throw SolverError("solve_newton: no convergence in " +
                      std::to_string(max_iter) + " iterations");
}

ContractionReport contraction_diagnostics(const MultipointSpec& spec,
                                          const ModelParams& params,
                                          const DrugSchedule& schedule,
                                          const Box3& region, int grid_n) {
    spec.validate();
    params.validate();
    schedule.validate();
    if (region.empty())
        throw DomainError("contraction_diagnostics: empty region");
    if (grid_n < 2) throw DomainError("contraction_diagnostics: grid too small");

    ContractionReport rep;
    double span = spec.max_node() - spec.t0;

    // drug levels swept along the closed-form solution over the node horizon
    std::vector<double> levels;
    const int nt = 16;
    for (int i = 0; i <= nt; ++i) {
        double t = spec.t0 + span * i / nt;
        levels.push_back(drug_closed_form(t, spec.t0, spec.u0, schedule, params.d2));
        if (span == 0) break;
    }

    for (int a = 0; a < grid_n; ++a)
        for (int b = 0; b < grid_n; ++b)
            for (int c = 0; c < grid_n; ++c) {
                Eigen::Vector3d x = region.lo +
                    ((region.hi - region.lo).array() *
                     Eigen::Array3d((a + 0.5) / grid_n, (b + 0.5) / grid_n,
                                    (c + 0.5) / grid_n))
                        .matrix();
                for (double u : levels) {
                    Eigen::Matrix3d J = jacobian(x, params, u);
                    Eigen::JacobiSVD<Eigen::Matrix3d> svd(J);
                    rep.lipschitz =
                        std::max(rep.lipschitz, svd.singularValues()[0]);
                    rep.sup_field =
                        std::max(rep.sup_field, cell_field(x, params, u).norm());
                }
            }

    rep.ball_radius = 0.5 * (region.hi - region.lo).minCoeff();
    if (rep.sup_field == 0) {
        rep.horizon_unbounded = true;
        rep.horizon_bound = std::numeric_limits<double>::infinity();
    } else {
        rep.horizon_bound = rep.ball_radius / rep.sup_field;
    }
    for (size_t k = 0; k < spec.m(); ++k) {
        double mk = 0;
        for (int j = 0; j < 3; ++j) mk = std::max(mk, std::abs(spec.alpha[j][k]));
        rep.alpha_mass += mk;
    }
    rep.indicator = rep.alpha_mass * std::exp(rep.lipschitz * span);
    rep.sufficient = rep.indicator < 1;
    return rep;
}

} // namespace oncolyap
