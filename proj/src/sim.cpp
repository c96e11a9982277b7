#include "oncolyap/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace oncolyap {

namespace {

// Dormand-Prince 4(5), FSAL.
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// fifth-order weights minus the embedded fourth-order ones
constexpr double E1 = B1 - 5179.0 / 57600, E3 = B3 - 7571.0 / 16695,
                 E4 = B4 - 393.0 / 640, E5 = B5 + 92097.0 / 339200,
                 E6 = B6 - 187.0 / 2100, E7 = -1.0 / 40;

template <int N>
using Arr = std::array<double, N>;

template <int N>
double max_abs(const Arr<N>& y) {
    double m = 0;
    for (double v : y) m = std::max(m, std::abs(v));
    return m;
}

template <int N>
bool all_finite(const Arr<N>& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

// One accepted sample: time, state, right-limit derivative.
template <int N>
struct Sample {
    double t;
    Arr<N> y;
    Arr<N> dy;
};

// Rhs must provide set_step(t, h) -- called once before the stages of each
// trial step so schedule lookups can be pinned inside the step -- and
// operator()(t, y, f).
template <int N, typename Rhs>
class Driver {
public:
    Driver(Rhs rhs, const IntegrateOptions& opts) : rhs_(rhs), opts_(opts) {}

    // Integrates from (boundaries.front(), y0) to boundaries.back(), landing
    // exactly on every interior boundary. Throws on step failure; returns
    // false when the overflow guard tripped (samples hold the partial orbit).
    bool run(const std::vector<double>& boundaries, const Arr<N>& y0) {
        samples.clear();
        stats = IntegratorStats{};
        stats.abs_tol = opts_.tol.abs;
        stats.rel_tol = opts_.tol.rel;

        double t = boundaries.front();
        Arr<N> y = y0;
        Arr<N> k1;
        eval(t, y, k1, t, boundaries[1] - t);
        samples.push_back({t, y, k1});
        if (max_abs<N>(y) > opts_.overflow_guard) return false;

        double h = initial_step(t, y, k1, boundaries[1] - t);
        long total_steps = 0;

        for (size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
            const double tb = boundaries[seg + 1];
            if (seg > 0) {
                // dose level may change across the boundary: refresh the
                // FSAL derivative and the recorded right-limit slope
                eval(t, y, k1, t, tb - t);
                samples.back().dy = k1;
            }
            while (t < tb) {
                if (++total_steps > opts_.max_steps)
                    throw NumericError("integrate: exceeded step budget (" +
                                       std::to_string(opts_.max_steps) + ")");
                const double hmin = 1e-13 * std::max(1.0, std::abs(t));
                if (h < hmin) throw StepUnderflowError(t, h);
                h = std::min(h, tb - t);

                Arr<N> y_new, k7;
                double err = attempt(t, y, k1, h, y_new, k7);
                if (!(err <= 1.0)) {  // rejected (or non-finite)
                    ++stats.steps_rejected;
                    double fac = std::isfinite(err)
                                     ? std::max(0.2, 0.9 * std::pow(err, -0.2))
                                     : 0.1;
                    h *= std::min(1.0, fac);
                    continue;
                }
                ++stats.steps_accepted;
                t = (h == tb - t) ? tb : t + h;
                y = y_new;
                k1 = k7;
                samples.push_back({t, y, k1});
                if (max_abs<N>(y) > opts_.overflow_guard) return false;

                double fac = err == 0.0 ? 5.0
                                        : std::clamp(0.9 * std::pow(err, -0.2),
                                                     0.2, 5.0);
                h *= fac;
            }
        }
        return true;
    }

    std::vector<Sample<N>> samples;
    IntegratorStats stats;

private:
    void eval(double t, const Arr<N>& y, Arr<N>& f, double step_t, double step_h) {
        rhs_.set_step(step_t, step_h);
        rhs_(t, y, f);
    }

    // Returns the scaled error norm of one trial step; infinity when a stage
    // left the numeric domain (treated as a rejection upstream).
    double attempt(double t, const Arr<N>& y, const Arr<N>& k1, double h,
                   Arr<N>& y_new, Arr<N>& k7) {
        rhs_.set_step(t, h);
        Arr<N> k2, k3, k4, k5, k6, tmp;
        try {
            for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * A21 * k1[i];
            rhs_(t + C2 * h, tmp, k2);
            for (int i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            rhs_(t + C3 * h, tmp, k3);
            for (int i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            rhs_(t + C4 * h, tmp, k4);
            for (int i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] +
                                     A54 * k4[i]);
            rhs_(t + C5 * h, tmp, k5);
            for (int i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] +
                                     A64 * k4[i] + A65 * k5[i]);
            rhs_(t + h, tmp, k6);
            for (int i = 0; i < N; ++i)
                y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] +
                                       B5 * k5[i] + B6 * k6[i]);
            rhs_(t + h, y_new, k7);
        } catch (const NumericError&) {
            return std::numeric_limits<double>::infinity();
        }
        if (!all_finite<N>(y_new) || !all_finite<N>(k7))
            return std::numeric_limits<double>::infinity();

        double sum = 0;
        for (int i = 0; i < N; ++i) {
            double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                            E6 * k6[i] + E7 * k7[i]);
            double sc = opts_.tol.abs +
                        opts_.tol.rel * std::max(std::abs(y[i]), std::abs(y_new[i]));
            sum += (e / sc) * (e / sc);
        }
        return std::sqrt(sum / N);
    }

    // Hairer-style starting step selection, confined to the first segment.
    double initial_step(double t, const Arr<N>& y, const Arr<N>& f0,
                        double seg_len) {
        auto wnorm = [&](const Arr<N>& v, const Arr<N>& ref) {
            double s = 0;
            for (int i = 0; i < N; ++i) {
                double sc = opts_.tol.abs + opts_.tol.rel * std::abs(ref[i]);
                s += (v[i] / sc) * (v[i] / sc);
            }
            return std::sqrt(s / N);
        };
        double d0 = wnorm(y, y), d1 = wnorm(f0, y);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, seg_len);
        Arr<N> y1, f1;
        for (int i = 0; i < N; ++i) y1[i] = y[i] + h0 * f0[i];
        double d2 = 0;
        try {
            eval(t + h0, y1, f1, t, h0);
            if (all_finite<N>(f1)) {
                Arr<N> df;
                for (int i = 0; i < N; ++i) df[i] = f1[i] - f0[i];
                d2 = wnorm(df, y) / h0;
            }
        } catch (const NumericError&) {
            d2 = 0;
        }
        double dm = std::max(d1, d2);
        double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                : std::pow(0.01 / dm, 0.2);
        return std::min({100 * h0, h1, seg_len});
    }

    Rhs rhs_;
    const IntegrateOptions& opts_;
};

struct FullRhs {
    const ModelParams& p;
    const DrugSchedule& sched;
    double v_step = 0;

    void set_step(double t, double h) { v_step = sched.value_at(t + 0.5 * h); }
    void operator()(double, const Arr<4>& y, Arr<4>& f) const {
        SystemState s{y[0], y[1], y[2], y[3]};
        auto g = vector_field(s, p, v_step);
        f = {g[0], g[1], g[2], g[3]};
    }
};

struct ReducedRhs {
    const ModelParams& p;
    const DrugSchedule& sched;
    double t0;
    double u0;

    void set_step(double, double) {}
    void operator()(double t, const Arr<3>& y, Arr<3>& f) const {
        double u = drug_closed_form(t, t0, u0, sched, p.d2);
        Eigen::Vector3d g = cell_field(Eigen::Vector3d(y[0], y[1], y[2]), p, u);
        f = {g[0], g[1], g[2]};
    }
};

std::vector<double> assemble_boundaries(double t0, double tf,
                                        const DrugSchedule& schedule,
                                        const IntegrateOptions& opts) {
    std::vector<double> b = schedule.breakpoints_in(t0, tf);
    for (double ft : opts.forced_times) {
        if (!std::isfinite(ft))
            throw DomainError("integrate: forced time is not finite");
        if (ft > t0 && ft < tf) b.push_back(ft);
    }
    b.push_back(t0);
    b.push_back(tf);
    std::sort(b.begin(), b.end());
    // collapse boundaries that are indistinguishable at double precision
    std::vector<double> out;
    for (double v : b) {
        if (!out.empty() &&
            v - out.back() <= 1e-14 * std::max({1.0, std::abs(v), std::abs(out.back())}))
            continue;
        out.push_back(v);
    }
    if (out.size() < 2) out.push_back(tf);  // degenerate span
    out.front() = t0;
    out.back() = tf;
    return out;
}

void check_span(const SystemState& initial, double t0, double tf,
                const IntegrateOptions& opts) {
    if (!std::isfinite(t0) || !std::isfinite(tf) || tf < t0)
        throw DomainError("integrate: invalid time span [" + fmt17(t0) + ", " +
                          fmt17(tf) + "]");
    if (!initial.finite())
        throw DomainError("integrate: initial state is not finite");
    if (initial.u < 0)
        throw DomainError("integrate: negative initial drug amount");
    if (!(opts.overflow_guard > 0))
        throw DomainError("integrate: overflow guard must be positive");
    if (opts.tol.abs <= 0 || opts.tol.rel <= 0)
        throw DomainError("integrate: tolerances must be positive");
}

} // namespace

SystemState Trajectory::sample(double ti) const {
    if (empty()) throw DomainError("trajectory: sample of empty trajectory");
    if (ti < t.front() || ti > t.back())
        throw DomainError("trajectory: sample time " + fmt17(ti) +
                          " outside [" + fmt17(t.front()) + ", " +
                          fmt17(t.back()) + "]");
    auto it = std::lower_bound(t.begin(), t.end(), ti);
    size_t hi = static_cast<size_t>(it - t.begin());
    if (hi < t.size() && t[hi] == ti) return y[hi];
    size_t lo = hi - 1;
    double h = t[hi] - t[lo];
    double s = (ti - t[lo]) / h;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    double h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s);
    double h11 = s * s * (s - 1);
    auto blend = [&](double ylo, double dlo, double yhi, double dhi) {
        return h00 * ylo + h * h10 * dlo + h01 * yhi + h * h11 * dhi;
    };
    SystemState out;
    out.x1 = blend(y[lo].x1, dy[lo].x1, y[hi].x1, dy[hi].x1);
    out.x2 = blend(y[lo].x2, dy[lo].x2, y[hi].x2, dy[hi].x2);
    out.x3 = blend(y[lo].x3, dy[lo].x3, y[hi].x3, dy[hi].x3);
    out.u = blend(y[lo].u, dy[lo].u, y[hi].u, dy[hi].u);
    return out;
}

Trajectory integrate(const SystemState& initial, const ModelParams& params,
                     const DrugSchedule& schedule, double t0, double tf,
                     const IntegrateOptions& opts) {
    params.validate();
    schedule.validate();
    check_span(initial, t0, tf, opts);

    Trajectory traj;
    if (tf == t0) {
        auto f = vector_field(initial, params, schedule.value_at(t0));
        traj.t = {t0};
        traj.y = {initial};
        traj.dy = {SystemState{f[0], f[1], f[2], f[3]}};
        traj.stats.abs_tol = opts.tol.abs;
        traj.stats.rel_tol = opts.tol.rel;
        return traj;
    }

    auto boundaries = assemble_boundaries(t0, tf, schedule, opts);
    FullRhs rhs{params, schedule};
    Driver<4, FullRhs> drv(rhs, opts);
    bool complete = drv.run(boundaries,
                            {initial.x1, initial.x2, initial.x3, initial.u});

    traj.stats = drv.stats;
    traj.t.reserve(drv.samples.size());
    traj.y.reserve(drv.samples.size());
    traj.dy.reserve(drv.samples.size());
    for (const auto& s : drv.samples) {
        traj.t.push_back(s.t);
        traj.y.push_back({s.y[0], s.y[1], s.y[2], s.y[3]});
        traj.dy.push_back({s.dy[0], s.dy[1], s.dy[2], s.dy[3]});
    }
    if (!complete) {
        // build the message before the trajectory is moved into the error
        std::string msg = "integrate: state exceeded overflow guard " +
                          fmt17(opts.overflow_guard) + " at t = " +
                          fmt17(traj.t.back());
        throw DivergedError(std::move(msg), std::move(traj));
    }
    return traj;
}

Trajectory integrate_reduced(const SystemState& initial, const ModelParams& params,
                             const DrugSchedule& schedule, double t0, double tf,
                             const IntegrateOptions& opts) {
    params.validate();
    schedule.validate();
    check_span(initial, t0, tf, opts);

    auto fill = [&](double t, const Arr<3>& x, const Arr<3>& dx, SystemState& y,
                    SystemState& dy) {
        double u = drug_closed_form(t, t0, initial.u, schedule, params.d2);
        y = {x[0], x[1], x[2], u};
        dy = {dx[0], dx[1], dx[2], schedule.value_at(t) - params.d2 * u};
    };

    Trajectory traj;
    if (tf == t0) {
        Eigen::Vector3d f = cell_field(initial.cells(), params, initial.u);
        SystemState y, dy;
        fill(t0, {initial.x1, initial.x2, initial.x3}, {f[0], f[1], f[2]}, y, dy);
        traj.t = {t0};
        traj.y = {y};
        traj.dy = {dy};
        traj.stats.abs_tol = opts.tol.abs;
        traj.stats.rel_tol = opts.tol.rel;
        return traj;
    }

    auto boundaries = assemble_boundaries(t0, tf, schedule, opts);
    ReducedRhs rhs{params, schedule, t0, initial.u};
    Driver<3, ReducedRhs> drv(rhs, opts);
    bool complete = drv.run(boundaries, {initial.x1, initial.x2, initial.x3});

    traj.stats = drv.stats;
    traj.t.reserve(drv.samples.size());
    traj.y.reserve(drv.samples.size());
    traj.dy.reserve(drv.samples.size());
    for (const auto& s : drv.samples) {
        SystemState y, dy;
        fill(s.t, s.y, s.dy, y, dy);
        traj.t.push_back(s.t);
        traj.y.push_back(y);
        traj.dy.push_back(dy);
    }
    if (!complete) {
        std::string msg = "integrate_reduced: state exceeded overflow guard " +
                          fmt17(opts.overflow_guard) + " at t = " +
                          fmt17(traj.t.back());
        throw DivergedError(std::move(msg), std::move(traj));
    }
    return traj;
}

ConvergenceVerdict classify_convergence(const Trajectory& traj,
                                        const std::vector<Eigen::Vector3d>& candidates,
                                        double eps_conv, double window,
                                        double overflow_guard) {
    if (traj.empty())
        throw DomainError("classify_convergence: empty trajectory");
    if (candidates.empty())
        throw DomainError("classify_convergence: no candidate attractors");
    if (!(eps_conv > 0) || !(window >= 0))
        throw DomainError("classify_convergence: bad tolerance or window");

    ConvergenceVerdict v;
    for (size_t i = 0; i < traj.t.size(); ++i) {
        const SystemState& s = traj.y[i];
        double m = std::max({std::abs(s.x1), std::abs(s.x2), std::abs(s.x3),
                             std::abs(s.u)});
        if (!(m <= overflow_guard)) {
            v.label = ConvergenceVerdict::Label::Diverged;
            v.time_of_classification = traj.t[i];
            size_t last = i == 0 ? 0 : i - 1;
            Eigen::Vector3d x = traj.y[last].cells();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : candidates) best = std::min(best, (x - c).norm());
            v.terminal_distance = best;
            return v;
        }
    }

    double tf = traj.tf();
    double w = std::min(window, tf - traj.t0());
    double t_lo = tf - w;

    std::vector<Eigen::Vector3d> pts;
    for (size_t i = 0; i < traj.t.size(); ++i)
        if (traj.t[i] >= t_lo) pts.push_back(traj.y[i].cells());
    const int dense = 32;
    if (w > 0)
        for (int k = 0; k <= dense; ++k)
            pts.push_back(traj.sample(t_lo + w * k / dense).cells());
    if (pts.empty()) pts.push_back(traj.back().cells());

    Eigen::Vector3d x_end = traj.back().cells();
    int best = -1;
    double best_worst = std::numeric_limits<double>::infinity();
    double best_term = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < candidates.size(); ++j) {
        double worst = 0;
        for (const auto& p : pts)
            worst = std::max(worst, (p - candidates[j]).norm());
        if (worst <= eps_conv && worst < best_worst) {
            best = static_cast<int>(j);
            best_worst = worst;
        }
        best_term = std::min(best_term, (x_end - candidates[j]).norm());
    }

    v.time_of_classification = tf;
    if (best >= 0) {
        v.label = ConvergenceVerdict::Label::ConvergedTo;
        v.attractor = best;
        v.terminal_distance = (x_end - candidates[best]).norm();
    } else {
        v.label = ConvergenceVerdict::Label::NoConvergence;
        v.terminal_distance = best_term;
    }
    return v;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "t,x1,x2,x3,u\n";
    for (size_t i = 0; i < traj.t.size(); ++i) {
        const SystemState& s = traj.y[i];
        os << fmt17(traj.t[i]) << ',' << fmt17(s.x1) << ',' << fmt17(s.x2)
           << ',' << fmt17(s.x3) << ',' << fmt17(s.u) << '\n';
    }
    return os.str();
}

} // namespace oncolyap
