#include "oncolyap/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oncolyap {

namespace {

constexpr int SYM_P[6] = {0, 0, 0, 1, 1, 2};
constexpr int SYM_Q[6] = {0, 1, 2, 1, 2, 2};

struct FrozenLevels {
    double g1, g2, g3, gamma, delta;
};

FrozenLevels levels_at(const ModelParams& p, double u_bar) {
    auto g = response_eval(p.response, u_bar);
    return {g[0], g[1], g[2], 1 - g[0], 1 - g[1] / p.r2};
}

std::optional<Halfspace> make_halfspace(const Equilibrium& eq,
                                        const Eigen::Matrix3d& B,
                                        const ModelParams& p,
                                        const FrozenLevels& lv) {
    const double b11 = B(0, 0), b12 = B(0, 1), b13 = B(0, 2);
    const double b22 = B(1, 1), b23 = B(1, 2), b33 = B(2, 2);

    Halfspace hs;
    auto coef = [&](const char* k, double v) { hs.coefficients.emplace_back(k, v); };

    if (eq.kind == EquilibriumKind::E1) {
        // premise: the sign pattern the construction argues from
        if (!(b11 > 0 && b22 > 0 && b33 > 0 && b12 < 0 && b13 < 0 && b23 > 0))
            return std::nullopt;
        const double g1 = lv.g1, g2 = lv.g2, g3 = lv.g3, gamma = lv.gamma;
        double eta11 = 2 * b11 * (1 + gamma - g1);
        double eta22 = 2 * b12 * gamma + 2 * p.r2 * b22 - 2 * b22 * g2;
        double eta33 = -2 * p.d3;
        double a1 = 2 * b11 * gamma * (g1 - 1);
        double a2 = 2 * b12 * gamma * (g2 - p.r2);
        double a3 = 2 * b13 * (g3 + p.d3);
        double mu1 = eta11 + b11 * gamma * p.a12;
        double mu2 = eta22 + b11 * gamma * p.a13;
        coef("eta11", eta11);
        coef("eta22", eta22);
        coef("eta33", eta33);
        coef("alpha1", a1);
        coef("alpha2", a2);
        coef("alpha3", a3);
        coef("mu1", mu1);
        coef("mu2", mu2);
        hs.w = Eigen::Vector3d(a1 + 2 * mu1, a2, a3);
        hs.c = 0;
    } else if (eq.kind == EquilibriumKind::E2) {
        if (!(b11 > 0 && b22 > 0 && b33 > 0 && b12 < 0)) return std::nullopt;
        const double g1 = lv.g1, g2 = lv.g2, g3 = lv.g3, delta = lv.delta;
        double mu1 = 2 * b11 * (1 - g1) - 2 * delta * b12 * g1;
        double mu2 = 2 * delta * b22 * (p.r2 + g2);
        double mu3 = b33 * (p.d3 + g3);
        double mu0 = std::max({mu1, mu2, mu3});
        // premise: every mu positive (claimed, not automatic)
        if (!(mu1 > 0 && mu2 > 0 && mu3 > 0)) return std::nullopt;
        coef("mu1", mu1);
        coef("mu2", mu2);
        coef("mu3", mu3);
        coef("mu0", mu0);
        hs.w = Eigen::Vector3d(2 * delta * b12 * g1,
                               2 * b22 * g2 * (delta - p.r2) + 2 * mu0 * delta,
                               0);
        hs.c = 0;
    } else {
        return std::nullopt;
    }
    // premise: the half-space must contain the equilibrium itself, or the
    // sampling region around it is empty
    if (!hs.contains(eq.point)) return std::nullopt;
    return hs;
}

std::optional<double> reported_radius_for(const Equilibrium& eq,
                                          const Eigen::Matrix3d& B,
                                          const ModelParams& p,
                                          const FrozenLevels& lv) {
    // only the delta-centered recipe resolves every symbol it uses
    if (eq.kind != EquilibriumKind::E2) return std::nullopt;
    const double b11 = B(0, 0), b12 = B(0, 1), b22 = B(1, 1), b33 = B(2, 2);
    const double delta = lv.delta;
    double mu1 = 2 * b11 * (1 - lv.g1) - 2 * delta * b12 * lv.g1;
    double mu2 = 2 * delta * b22 * (p.r2 + lv.g2);
    double mu3 = b33 * (p.d3 + lv.g3);
    double mu0 = std::max({mu1, mu2, mu3});
    double eta = mu0 * delta * delta - b12 * (delta * p.a12 + lv.g1) +
                 delta * b22 * p.a21 + mu2 * delta * delta;
    if (!(mu0 > 0) || !(eta > 0)) return std::nullopt;
    return std::sqrt(eta / mu0);
}

Eigen::Vector3d unit_direction(UniformRng& rng) {
    // Box-Muller pairs; deterministic across platforms
    for (int tries = 0; tries < 64; ++tries) {
        double u1 = 1.0 - rng.next_double();
        double u2 = rng.next_double();
        double u3 = 1.0 - rng.next_double();
        double u4 = rng.next_double();
        double r1 = std::sqrt(-2 * std::log(u1));
        double r2 = std::sqrt(-2 * std::log(u3));
        Eigen::Vector3d z(r1 * std::cos(2 * M_PI * u2),
                          r1 * std::sin(2 * M_PI * u2),
                          r2 * std::cos(2 * M_PI * u4));
        double n = z.norm();
        if (n > 1e-12) return z / n;
    }
    return Eigen::Vector3d(1, 0, 0);
}

} // namespace

double LyapunovCertificate::V(const Eigen::Vector3d& x) const {
    Eigen::Vector3d d = x - equilibrium.point;
    return d.dot(B * d);
}

bool LyapunovCertificate::in_region(const Eigen::Vector3d& x) const {
    for (int i = 0; i < 3; ++i)
        if (!(x[i] >= 0 && x[i] <= K[i])) return false;
    if (halfspace && !halfspace->contains(x)) return false;
    return true;
}

Eigen::Matrix3d solve_lyapunov(const Eigen::Matrix3d& A) {
    if (!A.allFinite())
        throw DomainError("solve_lyapunov: matrix has non-finite entries");

    Eigen::EigenSolver<Eigen::Matrix3d> es(A);
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            if (std::abs(es.eigenvalues()[i] + es.eigenvalues()[j]) <=
                1e-12 * scale)
                throw SingularMatrixError(
                    "solve_lyapunov: eigenvalue pair sums to zero; the "
                    "equation has no unique solution");

    Eigen::Matrix<double, 6, 6> M;
    for (int m = 0; m < 6; ++m) {
        Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
        E(SYM_P[m], SYM_Q[m]) = 1;
        E(SYM_Q[m], SYM_P[m]) = 1;
        Eigen::Matrix3d R = E * A + A.transpose() * E;
        for (int e = 0; e < 6; ++e) M(e, m) = R(SYM_P[e], SYM_Q[e]);
    }
    Eigen::Matrix<double, 6, 1> rhs;
    for (int e = 0; e < 6; ++e) rhs[e] = SYM_P[e] == SYM_Q[e] ? -1.0 : 0.0;

    Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(M);
    if (!lu.isInvertible())
        throw SingularMatrixError("solve_lyapunov: symmetric system is singular");
    Eigen::Matrix<double, 6, 1> s = lu.solve(rhs);

    Eigen::Matrix3d B;
    for (int m = 0; m < 6; ++m) {
        B(SYM_P[m], SYM_Q[m]) = s[m];
        B(SYM_Q[m], SYM_P[m]) = s[m];
    }
    double resid = (B * A + A.transpose() * B +
                    Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-10))
        throw NumericError("solve_lyapunov: residual " + fmt17(resid) +
                           " exceeds 1e-10");
    return B;
}

double vdot(const Eigen::Vector3d& x, const LyapunovCertificate& cert,
            const ModelParams& params, double u_bar) {
    if (!x.allFinite()) throw DomainError("vdot: point is not finite");
    Eigen::Vector3d d = x - cert.equilibrium.point;
    Eigen::Vector3d f = cell_field(x, params, u_bar);
    return 2.0 * d.dot(cert.B * f);
}

std::vector<double> vdot_batch(const std::vector<Eigen::Vector3d>& points,
                               const LyapunovCertificate& cert,
                               const ModelParams& params, double u_bar,
                               bool parallel) {
    std::vector<double> out(points.size());
    auto eval_one = [&](size_t i) {
        try {
            out[i] = vdot(points[i], cert, params, u_bar);
        } catch (const Error&) {
            out[i] = std::numeric_limits<double>::infinity();
        }
    };
#ifdef _OPENMP
    if (parallel) {
        const int nt = effective_threads();
        const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(static) num_threads(nt)
        for (long i = 0; i < n; ++i) eval_one(static_cast<size_t>(i));
        return out;
    }
#else
    (void)parallel;
#endif
    for (size_t i = 0; i < points.size(); ++i) eval_one(i);
    return out;
}

namespace {

// points of the test region eps <= |x - xbar| <= r, intersected with the
// orthant, the box and the optional half-space
std::vector<Eigen::Vector3d> annulus_points(const LyapunovCertificate& cert,
                                            double r, long budget,
                                            UniformRng rng) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<size_t>(budget) + 600);
    const Eigen::Vector3d& xbar = cert.equilibrium.point;
    const double eps = cert.eps_inner;
    const double e3 = eps * eps * eps, r3 = r * r * r;

    auto keep = [&](const Eigen::Vector3d& x) {
        if (cert.in_region(x)) pts.push_back(x);
    };
    for (long k = 0; k < budget; ++k) {
        Eigen::Vector3d dir = unit_direction(rng);
        double rho = std::cbrt(e3 + rng.next_double() * (r3 - e3));
        keep(xbar + rho * dir);
    }
    // deterministic grids on the two spherical boundaries
    for (double rad : {r, eps}) {
        const int nth = 24, nph = 12;
        for (int j = 0; j < nph; ++j) {
            double cph = 1 - 2 * (j + 0.5) / nph;
            double sph = std::sqrt(std::max(0.0, 1 - cph * cph));
            for (int i = 0; i < nth; ++i) {
                double th = 2 * M_PI * (i + 0.5) / nth;
                keep(xbar + rad * Eigen::Vector3d(sph * std::cos(th),
                                                  sph * std::sin(th), cph));
            }
        }
    }
    return pts;
}

struct PassResult {
    long samples = 0;
    long violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
};

PassResult run_pass(const LyapunovCertificate& cert, const ModelParams& params,
                    double u_bar, double r, long budget, UniformRng rng,
                    bool parallel) {
    auto pts = annulus_points(cert, r, budget, rng);
    auto vals = vdot_batch(pts, cert, params, u_bar, parallel);
    PassResult res;
    res.samples = static_cast<long>(vals.size());
    for (double v : vals) {
        res.worst = std::max(res.worst, v);
        if (v >= 0) ++res.violations;
    }
    return res;
}

} // namespace

LyapunovCertificate build_certificate(const Equilibrium& eq,
                                      const ModelParams& params, double v_bar,
                                      const CertificateOptions& opts) {
    params.validate();
    if (!eq.feasible)
        throw DomainError("build_certificate: equilibrium " + eq.id() +
                          " is infeasible");
    if (std::abs(eq.v_bar - v_bar) > 1e-12 * std::max(1.0, std::abs(v_bar)))
        throw DomainError("build_certificate: equilibrium was computed at "
                          "dose " + fmt17(eq.v_bar) + ", not " + fmt17(v_bar));
    if (!(opts.K.array() > 0).all())
        throw DomainError("build_certificate: box bounds must be positive");
    if (opts.budget < 100)
        throw DomainError("build_certificate: sampling budget below 100");
    if (!(opts.eps_inner > 0))
        throw DomainError("build_certificate: eps_inner must be positive");

    const double ub = v_bar / params.d2;
    Eigen::Matrix3d A = jacobian(eq.point, params, ub);
    Eigen::EigenSolver<Eigen::Matrix3d> es(A);
    for (int i = 0; i < 3; ++i)
        if (!(es.eigenvalues()[i].real() < 0))
            throw DomainError("build_certificate: equilibrium " + eq.id() +
                              " is not locally stable (eigenvalue real part " +
                              fmt17(es.eigenvalues()[i].real()) + ")");

    LyapunovCertificate cert;
    cert.equilibrium = eq;
    cert.B = solve_lyapunov(A);
    cert.K = opts.K;
    cert.eps_inner = opts.eps_inner;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ses(cert.B);
    cert.lambda_min = ses.eigenvalues()[0];
    if (!(cert.lambda_min > 0))
        throw NotPositiveDefiniteError(
            "build_certificate: lambda_min(B) = " + fmt17(cert.lambda_min));

    FrozenLevels lv = levels_at(params, ub);
    cert.halfspace = make_halfspace(eq, cert.B, params, lv);
    cert.reported_radius = reported_radius_for(eq, cert.B, params, lv);

    UniformRng base(opts.seed);
    const long min_pts = std::max<long>(32, opts.budget / 100);
    uint64_t pass = 0;
    auto clean = [&](double r) {
        PassResult res = run_pass(cert, params, ub, r, opts.budget,
                                  UniformRng(base.derive(++pass)), opts.parallel);
        return res.samples >= min_pts && res.violations == 0;
    };

    const double r_max = opts.K.norm();
    const double r_floor = 2 * opts.eps_inner;
    double r;
    if (clean(r_max)) {
        r = r_max;
    } else {
        double lo = r_max;
        for (;;) {
            lo *= 0.5;
            if (lo <= r_floor)
                throw EmptyCertificateError(
                    "build_certificate: no radius above " + fmt17(r_floor) +
                    " passed sampling for " + eq.id());
            if (clean(lo)) break;
        }
        double hi = 2 * lo;
        for (int it = 0; it < 30; ++it) {
            double mid = 0.5 * (lo + hi);
            if (clean(mid))
                lo = mid;
            else
                hi = mid;
        }
        r = lo;
    }

    // final, freshly seeded verification pass governs validity
    for (int attempt = 0; attempt < 50; ++attempt) {
        PassResult res = run_pass(cert, params, ub, r, opts.budget,
                                  UniformRng(base.derive(++pass)), opts.parallel);
        if (res.violations == 0 && res.samples >= min_pts) {
            cert.r = r;
            cert.C = 0.99 * cert.lambda_min * r * r;
            cert.verification.samples = res.samples;
            cert.verification.violations = 0;
            cert.verification.worst_vdot = res.worst;
            cert.valid = true;
            return cert;
        }
        r *= 0.9;
        if (r <= r_floor) break;
    }
    throw EmptyCertificateError(
        "build_certificate: verification kept finding nonnegative vdot for " +
        eq.id());
}

bool level_set_contains(const LyapunovCertificate& cert, const Eigen::Vector3d& x) {
    if (!cert.valid)
        throw DomainError("level_set_contains: certificate is not valid");
    if (!x.allFinite()) return false;
    return cert.in_region(x) && cert.V(x) <= cert.C;
}

} // namespace oncolyap
