#ifndef ONCOLYAP_LYAPUNOV_HPP
#define ONCOLYAP_LYAPUNOV_HPP

#include "oncolyap/stability.hpp"

#include <optional>

namespace oncolyap {

class NotPositiveDefiniteError : public NumericError {
public:
    using NumericError::NumericError;
};

// no radius admitted a violation-free sampling pass
class EmptyCertificateError : public SolverError {
public:
    using SolverError::SolverError;
};

// {x in R^3_+ : w . x <= c}, with the named coefficients that produced it
struct Halfspace {
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    double c = 0;
    std::vector<std::pair<std::string, double>> coefficients;

    bool contains(const Eigen::Vector3d& x) const { return w.dot(x) <= c; }
};

struct VerificationSummary {
    long samples = 0;      // in-region points whose vdot was evaluated
    long violations = 0;   // points with vdot >= 0
    double worst_vdot = -std::numeric_limits<double>::infinity();
};

// Quadratic certificate V(x) = (x - xbar)^T B (x - xbar) with certified
// sublevel set Omega_C = {V <= C} inside box, orthant and half-space.
struct LyapunovCertificate {
    Equilibrium equilibrium;
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
    double lambda_min = 0;
    double r = 0;  // sampling-verified radius of vdot-negativity
    double C = 0;
    Eigen::Vector3d K = Eigen::Vector3d::Zero();  // box is [0,K] per axis
    std::optional<Halfspace> halfspace;
    // closed-form radius from the coefficient recipe, when every symbol in
    // it resolves; informational only, never drives r
    std::optional<double> reported_radius;
    double eps_inner = 0;
    VerificationSummary verification;
    bool valid = false;

    double V(const Eigen::Vector3d& x) const;
    // orthant, box and (when present) half-space membership
    bool in_region(const Eigen::Vector3d& x) const;
};

// Solves B A + A^T B = -I through the 6-unknown symmetric linear system.
Eigen::Matrix3d solve_lyapunov(const Eigen::Matrix3d& A);

// Vdot(x) = 2 (x - xbar)^T B f(x) with f the nonlinear cell field at the
// frozen drug level.
double vdot(const Eigen::Vector3d& x, const LyapunovCertificate& cert,
            const ModelParams& params, double u_bar);

// Batch kernel behind certificate verification; parallel and serial paths
// produce identical results.
std::vector<double> vdot_batch(const std::vector<Eigen::Vector3d>& points,
                               const LyapunovCertificate& cert,
                               const ModelParams& params, double u_bar,
                               bool parallel);

struct CertificateOptions {
    Eigen::Vector3d K = Eigen::Vector3d(2, 2, 2);
    long budget = 20000;      // Monte-Carlo points per sampling pass
    double eps_inner = 1e-4;  // exclusion radius around the equilibrium
    uint64_t seed = 0x10ca1ba5ull;
    bool parallel = true;
};

LyapunovCertificate build_certificate(const Equilibrium& eq,
                                      const ModelParams& params, double v_bar,
                                      const CertificateOptions& opts = {});

bool level_set_contains(const LyapunovCertificate& cert, const Eigen::Vector3d& x);

} // namespace oncolyap

#endif
