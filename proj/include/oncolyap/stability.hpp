#ifndef ONCOLYAP_STABILITY_HPP
#define ONCOLYAP_STABILITY_HPP

#include "oncolyap/model.hpp"

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace oncolyap {

enum class EquilibriumKind { E0, E1, E2, Interior, Boundary };

struct Equilibrium {
    EquilibriumKind kind = EquilibriumKind::Boundary;
    int index = 0;  // disambiguates interior-n / boundary-n ids
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double u_bar = 0;  // steady-state drug amount v_bar / d2
    double v_bar = 0;
    bool feasible = true;  // all coordinates >= 0

    std::string id() const;
};

// E0(0,0,0), E1(gamma,0,0), E2(0,delta,0) with gamma = 1 - g1(u_bar) and
// delta = 1 - g2(u_bar)/r2, drug frozen at u_bar = v_bar / d2.
std::vector<Equilibrium> boundary_equilibria(const ModelParams& params, double v_bar);

struct FindStats {
    int seeds = 0;
    int converged = 0;
    int dropped = 0;
};

// Damped Newton on the frozen-drug cell field from each seed; roots are
// deduplicated within 1e-8 and kept only when the residual is <= 1e-10.
std::vector<Equilibrium> find_equilibria(const ModelParams& params, double v_bar,
                                         const std::vector<Eigen::Vector3d>& seeds,
                                         FindStats* stats = nullptr);

enum class StabilityLabel { Stable, Unstable, NonHyperbolic };

std::string to_string(StabilityLabel label);

struct ManifoldDims {
    int stable = 0;
    int unstable = 0;
    int center = 0;
};

// Alternative bookkeeping that counts one representative eigendirection per
// manifold family under the matching sign condition; informational only and
// never used for the stability label.
struct InformationalDims {
    bool applicable = false;
    int stable = 0;
    int unstable = 0;
    int saddle = 0;
};

struct StabilityReport {
    Equilibrium equilibrium;
    Eigen::Matrix3d jacobian = Eigen::Matrix3d::Zero();
    std::array<std::complex<double>, 3> eigenvalues{};
    ManifoldDims dims;          // eigenvalue sign counts with tolerance eps_eig
    StabilityLabel label = StabilityLabel::NonHyperbolic;
    double margin = 0;          // min_i |Re lambda_i|
    double eps_eig = 0;
    // named scalar diagnostics (gamma/delta, d_ii, c_ii, sign conditions)
    std::vector<std::pair<std::string, double>> diagnostics;
    InformationalDims informational_dims;
};

StabilityReport classify(const Equilibrium& eq, const ModelParams& params,
                         double v_bar, double eps_eig = 1e-9);

struct Verdict {
    enum class Kind { Holds, Fails, Indeterminate };
    Kind kind = Kind::Indeterminate;
    std::string reason;

    static Verdict holds() { return {Kind::Holds, ""}; }
    static Verdict fails(std::string r) { return {Kind::Fails, std::move(r)}; }
    static Verdict indeterminate(std::string r) {
        return {Kind::Indeterminate, std::move(r)};
    }
    std::string str() const;
};

// Ordered map criterion-id -> verdict; every machine-readable inequality in
// the named hypothesis sets is evaluated at u_bar = v_bar / d2.
struct HypothesisAudit {
    std::vector<std::pair<std::string, Verdict>> entries;
    const Verdict& at(const std::string& key) const;
};

HypothesisAudit check_hypotheses(const ModelParams& params, double v_bar);

} // namespace oncolyap

#endif
