#include "oncolyap/stability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oncolyap {

namespace {

struct FrozenDiag {
    // entries of the printed diagonal forms at the frozen drug level
    double gamma, delta;
    double g1, g2, g3;
    double d11, d22, d33;
    double c11, c22, c33;
};

FrozenDiag frozen_diag(const ModelParams& p, double u_bar) {
    FrozenDiag d{};
    auto g = response_eval(p.response, u_bar);
    d.g1 = g[0];
    d.g2 = g[1];
    d.g3 = g[2];
    d.gamma = 1 - d.g1;
    d.delta = 1 - d.g2 / p.r2;
    d.d11 = 1 - 2 * d.gamma - d.g1;  // equals -gamma
    d.d22 = p.r2 - p.a21 * d.gamma - d.g2;
    d.d33 = (p.r3 / (d.gamma + p.k3) - p.a31) * d.gamma - p.d3 - d.g3;
    d.c11 = 1 - p.a12 * d.delta - d.g1;
    d.c22 = p.r2 * (1 - 2 * d.delta) - p.a21 * d.delta - d.g2;
    d.c33 = -p.d3 - d.g3;
    return d;
}

double u_bar_of(const ModelParams& p, double v_bar) {
    if (!(v_bar >= 0))
        throw DomainError("stability: constant dose must be nonnegative");
    return v_bar / p.d2;
}

bool nonneg(const Eigen::Vector3d& x) {
    return x[0] >= 0 && x[1] >= 0 && x[2] >= 0;
}

} // namespace

std::string Equilibrium::id() const {
    switch (kind) {
        case EquilibriumKind::E0: return "E0";
        case EquilibriumKind::E1: return "E1";
        case EquilibriumKind::E2: return "E2";
        case EquilibriumKind::Interior:
            return "interior-" + std::to_string(index);
        case EquilibriumKind::Boundary:
            return "boundary-" + std::to_string(index);
    }
    return "unknown";
}

std::vector<Equilibrium> boundary_equilibria(const ModelParams& params,
                                             double v_bar) {
    params.validate();
    double ub = u_bar_of(params, v_bar);
    FrozenDiag d = frozen_diag(params, ub);

    auto make = [&](EquilibriumKind kind, const Eigen::Vector3d& pt) {
        Equilibrium e;
        e.kind = kind;
        e.point = pt;
        e.u_bar = ub;
        e.v_bar = v_bar;
        e.feasible = nonneg(pt);
        return e;
    };
    return {make(EquilibriumKind::E0, {0, 0, 0}),
            make(EquilibriumKind::E1, {d.gamma, 0, 0}),
            make(EquilibriumKind::E2, {0, d.delta, 0})};
}

std::vector<Equilibrium> find_equilibria(const ModelParams& params, double v_bar,
                                         const std::vector<Eigen::Vector3d>& seeds,
                                         FindStats* stats) {
    params.validate();
    double ub = u_bar_of(params, v_bar);
    FindStats st;
    st.seeds = static_cast<int>(seeds.size());

    std::vector<Eigen::Vector3d> roots;
    for (const Eigen::Vector3d& seed : seeds) {
        if (!seed.allFinite())
            throw DomainError("find_equilibria: seed is not finite");
        Eigen::Vector3d x = seed;
        bool ok = false;
        try {
            Eigen::Vector3d f = cell_field(x, params, ub);
            for (int it = 0; it < 80; ++it) {
                if (f.norm() <= 1e-13) break;
                Eigen::Matrix3d J = jacobian(x, params, ub);
                Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
                if (!lu.isInvertible()) break;
                Eigen::Vector3d p = lu.solve(-f);
                double lam = 1.0;
                bool advanced = false;
                for (int half = 0; half < 40; ++half) {
                    Eigen::Vector3d xn = x + lam * p;
                    Eigen::Vector3d fn;
                    try {
                        fn = cell_field(xn, params, ub);
                    } catch (const NumericError&) {
                        lam *= 0.5;
                        continue;
                    }
                    if (fn.norm() <= (1 - 1e-4 * lam) * f.norm()) {
                        x = xn;
                        f = fn;
                        advanced = true;
                        break;
                    }
                    lam *= 0.5;
                }
                if (!advanced) break;
            }
            ok = f.norm() <= 1e-10 && x.allFinite();
        } catch (const NumericError&) {
            ok = false;
        }
        if (!ok) {
            ++st.dropped;
            continue;
        }
        ++st.converged;
        bool dup = false;
        for (const auto& r : roots)
            if ((r - x).norm() <= 1e-8) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(x);
    }

    auto known = boundary_equilibria(params, v_bar);
    std::vector<Equilibrium> out;
    int n_interior = 0, n_boundary = 0;
    for (const auto& r : roots) {
        Equilibrium e;
        e.point = r;
        e.u_bar = ub;
        e.v_bar = v_bar;
        e.feasible = nonneg(r);
        e.kind = EquilibriumKind::Boundary;
        bool matched = false;
        for (const auto& k : known)
            if ((k.point - r).norm() <= 1e-8) {
                e = k;
                matched = true;
                break;
            }
        if (!matched) {
            if (r[0] > 0 && r[1] > 0 && r[2] > 0) {
                e.kind = EquilibriumKind::Interior;
                e.index = ++n_interior;
            } else {
                e.kind = EquilibriumKind::Boundary;
                e.index = ++n_boundary;
            }
        }
        out.push_back(e);
    }
    if (stats) *stats = st;
    return out;
}

std::string to_string(StabilityLabel label) {
    switch (label) {
        case StabilityLabel::Stable: return "locally-asymptotically-stable";
        case StabilityLabel::Unstable: return "unstable";
        case StabilityLabel::NonHyperbolic: return "non-hyperbolic";
    }
    return "unknown";
}

StabilityReport classify(const Equilibrium& eq, const ModelParams& params,
                         double v_bar, double eps_eig) {
    params.validate();
    if (!eq.feasible)
        throw DomainError("classify: equilibrium " + eq.id() +
                          " has a negative coordinate");
    if (!(eps_eig > 0)) throw DomainError("classify: eps_eig must be positive");
    double ub = u_bar_of(params, v_bar);
    FrozenDiag d = frozen_diag(params, ub);

    StabilityReport rep;
    rep.equilibrium = eq;
    rep.eps_eig = eps_eig;
    rep.jacobian = jacobian(eq.point, params, ub);

    Eigen::EigenSolver<Eigen::Matrix3d> es(rep.jacobian);
    std::array<std::complex<double>, 3> ev;
    for (int i = 0; i < 3; ++i) ev[i] = es.eigenvalues()[i];
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    rep.eigenvalues = ev;

    rep.margin = std::numeric_limits<double>::infinity();
    for (const auto& l : ev) {
        rep.margin = std::min(rep.margin, std::abs(l.real()));
        if (l.real() < -eps_eig)
            ++rep.dims.stable;
        else if (l.real() > eps_eig)
            ++rep.dims.unstable;
        else
            ++rep.dims.center;
    }
    if (rep.dims.stable == 3)
        rep.label = StabilityLabel::Stable;
    else if (rep.dims.unstable > 0)
        rep.label = StabilityLabel::Unstable;
    else
        rep.label = StabilityLabel::NonHyperbolic;

    auto& diag = rep.diagnostics;
    auto put = [&](const char* k, double v) { diag.emplace_back(k, v); };
    switch (eq.kind) {
        case EquilibriumKind::E0: {
            put("gamma", d.gamma);
            // printed diagonal form alongside the analytic linearization
            put("d22", d.d22);
            put("d22_jacobian", params.r2 - d.g2);
            put("c33", d.c33);
            bool st = d.g1 > 1 && d.g2 > params.r2;
            bool un = d.g1 < 1 && d.g2 < params.r2;
            put("stable_sign_condition", st ? 1.0 : 0.0);
            put("unstable_sign_condition", un ? 1.0 : 0.0);
            rep.informational_dims.applicable = st || un;
            if (st) rep.informational_dims = {true, 1, 1, 0};
            if (un) rep.informational_dims = {true, 0, 0, 1};
            break;
        }
        case EquilibriumKind::E1: {
            put("gamma", d.gamma);
            put("d11", d.d11);
            put("d22", d.d22);
            put("d33", d.d33);
            bool st = d.d11 < 0 && d.d22 < 0 && d.d33 < 0;
            bool un = d.d11 > 0 && d.d22 > 0 && d.d33 > 0;
            put("stable_sign_condition", st ? 1.0 : 0.0);
            put("unstable_sign_condition", un ? 1.0 : 0.0);
            if (st) rep.informational_dims = {true, 1, 1, 0};
            if (un) rep.informational_dims = {true, 0, 0, 1};
            break;
        }
        case EquilibriumKind::E2: {
            put("delta", d.delta);
            put("c11", d.c11);
            put("c22", d.c22);
            put("c22_jacobian", -params.r2 * d.delta);
            put("c33", d.c33);
            bool st = d.c11 < 0 && d.c22 < 0;
            bool un = d.c11 > 0 && d.c22 > 0;
            put("stable_sign_condition", st ? 1.0 : 0.0);
            put("unstable_sign_condition", un ? 1.0 : 0.0);
            if (st) rep.informational_dims = {true, 1, 1, 0};
            if (un) rep.informational_dims = {true, 0, 0, 1};
            break;
        }
        default:
            break;
    }
    return rep;
}

std::string Verdict::str() const {
    switch (kind) {
        case Kind::Holds: return "holds";
        case Kind::Fails:
            return reason.empty() ? "fails" : "fails(" + reason + ")";
        case Kind::Indeterminate:
            return "indeterminate(" + reason + ")";
    }
    return "unknown";
}

const Verdict& HypothesisAudit::at(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw DomainError("hypothesis audit: no entry named " + key);
}

HypothesisAudit check_hypotheses(const ModelParams& p, double v_bar) {
    p.validate();
    double ub = u_bar_of(p, v_bar);
    FrozenDiag d = frozen_diag(p, ub);

    auto num = [](double v) { return fmt17(v); };
    auto conj = [&](std::initializer_list<std::pair<const char*, bool>> clauses) {
        for (const auto& [name, ok] : clauses)
            if (!ok) return Verdict::fails(name + std::string(" fails"));
        return Verdict::holds();
    };

    HypothesisAudit audit;
    auto add = [&](const char* key, Verdict v) {
        audit.entries.emplace_back(key, std::move(v));
    };

    add("theorem_4_1_E0_stable",
        conj({{"g1 > 1", d.g1 > 1}, {"g2 > r2", d.g2 > p.r2}}));
    add("theorem_4_1_E0_unstable",
        conj({{"g1 < 1", d.g1 < 1}, {"g2 < r2", d.g2 < p.r2}}));
    add("theorem_4_1_E1_stable", conj({{"d11 < 0", d.d11 < 0},
                                       {"d22 < 0", d.d22 < 0},
                                       {"d33 < 0", d.d33 < 0}}));
    add("theorem_4_1_E1_unstable", conj({{"d11 > 0", d.d11 > 0},
                                         {"d22 > 0", d.d22 > 0},
                                         {"d33 > 0", d.d33 > 0}}));
    add("theorem_4_1_E2_stable",
        conj({{"c11 < 0", d.c11 < 0}, {"c22 < 0", d.c22 < 0}}));
    add("theorem_4_1_E2_unstable",
        conj({{"c11 > 0", d.c11 > 0}, {"c22 > 0", d.c22 > 0}}));

    add("theorem_5_0", conj({{"g1 > 1", d.g1 > 1},
                             {"g2 > r2", d.g2 > p.r2},
                             {"a31*k3 > r3", p.a31 * p.k3 > p.r3}}));

    // only the sign clause is machine-readable; the remaining clauses mix
    // unlabeled inequalities with an undefined d12 symbol
    {
        Verdict v;
        if (!(d.d11 < 0 && d.d22 < 0 && d.d33 < 0)) {
            std::string why = "clause 1 fails: d11 = " + num(d.d11) +
                              ", d22 = " + num(d.d22) + ", d33 = " + num(d.d33);
            v = Verdict::fails(why);
        } else {
            v = Verdict::indeterminate(
                "clause 1 holds but clauses 2-4 are not machine-readable "
                "(undefined symbol d12, unlabeled inequality grouping)");
        }
        add("theorem_5_1", v);
    }

    add("theorem_5_2",
        conj({{"c11 < 0", d.c11 < 0},
              {"delta > 0", d.delta > 0},
              {"c22 < 0", d.c22 < 0},
              {"g1 < 1", d.g1 < 1},
              {"g1 + g2 + r2 > r2*(delta - 1)",
               d.g1 + d.g2 + p.r2 > p.r2 * (d.delta - 1)},
              {"g1 - 1 > delta*(a12 + 1)",
               d.g1 - 1 > d.delta * (p.a12 + 1)}}));

    add("remark_6_1_assumption3",
        conj({{"a21 >= (a12 - 1)/r2", p.a21 >= (p.a12 - 1) / p.r2}}));
    add("remark_6_1_assumption4",
        conj({{"a12 + (1 + a13)/2 > r2",
               p.a12 + 0.5 * (1 + p.a13) > p.r2}}));
    return audit;
}

} // namespace oncolyap
