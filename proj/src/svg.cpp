#include "oncolyap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace oncolyap {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0, hi = 1;
    double px0 = 0, px1 = 1;  // pixel range (px1 < px0 flips the axis)

    double map(double v) const {
        double s = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return px0 + s * (px1 - px0);
    }
};

void ticks(std::ostringstream& os, const Axis& a, bool vertical, double cross,
           int n = 5) {
    for (int i = 0; i < n; ++i) {
        double v = a.lo + (a.hi - a.lo) * i / (n - 1);
        double p = a.map(v);
        if (vertical) {
            os << "<line x1=\"" << num(cross - 5) << "\" y1=\"" << num(p)
               << "\" x2=\"" << num(cross) << "\" y2=\"" << num(p)
               << "\" stroke=\"#333\"/>\n";
            os << "<text x=\"" << num(cross - 8) << "\" y=\"" << num(p + 4)
               << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\">"
               << num(v) << "</text>\n";
        } else {
            os << "<line x1=\"" << num(p) << "\" y1=\"" << num(cross)
               << "\" x2=\"" << num(p) << "\" y2=\"" << num(cross + 5)
               << "\" stroke=\"#333\"/>\n";
            os << "<text x=\"" << num(p) << "\" y=\"" << num(cross + 18)
               << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">"
               << num(v) << "</text>\n";
        }
    }
}

const char* const SERIES_COLORS[4] = {"#d62728", "#2ca02c", "#1f77b4",
                                      "#9467bd"};
const char* const SERIES_NAMES[4] = {"x1", "x2", "x3", "u"};

const char* const CANDIDATE_PALETTE[6] = {"#1f77b4", "#2ca02c", "#d62728",
                                          "#ff7f0e", "#9467bd", "#8c564b"};

} // namespace

std::string trajectory_svg(const Trajectory& traj) {
    if (traj.empty()) throw DomainError("trajectory_svg: empty trajectory");

    const double W = 800, H = 500;
    const double L = 60, R = 660, T = 20, B = 450;

    double ylo = 0, yhi = 0;
    bool first = true;
    for (const SystemState& s : traj.y) {
        double vals[4] = {s.x1, s.x2, s.x3, s.u};
        for (double v : vals) {
            if (first) {
                ylo = yhi = v;
                first = false;
            } else {
                ylo = std::min(ylo, v);
                yhi = std::max(yhi, v);
            }
        }
    }
    double pad = 0.05 * std::max(yhi - ylo, 1e-12);
    Axis xax{traj.t0(), traj.tf(), L, R};
    if (!(xax.hi > xax.lo)) xax.hi = xax.lo + 1;
    Axis yax{ylo - pad, yhi + pad, B, T};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
       << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
       << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H
       << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << num(L) << "\" y1=\"" << num(B) << "\" x2=\""
       << num(R) << "\" y2=\"" << num(B) << "\" stroke=\"#333\"/>\n";
    os << "<line x1=\"" << num(L) << "\" y1=\"" << num(T) << "\" x2=\""
       << num(L) << "\" y2=\"" << num(B) << "\" stroke=\"#333\"/>\n";
    ticks(os, xax, false, B);
    ticks(os, yax, true, L);
    os << "<text x=\"" << num((L + R) / 2) << "\" y=\"" << num(B + 35)
       << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333\">t</text>\n";

    for (int k = 0; k < 4; ++k) {
        os << "<polyline fill=\"none\" stroke=\"" << SERIES_COLORS[k]
           << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < traj.t.size(); ++i) {
            const SystemState& s = traj.y[i];
            double vals[4] = {s.x1, s.x2, s.x3, s.u};
            os << num(xax.map(traj.t[i])) << ',' << num(yax.map(vals[k]));
            if (i + 1 < traj.t.size()) os << ' ';
        }
        os << "\"/>\n";
    }

    for (int k = 0; k < 4; ++k) {
        double ly = T + 20 + 22 * k;
        os << "<line x1=\"" << num(R + 20) << "\" y1=\"" << num(ly)
           << "\" x2=\"" << num(R + 50) << "\" y2=\"" << num(ly)
           << "\" stroke=\"" << SERIES_COLORS[k]
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(R + 58) << "\" y=\"" << num(ly + 4)
           << "\" font-size=\"12\" fill=\"#333\">" << SERIES_NAMES[k]
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string label_color(const std::string& label,
                        const std::vector<std::string>& candidate_ids) {
    if (label == "none") return "#cccccc";
    if (label == "diverged") return "#000000";
    if (label == "infeasible") return "#f5f5f5";
    if (label == "solver-failed") return "#ff00ff";
    for (size_t i = 0; i < candidate_ids.size(); ++i)
        if (candidate_ids[i] == label) return CANDIDATE_PALETTE[i % 6];
    throw DomainError("label_color: unknown attractor label \"" + label + "\"");
}

std::string slice_svg(const BasinEstimate& estimate, long nx, long ny) {
    if (nx < 1 || ny < 1) throw DomainError("slice_svg: raster dims must be >= 1");
    if (estimate.n() != nx * ny)
        throw DomainError("slice_svg: estimate holds " +
                          std::to_string(estimate.n()) + " samples, raster wants " +
                          std::to_string(nx * ny));

    const double plot = 440;
    const double L = 60, T = 40;
    const double legend_w = 150;
    const double W = L + plot + 20 + legend_w, H = T + plot + 60;
    const double cw = plot / nx, ch = plot / ny;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
       << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
       << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(L) << "\" y=\"" << num(T - 14)
       << "\" font-size=\"13\" fill=\"#333\">attractor slice at x3 = "
       << num(0.5 * (estimate.domain.lo[2] + estimate.domain.hi[2]))
       << "</text>\n";

    // samples are laid out a-major: index = a*ny + b, a along x1, b along x2
    for (long a = 0; a < nx; ++a)
        for (long b = 0; b < ny; ++b) {
            const BasinSample& s =
                estimate.samples[static_cast<size_t>(a * ny + b)];
            os << "<rect x=\"" << num(L + a * cw) << "\" y=\""
               << num(T + (ny - 1 - b) * ch) << "\" width=\"" << num(cw + 0.5)
               << "\" height=\"" << num(ch + 0.5) << "\" fill=\""
               << label_color(attractor_label(estimate, s),
                              estimate.candidate_ids)
               << "\"/>\n";
        }

    Axis xax{estimate.domain.lo[0], estimate.domain.hi[0], L, L + plot};
    Axis yax{estimate.domain.lo[1], estimate.domain.hi[1], T + plot, T};
    os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\""
       << num(plot) << "\" height=\"" << num(plot)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    ticks(os, xax, false, T + plot);
    ticks(os, yax, true, L);
    os << "<text x=\"" << num(L + plot / 2) << "\" y=\"" << num(T + plot + 40)
       << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333\">x1</text>\n";
    os << "<text x=\"" << num(18) << "\" y=\"" << num(T + plot / 2)
       << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333\" "
          "transform=\"rotate(-90 18 "
       << num(T + plot / 2) << ")\">x2</text>\n";

    std::vector<std::string> legend = estimate.candidate_ids;
    legend.push_back("none");
    legend.push_back("diverged");
    if (estimate.infeasible > 0) legend.push_back("infeasible");
    if (estimate.solver_failed > 0) legend.push_back("solver-failed");
    for (size_t k = 0; k < legend.size(); ++k) {
        double ly = T + 10 + 22 * static_cast<double>(k);
        os << "<rect x=\"" << num(L + plot + 20) << "\" y=\"" << num(ly)
           << "\" width=\"14\" height=\"14\" stroke=\"#333\" fill=\""
           << label_color(legend[k], estimate.candidate_ids) << "\"/>\n";
        os << "<text x=\"" << num(L + plot + 40) << "\" y=\"" << num(ly + 11)
           << "\" font-size=\"12\" fill=\"#333\">" << xml_escape(legend[k])
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace oncolyap
