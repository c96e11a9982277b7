#ifndef ONCOLYAP_SVG_HPP
#define ONCOLYAP_SVG_HPP

#include "oncolyap/basin.hpp"
#include "oncolyap/sim.hpp"

#include <string>

namespace oncolyap {

// line plot of x1, x2, x3, u against t
std::string trajectory_svg(const Trajectory& traj);

// fill color for an attractor label; candidates cycle a fixed palette,
// "none"/"diverged"/"infeasible"/"solver-failed" have reserved colors
std::string label_color(const std::string& label,
                        const std::vector<std::string>& candidate_ids);

// nx-by-ny raster of a grid estimate produced with grid_dims {nx, ny, 1};
// one rect per sample, colored by attractor_label
std::string slice_svg(const BasinEstimate& estimate, long nx, long ny);

} // namespace oncolyap

#endif
