#pragma once

#include <cstddef>
#include <vector>

namespace rstrack {

// Dense row-major double matrix. Shared container for images, spectra,
// masks, score maps and correlation surfaces.
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int r, int c, double fill = 0.0);

    double& at(int r, int c) { return v[std::size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[std::size_t(r) * cols + c]; }

    std::size_t count() const { return v.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }
    bool empty() const { return v.empty(); }
};

struct PeakLocation {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

// Strict argmax; ties resolve to the first occurrence in row-major order.
PeakLocation find_peak(const Grid& g);

struct SidelobeStats {
    double mean = 0.0;
    double stddev = 0.0;  // population std
    int count = 0;
};

// Mean/std of all cells outside a win_h x win_w window centered on the peak.
// A window that does not fit the grid shrinks to half the grid extent.
SidelobeStats sidelobe_stats(const Grid& g, int peak_row, int peak_col, int win_h, int win_w);

// Sub-bin offset of a peak from the 3-point parabola through (a, b, c) =
// (left, peak, right): (a - c) / (2 (a - 2b + c)), clamped to [-0.5, 0.5].
double parabolic_offset(double a, double b, double c);

double mean_abs_diff(const Grid& a, const Grid& b);
double max_abs_diff(const Grid& a, const Grid& b);
bool all_finite(const Grid& g);
double grid_min(const Grid& g);
double grid_max(const Grid& g);

}  // namespace rstrack
