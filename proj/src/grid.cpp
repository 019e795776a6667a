#include "rstrack/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rstrack {

Grid::Grid(int r, int c, double fill) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw std::invalid_argument("Grid: negative dimensions");
    v.assign(std::size_t(r) * std::size_t(c), fill);
}

PeakLocation find_peak(const Grid& g) {
    if (g.empty()) throw std::invalid_argument("find_peak: empty grid");
    PeakLocation p{0, 0, g.v[0]};
    for (int r = 0; r < g.rows; ++r) {
        const double* row = &g.v[std::size_t(r) * g.cols];
        for (int c = 0; c < g.cols; ++c) {
            if (row[c] > p.value) {
                p.row = r;
                p.col = c;
                p.value = row[c];
            }
        }
    }
    return p;
}

SidelobeStats sidelobe_stats(const Grid& g, int peak_row, int peak_col, int win_h, int win_w) {
    if (g.empty()) throw std::invalid_argument("sidelobe_stats: empty grid");
    int eff_h = win_h >= g.rows ? std::max(1, g.rows / 2) : win_h;
    int eff_w = win_w >= g.cols ? std::max(1, g.cols / 2) : win_w;
    int half_h = eff_h / 2;
    int half_w = eff_w / 2;

    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int r = 0; r < g.rows; ++r) {
        bool in_rows = std::abs(r - peak_row) <= half_h;
        for (int c = 0; c < g.cols; ++c) {
            if (in_rows && std::abs(c - peak_col) <= half_w) continue;
            double x = g.at(r, c);
            sum += x;
            sum_sq += x * x;
            ++n;
        }
    }
    SidelobeStats s;
    s.count = n;
    if (n > 0) {
        s.mean = sum / n;
        double var = sum_sq / n - s.mean * s.mean;
        s.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    return s;
}

double parabolic_offset(double a, double b, double c) {
    double denom = 2.0 * (a - 2.0 * b + c);
    if (std::abs(denom) < 1e-12) return 0.0;
    double off = (a - c) / denom;
    return std::clamp(off, -0.5, 0.5);
}

double mean_abs_diff(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mean_abs_diff: shape mismatch");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += std::abs(a.v[i] - b.v[i]);
    return s / double(a.v.size());
}

double max_abs_diff(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

bool all_finite(const Grid& g) {
    for (double x : g.v)
        if (!std::isfinite(x)) return false;
    return true;
}

double grid_min(const Grid& g) {
    if (g.empty()) throw std::invalid_argument("grid_min: empty grid");
    return *std::min_element(g.v.begin(), g.v.end());
}

double grid_max(const Grid& g) {
    if (g.empty()) throw std::invalid_argument("grid_max: empty grid");
    return *std::max_element(g.v.begin(), g.v.end());
}

}  // namespace rstrack
