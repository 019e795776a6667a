#include "rstrack/logpolar.hpp"

#include <cmath>
#include <stdexcept>

namespace rstrack {

double LogPolarGrid::rho_bin_width() const { return std::log(rho_max / rho_min) / n_rho; }

double LogPolarGrid::theta_bin_width() const { return 2.0 * kPi / n_theta; }

namespace {

void validate_grid(const LogPolarGrid& g) {
    if (g.n_rho < 8 || g.n_theta < 8)
        throw std::invalid_argument("logpolar: need at least 8 bins per axis");
    if (!(g.rho_min > 0.0) || !(g.rho_max > g.rho_min))
        throw std::invalid_argument("logpolar: need 0 < rho_min < rho_max");
}

}  // namespace

LogPolarGrid default_lp_grid(int patch_h, int patch_w, int n_rho, int n_theta) {
    LogPolarGrid g;
    g.n_rho = n_rho;
    g.n_theta = n_theta;
    g.rho_min = 1.0;
    g.rho_max = 0.5 * std::min(patch_h, patch_w);
    g.cx = (patch_w - 1) / 2.0;
    g.cy = (patch_h - 1) / 2.0;
    validate_grid(g);
    return g;
}

LogPolarPatch logpolar_warp(const Image& img, const LogPolarGrid& grid) {
    validate_grid(grid);
    if (grid.cx < 0.0 || grid.cx > img.width() - 1 || grid.cy < 0.0 ||
        grid.cy > img.height() - 1)
        throw std::invalid_argument("logpolar_warp: grid center outside image");

    const double log_min = std::log(grid.rho_min);
    const double d_rho = grid.rho_bin_width();
    const double d_theta = grid.theta_bin_width();

    LogPolarPatch out;
    out.grid = grid;
    out.values = Grid(grid.n_rho, grid.n_theta);
    for (int i = 0; i < grid.n_rho; ++i) {
        double radius = std::exp(log_min + i * d_rho);
        for (int j = 0; j < grid.n_theta; ++j) {
            double theta = j * d_theta;
            double x = grid.cx + radius * std::cos(theta);
            double y = grid.cy + radius * std::sin(theta);
            out.values.at(i, j) = bilinear_clamped(img.px, x, y);
        }
    }
    return out;
}

RotationScaleEstimate shift_to_rotation_scale(double d_rho_bins, double d_theta_bins,
                                              const LogPolarGrid& grid) {
    validate_grid(grid);
    RotationScaleEstimate est;
    est.scale = std::exp(d_rho_bins * std::log(grid.rho_max / grid.rho_min) / grid.n_rho);
    est.rotation_deg = wrap_degrees(d_theta_bins * 360.0 / grid.n_theta);
    est.confidence = 0.0;
    return est;
}

}  // namespace rstrack
