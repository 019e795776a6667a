#pragma once

#include "rstrack/image.hpp"

namespace rstrack {

// Sampling geometry of a log-polar resampling: n_rho bins along log-radius
// covering [ln rho_min, ln rho_max) and n_theta bins covering [0, 2 pi).
struct LogPolarGrid {
    int n_rho = 64;
    int n_theta = 64;
    double rho_min = 1.0;  // px
    double rho_max = 32.0;  // px
    double cx = 0.0;  // pole, px
    double cy = 0.0;

    double rho_bin_width() const;    // log-radius per bin
    double theta_bin_width() const;  // radians per bin
};

// Default geometry for a patch: 64x64 bins, rho_min 1 px, rho_max half the
// shorter patch side, pole at the patch center.
LogPolarGrid default_lp_grid(int patch_h, int patch_w, int n_rho = 64, int n_theta = 64);

// Resampled patch; rows index rho, columns index theta.
struct LogPolarPatch {
    LogPolarGrid grid;
    Grid values;
};

// values[i, j] = bilinear sample at (cx + e^rho_i cos theta_j, cy + e^rho_i sin theta_j).
// The angle axis is periodic; out-of-bounds samples replicate the border.
LogPolarPatch logpolar_warp(const Image& img, const LogPolarGrid& grid);

struct RotationScaleEstimate {
    double scale = 1.0;          // multiplicative factor, > 0
    double rotation_deg = 0.0;   // wrapped to (-180, 180]
    double confidence = 0.0;     // >= 0, estimator-specific
};

// Map a (rho, theta) bin shift to the rotation/scale it encodes:
// scale = exp(d_rho ln(rho_max/rho_min) / n_rho), rotation = d_theta 360 / n_theta.
RotationScaleEstimate shift_to_rotation_scale(double d_rho_bins, double d_theta_bins,
                                              const LogPolarGrid& grid);

}  // namespace rstrack
