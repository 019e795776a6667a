#pragma once

#include <span>
#include <vector>

#include "rstrack/features.hpp"

namespace rstrack {

// Discriminative model: convolution filter bank w over feature channels with
// a single-channel response, score mask m in [0, 1], regularization factor
// gamma. Score: s = m .* r + (1 - m) .* max(0, r) with r the correlation of
// the features with w.
struct DiscriminativeModel {
    int in_channels = 0;
    int kh = 0;  // odd
    int kw = 0;  // odd
    std::vector<double> w;  // [channel][kh][kw]
    Grid m;                 // score-map dims, entries in [0, 1]
    double gamma = 1e-2;

    DiscriminativeModel() = default;
    DiscriminativeModel(int channels, int kernel_h, int kernel_w, int map_rows, int map_cols);
};

struct ScoreMap {
    Grid scores;
    PeakLocation peak;
};

// y(p) = exp(-|p - center|^2 / (2 sigma^2)). Peak value 1 at the center cell.
Grid gaussian_label(int rows, int cols, double center_r, double center_c, double sigma);

ScoreMap score(const DiscriminativeModel& model, const FeatureMap& x);

struct TddSample {
    FeatureMap x;
    Grid y;
};

// Parameter-space vector for gradients and directions.
struct TddDirection {
    std::vector<double> w;
    Grid m;
    double gamma = 0.0;
};

struct TddLossResult {
    double value = 0.0;
    TddDirection grad;
};

// L = (1/N) sum ||s(x,w) - y||^2 + ||gamma * w||^2 with gradients for w, m and
// gamma. The hinge subgradient is 1[r > 0]. When input_grads is non-null it
// receives dL/dx for each sample (for chaining into a feature adapter).
TddLossResult tdd_loss(const DiscriminativeModel& model, std::span<const TddSample> samples,
                       std::vector<FeatureMap>* input_grads = nullptr);

// ||J v||^2 for the stacked least-squares residuals of the loss above
// (Gauss-Newton quadratic form along v). v_x optionally carries per-sample
// input tangents.
double tdd_gn_quadform(const DiscriminativeModel& model, std::span<const TddSample> samples,
                       const TddDirection& v, const std::vector<FeatureMap>* v_x = nullptr);

// Gauss-Newton curvature application: returns 2 J^T (J v).
TddDirection tdd_gn_apply(const DiscriminativeModel& model, std::span<const TddSample> samples,
                          const TddDirection& v);

struct PositionEstimate {
    int row = 0;
    int col = 0;
    double off_r = 0.0;  // sub-cell, clamped to [-0.5, 0.5]
    double off_c = 0.0;
    double y_max = 0.0;
};

// Argmax plus parabolic sub-cell refinement over the 3x3 neighborhood.
PositionEstimate predict_position(const ScoreMap& smap);

}  // namespace rstrack
