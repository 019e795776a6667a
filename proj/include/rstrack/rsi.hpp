#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rstrack/features.hpp"
#include "rstrack/logpolar.hpp"

namespace rstrack {

// Phase correlation of two equal-size planes. Returns the signed (d_row,
// d_col) shift such that b is a circularly shifted by it, with parabolic
// sub-bin refinement. Optionally reports the peak-to-sidelobe ratio of the
// correlation surface.
std::pair<double, double> phase_correlate(const Grid& a, const Grid& b, double* psr = nullptr);

// Rotation/scale between template and candidate via windowed, high-passed
// magnitude spectra warped to log-polar and phase-correlated. Rotation is
// resolved into (-90, 90] (magnitude spectra are 180-degree periodic);
// confidence is the correlation peak-to-sidelobe ratio. Throws NoSignalError
// on flat inputs.
RotationScaleEstimate estimate_analytic(const Image& templ, const Image& cand,
                                        const LogPolarGrid& grid);

struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int kh = 3;
    int kw = 3;
    int stride = 1;
    std::vector<double> w;  // [out][in][kh][kw]
    std::vector<double> b;  // [out]

    ConvLayer() = default;
    ConvLayer(int in, int out, int k, int s);
};

// Three-layer fully convolutional regressor over features of a log-polar
// patch. Layers 1 and 2 use a leaky rectifier (slope 0.1), layer 3 is linear;
// global average pooling of its two output channels yields the scale and
// rotation heads.
struct RSIRegressor {
    ConvLayer h1, h2, h3;
    std::array<double, 3> lambda{1e-4, 1e-4, 1e-4};  // per-layer kernel regularization
    double leaky_slope = 0.1;
    int input_cell_size = 2;  // featurization of log-polar patches

    // Head decoding, fixed to the sampling ranges: a unit scale head spans
    // five 1.1 octaves, a unit rotation head spans 30 degrees.
    static constexpr double kRotationDecodeDeg = 30.0;
    static double scale_decode_log();  // 5 ln 1.1
};

// Kernels drawn uniform in +-1/sqrt(fan_in), biases zero.
RSIRegressor make_rsi_regressor(int in_channels, std::uint32_t seed);

RotationScaleEstimate regressor_forward(const RSIRegressor& reg, const FeatureMap& input);

// Relative residual ((scale* - scale)/scale, (rot* - rot)/rot); denominators
// with magnitude below 1e-3 are replaced by sign-preserving 1e-3.
std::pair<double, double> rsi_residual(const RotationScaleEstimate& pred, double truth_scale,
                                       double truth_rotation_deg);

struct RSITrainingPair {
    LogPolarPatch anchor_lp;
    LogPolarPatch translated_lp;
    double label_scale = 1.0;
    double label_rotation_deg = 0.0;
};

// Parameter-space vector (kernels and biases of the three layers).
struct RsiDirection {
    std::vector<double> w1, b1, w2, b2, w3, b3;
};

RsiDirection zero_direction(const RSIRegressor& reg);

struct RsiLossResult {
    double value = 0.0;
    RsiDirection grad;
};

// Features of the translated log-polar patch, as consumed by the regressor.
FeatureMap rsi_featurize(const LogPolarPatch& lp, int cell_size);

// Mean squared relative residual over the batch plus lambda-weighted squared
// kernel norms, with gradients for every kernel and bias.
RsiLossResult rsi_loss(const RSIRegressor& reg, std::span<const RSITrainingPair> batch,
                       std::vector<FeatureMap>* input_grads = nullptr);

// Same loss over prepared inputs; labels are (scale, rotation_deg).
RsiLossResult rsi_loss_on_features(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                                   std::span<const std::array<double, 2>> labels,
                                   std::vector<FeatureMap>* input_grads = nullptr);

// ||J v||^2 over the stacked residuals (Gauss-Newton quadratic form).
double rsi_gn_quadform(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                       std::span<const std::array<double, 2>> labels, const RsiDirection& v,
                       const std::vector<FeatureMap>* v_x = nullptr);

// Gauss-Newton curvature application: 2 J^T (J v).
RsiDirection rsi_gn_apply(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                          std::span<const std::array<double, 2>> labels, const RsiDirection& v);

struct RsiTrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double lr0 = 1e-2;
    double decay = 0.2;     // learning-rate decay factor
    int decay_every = 10;   // epochs
    std::uint32_t seed = 42;
};

struct RsiTrainReport {
    std::vector<double> epoch_losses;
};

// Adaptive-moment gradient descent with stepped decay. Throws DivergenceError
// naming the epoch if the loss turns non-finite.
RsiTrainReport train_rsi(RSIRegressor& reg, const std::vector<RSITrainingPair>& pairs,
                         const RsiTrainConfig& cfg);

// Versioned binary checkpoint: layer dims header + row-major coefficients.
void save_regressor(const std::string& path, const RSIRegressor& reg);
RSIRegressor load_regressor(const std::string& path);

void write_loss_csv(const std::string& path, const std::vector<double>& epoch_losses);

}  // namespace rstrack
