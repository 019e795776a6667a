#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rstrack/rsi.hpp"
#include "rstrack/state.hpp"

namespace rstrack {

// Rotation/scale sampling grid: ten rotations {3d degrees, d=1..10} crossed
// with ten scale factors {1.1^k, k=-5..5, k != 0}.
struct RotationScaleGrid {
    std::vector<double> rotations_deg;
    std::vector<double> scales;
    std::vector<std::pair<double, double>> pairs;  // (scale, rotation_deg)
};

// The literal one-signed rotation set; symmetric_rotations swaps in
// +-{6,12,18,24,30}, keeping ten entries and the 30-degree cap.
RotationScaleGrid paper_grid(bool symmetric_rotations = false);

// One training pair per grid entry: the anchor warped about its center,
// both resampled on the given log-polar geometry, labeled with the warp.
std::vector<RSITrainingPair> make_training_pairs(const Image& anchor,
                                                 const RotationScaleGrid& grid,
                                                 const LogPolarGrid& lp_grid);

// Deterministic multi-octave value noise with a few blobs and gratings;
// broad-spectrum texture for registration and tracking tests.
Image textured_image(int h, int w, std::uint32_t seed);

enum class MotionProfile {
    linear,     // constant per-frame steps
    oscillate,  // bounded sinusoids honoring the per-frame caps
};

struct SyntheticSequenceSpec {
    int canvas_h = 240;
    int canvas_w = 320;
    int sprite_size = 48;      // target extent, px
    int frames = 100;          // motion frames after the initial one
    MotionProfile profile = MotionProfile::oscillate;
    double trans_step_px = 2.0;      // per-frame translation bound
    double rot_step_deg = 3.0;       // per-frame rotation bound
    double scale_step = 1.005;       // per-frame scale ratio bound (>= 1)
    double noise_sigma = 0.0;        // additive Gaussian, clipped to [0, 1]
    std::uint32_t seed = 7;
    int occlude_start = -1;          // frame index; < 0 disables
    int occlude_len = 0;             // frames with the target blanked
    // oscillation periods (frames)
    double rot_period = 80.0;
    double scale_period = 100.0;
    double trans_period = 120.0;
};

struct SyntheticSequence {
    std::vector<Image> frames;       // frames[0] is the initial frame
    std::vector<TargetState> truth;  // one state per frame
    AxisAlignedBox annotation;       // first-frame axis-aligned box
};

// Deterministic frame stream with exact per-frame ground truth.
SyntheticSequence generate_sequence(const SyntheticSequenceSpec& spec);

// Plain-text key=value spec file.
SyntheticSequenceSpec parse_sequence_spec(const std::string& path);

}  // namespace rstrack
