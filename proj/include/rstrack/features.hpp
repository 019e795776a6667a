#pragma once

#include <vector>

#include "rstrack/image.hpp"

namespace rstrack {

// Multi-channel cell map, channel-major storage.
struct FeatureMap {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    int cell_size = 1;  // px per cell
    std::vector<double> v;

    FeatureMap() = default;
    FeatureMap(int ch, int r, int c, int cell);

    double& at(int ch, int r, int c) {
        return v[(std::size_t(ch) * rows + r) * cols + c];
    }
    double at(int ch, int r, int c) const {
        return v[(std::size_t(ch) * rows + r) * cols + c];
    }
    // View of one channel as a grid copy.
    Grid channel(int ch) const;
    std::size_t count() const { return v.size(); }
};

inline constexpr int kFeatureChannels = 9;
inline constexpr int kOrientationBins = 6;

// Per-cell descriptors: mean luminance, mean |dx|, mean |dy| and a 6-bin
// unsigned gradient-orientation histogram (magnitude-weighted). Each channel
// is standardized to zero mean / unit variance over the map with variance
// floor 1e-6. Patch dims must be divisible by cell_size.
FeatureMap extract_features(const Image& patch, int cell_size);

// 1x1 channel mixing matrix (out_ch x in_ch, row-major).
struct ChannelMixer {
    int out_ch = 0;
    int in_ch = 0;
    std::vector<double> w;

    ChannelMixer() = default;
    ChannelMixer(int out, int in) : out_ch(out), in_ch(in), w(std::size_t(out) * in, 0.0) {}
    double& at(int o, int i) { return w[std::size_t(o) * in_ch + i]; }
    double at(int o, int i) const { return w[std::size_t(o) * in_ch + i]; }
};

ChannelMixer identity_mixer(int channels);

// Per-cell linear channel recombination; output channel count = mixer rows.
FeatureMap calibrate(const FeatureMap& map, const ChannelMixer& mixer);

}  // namespace rstrack
