#include "rstrack/features.hpp"

#include <cmath>
#include <stdexcept>

namespace rstrack {

FeatureMap::FeatureMap(int ch, int r, int c, int cell)
    : channels(ch), rows(r), cols(c), cell_size(cell),
      v(std::size_t(ch) * r * c, 0.0) {}

Grid FeatureMap::channel(int ch) const {
    Grid g(rows, cols);
    const double* src = &v[std::size_t(ch) * rows * cols];
    std::copy(src, src + std::size_t(rows) * cols, g.v.begin());
    return g;
}

FeatureMap extract_features(const Image& patch, int cell_size) {
    if (cell_size < 1) throw std::invalid_argument("extract_features: cell_size must be >= 1");
    const int h = patch.height();
    const int w = patch.width();
    if (h % cell_size != 0 || w % cell_size != 0)
        throw std::invalid_argument("extract_features: patch dims not divisible by cell_size");

    const int cr = h / cell_size;
    const int cc = w / cell_size;
    FeatureMap map(kFeatureChannels, cr, cc, cell_size);

    const Grid& px = patch.px;
    const double bin_width = kPi / kOrientationBins;  // unsigned orientations
    const double inv_area = 1.0 / double(cell_size * cell_size);

    for (int y = 0; y < h; ++y) {
        int y0 = std::max(y - 1, 0);
        int y1 = std::min(y + 1, h - 1);
        int cell_r = y / cell_size;
        for (int x = 0; x < w; ++x) {
            int x0 = std::max(x - 1, 0);
            int x1 = std::min(x + 1, w - 1);
            int cell_c = x / cell_size;

            double gx = 0.5 * (px.at(y, x1) - px.at(y, x0));
            double gy = 0.5 * (px.at(y1, x) - px.at(y0, x));
            double mag = std::hypot(gx, gy);

            map.at(0, cell_r, cell_c) += px.at(y, x) * inv_area;
            map.at(1, cell_r, cell_c) += std::abs(gx) * inv_area;
            map.at(2, cell_r, cell_c) += std::abs(gy) * inv_area;

            if (mag > 0.0) {
                double phi = std::atan2(gy, gx);
                if (phi < 0.0) phi += kPi;
                int bin = int(phi / bin_width);
                if (bin >= kOrientationBins) bin = 0;  // phi == pi folds onto 0
                map.at(3 + bin, cell_r, cell_c) += mag * inv_area;
            }
        }
    }

    // Standardize each channel over the map; floored variance keeps constant
    // channels at exactly zero.
    const std::size_t plane = std::size_t(cr) * cc;
    for (int ch = 0; ch < kFeatureChannels; ++ch) {
        double* p = &map.v[ch * plane];
        double mean = 0.0;
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
        mean /= double(plane);
        double var = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            double d = p[i] - mean;
            var += d * d;
        }
        var /= double(plane);
        double inv_std = 1.0 / std::sqrt(std::max(var, 1e-6));
        for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - mean) * inv_std;
    }
    return map;
}

ChannelMixer identity_mixer(int channels) {
    ChannelMixer m(channels, channels);
    for (int i = 0; i < channels; ++i) m.at(i, i) = 1.0;
    return m;
}

FeatureMap calibrate(const FeatureMap& map, const ChannelMixer& mixer) {
    if (mixer.in_ch != map.channels)
        throw std::invalid_argument("calibrate: mixer input dim does not match map channels");
    FeatureMap out(mixer.out_ch, map.rows, map.cols, map.cell_size);
    const std::size_t plane = std::size_t(map.rows) * map.cols;
    for (int o = 0; o < mixer.out_ch; ++o) {
        double* dst = &out.v[o * plane];
        for (int i = 0; i < mixer.in_ch; ++i) {
            double wgt = mixer.at(o, i);
            if (wgt == 0.0) continue;
            const double* src = &map.v[i * plane];
            for (std::size_t k = 0; k < plane; ++k) dst[k] += wgt * src[k];
        }
    }
    return out;
}

}  // namespace rstrack
