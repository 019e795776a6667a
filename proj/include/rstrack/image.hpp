#pragma once

#include <string>

#include "rstrack/grid.hpp"
#include "rstrack/state.hpp"

namespace rstrack {

// Grayscale image, luminance in [0, 1].
struct Image {
    Grid px;
    int height() const { return px.rows; }
    int width() const { return px.cols; }
};

Image make_image(int height, int width, double fill = 0.0);

// Throws std::invalid_argument if dims are empty or any pixel is outside [0, 1].
void validate_image(const Image& img);

// Zero-frequency-centered magnitude of the 2-D DFT.
struct Spectrum {
    Grid mag;
    int height() const { return mag.rows; }
    int width() const { return mag.cols; }
};

// Separable raised-cosine window: zeros on the border, unit peak at the center.
Grid hann_window(int h, int w);

Image apply_window(const Image& img, const Grid& window);

// Magnitude spectrum with the zero-frequency bin centered at (h/2, w/2). When
// highpass is set, magnitudes are weighted by (1 - cos(pi r)) (2 - (1 - cos(pi r)))
// with r the radius normalized to the half-extents and clamped to [0, 1].
Spectrum magnitude_spectrum(const Image& img, bool highpass);

// Bilinear sample at (x, y) = (col, row); out-of-bounds replicates edge pixels.
double bilinear_clamped(const Grid& g, double x, double y);

// Patch sampled on a grid centered at state center, rotated by the state
// rotation and scaled so pad_factor times the state box fills out_h x out_w.
Image extract_patch(const Image& img, const TargetState& state, int out_h, int out_w,
                    double pad_factor);

// Content scaled by `scale` and rotated by `rot_deg` about the image center;
// out-of-bounds samples replicate the border.
Image warp_similarity(const Image& img, double scale, double rot_deg);

// Raster I/O: 8-bit PNG, JPEG, PGM (P5/P2), PPM (P6). RGB decodes as
// 0.299 R + 0.587 G + 0.114 B, then /255.
Image load_image(const std::string& path);
void save_pgm(const std::string& path, const Image& img);
void save_png_gray(const std::string& path, const Image& img);
void save_png_rgb(const std::string& path, const Grid& r, const Grid& g, const Grid& b);

}  // namespace rstrack
