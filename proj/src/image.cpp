#include "rstrack/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rstrack/fft.hpp"

namespace rstrack {

double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r > 180.0) r -= 360.0;
    if (r <= -180.0) r += 360.0;
    return r;
}

Image make_image(int height, int width, double fill) {
    if (height < 1 || width < 1) throw std::invalid_argument("make_image: dims must be positive");
    return Image{Grid(height, width, fill)};
}

void validate_image(const Image& img) {
    if (img.height() < 1 || img.width() < 1)
        throw std::invalid_argument("image: dims must be at least 1x1");
    for (double x : img.px.v) {
        if (!std::isfinite(x) || x < 0.0 || x > 1.0)
            throw std::invalid_argument("image: pixels must be finite and in [0, 1]");
    }
}

Grid hann_window(int h, int w) {
    if (h < 2 || w < 2) throw std::invalid_argument("hann_window: dims must be at least 2");
    std::vector<double> wy(h), wx(w);
    for (int i = 0; i < h; ++i) wy[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (h - 1)));
    for (int j = 0; j < w; ++j) wx[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * j / (w - 1)));
    Grid out(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(i, j) = wy[i] * wx[j];
    return out;
}

Image apply_window(const Image& img, const Grid& window) {
    if (!img.px.same_shape(window))
        throw std::invalid_argument("apply_window: shape mismatch");
    Image out = img;
    for (std::size_t i = 0; i < out.px.v.size(); ++i) out.px.v[i] *= window.v[i];
    return out;
}

Spectrum magnitude_spectrum(const Image& img, bool highpass) {
    if (img.height() < 8 || img.width() < 8)
        throw std::invalid_argument("magnitude_spectrum: dims must be at least 8");
    ComplexGrid f = fft2(img.px);
    Grid mag(img.height(), img.width());
    for (std::size_t i = 0; i < f.count(); ++i)
        mag.v[i] = std::hypot(f.re[i], f.im[i]);
    mag = fftshift(mag);
    if (highpass) {
        const int cy = mag.rows / 2;
        const int cx = mag.cols / 2;
        const double ny = mag.rows / 2.0;
        const double nx = mag.cols / 2.0;
        for (int r = 0; r < mag.rows; ++r) {
            double fy = (r - cy) / ny;
            for (int c = 0; c < mag.cols; ++c) {
                double fx = (c - cx) / nx;
                double rad = std::min(1.0, std::hypot(fx, fy));
                double u = 1.0 - std::cos(kPi * rad);
                mag.at(r, c) *= u * (2.0 - u);
            }
        }
    }
    return Spectrum{std::move(mag)};
}

double bilinear_clamped(const Grid& g, double x, double y) {
    x = std::clamp(x, 0.0, double(g.cols - 1));
    y = std::clamp(y, 0.0, double(g.rows - 1));
    int x0 = int(x);
    int y0 = int(y);
    int x1 = std::min(x0 + 1, g.cols - 1);
    int y1 = std::min(y0 + 1, g.rows - 1);
    double fx = x - x0;
    double fy = y - y0;
    double top = (1.0 - fx) * g.at(y0, x0) + fx * g.at(y0, x1);
    double bot = (1.0 - fx) * g.at(y1, x0) + fx * g.at(y1, x1);
    return (1.0 - fy) * top + fy * bot;
}

Image extract_patch(const Image& img, const TargetState& st, int out_h, int out_w,
                    double pad_factor) {
    if (out_h < 8 || out_w < 8)
        throw std::invalid_argument("extract_patch: output must be at least 8x8");
    bool finite_state = std::isfinite(st.cx) && std::isfinite(st.cy) &&
                        std::isfinite(st.base_w) && std::isfinite(st.base_h) &&
                        std::isfinite(st.scale) && std::isfinite(st.rotation_deg);
    if (!finite_state || st.scale <= 0.0 || st.base_w <= 0.0 || st.base_h <= 0.0)
        throw std::invalid_argument("extract_patch: invalid state");
    if (!(pad_factor > 0.0) || !std::isfinite(pad_factor))
        throw std::invalid_argument("extract_patch: invalid pad factor");

    const double step_x = pad_factor * st.base_w * st.scale / out_w;
    const double step_y = pad_factor * st.base_h * st.scale / out_h;
    const double th = deg_to_rad(st.rotation_deg);
    const double c = std::cos(th);
    const double s = std::sin(th);
    const double off_x = (out_w - 1) / 2.0;
    const double off_y = (out_h - 1) / 2.0;

    Image out = make_image(out_h, out_w);
    for (int i = 0; i < out_h; ++i) {
        double v = (i - off_y) * step_y;
        for (int j = 0; j < out_w; ++j) {
            double u = (j - off_x) * step_x;
            double x = st.cx + u * c - v * s;
            double y = st.cy + u * s + v * c;
            out.px.at(i, j) = bilinear_clamped(img.px, x, y);
        }
    }
    return out;
}

Image warp_similarity(const Image& img, double scale, double rot_deg) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("warp_similarity: scale must be positive");
    TargetState st;
    st.cx = (img.width() - 1) / 2.0;
    st.cy = (img.height() - 1) / 2.0;
    st.base_w = img.width();
    st.base_h = img.height();
    st.scale = 1.0 / scale;
    st.rotation_deg = -rot_deg;
    return extract_patch(img, st, img.height(), img.width(), 1.0);
}

}  // namespace rstrack
