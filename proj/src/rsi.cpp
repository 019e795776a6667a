#include "rstrack/rsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rstrack/errors.hpp"
#include "rstrack/fft.hpp"

namespace rstrack {

// ---------------------------------------------------------------------------
// Analytic path
// ---------------------------------------------------------------------------

std::pair<double, double> phase_correlate(const Grid& a, const Grid& b, double* psr) {
    if (!a.same_shape(b)) throw std::invalid_argument("phase_correlate: shape mismatch");
    ComplexGrid fa = fft2(a);
    ComplexGrid fb = fft2(b);
    ComplexGrid cross(a.rows, a.cols);
    for (std::size_t i = 0; i < cross.count(); ++i) {
        // conj(A) * B, normalized to unit magnitude
        double re = fa.re[i] * fb.re[i] + fa.im[i] * fb.im[i];
        double im = fa.re[i] * fb.im[i] - fa.im[i] * fb.re[i];
        double mag = std::hypot(re, im);
        if (mag > 1e-15) {
            cross.re[i] = re / mag;
            cross.im[i] = im / mag;
        }
    }
    Grid surface = ifft2_real(cross);
    PeakLocation peak = find_peak(surface);

    auto wrap_index = [](int idx, int n) { return (idx % n + n) % n; };
    double up = surface.at(wrap_index(peak.row - 1, surface.rows), peak.col);
    double down = surface.at(wrap_index(peak.row + 1, surface.rows), peak.col);
    double left = surface.at(peak.row, wrap_index(peak.col - 1, surface.cols));
    double right = surface.at(peak.row, wrap_index(peak.col + 1, surface.cols));

    double dr = peak.row > surface.rows / 2 ? peak.row - surface.rows : peak.row;
    double dc = peak.col > surface.cols / 2 ? peak.col - surface.cols : peak.col;
    dr += parabolic_offset(up, peak.value, down);
    dc += parabolic_offset(left, peak.value, right);

    if (psr) {
        SidelobeStats st = sidelobe_stats(surface, peak.row, peak.col, 11, 11);
        *psr = (peak.value - st.mean) / std::max(st.stddev, 1e-6);
    }
    return {dr, dc};
}

namespace {

bool essentially_flat(const Grid& g) { return grid_max(g) - grid_min(g) < 1e-12; }

Image normalized_spectrum_image(const Image& windowed) {
    Spectrum sp = magnitude_spectrum(windowed, /*highpass=*/true);
    double mx = grid_max(sp.mag);
    if (!(mx > 0.0)) throw NoSignalError("estimate_analytic: empty spectrum");
    Image out;
    out.px = std::move(sp.mag);
    for (double& v : out.px.v) v /= mx;
    return out;
}

}  // namespace

RotationScaleEstimate estimate_analytic(const Image& templ, const Image& cand,
                                        const LogPolarGrid& grid) {
    if (templ.height() != cand.height() || templ.width() != cand.width())
        throw std::invalid_argument("estimate_analytic: images must share dims");
    if (templ.height() < 32 || templ.width() < 32)
        throw std::invalid_argument("estimate_analytic: images must be at least 32x32");
    if (essentially_flat(templ.px) || essentially_flat(cand.px))
        throw NoSignalError("estimate_analytic: flat input image");

    Grid window = hann_window(templ.height(), templ.width());
    Image spec_t = normalized_spectrum_image(apply_window(templ, window));
    Image spec_c = normalized_spectrum_image(apply_window(cand, window));

    // Log-polar geometry about the centered zero-frequency bin.
    LogPolarGrid lp = grid;
    lp.cx = templ.width() / 2;
    lp.cy = templ.height() / 2;
    lp.rho_max = std::min(grid.rho_max, 0.5 * std::min(templ.height(), templ.width()));

    LogPolarPatch lp_t = logpolar_warp(spec_t, lp);
    LogPolarPatch lp_c = logpolar_warp(spec_c, lp);
    if (essentially_flat(lp_t.values) || essentially_flat(lp_c.values))
        throw NoSignalError("estimate_analytic: flat spectrum");

    double psr = 0.0;
    auto [d_rho, d_theta] = phase_correlate(lp_t.values, lp_c.values, &psr);

    // Spatial scaling s compresses the spectrum by 1/s, so the rho shift
    // carries a negated sign relative to the direct log-polar relation.
    RotationScaleEstimate est = shift_to_rotation_scale(-d_rho, d_theta, lp);
    double rot = est.rotation_deg;
    while (rot > 90.0) rot -= 180.0;
    while (rot <= -90.0) rot += 180.0;
    est.rotation_deg = rot;
    est.confidence = std::max(psr, 0.0);
    return est;
}

// ---------------------------------------------------------------------------
// Learned regressor
// ---------------------------------------------------------------------------

ConvLayer::ConvLayer(int in, int out, int k, int s)
    : in_ch(in), out_ch(out), kh(k), kw(k), stride(s),
      w(std::size_t(out) * in * k * k, 0.0), b(std::size_t(out), 0.0) {
    if (k % 2 == 0) throw std::invalid_argument("ConvLayer: kernel must be odd");
    if (s < 1) throw std::invalid_argument("ConvLayer: stride must be >= 1");
}

double RSIRegressor::scale_decode_log() { return 5.0 * std::log(1.1); }

namespace {

int out_extent(int in, int stride) { return (in + stride - 1) / stride; }

// Zero-padded "same" convolution with stride; kernel anchored at its center.
FeatureMap conv_forward(const FeatureMap& x, const ConvLayer& layer) {
    if (x.channels != layer.in_ch)
        throw std::invalid_argument("regressor: input channel count does not match layer");
    const int out_r = out_extent(x.rows, layer.stride);
    const int out_c = out_extent(x.cols, layer.stride);
    FeatureMap out(layer.out_ch, out_r, out_c, x.cell_size);

    const int hh = layer.kh / 2;
    const int hw = layer.kw / 2;
    for (int o = 0; o < layer.out_ch; ++o) {
        double* plane = &out.v[std::size_t(o) * out_r * out_c];
        std::fill(plane, plane + std::size_t(out_r) * out_c, layer.b[o]);
        for (int c = 0; c < layer.in_ch; ++c) {
            const double* wch = &layer.w[(std::size_t(o) * layer.in_ch + c) * layer.kh * layer.kw];
            for (int a = 0; a < layer.kh; ++a) {
                int dy = a - hh;
                for (int bb = 0; bb < layer.kw; ++bb) {
                    double wv = wch[a * layer.kw + bb];
                    if (wv == 0.0) continue;
                    int dx = bb - hw;
                    int j0 = dx < 0 ? (-dx + layer.stride - 1) / layer.stride : 0;
                    int j1 = std::min(out_c, (x.cols - 1 - dx) / layer.stride + 1);
                    for (int i = 0; i < out_r; ++i) {
                        int y = i * layer.stride + dy;
                        if (y < 0 || y >= x.rows) continue;
                        const double* src = x.v.data() + (std::size_t(c) * x.rows + y) * x.cols;
                        double* dst = plane + std::size_t(i) * out_c;
                        if (layer.stride == 1) {
                            for (int j = j0; j < j1; ++j) dst[j] += wv * src[j + dx];
                        } else {
                            for (int j = j0; j < j1; ++j)
                                dst[j] += wv * src[j * layer.stride + dx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Accumulate dW/db from the output cotangent; optionally propagate dx.
void conv_backward(const FeatureMap& x, const ConvLayer& layer, const FeatureMap& cot,
                   std::vector<double>* dw, std::vector<double>* db, FeatureMap* dx) {
    const int out_r = cot.rows;
    const int out_c = cot.cols;
    const int hh = layer.kh / 2;
    const int hw = layer.kw / 2;

    if (db) {
        for (int o = 0; o < layer.out_ch; ++o) {
            const double* plane = &cot.v[std::size_t(o) * out_r * out_c];
            double acc = 0.0;
            for (std::size_t i = 0; i < std::size_t(out_r) * out_c; ++i) acc += plane[i];
            (*db)[o] += acc;
        }
    }
    for (int o = 0; o < layer.out_ch; ++o) {
        const double* cplane = &cot.v[std::size_t(o) * out_r * out_c];
        for (int c = 0; c < layer.in_ch; ++c) {
            const std::size_t wbase = (std::size_t(o) * layer.in_ch + c) * layer.kh * layer.kw;
            for (int a = 0; a < layer.kh; ++a) {
                int dy = a - hh;
                for (int bb = 0; bb < layer.kw; ++bb) {
                    int dx_off = bb - hw;
                    int j0 = dx_off < 0 ? (-dx_off + layer.stride - 1) / layer.stride : 0;
                    int j1 = std::min(out_c, (x.cols - 1 - dx_off) / layer.stride + 1);
                    double acc = 0.0;
                    double wv = layer.w[wbase + std::size_t(a) * layer.kw + bb];
                    for (int i = 0; i < out_r; ++i) {
                        int y = i * layer.stride + dy;
                        if (y < 0 || y >= x.rows) continue;
                        const double* src = x.v.data() + (std::size_t(c) * x.rows + y) * x.cols;
                        const double* crow = cplane + std::size_t(i) * out_c;
                        double* dxrow =
                            dx ? dx->v.data() + (std::size_t(c) * x.rows + y) * x.cols : nullptr;
                        for (int j = j0; j < j1; ++j) {
                            int xx = j * layer.stride + dx_off;
                            acc += crow[j] * src[xx];
                            if (dxrow) dxrow[xx] += crow[j] * wv;
                        }
                    }
                    if (dw) (*dw)[wbase + std::size_t(a) * layer.kw + bb] += acc;
                }
            }
        }
    }
}

struct ForwardCache {
    FeatureMap a0;  // input
    FeatureMap z1, a1, z2, a2, a3;
    double head_scale = 0.0;
    double head_rot = 0.0;
    double scale_pred = 1.0;
    double rot_pred = 0.0;
};

void leaky_forward(const FeatureMap& z, double slope, FeatureMap& a) {
    a = z;
    for (double& v : a.v) v = v > 0.0 ? v : slope * v;
}

ForwardCache forward_cache(const RSIRegressor& reg, const FeatureMap& input) {
    ForwardCache fc;
    fc.a0 = input;
    fc.z1 = conv_forward(input, reg.h1);
    leaky_forward(fc.z1, reg.leaky_slope, fc.a1);
    fc.z2 = conv_forward(fc.a1, reg.h2);
    leaky_forward(fc.z2, reg.leaky_slope, fc.a2);
    fc.a3 = conv_forward(fc.a2, reg.h3);  // identity activation

    const std::size_t plane = std::size_t(fc.a3.rows) * fc.a3.cols;
    for (int k = 0; k < 2; ++k) {
        const double* p = &fc.a3.v[k * plane];
        double mean = std::accumulate(p, p + plane, 0.0) / double(plane);
        if (k == 0)
            fc.head_scale = mean;
        else
            fc.head_rot = mean;
    }
    fc.scale_pred = std::exp(fc.head_scale * RSIRegressor::scale_decode_log());
    fc.rot_pred = fc.head_rot * RSIRegressor::kRotationDecodeDeg;
    return fc;
}

// Backward pass from head cotangents; accumulates parameter gradients and
// optionally the input gradient.
void backward_from_heads(const RSIRegressor& reg, const ForwardCache& fc, double d_head_scale,
                         double d_head_rot, RsiDirection& acc, FeatureMap* d_input) {
    const std::size_t plane = std::size_t(fc.a3.rows) * fc.a3.cols;
    FeatureMap cot3(fc.a3.channels, fc.a3.rows, fc.a3.cols, fc.a3.cell_size);
    const double g0 = d_head_scale / double(plane);
    const double g1 = d_head_rot / double(plane);
    for (std::size_t i = 0; i < plane; ++i) cot3.v[i] = g0;
    for (std::size_t i = 0; i < plane; ++i) cot3.v[plane + i] = g1;

    FeatureMap cot2(fc.a2.channels, fc.a2.rows, fc.a2.cols, fc.a2.cell_size);
    conv_backward(fc.a2, reg.h3, cot3, &acc.w3, &acc.b3, &cot2);
    for (std::size_t i = 0; i < cot2.v.size(); ++i)
        cot2.v[i] *= fc.z2.v[i] > 0.0 ? 1.0 : reg.leaky_slope;

    FeatureMap cot1(fc.a1.channels, fc.a1.rows, fc.a1.cols, fc.a1.cell_size);
    conv_backward(fc.a1, reg.h2, cot2, &acc.w2, &acc.b2, &cot1);
    for (std::size_t i = 0; i < cot1.v.size(); ++i)
        cot1.v[i] *= fc.z1.v[i] > 0.0 ? 1.0 : reg.leaky_slope;

    if (d_input) {
        conv_backward(fc.a0, reg.h1, cot1, &acc.w1, &acc.b1, d_input);
    } else {
        conv_backward(fc.a0, reg.h1, cot1, &acc.w1, &acc.b1, nullptr);
    }
}

// Tangent propagation along a parameter direction (and optional input
// tangent); returns head tangents.
std::pair<double, double> jvp_heads(const RSIRegressor& reg, const ForwardCache& fc,
                                    const RsiDirection& v, const FeatureMap* v_input) {
    ConvLayer vd1 = reg.h1;
    vd1.w = v.w1;
    vd1.b = v.b1;
    FeatureMap t = conv_forward(fc.a0, vd1);
    if (v_input) {
        ConvLayer h1n = reg.h1;
        std::fill(h1n.b.begin(), h1n.b.end(), 0.0);
        FeatureMap t_in = conv_forward(*v_input, h1n);
        for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] += t_in.v[i];
    }
    for (std::size_t i = 0; i < t.v.size(); ++i)
        t.v[i] *= fc.z1.v[i] > 0.0 ? 1.0 : reg.leaky_slope;

    ConvLayer vd2 = reg.h2;
    vd2.w = v.w2;
    vd2.b = v.b2;
    FeatureMap t2 = conv_forward(fc.a1, vd2);
    {
        ConvLayer h2n = reg.h2;
        std::fill(h2n.b.begin(), h2n.b.end(), 0.0);
        FeatureMap t2b = conv_forward(t, h2n);
        for (std::size_t i = 0; i < t2.v.size(); ++i) t2.v[i] += t2b.v[i];
    }
    for (std::size_t i = 0; i < t2.v.size(); ++i)
        t2.v[i] *= fc.z2.v[i] > 0.0 ? 1.0 : reg.leaky_slope;

    ConvLayer vd3 = reg.h3;
    vd3.w = v.w3;
    vd3.b = v.b3;
    FeatureMap t3 = conv_forward(fc.a2, vd3);
    {
        ConvLayer h3n = reg.h3;
        std::fill(h3n.b.begin(), h3n.b.end(), 0.0);
        FeatureMap t3b = conv_forward(t2, h3n);
        for (std::size_t i = 0; i < t3.v.size(); ++i) t3.v[i] += t3b.v[i];
    }
    const std::size_t plane = std::size_t(t3.rows) * t3.cols;
    double th0 = std::accumulate(&t3.v[0], &t3.v[plane], 0.0) / double(plane);
    double th1 = std::accumulate(&t3.v[plane], &t3.v[2 * plane], 0.0) / double(plane);
    return {th0, th1};
}

double guard_denominator(double d) {
    if (std::abs(d) >= 1e-3) return d;
    return d < 0.0 ? -1e-3 : 1e-3;
}

}  // namespace

RSIRegressor make_rsi_regressor(int in_channels, std::uint32_t seed) {
    RSIRegressor reg;
    reg.h1 = ConvLayer(in_channels, 16, 3, 1);
    reg.h2 = ConvLayer(16, 16, 3, 2);
    reg.h3 = ConvLayer(16, 2, 3, 1);
    std::mt19937 rng(seed);
    for (ConvLayer* layer : {&reg.h1, &reg.h2, &reg.h3}) {
        double bound = 1.0 / std::sqrt(double(layer->in_ch) * layer->kh * layer->kw);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer->w) w = dist(rng);
    }
    return reg;
}

RotationScaleEstimate regressor_forward(const RSIRegressor& reg, const FeatureMap& input) {
    ForwardCache fc = forward_cache(reg, input);
    RotationScaleEstimate est;
    est.scale = fc.scale_pred;
    est.rotation_deg = wrap_degrees(fc.rot_pred);
    est.confidence = 1.0;
    return est;
}

std::pair<double, double> rsi_residual(const RotationScaleEstimate& pred, double truth_scale,
                                       double truth_rotation_deg) {
    if (!(truth_scale > 0.0)) throw std::invalid_argument("rsi_residual: truth scale must be > 0");
    double ds = (pred.scale - truth_scale) / guard_denominator(truth_scale);
    double dt = (pred.rotation_deg - truth_rotation_deg) / guard_denominator(truth_rotation_deg);
    return {ds, dt};
}

RsiDirection zero_direction(const RSIRegressor& reg) {
    RsiDirection d;
    d.w1.assign(reg.h1.w.size(), 0.0);
    d.b1.assign(reg.h1.b.size(), 0.0);
    d.w2.assign(reg.h2.w.size(), 0.0);
    d.b2.assign(reg.h2.b.size(), 0.0);
    d.w3.assign(reg.h3.w.size(), 0.0);
    d.b3.assign(reg.h3.b.size(), 0.0);
    return d;
}

FeatureMap rsi_featurize(const LogPolarPatch& lp, int cell_size) {
    Image img;
    img.px = lp.values;
    return extract_features(img, cell_size);
}

RsiLossResult rsi_loss_on_features(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                                   std::span<const std::array<double, 2>> labels,
                                   std::vector<FeatureMap>* input_grads) {
    if (inputs.empty()) throw std::invalid_argument("rsi_loss: empty batch");
    if (inputs.size() != labels.size())
        throw std::invalid_argument("rsi_loss: labels do not match inputs");
    const double inv_n = 1.0 / double(inputs.size());
    const double ks = RSIRegressor::scale_decode_log();

    RsiLossResult out;
    out.grad = zero_direction(reg);
    if (input_grads) input_grads->clear();

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        ForwardCache fc = forward_cache(reg, inputs[i]);
        double gs = guard_denominator(labels[i][0]);
        double gt = guard_denominator(labels[i][1]);
        double rs = (fc.scale_pred - labels[i][0]) / gs;
        double rt = (fc.rot_pred - labels[i][1]) / gt;
        out.value += (rs * rs + rt * rt) * inv_n;

        double d_head_scale = 2.0 * inv_n * rs / gs * ks * fc.scale_pred;
        double d_head_rot = 2.0 * inv_n * rt / gt * RSIRegressor::kRotationDecodeDeg;
        if (input_grads) {
            FeatureMap dx(inputs[i].channels, inputs[i].rows, inputs[i].cols,
                          inputs[i].cell_size);
            backward_from_heads(reg, fc, d_head_scale, d_head_rot, out.grad, &dx);
            input_grads->push_back(std::move(dx));
        } else {
            backward_from_heads(reg, fc, d_head_scale, d_head_rot, out.grad, nullptr);
        }
    }

    const ConvLayer* layers[3] = {&reg.h1, &reg.h2, &reg.h3};
    std::vector<double>* grads[3] = {&out.grad.w1, &out.grad.w2, &out.grad.w3};
    for (int j = 0; j < 3; ++j) {
        double norm_sq = 0.0;
        for (double w : layers[j]->w) norm_sq += w * w;
        out.value += reg.lambda[j] * norm_sq;
        for (std::size_t k = 0; k < layers[j]->w.size(); ++k)
            (*grads[j])[k] += 2.0 * reg.lambda[j] * layers[j]->w[k];
    }
    return out;
}

RsiLossResult rsi_loss(const RSIRegressor& reg, std::span<const RSITrainingPair> batch,
                       std::vector<FeatureMap>* input_grads) {
    if (batch.empty()) throw std::invalid_argument("rsi_loss: empty batch");
    std::vector<FeatureMap> inputs;
    std::vector<std::array<double, 2>> labels;
    inputs.reserve(batch.size());
    labels.reserve(batch.size());
    for (const RSITrainingPair& pair : batch) {
        inputs.push_back(rsi_featurize(pair.translated_lp, reg.input_cell_size));
        labels.push_back({pair.label_scale, pair.label_rotation_deg});
    }
    return rsi_loss_on_features(reg, inputs, labels, input_grads);
}

double rsi_gn_quadform(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                       std::span<const std::array<double, 2>> labels, const RsiDirection& v,
                       const std::vector<FeatureMap>* v_x) {
    if (inputs.empty()) throw std::invalid_argument("rsi_gn_quadform: empty batch");
    if (v_x && v_x->size() != inputs.size())
        throw std::invalid_argument("rsi_gn_quadform: input tangent count mismatch");
    const double inv_n = 1.0 / double(inputs.size());
    const double ks = RSIRegressor::scale_decode_log();

    double quad = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        ForwardCache fc = forward_cache(reg, inputs[i]);
        auto [th_s, th_r] = jvp_heads(reg, fc, v, v_x ? &(*v_x)[i] : nullptr);
        double d_rs = th_s * ks * fc.scale_pred / guard_denominator(labels[i][0]);
        double d_rt = th_r * RSIRegressor::kRotationDecodeDeg / guard_denominator(labels[i][1]);
        quad += inv_n * (d_rs * d_rs + d_rt * d_rt);
    }
    const std::vector<double>* vw[3] = {&v.w1, &v.w2, &v.w3};
    for (int j = 0; j < 3; ++j) {
        double norm_sq = 0.0;
        for (double w : *vw[j]) norm_sq += w * w;
        quad += reg.lambda[j] * norm_sq;
    }
    return quad;
}

RsiDirection rsi_gn_apply(const RSIRegressor& reg, std::span<const FeatureMap> inputs,
                          std::span<const std::array<double, 2>> labels, const RsiDirection& v) {
    if (inputs.empty()) throw std::invalid_argument("rsi_gn_apply: empty batch");
    const double inv_n = 1.0 / double(inputs.size());
    const double ks = RSIRegressor::scale_decode_log();

    RsiDirection out = zero_direction(reg);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        ForwardCache fc = forward_cache(reg, inputs[i]);
        auto [th_s, th_r] = jvp_heads(reg, fc, v, nullptr);
        double gs = guard_denominator(labels[i][0]);
        double gt = guard_denominator(labels[i][1]);
        double d_rs = th_s * ks * fc.scale_pred / gs;
        double d_rt = th_r * RSIRegressor::kRotationDecodeDeg / gt;
        double u_head_s = 2.0 * inv_n * d_rs / gs * ks * fc.scale_pred;
        double u_head_r = 2.0 * inv_n * d_rt / gt * RSIRegressor::kRotationDecodeDeg;
        backward_from_heads(reg, fc, u_head_s, u_head_r, out, nullptr);
    }
    const std::vector<double>* vw[3] = {&v.w1, &v.w2, &v.w3};
    std::vector<double>* ow[3] = {&out.w1, &out.w2, &out.w3};
    for (int j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < vw[j]->size(); ++k)
            (*ow[j])[k] += 2.0 * reg.lambda[j] * (*vw[j])[k];
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>*> param_refs(RSIRegressor& reg) {
    return {&reg.h1.w, &reg.h1.b, &reg.h2.w, &reg.h2.b, &reg.h3.w, &reg.h3.b};
}

std::vector<const std::vector<double>*> grad_refs(const RsiDirection& d) {
    return {&d.w1, &d.b1, &d.w2, &d.b2, &d.w3, &d.b3};
}

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long t = 0;

    void step(std::vector<std::vector<double>*>& params,
              const std::vector<const std::vector<double>*>& grads, double lr) {
        std::size_t total = 0;
        for (auto* p : params) total += p->size();
        if (m.empty()) {
            m.assign(total, 0.0);
            v.assign(total, 0.0);
        }
        ++t;
        double bc1 = 1.0 - std::pow(beta1, double(t));
        double bc2 = 1.0 - std::pow(beta2, double(t));
        std::size_t k = 0;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            std::vector<double>& p = *params[pi];
            const std::vector<double>& g = *grads[pi];
            for (std::size_t i = 0; i < p.size(); ++i, ++k) {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[i];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[i] * g[i];
                double mh = m[k] / bc1;
                double vh = v[k] / bc2;
                p[i] -= lr * mh / (std::sqrt(vh) + eps);
            }
        }
    }
};

}  // namespace

RsiTrainReport train_rsi(RSIRegressor& reg, const std::vector<RSITrainingPair>& pairs,
                         const RsiTrainConfig& cfg) {
    if (pairs.empty()) throw std::invalid_argument("train_rsi: need at least one pair");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("train_rsi: bad schedule");

    std::vector<FeatureMap> feats;
    std::vector<std::array<double, 2>> labels;
    feats.reserve(pairs.size());
    for (const RSITrainingPair& p : pairs) {
        feats.push_back(rsi_featurize(p.translated_lp, reg.input_cell_size));
        labels.push_back({p.label_scale, p.label_rotation_deg});
    }

    std::mt19937 rng(cfg.seed);
    std::vector<int> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    Adam adam;
    RsiTrainReport report;
    std::vector<FeatureMap> batch_feats;
    std::vector<std::array<double, 2>> batch_labels;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr0 * std::pow(cfg.decay, double(epoch / cfg.decay_every));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch_feats.clear();
            batch_labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch_feats.push_back(feats[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            RsiLossResult loss = rsi_loss_on_features(reg, batch_feats, batch_labels);
            if (!std::isfinite(loss.value))
                throw DivergenceError("train_rsi: non-finite loss", epoch);
            auto params = param_refs(reg);
            adam.step(params, grad_refs(loss.grad), lr);
            epoch_loss += loss.value * double(end - start);
            seen += end - start;
        }
        report.epoch_losses.push_back(epoch_loss / double(seen));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'S', 'I', 'W'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

}  // namespace

void save_regressor(const std::string& path, const RSIRegressor& reg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_regressor: cannot open " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, 3);
    const ConvLayer* layers[3] = {&reg.h1, &reg.h2, &reg.h3};
    for (const ConvLayer* l : layers) {
        write_u32(out, std::uint32_t(l->in_ch));
        write_u32(out, std::uint32_t(l->out_ch));
        write_u32(out, std::uint32_t(l->kh));
        write_u32(out, std::uint32_t(l->kw));
        write_u32(out, std::uint32_t(l->stride));
    }
    for (const ConvLayer* l : layers) {
        write_doubles(out, l->w);
        write_doubles(out, l->b);
    }
    std::vector<double> extras{reg.lambda[0], reg.lambda[1], reg.lambda[2], reg.leaky_slope,
                               double(reg.input_cell_size)};
    write_doubles(out, extras);
    if (!out) throw std::runtime_error("save_regressor: write failed for " + path);
}

RSIRegressor load_regressor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_regressor: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_regressor: bad magic in " + path);
    if (read_u32(in) != kVersion) throw std::runtime_error("load_regressor: unsupported version");
    if (read_u32(in) != 3) throw std::runtime_error("load_regressor: unexpected layer count");

    RSIRegressor reg;
    ConvLayer* layers[3] = {&reg.h1, &reg.h2, &reg.h3};
    for (ConvLayer* l : layers) {
        int in_ch = int(read_u32(in));
        int out_ch = int(read_u32(in));
        int kh = int(read_u32(in));
        int kw = int(read_u32(in));
        int stride = int(read_u32(in));
        if (kh != kw) throw std::runtime_error("load_regressor: non-square kernel");
        *l = ConvLayer(in_ch, out_ch, kh, stride);
        (void)kw;
    }
    for (ConvLayer* l : layers) {
        read_doubles(in, l->w);
        read_doubles(in, l->b);
    }
    std::vector<double> extras(5);
    read_doubles(in, extras);
    if (!in) throw std::runtime_error("load_regressor: truncated file " + path);
    reg.lambda = {extras[0], extras[1], extras[2]};
    reg.leaky_slope = extras[3];
    reg.input_cell_size = int(extras[4]);
    return reg;
}

void write_loss_csv(const std::string& path, const std::vector<double>& epoch_losses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_loss_csv: cannot open " + path);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < epoch_losses.size(); ++i) out << i << "," << epoch_losses[i] << "\n";
}

}  // namespace rstrack
