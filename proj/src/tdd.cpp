#include "rstrack/tdd.hpp"

#include <cmath>
#include <stdexcept>

namespace rstrack {

namespace {

void check_model(const DiscriminativeModel& model, const FeatureMap& x) {
    if (x.channels != model.in_channels)
        throw std::invalid_argument("tdd: feature channels do not match filter");
    if (x.rows != model.m.rows || x.cols != model.m.cols)
        throw std::invalid_argument("tdd: feature map dims do not match mask");
}

// Same-size correlation with zero padding; kernel anchored at its center.
Grid correlate_same(const FeatureMap& x, const std::vector<double>& w, int kh, int kw) {
    const int hh = kh / 2;
    const int hw = kw / 2;
    Grid r(x.rows, x.cols);
    for (int ch = 0; ch < x.channels; ++ch) {
        const double* wch = &w[std::size_t(ch) * kh * kw];
        for (int a = 0; a < kh; ++a) {
            for (int b = 0; b < kw; ++b) {
                double wv = wch[a * kw + b];
                if (wv == 0.0) continue;
                int dy = a - hh;
                int dx = b - hw;
                int i0 = std::max(0, -dy);
                int i1 = std::min(x.rows, x.rows - dy);
                int j0 = std::max(0, -dx);
                int j1 = std::min(x.cols, x.cols - dx);
                for (int i = i0; i < i1; ++i) {
                    const double* src =
                        x.v.data() + (std::size_t(ch) * x.rows + std::size_t(i + dy)) * x.cols;
                    double* dst = r.v.data() + std::size_t(i) * x.cols;
                    for (int j = j0; j < j1; ++j) dst[j] += wv * src[j + dx];
                }
            }
        }
    }
    return r;
}

// dW[c,a,b] += sum_{i,j} g(i,j) x(c, i+a-kh/2, j+b-kw/2)
void accumulate_wgrad(const FeatureMap& x, const Grid& g, int kh, int kw,
                      std::vector<double>& dw) {
    const int hh = kh / 2;
    const int hw = kw / 2;
    for (int ch = 0; ch < x.channels; ++ch) {
        double* dwch = &dw[std::size_t(ch) * kh * kw];
        for (int a = 0; a < kh; ++a) {
            for (int b = 0; b < kw; ++b) {
                int dy = a - hh;
                int dx = b - hw;
                int i0 = std::max(0, -dy);
                int i1 = std::min(x.rows, x.rows - dy);
                int j0 = std::max(0, -dx);
                int j1 = std::min(x.cols, x.cols - dx);
                double acc = 0.0;
                for (int i = i0; i < i1; ++i) {
                    const double* src =
                        x.v.data() + (std::size_t(ch) * x.rows + std::size_t(i + dy)) * x.cols;
                    const double* gg = g.v.data() + std::size_t(i) * x.cols;
                    for (int j = j0; j < j1; ++j) acc += gg[j] * src[j + dx];
                }
                dwch[a * kw + b] += acc;
            }
        }
    }
}

// dx(c, y, x) += sum_{a,b} g(y - a + kh/2, x - b + kw/2) w(c, a, b)
void accumulate_input_grad(const Grid& g, const std::vector<double>& w, int channels, int kh,
                           int kw, FeatureMap& dx) {
    const int hh = kh / 2;
    const int hw = kw / 2;
    for (int ch = 0; ch < channels; ++ch) {
        const double* wch = &w[std::size_t(ch) * kh * kw];
        for (int a = 0; a < kh; ++a) {
            for (int b = 0; b < kw; ++b) {
                double wv = wch[a * kw + b];
                if (wv == 0.0) continue;
                int dy = a - hh;
                int dx_off = b - hw;
                // target pixel p receives g(p - (dy, dx)) * w
                int i0 = std::max(0, dy);
                int i1 = std::min(g.rows, g.rows + dy);
                int j0 = std::max(0, dx_off);
                int j1 = std::min(g.cols, g.cols + dx_off);
                for (int i = i0; i < i1; ++i) {
                    const double* gg = g.v.data() + std::size_t(i - dy) * g.cols;
                    double* dst = dx.v.data() + (std::size_t(ch) * dx.rows + std::size_t(i)) * dx.cols;
                    for (int j = j0; j < j1; ++j) dst[j] += wv * gg[j - dx_off];
                }
            }
        }
    }
}

}  // namespace

DiscriminativeModel::DiscriminativeModel(int channels, int kernel_h, int kernel_w, int map_rows,
                                         int map_cols)
    : in_channels(channels), kh(kernel_h), kw(kernel_w),
      w(std::size_t(channels) * kernel_h * kernel_w, 0.0), m(map_rows, map_cols, 1.0) {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0)
        throw std::invalid_argument("DiscriminativeModel: kernel dims must be odd");
}

Grid gaussian_label(int rows, int cols, double center_r, double center_c, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_label: sigma must be positive");
    if (center_r < 0 || center_r > rows - 1 || center_c < 0 || center_c > cols - 1)
        throw std::invalid_argument("gaussian_label: center outside dims");
    Grid y(rows, cols);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int r = 0; r < rows; ++r) {
        double dr = r - center_r;
        for (int c = 0; c < cols; ++c) {
            double dc = c - center_c;
            y.at(r, c) = std::exp(-(dr * dr + dc * dc) * inv);
        }
    }
    return y;
}

ScoreMap score(const DiscriminativeModel& model, const FeatureMap& x) {
    check_model(model, x);
    Grid r = correlate_same(x, model.w, model.kh, model.kw);
    Grid s(r.rows, r.cols);
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        double m = model.m.v[i];
        double rv = r.v[i];
        s.v[i] = m * rv + (1.0 - m) * std::max(0.0, rv);
    }
    ScoreMap out;
    out.peak = find_peak(s);
    out.scores = std::move(s);
    return out;
}

TddLossResult tdd_loss(const DiscriminativeModel& model, std::span<const TddSample> samples,
                       std::vector<FeatureMap>* input_grads) {
    if (samples.empty()) throw std::invalid_argument("tdd_loss: need at least one sample");
    const double inv_n = 1.0 / double(samples.size());

    TddLossResult out;
    out.grad.w.assign(model.w.size(), 0.0);
    out.grad.m = Grid(model.m.rows, model.m.cols, 0.0);
    out.grad.gamma = 0.0;
    if (input_grads) input_grads->clear();

    for (const TddSample& sample : samples) {
        check_model(model, sample.x);
        if (!sample.y.same_shape(model.m))
            throw std::invalid_argument("tdd_loss: label dims mismatch");
        Grid r = correlate_same(sample.x, model.w, model.kh, model.kw);
        Grid dr_cot(r.rows, r.cols);
        for (std::size_t i = 0; i < r.v.size(); ++i) {
            double m = model.m.v[i];
            double rv = r.v[i];
            double s = m * rv + (1.0 - m) * std::max(0.0, rv);
            double e = s - sample.y.v[i];
            out.value += e * e * inv_n;
            double de = 2.0 * inv_n * e;
            double dsdr = m + (rv > 0.0 ? (1.0 - m) : 0.0);
            dr_cot.v[i] = de * dsdr;
            out.grad.m.v[i] += de * std::min(rv, 0.0);
        }
        accumulate_wgrad(sample.x, dr_cot, model.kh, model.kw, out.grad.w);
        if (input_grads) {
            FeatureMap dx(sample.x.channels, sample.x.rows, sample.x.cols, sample.x.cell_size);
            accumulate_input_grad(dr_cot, model.w, model.in_channels, model.kh, model.kw, dx);
            input_grads->push_back(std::move(dx));
        }
    }

    double w_sq = 0.0;
    for (double wv : model.w) w_sq += wv * wv;
    out.value += model.gamma * model.gamma * w_sq;
    out.grad.gamma = 2.0 * model.gamma * w_sq;
    double g2 = 2.0 * model.gamma * model.gamma;
    for (std::size_t k = 0; k < model.w.size(); ++k) out.grad.w[k] += g2 * model.w[k];
    return out;
}

double tdd_gn_quadform(const DiscriminativeModel& model, std::span<const TddSample> samples,
                       const TddDirection& v, const std::vector<FeatureMap>* v_x) {
    if (samples.empty()) throw std::invalid_argument("tdd_gn_quadform: need samples");
    if (v_x && v_x->size() != samples.size())
        throw std::invalid_argument("tdd_gn_quadform: input tangent count mismatch");
    const double inv_n = 1.0 / double(samples.size());

    double quad = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const TddSample& sample = samples[k];
        Grid r = correlate_same(sample.x, model.w, model.kh, model.kw);
        Grid dr = correlate_same(sample.x, v.w, model.kh, model.kw);
        if (v_x) {
            Grid dr_x = correlate_same((*v_x)[k], model.w, model.kh, model.kw);
            for (std::size_t i = 0; i < dr.v.size(); ++i) dr.v[i] += dr_x.v[i];
        }
        for (std::size_t i = 0; i < r.v.size(); ++i) {
            double m = model.m.v[i];
            double rv = r.v[i];
            double dsdr = m + (rv > 0.0 ? (1.0 - m) : 0.0);
            double ds = v.m.v[i] * std::min(rv, 0.0) + dsdr * dr.v[i];
            quad += inv_n * ds * ds;
        }
    }
    for (std::size_t i = 0; i < model.w.size(); ++i) {
        double dreg = v.gamma * model.w[i] + model.gamma * v.w[i];
        quad += dreg * dreg;
    }
    return quad;
}

TddDirection tdd_gn_apply(const DiscriminativeModel& model, std::span<const TddSample> samples,
                          const TddDirection& v) {
    if (samples.empty()) throw std::invalid_argument("tdd_gn_apply: need samples");
    const double inv_n = 1.0 / double(samples.size());

    TddDirection out;
    out.w.assign(model.w.size(), 0.0);
    out.m = Grid(model.m.rows, model.m.cols, 0.0);
    out.gamma = 0.0;

    for (const TddSample& sample : samples) {
        Grid r = correlate_same(sample.x, model.w, model.kh, model.kw);
        Grid dr = correlate_same(sample.x, v.w, model.kh, model.kw);
        Grid cot(r.rows, r.cols);
        for (std::size_t i = 0; i < r.v.size(); ++i) {
            double m = model.m.v[i];
            double rv = r.v[i];
            double dsdr = m + (rv > 0.0 ? (1.0 - m) : 0.0);
            double ds = v.m.v[i] * std::min(rv, 0.0) + dsdr * dr.v[i];
            // J^T row for this cell carries the same local factors.
            double u = 2.0 * inv_n * ds;
            cot.v[i] = u * dsdr;
            out.m.v[i] += u * std::min(rv, 0.0);
        }
        accumulate_wgrad(sample.x, cot, model.kh, model.kw, out.w);
    }
    for (std::size_t i = 0; i < model.w.size(); ++i) {
        double dreg = v.gamma * model.w[i] + model.gamma * v.w[i];
        out.w[i] += 2.0 * dreg * model.gamma;
        out.gamma += 2.0 * dreg * model.w[i];
    }
    return out;
}

PositionEstimate predict_position(const ScoreMap& smap) {
    if (smap.scores.empty()) throw std::invalid_argument("predict_position: empty map");
    const Grid& s = smap.scores;
    PeakLocation p = smap.peak;

    PositionEstimate est;
    est.row = p.row;
    est.col = p.col;
    est.y_max = p.value;
    if (p.col > 0 && p.col < s.cols - 1)
        est.off_c = parabolic_offset(s.at(p.row, p.col - 1), p.value, s.at(p.row, p.col + 1));
    if (p.row > 0 && p.row < s.rows - 1)
        est.off_r = parabolic_offset(s.at(p.row - 1, p.col), p.value, s.at(p.row + 1, p.col));
    return est;
}

}  // namespace rstrack
