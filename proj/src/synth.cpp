#include "rstrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rstrack {

RotationScaleGrid paper_grid(bool symmetric_rotations) {
    RotationScaleGrid grid;
    if (symmetric_rotations) {
        for (int d = 5; d >= 1; --d) grid.rotations_deg.push_back(-6.0 * d);
        for (int d = 1; d <= 5; ++d) grid.rotations_deg.push_back(6.0 * d);
    } else {
        for (int d = 1; d <= 10; ++d) grid.rotations_deg.push_back(3.0 * d);
    }
    for (int k = -5; k <= 5; ++k) {
        if (k == 0) continue;
        grid.scales.push_back(std::pow(1.1, k));
    }
    for (double s : grid.scales)
        for (double r : grid.rotations_deg) grid.pairs.emplace_back(s, r);
    return grid;
}

std::vector<RSITrainingPair> make_training_pairs(const Image& anchor,
                                                 const RotationScaleGrid& grid,
                                                 const LogPolarGrid& lp_grid) {
    if (anchor.height() < 64 || anchor.width() < 64)
        throw std::invalid_argument("make_training_pairs: anchor must be at least 64x64");
    LogPolarPatch anchor_lp = logpolar_warp(anchor, lp_grid);
    std::vector<RSITrainingPair> pairs;
    pairs.reserve(grid.pairs.size());
    for (auto [scale, rot] : grid.pairs) {
        RSITrainingPair p;
        p.anchor_lp = anchor_lp;
        p.translated_lp = logpolar_warp(warp_similarity(anchor, scale, rot), lp_grid);
        p.label_scale = scale;
        p.label_rotation_deg = rot;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Procedural texture
// ---------------------------------------------------------------------------

namespace {

Grid value_noise(int h, int w, int lattice_px, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    int lr = h / lattice_px + 2;
    int lc = w / lattice_px + 2;
    Grid lattice(lr, lc);
    for (double& v : lattice.v) v = uni(rng);

    Grid out(h, w);
    for (int y = 0; y < h; ++y) {
        double fy = double(y) / lattice_px;
        int y0 = int(fy);
        double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            double fx = double(x) / lattice_px;
            int x0 = int(fx);
            double tx = fx - x0;
            double a = lattice.at(y0, x0), b = lattice.at(y0, x0 + 1);
            double c = lattice.at(y0 + 1, x0), d = lattice.at(y0 + 1, x0 + 1);
            out.at(y, x) = (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
        }
    }
    return out;
}

}  // namespace

Image textured_image(int h, int w, std::uint32_t seed) {
    if (h < 8 || w < 8) throw std::invalid_argument("textured_image: dims too small");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Grid acc(h, w, 0.0);
    double total_amp = 0.0;
    for (int octave = 0; octave < 5; ++octave) {
        int lattice = std::max(2, std::min(h, w) >> (octave + 1));
        double amp = std::pow(0.55, octave);
        Grid n = value_noise(h, w, lattice, rng);
        for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += amp * n.v[i];
        total_amp += amp;
    }
    for (double& v : acc.v) v /= total_amp;

    // A few hard-edged shapes for unambiguous structure.
    for (int k = 0; k < 3; ++k) {
        double cx = uni(rng) * w, cy = uni(rng) * h;
        double rad = (0.05 + 0.10 * uni(rng)) * std::min(h, w);
        double val = uni(rng);
        for (int y = std::max(0, int(cy - rad)); y < std::min(h, int(cy + rad) + 1); ++y)
            for (int x = std::max(0, int(cx - rad)); x < std::min(w, int(cx + rad) + 1); ++x)
                if (std::hypot(x - cx, y - cy) <= rad)
                    acc.at(y, x) = 0.5 * acc.at(y, x) + 0.5 * val;
    }
    for (int k = 0; k < 2; ++k) {
        double angle = uni(rng) * kPi;
        double freq = 2.0 * kPi * (2.0 + 6.0 * uni(rng)) / std::min(h, w);
        double cA = std::cos(angle) * freq, sA = std::sin(angle) * freq;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                acc.at(y, x) += 0.08 * std::sin(cA * x + sA * y);
    }

    double lo = grid_min(acc), hi = grid_max(acc);
    double span = hi > lo ? hi - lo : 1.0;
    Image img;
    img.px = std::move(acc);
    for (double& v : img.px.v) v = (v - lo) / span;
    return img;
}

// ---------------------------------------------------------------------------
// Sequence generation
// ---------------------------------------------------------------------------

namespace {

struct MotionSample {
    double dx = 0.0, dy = 0.0;  // offset from the canvas center
    double rot_deg = 0.0;
    double scale = 1.0;
};

MotionSample motion_at(const SyntheticSequenceSpec& spec, int t) {
    MotionSample m;
    if (spec.profile == MotionProfile::linear) {
        m.dx = spec.trans_step_px * t;
        m.dy = 0.0;
        m.rot_deg = spec.rot_step_deg * t;
        m.scale = std::pow(spec.scale_step, t);
        return m;
    }
    // Sinusoids with amplitudes chosen so per-frame deltas stay within the
    // configured step bounds: |delta sin| <= 2 sin(pi/P).
    auto amp = [](double bound, double period) {
        return bound / (2.0 * std::sin(kPi / period));
    };
    double rot_amp = amp(spec.rot_step_deg, spec.rot_period);
    double log_scale_amp = amp(std::log(std::max(spec.scale_step, 1.0 + 1e-12)),
                               spec.scale_period);
    double trans_amp = amp(spec.trans_step_px, spec.trans_period);

    m.rot_deg = rot_amp * std::sin(2.0 * kPi * t / spec.rot_period);
    m.scale = std::exp(log_scale_amp * std::sin(2.0 * kPi * t / spec.scale_period));
    // Lissajous-style path; each axis individually honors the bound.
    m.dx = trans_amp * std::sin(2.0 * kPi * t / spec.trans_period);
    m.dy = trans_amp * std::sin(2.0 * kPi * t / (spec.trans_period * 1.37));
    return m;
}

}  // namespace

SyntheticSequence generate_sequence(const SyntheticSequenceSpec& spec) {
    if (spec.frames < 0) throw std::invalid_argument("generate_sequence: negative frame count");
    if (spec.sprite_size < 16 || spec.canvas_h < 2 * spec.sprite_size ||
        spec.canvas_w < 2 * spec.sprite_size)
        throw std::invalid_argument("generate_sequence: base image too small for the motion envelope");

    Image background = textured_image(spec.canvas_h, spec.canvas_w, spec.seed);
    // Dim the background so sprite texture dominates.
    for (double& v : background.px.v) v = 0.15 + 0.35 * v;
    Image sprite = textured_image(spec.sprite_size, spec.sprite_size, spec.seed + 1);
    for (double& v : sprite.px.v) v = 0.35 + 0.65 * v;

    const double cx0 = (spec.canvas_w - 1) / 2.0;
    const double cy0 = (spec.canvas_h - 1) / 2.0;
    const double sprite_cx = (spec.sprite_size - 1) / 2.0;
    const double half = spec.sprite_size / 2.0;

    std::mt19937 noise_rng(spec.seed + 2);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Verify the motion envelope keeps the sprite inside the canvas.
    double max_extent = 0.0;
    for (int t = 0; t <= spec.frames; ++t) {
        MotionSample m = motion_at(spec, t);
        double reach = half * m.scale * std::sqrt(2.0);
        max_extent = std::max(max_extent,
                              std::max(std::abs(m.dx), std::abs(m.dy)) + reach);
    }
    if (cx0 - max_extent < 0 || cy0 - max_extent < 0)
        throw std::invalid_argument("generate_sequence: base image too small for the motion envelope");

    SyntheticSequence seq;
    seq.frames.reserve(spec.frames + 1);
    seq.truth.reserve(spec.frames + 1);

    for (int t = 0; t <= spec.frames; ++t) {
        MotionSample m = motion_at(spec, t);
        double cx = cx0 + m.dx;
        double cy = cy0 + m.dy;
        bool occluded = spec.occlude_start >= 0 && t >= spec.occlude_start &&
                        t < spec.occlude_start + spec.occlude_len;

        Image frame = background;
        if (!occluded) {
            double th = deg_to_rad(m.rot_deg);
            double c = std::cos(th), s = std::sin(th);
            double reach = half * m.scale * std::sqrt(2.0) + 2.0;
            int y0 = std::max(0, int(cy - reach));
            int y1 = std::min(spec.canvas_h - 1, int(cy + reach) + 1);
            int x0 = std::max(0, int(cx - reach));
            int x1 = std::min(spec.canvas_w - 1, int(cx + reach) + 1);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    // inverse similarity into sprite coordinates
                    double px = x - cx, py = y - cy;
                    double u = (px * c + py * s) / m.scale + sprite_cx;
                    double v = (-px * s + py * c) / m.scale + sprite_cx;
                    // bilinear edge coverage for a lightly feathered border
                    double cov_u = std::min(u + 0.5, spec.sprite_size - 0.5 - u);
                    double cov_v = std::min(v + 0.5, spec.sprite_size - 0.5 - v);
                    double cov = std::min(1.0, std::min(cov_u, cov_v));
                    if (cov <= 0.0) continue;
                    double val = bilinear_clamped(sprite.px, u, v);
                    frame.px.at(y, x) = cov * val + (1.0 - cov) * frame.px.at(y, x);
                }
            }
        }
        if (spec.noise_sigma > 0.0) {
            for (double& v : frame.px.v)
                v = std::clamp(v + spec.noise_sigma * gauss(noise_rng), 0.0, 1.0);
        }
        seq.frames.push_back(std::move(frame));

        TargetState st;
        st.cx = cx;
        st.cy = cy;
        st.base_w = spec.sprite_size;
        st.base_h = spec.sprite_size;
        st.scale = m.scale;
        st.rotation_deg = wrap_degrees(m.rot_deg);
        seq.truth.push_back(st);
    }

    seq.annotation = AxisAlignedBox{cx0 - half, cy0 - half, double(spec.sprite_size),
                                    double(spec.sprite_size)};
    return seq;
}

SyntheticSequenceSpec parse_sequence_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_sequence_spec: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (!blank)
                throw std::runtime_error("parse_sequence_spec: malformed line " +
                                         std::to_string(lineno) + " in " + path);
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    SyntheticSequenceSpec spec;
    auto geti = [&](const char* key, int dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stoi(it->second);
    };
    auto getd = [&](const char* key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stod(it->second);
    };
    spec.canvas_h = geti("canvas_h", spec.canvas_h);
    spec.canvas_w = geti("canvas_w", spec.canvas_w);
    spec.sprite_size = geti("sprite_size", spec.sprite_size);
    spec.frames = geti("frames", spec.frames);
    spec.trans_step_px = getd("trans_step_px", spec.trans_step_px);
    spec.rot_step_deg = getd("rot_step_deg", spec.rot_step_deg);
    spec.scale_step = getd("scale_step", spec.scale_step);
    spec.noise_sigma = getd("noise_sigma", spec.noise_sigma);
    spec.seed = std::uint32_t(geti("seed", int(spec.seed)));
    spec.occlude_start = geti("occlude_start", spec.occlude_start);
    spec.occlude_len = geti("occlude_len", spec.occlude_len);
    spec.rot_period = getd("rot_period", spec.rot_period);
    spec.scale_period = getd("scale_period", spec.scale_period);
    spec.trans_period = getd("trans_period", spec.trans_period);
    if (auto it = kv.find("profile"); it != kv.end()) {
        if (it->second == "linear")
            spec.profile = MotionProfile::linear;
        else if (it->second == "oscillate")
            spec.profile = MotionProfile::oscillate;
        else
            throw std::runtime_error("parse_sequence_spec: unknown profile " + it->second);
    }
    return spec;
}

}  // namespace rstrack
