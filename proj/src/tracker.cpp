#include "rstrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rstrack/errors.hpp"

namespace rstrack {

namespace {

void validate_config(const TrackerConfig& cfg) {
    if (cfg.cell_size < 1 || cfg.patch_size % cfg.cell_size != 0)
        throw std::invalid_argument("tracker: patch_size must be divisible by cell_size");
    if (cfg.patch_size < 16 || cfg.rsi_patch_size < 32)
        throw std::invalid_argument("tracker: patch sizes too small");
    if (cfg.rsi_patch_size % cfg.cell_size != 0)
        throw std::invalid_argument("tracker: rsi_patch_size must be divisible by cell_size");
    if (!(cfg.kappa > 0.0) || cfg.kappa > 1.0)
        throw std::invalid_argument("tracker: kappa must lie in (0, 1]");
    if (cfg.check_period < 1 || cfg.energy_period < 1 || cfg.history < 1)
        throw std::invalid_argument("tracker: periods must be positive");
    if (!(cfg.max_rotation_step_deg > 0.0) || !(cfg.max_scale_step > 1.0))
        throw std::invalid_argument("tracker: motion caps must be positive");
    if (cfg.mu < 0.0) throw std::invalid_argument("tracker: mu must be non-negative");
}

int odd_clamped(int v, int lo, int hi) {
    if (v % 2 == 0) ++v;
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    return v % 2 == 0 ? v + 1 : v;
}

// dA[o][i] = sum over samples/cells of d_out[o](cell) * raw[i](cell)
void accumulate_adapter_grad(const FeatureMap& d_out, const FeatureMap& raw, ChannelMixer& grad) {
    const std::size_t plane = std::size_t(raw.rows) * raw.cols;
    for (int o = 0; o < grad.out_ch; ++o) {
        const double* dp = &d_out.v[o * plane];
        for (int i = 0; i < grad.in_ch; ++i) {
            const double* rp = &raw.v[i * plane];
            double acc = 0.0;
            for (std::size_t k = 0; k < plane; ++k) acc += dp[k] * rp[k];
            grad.at(o, i) += acc;
        }
    }
}

double dot(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

}  // namespace

Tracker::Tracker(const Image& frame0, const AxisAlignedBox& box, const TrackerConfig& cfg)
    : cfg_(cfg) {
    validate_config(cfg_);
    validate_image(frame0);
    if (!(box.w > 0.0) || !(box.h > 0.0))
        throw std::invalid_argument("tracker: annotation box must have positive area");
    if (box.x < 0.0 || box.y < 0.0 || box.x + box.w > frame0.width() ||
        box.y + box.h > frame0.height())
        throw std::invalid_argument("tracker: annotation box outside frame");

    state_.cx = box.x + box.w / 2.0;
    state_.cy = box.y + box.h / 2.0;
    state_.base_w = box.w;
    state_.base_h = box.h;
    state_.scale = 1.0;
    state_.rotation_deg = 0.0;

    map_rows_ = cfg_.patch_size / cfg_.cell_size;
    map_cols_ = map_rows_;
    // The padded patch normalizes the target to patch_size/pad px per side.
    double target_cells = cfg_.patch_size / (cfg_.pad_td * cfg_.cell_size);
    label_sigma_ = std::max(1.0, cfg_.label_sigma_factor * target_cells);
    int k = odd_clamped(int(std::lround(target_cells)), cfg_.filter_min, cfg_.filter_max);

    model_ = DiscriminativeModel(kFeatureChannels, k, k, map_rows_, map_cols_);
    model_.gamma = 1e-2;
    double ctr = (map_rows_ - 1) / 2.0;
    double ctc = (map_cols_ - 1) / 2.0;
    model_.m = gaussian_label(map_rows_, map_cols_, ctr, ctc, 2.0 * label_sigma_);

    adapter_td_ = identity_mixer(kFeatureChannels);
    adapter_rsi_ = identity_mixer(kFeatureChannels);

    energy_.history_capacity = cfg_.history;
    controller_.kappa = cfg_.kappa;
    controller_.check_period = cfg_.check_period;

    // Augmented first-frame sample set: the annotated sample plus shifts of
    // +-2 cells, rotations +-5 degrees, and scale x/1.05.
    Image base_patch = extract_patch(frame0, state_, cfg_.patch_size, cfg_.patch_size, cfg_.pad_td);
    if (grid_max(base_patch.px) - grid_min(base_patch.px) < 1e-9)
        throw NoSignalError("tracker: flat target patch at init");

    memory_.push_back(make_sample(frame0, state_, 0.0, 0.0));
    const double step_x = cfg_.pad_td * state_.base_w / cfg_.patch_size;
    const double step_y = cfg_.pad_td * state_.base_h / cfg_.patch_size;
    const int shift_cells = 2;
    const int shifts[4][2] = {{shift_cells, 0}, {-shift_cells, 0}, {0, shift_cells}, {0, -shift_cells}};
    for (auto [dx, dy] : shifts) {
        TargetState st = state_;
        st.cx += dx * cfg_.cell_size * step_x;
        st.cy += dy * cfg_.cell_size * step_y;
        memory_.push_back(make_sample(frame0, st, -double(dy), -double(dx)));
    }
    for (double rot : {5.0, -5.0}) {
        TargetState st = state_;
        st.rotation_deg = rot;
        memory_.push_back(make_sample(frame0, st, 0.0, 0.0));
    }
    for (double sc : {1.05, 1.0 / 1.05}) {
        TargetState st = state_;
        st.scale = sc;
        memory_.push_back(make_sample(frame0, st, 0.0, 0.0));
    }

    // First-frame training until the loss plateaus.
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg_.init_train_steps; ++i) {
        double cur = update_models(-1.0, 0.5, 1);
        if (prev - cur <= 1e-3 * std::max(prev, 1e-12)) break;
        prev = cur;
    }

    lp_grid_ = default_lp_grid(cfg_.rsi_patch_size, cfg_.rsi_patch_size, cfg_.lp_rho, cfg_.lp_theta);
    rsi_template_ = extract_rsi_patch(frame0, state_);

    if (cfg_.mode == EstimatorMode::learned || cfg_.mode == EstimatorMode::fused) {
        regressor_ = make_rsi_regressor(kFeatureChannels, cfg_.seed);
        regressor_->input_cell_size = cfg_.cell_size;
        auto pairs = make_training_pairs(rsi_template_, paper_grid(), lp_grid_);
        RsiTrainConfig tc;
        tc.epochs = cfg_.regressor_epochs;
        tc.batch_size = cfg_.regressor_batch;
        tc.lr0 = cfg_.regressor_lr;
        tc.seed = cfg_.seed;
        train_rsi(*regressor_, pairs, tc);
    }
    refresh_rsi_reference(frame0);
}

TddSample Tracker::make_sample(const Image& frame, const TargetState& st, double label_dr,
                               double label_dc) const {
    Image patch = extract_patch(frame, st, cfg_.patch_size, cfg_.patch_size, cfg_.pad_td);
    TddSample sample;
    sample.x = extract_features(patch, cfg_.cell_size);
    double ctr = (map_rows_ - 1) / 2.0 + label_dr;
    double ctc = (map_cols_ - 1) / 2.0 + label_dc;
    sample.y = gaussian_label(map_rows_, map_cols_, ctr, ctc, label_sigma_);
    return sample;
}

Image Tracker::extract_rsi_patch(const Image& frame, const TargetState& st) const {
    TargetState sq = st;
    double side = std::sqrt(st.base_w * st.base_h);
    sq.base_w = side;
    sq.base_h = side;
    return extract_patch(frame, sq, cfg_.rsi_patch_size, cfg_.rsi_patch_size, cfg_.pad_rsi);
}

void Tracker::refresh_rsi_reference(const Image& frame) {
    rsi_template_ = extract_rsi_patch(frame, state_);
    if (!regressor_) return;
    RotationScaleGrid grid = paper_grid();
    rsi_feats_.clear();
    rsi_labels_.clear();
    int want = std::max(1, cfg_.rsi_update_pairs);
    std::size_t stride = std::max<std::size_t>(1, grid.pairs.size() / want);
    for (std::size_t i = 0; i < grid.pairs.size(); i += stride) {
        auto [s, r] = grid.pairs[i];
        LogPolarPatch lp = logpolar_warp(warp_similarity(rsi_template_, s, r), lp_grid_);
        rsi_feats_.push_back(rsi_featurize(lp, cfg_.cell_size));
        rsi_labels_.push_back({s, r});
    }
}

RotationScaleEstimate Tracker::estimate_delta(const Image& frame) {
    Image patch = extract_rsi_patch(frame, state_);
    RotationScaleEstimate identity;

    auto analytic = [&]() -> RotationScaleEstimate {
        try {
            return estimate_analytic(rsi_template_, patch, lp_grid_);
        } catch (const NoSignalError&) {
            return identity;
        }
    };
    auto learned = [&]() -> RotationScaleEstimate {
        LogPolarPatch lp = logpolar_warp(patch, lp_grid_);
        FeatureMap x = calibrate(rsi_featurize(lp, cfg_.cell_size), adapter_rsi_);
        return regressor_forward(*regressor_, x);
    };

    switch (cfg_.mode) {
        case EstimatorMode::off:
            return identity;
        case EstimatorMode::analytic:
            return analytic();
        case EstimatorMode::learned:
            return learned();
        case EstimatorMode::fused: {
            RotationScaleEstimate a = analytic();
            RotationScaleEstimate l = learned();
            bool rot_ok = std::abs(l.rotation_deg - a.rotation_deg) <= cfg_.fused_rot_gate_deg;
            bool scale_ok = std::abs(l.scale / a.scale - 1.0) <= cfg_.fused_scale_gate;
            return rot_ok && scale_ok ? l : a;
        }
    }
    return identity;
}

double Tracker::update_models(double eps, double alpha_cap, int steps) {
    double loss_value = 0.0;
    for (int step = 0; step < steps; ++step) {
        // Discrimination block on the calibrated sample memory.
        std::vector<TddSample> samples;
        samples.reserve(memory_.size());
        for (const TddSample& s : memory_)
            samples.push_back(TddSample{calibrate(s.x, adapter_td_), s.y});

        std::vector<FeatureMap> td_dx;
        TddLossResult td = tdd_loss(model_, samples, cfg_.learn_adapters ? &td_dx : nullptr);
        ChannelMixer a_td_grad(kFeatureChannels, kFeatureChannels);
        if (cfg_.learn_adapters) {
            for (std::size_t i = 0; i < memory_.size(); ++i)
                accumulate_adapter_grad(td_dx[i], memory_[i].x, a_td_grad);
        }

        // Rotation-scale block on the template pair subset.
        bool has_rsi = regressor_.has_value() && !rsi_feats_.empty();
        RsiLossResult rs;
        ChannelMixer a_rsi_grad(kFeatureChannels, kFeatureChannels);
        std::vector<FeatureMap> rsi_inputs;
        if (has_rsi) {
            rsi_inputs.reserve(rsi_feats_.size());
            for (const FeatureMap& f : rsi_feats_) rsi_inputs.push_back(calibrate(f, adapter_rsi_));
            std::vector<FeatureMap> rs_dx;
            rs = rsi_loss_on_features(*regressor_, rsi_inputs, rsi_labels_,
                                      cfg_.learn_adapters ? &rs_dx : nullptr);
            if (cfg_.learn_adapters) {
                for (std::size_t i = 0; i < rsi_feats_.size(); ++i)
                    accumulate_adapter_grad(rs_dx[i], rsi_feats_[i], a_rsi_grad);
            }
        }
        loss_value = (has_rsi ? rs.value : 0.0) + cfg_.mu * td.value;

        // Combined direction: [grad L_rs ; mu * grad L_td].
        TddDirection d_td;
        d_td.w = td.grad.w;
        d_td.m = td.grad.m;
        d_td.gamma = td.grad.gamma;
        for (double& v : d_td.w) v *= cfg_.mu;
        for (double& v : d_td.m.v) v *= cfg_.mu;
        d_td.gamma *= cfg_.mu;
        for (double& v : a_td_grad.w) v *= cfg_.mu;

        double gg = dot(d_td.w) + dot(d_td.m.v) + d_td.gamma * d_td.gamma + dot(a_td_grad.w);
        if (has_rsi) {
            gg += dot(rs.grad.w1) + dot(rs.grad.b1) + dot(rs.grad.w2) + dot(rs.grad.b2) +
                  dot(rs.grad.w3) + dot(rs.grad.b3) + dot(a_rsi_grad.w);
        }
        if (gg <= 0.0) return loss_value;

        // Gauss-Newton curvature along the direction: g' Lambda g = 2 ||J g||^2
        // accumulated per partition.
        double quad = 0.0;
        {
            std::vector<FeatureMap> v_x;
            const std::vector<FeatureMap>* v_x_ptr = nullptr;
            if (cfg_.learn_adapters) {
                v_x.reserve(memory_.size());
                for (const TddSample& s : memory_) v_x.push_back(calibrate(s.x, a_td_grad));
                v_x_ptr = &v_x;
            }
            quad += cfg_.mu * tdd_gn_quadform(model_, samples, d_td, v_x_ptr);
        }
        if (has_rsi) {
            std::vector<FeatureMap> v_x;
            const std::vector<FeatureMap>* v_x_ptr = nullptr;
            if (cfg_.learn_adapters) {
                v_x.reserve(rsi_feats_.size());
                for (const FeatureMap& f : rsi_feats_) v_x.push_back(calibrate(f, a_rsi_grad));
                v_x_ptr = &v_x;
            }
            quad += rsi_gn_quadform(*regressor_, rsi_inputs, rsi_labels_, rs.grad, v_x_ptr);
        }
        double glg = 2.0 * quad;
        double alpha_s = glg <= 1e-12 * gg ? 1.0 : gg / glg;
        double alpha = eps > 0.0 ? adaptive_rate(eps, alpha_s) : std::min(alpha_s, alpha_cap);

        // Descend.
        for (std::size_t i = 0; i < model_.w.size(); ++i) model_.w[i] -= alpha * d_td.w[i];
        for (std::size_t i = 0; i < model_.m.v.size(); ++i)
            model_.m.v[i] = std::clamp(model_.m.v[i] - alpha * d_td.m.v[i], 0.0, 1.0);
        model_.gamma = std::max(0.0, model_.gamma - alpha * d_td.gamma);
        if (cfg_.learn_adapters) {
            for (std::size_t i = 0; i < adapter_td_.w.size(); ++i)
                adapter_td_.w[i] -= alpha * a_td_grad.w[i];
        }
        if (has_rsi) {
            auto axpy = [alpha](std::vector<double>& p, const std::vector<double>& g) {
                for (std::size_t i = 0; i < p.size(); ++i) p[i] -= alpha * g[i];
            };
            axpy(regressor_->h1.w, rs.grad.w1);
            axpy(regressor_->h1.b, rs.grad.b1);
            axpy(regressor_->h2.w, rs.grad.w2);
            axpy(regressor_->h2.b, rs.grad.b2);
            axpy(regressor_->h3.w, rs.grad.w3);
            axpy(regressor_->h3.b, rs.grad.b3);
            if (cfg_.learn_adapters) axpy(adapter_rsi_.w, a_rsi_grad.w);
        }
    }
    return loss_value;
}

ScoreMap Tracker::score_at_state(const Image& frame) const {
    Image patch = extract_patch(frame, state_, cfg_.patch_size, cfg_.patch_size, cfg_.pad_td);
    FeatureMap x = calibrate(extract_features(patch, cfg_.cell_size), adapter_td_);
    return score(model_, x);
}

TargetState Tracker::track_frame(const Image& frame) {
    validate_image(frame);
    ++frame_index_;
    const long t = frame_index_;
    diag_ = FrameDiagnostics{};

    // 1. target-distractor position prediction at the previous state
    Image patch = extract_patch(frame, state_, cfg_.patch_size, cfg_.patch_size, cfg_.pad_td);
    FeatureMap raw = extract_features(patch, cfg_.cell_size);
    FeatureMap x = calibrate(raw, adapter_td_);
    ScoreMap smap = score(model_, x);
    PositionEstimate pos = predict_position(smap);

    double dr = pos.row + pos.off_r - (map_rows_ - 1) / 2.0;
    double dc = pos.col + pos.off_c - (map_cols_ - 1) / 2.0;
    double step_x = cfg_.pad_td * state_.base_w * state_.scale / cfg_.patch_size;
    double step_y = cfg_.pad_td * state_.base_h * state_.scale / cfg_.patch_size;
    double du = dc * cfg_.cell_size * step_x;
    double dv = dr * cfg_.cell_size * step_y;
    double th = deg_to_rad(state_.rotation_deg);
    state_.cx += du * std::cos(th) - dv * std::sin(th);
    state_.cy += du * std::sin(th) + dv * std::cos(th);

    // 2. rotation/scale residual against the stored template, clamped to the
    // per-frame motion caps
    if (cfg_.mode != EstimatorMode::off) {
        RotationScaleEstimate est = estimate_delta(frame);
        double d_rot = std::clamp(est.rotation_deg, -cfg_.max_rotation_step_deg,
                                  cfg_.max_rotation_step_deg);
        double d_scale =
            std::clamp(est.scale, 1.0 / cfg_.max_scale_step, cfg_.max_scale_step);
        state_.rotation_deg = wrap_degrees(state_.rotation_deg + d_rot);
        state_.scale *= d_scale;
    }

    // 3. sample memory at the updated state
    memory_.push_back(make_sample(frame, state_, 0.0, 0.0));
    while (int(memory_.size()) > cfg_.memory_capacity) memory_.pop_front();

    // 4. energy bookkeeping: every frame through the bootstrap window, then
    // every energy_period frames
    diag_.y_max = pos.y_max;
    if (t <= cfg_.bootstrap_frames) {
        energy_.push_peak(pos.y_max);
        if (t == cfg_.bootstrap_frames) {
            eps_last_ = spatiotemporal_energy(smap, energy_);
            controller_.epsilon0 = eps_last_;
            controller_.bootstrapped = true;
        }
    } else if (t % cfg_.energy_period == 0) {
        energy_.push_peak(pos.y_max);
        eps_last_ = spatiotemporal_energy(smap, energy_);
    }
    diag_.eps = eps_last_;

    // 5. model update: unconditional seeding before the bootstrap closes,
    // energy-gated at checkpoints afterwards
    if (cfg_.updates_enabled) {
        if (t < cfg_.bootstrap_frames) {
            update_models(-1.0, cfg_.bootstrap_alpha_cap, 1);
            diag_.updated = true;
        } else if (t % cfg_.check_period == 0) {
            diag_.update_checked = true;
            bool accept =
                cfg_.gating_enabled ? should_update(t, eps_last_, controller_) : true;
            if (accept) {
                update_models(eps_last_, cfg_.bootstrap_alpha_cap, cfg_.max_steps_per_update);
                refresh_rsi_reference(frame);
                diag_.updated = true;
                ++updates_performed_;
            } else {
                diag_.update_skipped = true;
                ++checkpoints_skipped_;
            }
        }
    }
    return state_;
}

SequenceResult run_sequence(const TrackerConfig& cfg, const std::vector<Image>& frames,
                            const AxisAlignedBox& annotation) {
    if (frames.empty()) throw std::invalid_argument("run_sequence: need at least one frame");
    auto start = std::chrono::steady_clock::now();

    Tracker tracker(frames[0], annotation, cfg);
    SequenceResult res;
    res.states.push_back(tracker.state());
    res.diagnostics.push_back(FrameDiagnostics{});
    for (std::size_t i = 1; i < frames.size(); ++i) {
        res.states.push_back(tracker.track_frame(frames[i]));
        res.diagnostics.push_back(tracker.last_diagnostics());
    }

    auto end = std::chrono::steady_clock::now();
    res.total_seconds = std::chrono::duration<double>(end - start).count();
    res.fps = res.total_seconds > 0.0 ? double(frames.size()) / res.total_seconds : 0.0;
    res.updates = tracker.updates_performed();
    res.skipped_checkpoints = tracker.checkpoints_skipped();
    return res;
}

}  // namespace rstrack
