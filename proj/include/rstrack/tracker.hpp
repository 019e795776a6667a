#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "rstrack/optimizer.hpp"
#include "rstrack/rsi.hpp"
#include "rstrack/synth.hpp"
#include "rstrack/tdd.hpp"

namespace rstrack {

enum class EstimatorMode { off, analytic, learned, fused };

struct TrackerConfig {
    int patch_size = 80;       // discrimination search patch (px), divisible by cell_size
    int rsi_patch_size = 64;   // rotation/scale patch (px)
    double pad_td = 4.0;
    double pad_rsi = 2.0;
    int cell_size = 2;
    int lp_rho = 64;
    int lp_theta = 64;
    EstimatorMode mode = EstimatorMode::analytic;

    // per-frame motion caps
    double max_rotation_step_deg = 30.0;
    double max_scale_step = 1.61051;  // 1.1^5

    // update controller
    double kappa = 0.8;
    int check_period = 10;
    int energy_period = 5;
    int history = 5;
    double mu = 50.0;
    int max_steps_per_update = 3;
    int bootstrap_frames = 5;
    double bootstrap_alpha_cap = 0.1;

    int memory_capacity = 30;
    int init_train_steps = 50;
    double label_sigma_factor = 0.125;
    int filter_min = 5;
    int filter_max = 11;
    std::uint32_t seed = 42;
    bool learn_adapters = true;
    int rsi_update_pairs = 8;   // grid subset refreshed with the template
    double fused_rot_gate_deg = 4.0;
    double fused_scale_gate = 0.05;
    int regressor_epochs = 40;  // learned/fused init training
    double regressor_lr = 1e-2;
    int regressor_batch = 64;

    // ablation switches
    bool updates_enabled = true;
    bool gating_enabled = true;
};

struct FrameDiagnostics {
    double eps = 0.0;
    double y_max = 0.0;
    bool updated = false;
    bool update_checked = false;  // frame was an update checkpoint
    bool update_skipped = false;  // checkpoint rejected by the energy gate
};

class Tracker {
  public:
    // Trains the discrimination model on the augmented first-frame sample set
    // and stores the rotation/scale template. Throws NoSignalError on a flat
    // target patch.
    Tracker(const Image& frame0, const AxisAlignedBox& annotation, const TrackerConfig& cfg);

    TargetState track_frame(const Image& frame);

    const TargetState& state() const { return state_; }
    const FrameDiagnostics& last_diagnostics() const { return diag_; }
    int updates_performed() const { return updates_performed_; }
    int checkpoints_skipped() const { return checkpoints_skipped_; }
    const std::optional<RSIRegressor>& regressor() const { return regressor_; }
    const DiscriminativeModel& model() const { return model_; }
    double epsilon0() const { return controller_.epsilon0; }

    // Score of the current model on a frame at the current state (diagnostics).
    ScoreMap score_at_state(const Image& frame) const;

  private:
    TddSample make_sample(const Image& frame, const TargetState& st, double label_dr,
                          double label_dc) const;
    Image extract_rsi_patch(const Image& frame, const TargetState& st) const;
    void refresh_rsi_reference(const Image& frame);
    RotationScaleEstimate estimate_delta(const Image& frame);
    // Runs up to `steps` combined-loss descent steps; returns the loss value
    // observed before the last step.
    double update_models(double eps, double alpha_cap, int steps);

    TrackerConfig cfg_;
    TargetState state_;
    long frame_index_ = 0;

    int map_rows_ = 0;
    int map_cols_ = 0;
    double label_sigma_ = 1.0;
    DiscriminativeModel model_;
    ChannelMixer adapter_td_, adapter_rsi_;
    std::deque<TddSample> memory_;  // raw (uncalibrated) features + labels

    LogPolarGrid lp_grid_;
    Image rsi_template_;
    std::optional<RSIRegressor> regressor_;
    std::vector<FeatureMap> rsi_feats_;  // raw features of the template pair subset
    std::vector<std::array<double, 2>> rsi_labels_;

    EnergyStats energy_;
    UpdateController controller_;
    double eps_last_ = 0.0;
    FrameDiagnostics diag_;
    int updates_performed_ = 0;
    int checkpoints_skipped_ = 0;
};

struct SequenceResult {
    std::vector<TargetState> states;           // one per frame, frame 0 first
    std::vector<FrameDiagnostics> diagnostics;  // aligned with states
    double total_seconds = 0.0;
    double fps = 0.0;
    int updates = 0;
    int skipped_checkpoints = 0;
};

// Deterministic given config and frames; one state per frame plus diagnostics.
SequenceResult run_sequence(const TrackerConfig& cfg, const std::vector<Image>& frames,
                            const AxisAlignedBox& annotation);

}  // namespace rstrack
