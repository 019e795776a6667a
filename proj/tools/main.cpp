// Command-line surface: track / eval / synth / train-rsi / selftest.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include "rstrack/bench.hpp"
#include "rstrack/config.hpp"
#include "rstrack/errors.hpp"
#include "rstrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace rstrack;

namespace {

std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d.png", index);
    return buf;
}

void write_overlay(const std::string& dir, int index, const Image& frame, const RotatedBox& pred,
                   const RotatedBox* gt) {
    Grid r = frame.px, g = frame.px, b = frame.px;
    if (gt) draw_rotated_box(r, g, b, *gt, {0.2, 1.0, 0.2});
    draw_rotated_box(r, g, b, pred, {1.0, 0.2, 0.2});
    save_png_rgb((fs::path(dir) / frame_name(index)).string(), r, g, b);
}

int cmd_track(const std::string& seq_dir, const std::string& config_path,
              const std::string& out_csv, const std::string& overlay_dir) {
    TrackerConfig cfg;
    if (!config_path.empty()) cfg = load_tracker_config(config_path);

    Sequence seq = load_sequence(seq_dir);
    AxisAlignedBox annotation = to_axis_aligned(seq.truth.front());

    if (!overlay_dir.empty()) fs::create_directories(overlay_dir);

    auto load_or_die = [&](std::size_t i) {
        try {
            return load_frame(seq, i);
        } catch (const std::exception& e) {
            throw std::runtime_error("track: unreadable frame " + std::to_string(i) + ": " +
                                     e.what());
        }
    };

    auto start = std::chrono::steady_clock::now();
    Image frame0 = load_or_die(0);
    Tracker tracker(frame0, annotation, cfg);

    std::vector<ResultRow> rows;
    auto push_row = [&](long frame, const TargetState& st, const FrameDiagnostics& d) {
        ResultRow r;
        r.frame = frame;
        r.cx = st.cx;
        r.cy = st.cy;
        r.w = st.base_w * st.scale;
        r.h = st.base_h * st.scale;
        r.rotation_deg = st.rotation_deg;
        r.scale = st.scale;
        r.eps = d.eps;
        r.y_max = d.y_max;
        r.updated = d.updated ? 1 : 0;
        rows.push_back(r);
    };
    push_row(0, tracker.state(), FrameDiagnostics{});
    if (!overlay_dir.empty())
        write_overlay(overlay_dir, 0, frame0, state_to_box(tracker.state()),
                      seq.truth.empty() ? nullptr : &seq.truth[0]);

    for (std::size_t i = 1; i < seq.frame_paths.size(); ++i) {
        Image frame = load_or_die(i);
        TargetState st = tracker.track_frame(frame);
        push_row(long(i), st, tracker.last_diagnostics());
        if (!overlay_dir.empty())
            write_overlay(overlay_dir, int(i), frame, state_to_box(st),
                          i < seq.truth.size() ? &seq.truth[i] : nullptr);
    }
    auto end = std::chrono::steady_clock::now();
    double seconds = std::chrono::duration<double>(end - start).count();

    write_results_csv(out_csv, rows);
    std::cout << "tracked " << seq.frame_paths.size() << " frames in " << seconds << " s ("
              << double(seq.frame_paths.size()) / std::max(seconds, 1e-9) << " fps)\n"
              << "updates " << tracker.updates_performed() << ", skipped checkpoints "
              << tracker.checkpoints_skipped() << "\n"
              << "results written to " << out_csv << "\n";
    return 0;
}

int cmd_eval(const std::string& results_csv, const std::string& seq_dir) {
    std::vector<ResultRow> rows = read_results_csv(results_csv);
    Sequence seq = load_sequence(seq_dir);
    if (seq.truth.size() < rows.size())
        throw std::runtime_error("eval: ground truth covers " + std::to_string(seq.truth.size()) +
                                 " frames but results have " + std::to_string(rows.size()));

    std::vector<RotatedBox> pred, gt;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        RotatedBox box;
        box.cx = rows[i].cx;
        box.cy = rows[i].cy;
        box.w = rows[i].w;
        box.h = rows[i].h;
        box.angle_deg = rows[i].rotation_deg;
        pred.push_back(box);
        gt.push_back(seq.truth[i]);
    }
    MetricReport report = evaluate_tracking(pred, gt);
    std::cout << "frames:          " << pred.size() << "\n"
              << "precision@20px:  " << report.precision20 << "\n"
              << "success AUC:     " << report.success_auc_value << "\n"
              << "accuracy (IoU):  " << report.accuracy << "\n"
              << "robustness:      " << report.robustness_failures << " failure(s)\n";
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    SyntheticSequenceSpec spec = parse_sequence_spec(spec_path);
    SyntheticSequence seq = generate_sequence(spec);

    fs::create_directories(fs::path(out_dir) / "img");
    std::ofstream gt(fs::path(out_dir) / "groundtruth_rect.txt");
    if (!gt) throw std::runtime_error("synth: cannot write ground truth");
    gt.precision(10);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        save_png_gray((fs::path(out_dir) / "img" / frame_name(int(i))).string(), seq.frames[i]);
        auto corners = box_corners(state_to_box(seq.truth[i]));
        for (int c = 0; c < 4; ++c)
            gt << corners[c][0] << "," << corners[c][1] << (c == 3 ? "\n" : ",");
    }
    std::cout << "wrote " << seq.frames.size() << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_train_rsi(const std::string& corpus_dir, const std::string& out_path, int epochs,
                  double lr, int batch, std::uint32_t seed) {
    std::vector<Image> anchors;
    fs::path img_dir = fs::path(corpus_dir) / "img";
    if (fs::is_directory(img_dir)) {
        // Sequence layout: split into 15-frame segments, anchor on the middle
        // (7th) frame of each complete segment.
        Sequence seq = load_sequence(corpus_dir);
        for (std::size_t start = 0; start + 15 <= seq.frame_paths.size(); start += 15)
            anchors.push_back(load_frame(seq, start + 6));
        if (anchors.empty() && !seq.frame_paths.empty()) anchors.push_back(load_frame(seq, 0));
    } else {
        std::vector<std::string> paths;
        for (const auto& entry : fs::directory_iterator(corpus_dir)) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            for (auto& ch : ext) ch = char(std::tolower(static_cast<unsigned char>(ch)));
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" ||
                ext == ".ppm")
                paths.push_back(entry.path().string());
        }
        std::sort(paths.begin(), paths.end());
        for (const std::string& p : paths) anchors.push_back(load_image(p));
    }
    if (anchors.empty()) throw std::runtime_error("train-rsi: no anchor images in " + corpus_dir);

    RotationScaleGrid grid = paper_grid();
    std::vector<RSITrainingPair> pairs;
    for (const Image& anchor : anchors) {
        LogPolarGrid lp = default_lp_grid(anchor.height(), anchor.width());
        auto anchor_pairs = make_training_pairs(anchor, grid, lp);
        pairs.insert(pairs.end(), std::make_move_iterator(anchor_pairs.begin()),
                     std::make_move_iterator(anchor_pairs.end()));
    }

    RSIRegressor reg = make_rsi_regressor(kFeatureChannels, seed);
    RsiTrainConfig tc;
    tc.epochs = epochs;
    tc.lr0 = lr;
    tc.batch_size = batch;
    tc.seed = seed;
    RsiTrainReport report = train_rsi(reg, pairs, tc);

    save_regressor(out_path, reg);
    std::string loss_csv = out_path + ".loss.csv";
    write_loss_csv(loss_csv, report.epoch_losses);
    std::cout << "trained on " << pairs.size() << " pairs from " << anchors.size()
              << " anchor(s)\n"
              << "initial loss " << report.epoch_losses.front() << ", final loss "
              << report.epoch_losses.back() << "\n"
              << "weights written to " << out_path << ", loss curve to " << loss_csv << "\n";
    return 0;
}

// Fast invariant suite; prints one line per check.
int cmd_selftest() {
    int failures = 0;
    auto check = [&](const std::string& name, const std::function<bool()>& fn) {
        bool ok = false;
        std::string note;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << note << "\n";
        if (!ok) ++failures;
    };

    check("hann window bounds and symmetry", [] {
        Grid w = hann_window(8, 8);
        for (double v : w.v)
            if (v < 0.0 || v > 1.0) return false;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (std::abs(w.at(i, j) - w.at(7 - i, j)) > 0.0 ||
                    std::abs(w.at(i, j) - w.at(i, 7 - j)) > 0.0)
                    return false;
        return hann_window(3, 3).at(1, 1) == 1.0;
    });

    check("magnitude spectrum is shift invariant", [] {
        Image img = textured_image(32, 32, 5);
        Image shifted = make_image(32, 32);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c)
                shifted.px.at(r, c) = img.px.at((r + 5) % 32, (c + 3) % 32);
        Spectrum a = magnitude_spectrum(img, false);
        Spectrum b = magnitude_spectrum(shifted, false);
        return max_abs_diff(a.mag, b.mag) <= 1e-9 * grid_max(a.mag);
    });

    check("log-polar quarter-turn shift", [] {
        Image img = textured_image(64, 64, 11);
        LogPolarGrid grid = default_lp_grid(64, 64);
        LogPolarPatch base = logpolar_warp(img, grid);
        LogPolarPatch rot = logpolar_warp(warp_similarity(img, 1.0, 90.0), grid);
        Grid rolled(base.values.rows, base.values.cols);
        int shift = grid.n_theta / 4;
        for (int i = 0; i < rolled.rows; ++i)
            for (int j = 0; j < rolled.cols; ++j)
                rolled.at(i, (j + shift) % rolled.cols) = base.values.at(i, j);
        return mean_abs_diff(rolled, rot.values) <= 0.05;
    });

    check("bin shift to rotation/scale round trip", [] {
        LogPolarGrid grid = default_lp_grid(64, 64);
        RotationScaleEstimate est = shift_to_rotation_scale(0.0, grid.n_theta / 4.0, grid);
        return std::abs(est.rotation_deg - 90.0) < 1e-9 && std::abs(est.scale - 1.0) < 1e-12;
    });

    check("hinge score identities", [] {
        FeatureMap x(1, 4, 4, 1);
        for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = double(int(i) % 5) - 2.0;
        DiscriminativeModel model(1, 1, 1, 4, 4);
        model.w[0] = 1.0;
        for (double& m : model.m.v) m = 1.0;
        ScoreMap lin = score(model, x);
        for (std::size_t i = 0; i < x.v.size(); ++i)
            if (lin.scores.v[i] != x.v[i]) return false;
        for (double& m : model.m.v) m = 0.0;
        ScoreMap rect = score(model, x);
        for (std::size_t i = 0; i < x.v.size(); ++i)
            if (rect.scores.v[i] != std::max(0.0, x.v[i])) return false;
        return true;
    });

    check("steepest step on a diagonal quadratic", [] {
        std::vector<double> g = {1.0, 1.0};
        auto apply = [](const std::vector<double>& v) {
            return std::vector<double>{v[0], 4.0 * v[1]};
        };
        return std::abs(steepest_step(g, apply) - 0.4) < 1e-12;
    });

    check("adaptive rate law", [] {
        return adaptive_rate(4.0, 0.5) == 0.25 && adaptive_rate(1.0, 0.5) == 0.5 &&
               adaptive_rate(16.0, 1.0) == 0.0625;
    });

    check("update gate", [] {
        UpdateController ctrl;
        ctrl.epsilon0 = 10.0;
        return should_update(20, 9.0, ctrl) && !should_update(20, 5.0, ctrl) &&
               !should_update(13, 9.0, ctrl);
    });

    check("rotated IoU identities", [] {
        RotatedBox a{10, 10, 2, 2, 0};
        RotatedBox b{10, 10, 2, 2, 45};
        double self_iou = rotated_iou(a, a);
        double cross = rotated_iou(a, b);
        RotatedBox far{100, 100, 2, 2, 0};
        return std::abs(self_iou - 1.0) < 1e-12 && std::abs(cross - 0.70710678) < 1e-3 &&
               rotated_iou(a, far) == 0.0;
    });

    check("sampling grid shape", [] {
        RotationScaleGrid grid = paper_grid();
        return grid.pairs.size() == 100 && grid.rotations_deg.back() == 30.0 &&
               std::abs(grid.scales.front() - std::pow(1.1, -5)) < 1e-12;
    });

    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotation-scale aware online tracker"};
    app.require_subcommand(1);

    std::string seq_dir, config_path, out_csv = "results.csv", overlay_dir;
    auto* track = app.add_subcommand("track", "Track a sequence directory");
    track->add_option("seq-dir", seq_dir, "Sequence directory")->required();
    track->add_option("--config", config_path, "key=value config file");
    track->add_option("--out", out_csv, "Output CSV path");
    track->add_option("--overlay", overlay_dir, "Directory for overlay rasters");

    std::string results_csv, eval_seq;
    auto* eval = app.add_subcommand("eval", "Evaluate results against ground truth");
    eval->add_option("results", results_csv, "results.csv from track")->required();
    eval->add_option("seq-dir", eval_seq, "Sequence directory")->required();

    std::string spec_path, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence");
    synth->add_option("spec", spec_path, "key=value sequence spec")->required();
    synth->add_option("out-dir", synth_out, "Output directory")->required();

    std::string corpus_dir, weights_out = "weights.bin";
    int epochs = 200, batch = 64;
    double lr = 1e-2;
    std::uint32_t seed = 42;
    auto* train = app.add_subcommand("train-rsi", "Train the rotation-scale regressor");
    train->add_option("corpus-dir", corpus_dir, "Directory of anchors or a sequence")->required();
    train->add_option("--out", weights_out, "Weight checkpoint path");
    train->add_option("--epochs", epochs, "Training epochs");
    train->add_option("--lr", lr, "Initial learning rate");
    train->add_option("--batch", batch, "Mini-batch size");
    train->add_option("--seed", seed, "RNG seed");

    auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (track->parsed()) return cmd_track(seq_dir, config_path, out_csv, overlay_dir);
        if (eval->parsed()) return cmd_eval(results_csv, eval_seq);
        if (synth->parsed()) return cmd_synth(spec_path, synth_out);
        if (train->parsed()) return cmd_train_rsi(corpus_dir, weights_out, epochs, lr, batch, seed);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
