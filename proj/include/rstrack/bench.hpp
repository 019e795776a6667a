#pragma once

#include <array>
#include <string>
#include <vector>

#include "rstrack/image.hpp"
#include "rstrack/state.hpp"

namespace rstrack {

// Center + extents + orientation box.
struct RotatedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double angle_deg = 0.0;
};

std::array<std::array<double, 2>, 4> box_corners(const RotatedBox& box);

// Intersection-over-union of two rotated boxes via convex polygon clipping.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

// Minimal-area rotated box enclosing a point set (rotating calipers over the
// convex hull).
RotatedBox min_area_box(const std::vector<std::array<double, 2>>& points);

struct PrecisionCurve {
    std::vector<double> thresholds;  // px
    std::vector<double> values;      // fraction of frames with error <= threshold
    double at20 = 0.0;
};

PrecisionCurve precision_curve(const std::vector<std::array<double, 2>>& pred_centers,
                               const std::vector<std::array<double, 2>>& gt_centers,
                               const std::vector<double>& thresholds);

std::vector<double> default_precision_thresholds();  // 0..50 px, step 1

struct SuccessCurve {
    std::vector<double> thresholds;  // overlap in [0, 1], step 0.01
    std::vector<double> values;      // fraction of frames with IoU > threshold
    double auc = 0.0;                // mean over the threshold grid
};

SuccessCurve success_auc(const std::vector<RotatedBox>& pred, const std::vector<RotatedBox>& gt);

struct MetricReport {
    double precision20 = 0.0;
    PrecisionCurve precision;
    double success_auc_value = 0.0;
    SuccessCurve success;
    double accuracy = 0.0;      // mean IoU over successfully tracked frames
    int robustness_failures = 0;  // IoU = 0 events
    double fps = 0.0;
};

MetricReport evaluate_tracking(const std::vector<RotatedBox>& pred,
                               const std::vector<RotatedBox>& gt, double fps = 0.0);

// Dataset layout: <seq>/img/%04d.(png|jpg) plus <seq>/groundtruth_rect.txt with
// one comma-separated line per frame: 4 numbers = axis-aligned x,y,w,h;
// 8 numbers = polygon corners, converted to the minimal-area rotated box.
struct Sequence {
    std::vector<std::string> frame_paths;
    std::vector<RotatedBox> truth;  // may hold only the first frame
};

Sequence load_sequence(const std::string& dir);
Image load_frame(const Sequence& seq, std::size_t index);

AxisAlignedBox to_axis_aligned(const RotatedBox& box);
RotatedBox state_to_box(const TargetState& st);

// Per-frame tracker output rows, one per frame.
struct ResultRow {
    long frame = 0;
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
    double rotation_deg = 0.0, scale = 1.0;
    double eps = 0.0, y_max = 0.0;
    int updated = 0;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Draw box edges into an RGB raster (channels clipped to the canvas).
void draw_rotated_box(Grid& r, Grid& g, Grid& b, const RotatedBox& box,
                      const std::array<double, 3>& color);

}  // namespace rstrack
