#include "rstrack/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rstrack {

namespace {

using Point = std::array<double, 2>;
using Polygon = std::vector<Point>;

double signed_area(const Polygon& poly) {
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * acc;
}

double polygon_area(const Polygon& poly) {
    return poly.size() < 3 ? 0.0 : std::abs(signed_area(poly));
}

// Sutherland-Hodgman clip of a polygon by a convex clip polygon.
Polygon clip_convex(const Polygon& subject, Polygon clip) {
    if (signed_area(clip) < 0.0) std::reverse(clip.begin(), clip.end());
    Polygon out = subject;
    for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
        const Point& a = clip[e];
        const Point& b = clip[(e + 1) % clip.size()];
        double ex = b[0] - a[0];
        double ey = b[1] - a[1];
        auto dist = [&](const Point& p) { return ex * (p[1] - a[1]) - ey * (p[0] - a[0]); };

        Polygon in;
        in.swap(out);
        for (std::size_t i = 0; i < in.size(); ++i) {
            const Point& p = in[i];
            const Point& q = in[(i + 1) % in.size()];
            double dp = dist(p);
            double dq = dist(q);
            bool p_in = dp >= 0.0;
            bool q_in = dq >= 0.0;
            if (p_in) out.push_back(p);
            if (p_in != q_in) {
                double t = dp / (dp - dq);
                out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
            }
        }
    }
    return out;
}

void check_box(const RotatedBox& box) {
    if (!(box.w > 0.0) || !(box.h > 0.0) || !std::isfinite(box.cx) || !std::isfinite(box.cy) ||
        !std::isfinite(box.angle_deg))
        throw std::invalid_argument("rotated box: extents must be positive and finite");
}

}  // namespace

std::array<Point, 4> box_corners(const RotatedBox& box) {
    check_box(box);
    double th = deg_to_rad(box.angle_deg);
    double c = std::cos(th), s = std::sin(th);
    double hw = box.w / 2.0, hh = box.h / 2.0;
    auto corner = [&](double u, double v) -> Point {
        return {box.cx + u * c - v * s, box.cy + u * s + v * c};
    };
    return {corner(-hw, -hh), corner(hw, -hh), corner(hw, hh), corner(-hw, hh)};
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
    auto ca = box_corners(a);
    auto cb = box_corners(b);
    Polygon pa(ca.begin(), ca.end());
    Polygon pb(cb.begin(), cb.end());
    double inter = polygon_area(clip_convex(pa, pb));
    double area_a = a.w * a.h;
    double area_b = b.w * b.h;
    double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

RotatedBox min_area_box(const std::vector<Point>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("min_area_box: need at least 3 points");
    // Andrew monotone chain hull.
    std::vector<Point> pts = points;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto cross = [](const Point& o, const Point& a, const Point& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Point> hull;
    if (pts.size() < 3) {
        hull = pts;
    } else {
        std::vector<Point> lower, upper;
        for (const Point& p : pts) {
            while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), p) <= 0.0)
                lower.pop_back();
            lower.push_back(p);
        }
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
            while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), *it) <= 0.0)
                upper.pop_back();
            upper.push_back(*it);
        }
        lower.pop_back();
        upper.pop_back();
        hull = lower;
        hull.insert(hull.end(), upper.begin(), upper.end());
    }
    if (hull.size() < 2) throw std::invalid_argument("min_area_box: degenerate point set");

    double best_area = -1.0;
    RotatedBox best;
    for (std::size_t e = 0; e < hull.size(); ++e) {
        const Point& p = hull[e];
        const Point& q = hull[(e + 1) % hull.size()];
        double len = std::hypot(q[0] - p[0], q[1] - p[1]);
        if (len < 1e-12) continue;
        double ux = (q[0] - p[0]) / len;
        double uy = (q[1] - p[1]) / len;
        double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
        for (const Point& pt : hull) {
            double u = pt[0] * ux + pt[1] * uy;
            double v = -pt[0] * uy + pt[1] * ux;
            min_u = std::min(min_u, u);
            max_u = std::max(max_u, u);
            min_v = std::min(min_v, v);
            max_v = std::max(max_v, v);
        }
        double area = (max_u - min_u) * (max_v - min_v);
        if (best_area < 0.0 || area < best_area) {
            best_area = area;
            double cu = (min_u + max_u) / 2.0;
            double cv = (min_v + max_v) / 2.0;
            best.cx = cu * ux - cv * uy;
            best.cy = cu * uy + cv * ux;
            best.w = max_u - min_u;
            best.h = max_v - min_v;
            best.angle_deg = wrap_degrees(rad_to_deg(std::atan2(uy, ux)));
        }
    }
    if (best_area < 0.0) throw std::invalid_argument("min_area_box: collinear point set");
    return best;
}

PrecisionCurve precision_curve(const std::vector<Point>& pred_centers,
                               const std::vector<Point>& gt_centers,
                               const std::vector<double>& thresholds) {
    if (pred_centers.size() != gt_centers.size())
        throw std::invalid_argument("precision_curve: length mismatch");
    if (pred_centers.empty()) throw std::invalid_argument("precision_curve: empty input");

    std::vector<double> errors(pred_centers.size());
    for (std::size_t i = 0; i < errors.size(); ++i)
        errors[i] = std::hypot(pred_centers[i][0] - gt_centers[i][0],
                               pred_centers[i][1] - gt_centers[i][1]);

    PrecisionCurve curve;
    curve.thresholds = thresholds;
    curve.values.reserve(thresholds.size());
    for (double tau : thresholds) {
        std::size_t hits = 0;
        for (double e : errors)
            if (e <= tau) ++hits;
        curve.values.push_back(double(hits) / double(errors.size()));
    }
    {
        std::size_t hits = 0;
        for (double e : errors)
            if (e <= 20.0) ++hits;
        curve.at20 = double(hits) / double(errors.size());
    }
    return curve;
}

std::vector<double> default_precision_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 50; ++i) t.push_back(double(i));
    return t;
}

SuccessCurve success_auc(const std::vector<RotatedBox>& pred, const std::vector<RotatedBox>& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("success_auc: length mismatch");
    if (pred.empty()) throw std::invalid_argument("success_auc: empty input");

    std::vector<double> ious(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) ious[i] = rotated_iou(pred[i], gt[i]);

    SuccessCurve curve;
    for (int i = 0; i <= 100; ++i) curve.thresholds.push_back(i / 100.0);
    curve.values.reserve(curve.thresholds.size());
    double acc = 0.0;
    for (double tau : curve.thresholds) {
        std::size_t hits = 0;
        for (double v : ious)
            if (v > tau) ++hits;
        double frac = double(hits) / double(ious.size());
        curve.values.push_back(frac);
        acc += frac;
    }
    curve.auc = acc / double(curve.thresholds.size());
    return curve;
}

MetricReport evaluate_tracking(const std::vector<RotatedBox>& pred,
                               const std::vector<RotatedBox>& gt, double fps) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("evaluate_tracking: length mismatch");
    MetricReport report;
    std::vector<Point> pc(pred.size()), gc(gt.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pc[i] = {pred[i].cx, pred[i].cy};
        gc[i] = {gt[i].cx, gt[i].cy};
    }
    report.precision = precision_curve(pc, gc, default_precision_thresholds());
    report.precision20 = report.precision.at20;
    report.success = success_auc(pred, gt);
    report.success_auc_value = report.success.auc;

    double iou_sum = 0.0;
    int tracked = 0;
    bool failing = false;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double iou = rotated_iou(pred[i], gt[i]);
        if (iou > 0.0) {
            iou_sum += iou;
            ++tracked;
            failing = false;
        } else if (!failing) {
            ++report.robustness_failures;
            failing = true;
        }
    }
    report.accuracy = tracked > 0 ? iou_sum / tracked : 0.0;
    report.fps = fps;
    return report;
}

// ---------------------------------------------------------------------------
// Dataset ingestion
// ---------------------------------------------------------------------------

namespace {

bool raster_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" || ext == ".ppm";
}

std::vector<double> parse_numbers(const std::string& line) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(line);
    while (std::getline(ss, token, ',')) {
        std::size_t pos = 0;
        double v = std::stod(token, &pos);
        out.push_back(v);
    }
    return out;
}

}  // namespace

Sequence load_sequence(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path img_dir = fs::path(dir) / "img";
    if (!fs::is_directory(img_dir))
        throw std::runtime_error("load_sequence: missing image directory " + img_dir.string());

    Sequence seq;
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        if (entry.is_regular_file() && raster_extension(entry.path()))
            seq.frame_paths.push_back(entry.path().string());
    }
    std::sort(seq.frame_paths.begin(), seq.frame_paths.end());
    if (seq.frame_paths.empty())
        throw std::runtime_error("load_sequence: no frames under " + img_dir.string());

    fs::path gt_path = fs::path(dir) / "groundtruth_rect.txt";
    std::ifstream gt(gt_path);
    if (!gt) throw std::runtime_error("load_sequence: missing " + gt_path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(gt, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> nums;
        try {
            nums = parse_numbers(line);
        } catch (const std::exception&) {
            throw std::runtime_error("load_sequence: malformed line " + std::to_string(lineno) +
                                     " in " + gt_path.string());
        }
        if (nums.size() == 4) {
            RotatedBox box;
            box.cx = nums[0] + nums[2] / 2.0;
            box.cy = nums[1] + nums[3] / 2.0;
            box.w = nums[2];
            box.h = nums[3];
            box.angle_deg = 0.0;
            seq.truth.push_back(box);
        } else if (nums.size() == 8) {
            std::vector<Point> corners = {{nums[0], nums[1]},
                                          {nums[2], nums[3]},
                                          {nums[4], nums[5]},
                                          {nums[6], nums[7]}};
            seq.truth.push_back(min_area_box(corners));
        } else {
            throw std::runtime_error("load_sequence: malformed line " + std::to_string(lineno) +
                                     " in " + gt_path.string() + " (expected 4 or 8 numbers)");
        }
    }
    if (seq.truth.empty())
        throw std::runtime_error("load_sequence: empty ground truth in " + gt_path.string());
    return seq;
}

Image load_frame(const Sequence& seq, std::size_t index) {
    if (index >= seq.frame_paths.size())
        throw std::out_of_range("load_frame: index out of range");
    return load_image(seq.frame_paths[index]);
}

AxisAlignedBox to_axis_aligned(const RotatedBox& box) {
    return AxisAlignedBox{box.cx - box.w / 2.0, box.cy - box.h / 2.0, box.w, box.h};
}

RotatedBox state_to_box(const TargetState& st) {
    RotatedBox box;
    box.cx = st.cx;
    box.cy = st.cy;
    box.w = st.base_w * st.scale;
    box.h = st.base_h * st.scale;
    box.angle_deg = st.rotation_deg;
    return box;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
    out << "frame,cx,cy,w,h,rotation_deg,scale,eps,y_max,updated\n";
    out.precision(10);
    for (const ResultRow& r : rows) {
        out << r.frame << "," << r.cx << "," << r.cy << "," << r.w << "," << r.h << ","
            << r.rotation_deg << "," << r.scale << "," << r.eps << "," << r.y_max << ","
            << r.updated << "\n";
    }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_results_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_results_csv: empty file " + path);
    std::vector<ResultRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> nums;
        try {
            nums = parse_numbers(line);
        } catch (const std::exception&) {
            throw std::runtime_error("read_results_csv: malformed line " +
                                     std::to_string(lineno) + " in " + path);
        }
        if (nums.size() != 10)
            throw std::runtime_error("read_results_csv: malformed line " +
                                     std::to_string(lineno) + " in " + path);
        ResultRow r;
        r.frame = long(nums[0]);
        r.cx = nums[1];
        r.cy = nums[2];
        r.w = nums[3];
        r.h = nums[4];
        r.rotation_deg = nums[5];
        r.scale = nums[6];
        r.eps = nums[7];
        r.y_max = nums[8];
        r.updated = int(nums[9]);
        rows.push_back(r);
    }
    return rows;
}

void draw_rotated_box(Grid& r, Grid& g, Grid& b, const RotatedBox& box,
                      const std::array<double, 3>& color) {
    auto corners = box_corners(box);
    auto put = [&](double x, double y) {
        int xi = int(std::lround(x));
        int yi = int(std::lround(y));
        if (xi < 0 || xi >= r.cols || yi < 0 || yi >= r.rows) return;
        r.at(yi, xi) = color[0];
        g.at(yi, xi) = color[1];
        b.at(yi, xi) = color[2];
    };
    for (int e = 0; e < 4; ++e) {
        const Point& p = corners[e];
        const Point& q = corners[(e + 1) % 4];
        double len = std::hypot(q[0] - p[0], q[1] - p[1]);
        int steps = std::max(2, int(std::ceil(len * 2.0)));
        for (int i = 0; i <= steps; ++i) {
            double t = double(i) / steps;
            put(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]));
        }
    }
}

}  // namespace rstrack
