#pragma once

#include <cmath>

namespace rstrack {

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Wrap an angle into (-180, 180].
double wrap_degrees(double deg);

// Per-frame target state. The derived box is the base size scaled by `scale`
// and rotated by `rotation_deg` about (cx, cy). Angles follow the image frame
// (x right, y down), measured from +x toward +y.
struct TargetState {
    double cx = 0.0;
    double cy = 0.0;
    double base_w = 0.0;  // first-frame annotation, px
    double base_h = 0.0;
    double scale = 1.0;         // cumulative factor
    double rotation_deg = 0.0;  // cumulative, wrapped to (-180, 180]
};

// Axis-aligned first-frame annotation (top-left corner plus extents).
struct AxisAlignedBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

}  // namespace rstrack
