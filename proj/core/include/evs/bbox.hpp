#pragma once

#include <algorithm>

namespace evs {

/// Axis-aligned box in pixel coordinates, origin at the top-left corner.
/// Covers the half-open region [x, x+w) x [y, y+h).
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    [[nodiscard]] double area() const noexcept { return w > 0.0 && h > 0.0 ? w * h : 0.0; }

    [[nodiscard]] bool empty() const noexcept { return w <= 0.0 || h <= 0.0; }

    /// Point-in-box test; used to count event pixels, so the half-open
    /// extent makes adjacent boxes partition the plane.
    [[nodiscard]] bool contains(double px, double py) const noexcept {
        return px >= x && px < x + w && py >= y && py < y + h;
    }

    bool operator==(const BBox&) const = default;
};

/// Intersection-over-union of two boxes; 0 when either is degenerate.
inline double iou(const BBox& a, const BBox& b) noexcept {
    if (a.empty() || b.empty()) return 0.0;
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

}  // namespace evs
