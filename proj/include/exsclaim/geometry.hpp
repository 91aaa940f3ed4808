#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <tuple>

namespace exsclaim {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-aligned pixel box, half-open: covers columns [x0, x1) and rows [y0, y1).
struct BoundingBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    std::int64_t area() const {
        return valid() ? std::int64_t(width()) * height() : 0;
    }
    bool valid() const { return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1; }

    Point center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }

    bool contains(Point p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    bool contains(const BoundingBox& other) const {
        return other.x0 >= x0 && other.y0 >= y0 && other.x1 <= x1 && other.y1 <= y1;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
    friend auto operator<=>(const BoundingBox& a, const BoundingBox& b) {
        return std::tie(a.y0, a.x0, a.y1, a.x1) <=> std::tie(b.y0, b.x0, b.y1, b.x1);
    }
};

inline std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b) {
    BoundingBox r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                  std::min(a.y1, b.y1)};
    if (r.x0 >= r.x1 || r.y0 >= r.y1) return std::nullopt;
    return r;
}

inline BoundingBox united(const BoundingBox& a, const BoundingBox& b) {
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
            std::max(a.y1, b.y1)};
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    auto inter = intersection(a, b);
    if (!inter) return 0.0;
    const double i = double(inter->area());
    return i / double(a.area() + b.area() - inter->area());
}

/// Fraction of `inner`'s area that lies inside `outer`.
inline double containment_ratio(const BoundingBox& inner, const BoundingBox& outer) {
    auto inter = intersection(inner, outer);
    if (!inter || inner.area() == 0) return 0.0;
    return double(inter->area()) / double(inner.area());
}

/// Clip to [0,width) x [0,height); nullopt when nothing remains.
inline std::optional<BoundingBox> clip(const BoundingBox& b, int width, int height) {
    BoundingBox r{std::clamp(b.x0, 0, width), std::clamp(b.y0, 0, height),
                  std::clamp(b.x1, 0, width), std::clamp(b.y1, 0, height)};
    if (r.x0 >= r.x1 || r.y0 >= r.y1) return std::nullopt;
    return r;
}

/// Gap between the projections of two boxes on one axis; 0 when they overlap.
inline int horizontal_gap(const BoundingBox& a, const BoundingBox& b) {
    return std::max({0, b.x0 - a.x1, a.x0 - b.x1});
}
inline int vertical_gap(const BoundingBox& a, const BoundingBox& b) {
    return std::max({0, b.y0 - a.y1, a.y0 - b.y1});
}

/// Reading order: top-to-bottom, then left-to-right.
inline bool reading_order_less(const BoundingBox& a, const BoundingBox& b) {
    return std::tie(a.y0, a.x0, a.y1, a.x1) < std::tie(b.y0, b.x0, b.y1, b.x1);
}

} // namespace exsclaim
