#pragma once

#include <array>
#include <cmath>
#include <span>

namespace irecon {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int axis) const noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
    double& operator[](int axis) noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend Point3 operator+(Point3 a, Point3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Point3 operator-(Point3 a, Point3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Point3 operator*(double s, Point3 p) noexcept { return {s * p.x, s * p.y, s * p.z}; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

inline double dot(Point3 a, Point3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(Point3 a, Point3 b) noexcept {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Point3 p) noexcept { return std::sqrt(dot(p, p)); }
inline bool is_finite(Point3 p) noexcept {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Axis-aligned box. A default-constructed box is empty (lo > hi).
struct Bounds {
    Point3 lo{INFINITY, INFINITY, INFINITY};
    Point3 hi{-INFINITY, -INFINITY, -INFINITY};

    void expand(Point3 p) noexcept {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::fmin(lo[a], p[a]);
            hi[a] = std::fmax(hi[a], p[a]);
        }
    }
    [[nodiscard]] bool empty() const noexcept { return lo.x > hi.x; }
    [[nodiscard]] bool contains(Point3 p) const noexcept {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    [[nodiscard]] Point3 center() const noexcept { return 0.5 * (lo + hi); }
    [[nodiscard]] Point3 extent() const noexcept { return hi - lo; }

    /// Grows every side by `fraction` of that axis' extent, split evenly.
    [[nodiscard]] Bounds inflated(double fraction) const noexcept {
        const Point3 pad = (0.5 * fraction) * extent();
        return {lo - pad, hi + pad};
    }

    friend bool operator==(const Bounds&, const Bounds&) = default;
};

inline Bounds bounds_of(std::span<const Point3> points) noexcept {
    Bounds b;
    for (const Point3& p : points) b.expand(p);
    return b;
}

/// Uniform scale followed by a translation: p' = scale * p + offset.
struct AffineMap {
    double scale = 1.0;
    Point3 offset{};

    [[nodiscard]] Point3 apply(Point3 p) const noexcept { return scale * p + offset; }
    [[nodiscard]] Point3 invert(Point3 q) const noexcept { return (1.0 / scale) * (q - offset); }

    friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

}  // namespace irecon
