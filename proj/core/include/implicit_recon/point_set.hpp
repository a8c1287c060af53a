#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "implicit_recon/geometry.hpp"

namespace irecon {

enum class Category { Surface, Interior, Exterior };

/// Training target for each category: surface 0, interior +1, exterior -1.
constexpr int label_of(Category c) noexcept {
    switch (c) {
    case Category::Surface: return 0;
    case Category::Interior: return 1;
    case Category::Exterior: return -1;
    }
    return 0;
}

struct LabeledPoint {
    Point3 position;
    Category category = Category::Surface;

    [[nodiscard]] int label() const noexcept { return label_of(category); }
    friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

class PointSet {
public:
    PointSet() = default;

    /// Appends a point and keeps counts and bounds in step.
    void add(Point3 position, Category category);

    [[nodiscard]] std::span<const LabeledPoint> points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }

    [[nodiscard]] std::size_t n_surface() const noexcept { return n_s_; }
    [[nodiscard]] std::size_t n_interior() const noexcept { return n_i_; }
    [[nodiscard]] std::size_t n_exterior() const noexcept { return n_e_; }
    [[nodiscard]] std::size_t count(Category c) const noexcept;

    [[nodiscard]] const Bounds& bounds() const noexcept { return bbox_; }

    /// Map from the original coordinates to the ones stored here. Identity
    /// until `normalized` is applied.
    [[nodiscard]] const AffineMap& normalization() const noexcept { return normalization_; }
    void set_normalization(const AffineMap& map) noexcept { normalization_ = map; }

    [[nodiscard]] std::vector<Point3> positions() const;
    [[nodiscard]] std::vector<Point3> positions(Category c) const;
    [[nodiscard]] std::vector<double> labels() const;

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::vector<LabeledPoint> points_;
    std::size_t n_s_ = 0;
    std::size_t n_i_ = 0;
    std::size_t n_e_ = 0;
    Bounds bbox_;
    AffineMap normalization_;
};

/// Affine map that centres the bounding box at the origin and scales its
/// longest axis onto [-1, 1]. Throws DegenerateCloud when all points coincide.
AffineMap unit_cube_map(std::span<const Point3> points);

/// Applies `unit_cube_map` to the points; returns the mapped points and the map.
std::pair<std::vector<Point3>, AffineMap> normalize_unit_cube(std::span<const Point3> points);

/// Maps every point of `ps` through `map` and composes it onto the set's
/// recorded normalization.
PointSet apply_map(const PointSet& ps, const AffineMap& map);

/// Surface points get label 0, interior +1, exterior -1. Throws EmptySurface.
PointSet label_points(std::span<const Point3> surface, std::span<const Point3> interior,
                      std::span<const Point3> exterior);

enum class OffsetMode {
    /// c + factor * (p - c) about the surface centroid c.
    CentroidShrink,
    /// p -/+ distance * n along the (outward) unit normal.
    NormalOffset,
};

enum class OffsetDirection { Inward, Outward };

struct OffsetSampling {
    OffsetMode mode = OffsetMode::CentroidShrink;
    /// CentroidShrink: scale factor, in (0, 1) inward and > 1 outward.
    /// NormalOffset: distance along the normal, > 0.
    double amount = 0.5;
    OffsetDirection direction = OffsetDirection::Inward;
    std::uint64_t seed = 0;
};

/// Draws `count` off-surface samples by displacing randomly chosen surface
/// points. Points are picked without replacement while count <= surface size,
/// with replacement beyond that. `normals` must match `surface` for
/// NormalOffset (MissingNormals otherwise).
std::vector<Point3> sample_offset(std::span<const Point3> surface, std::size_t count,
                                  const OffsetSampling& sampling,
                                  std::span<const Point3> normals = {});

/// Inward sampling; `amount` is the shrink factor or the inward distance.
std::vector<Point3> sample_interior(std::span<const Point3> surface, std::size_t n_interior,
                                    OffsetMode mode, double amount, std::uint64_t seed,
                                    std::span<const Point3> normals = {});

/// Outward sampling; `amount` is the expansion factor (> 1) or the distance.
std::vector<Point3> sample_exterior(std::span<const Point3> surface, std::size_t n_exterior,
                                    OffsetMode mode, double amount, std::uint64_t seed,
                                    std::span<const Point3> normals = {});

Point3 centroid(std::span<const Point3> points);

/// Stratified split. The test side receives round(fraction * size) points,
/// apportioned over categories by largest remainder, so each category's share
/// is within one point of its proportion. Relative order is preserved.
std::pair<PointSet, PointSet> split_train_test(const PointSet& ps, double test_fraction,
                                               std::uint64_t seed);

/// Uniform samples on the sphere of `radius` about the origin plus `n_interior`
/// centroid-shrunk interior points (factor `shrink`).
PointSet synth_sphere(std::size_t n_surface, std::size_t n_interior, double radius,
                      std::uint64_t seed, double shrink = 0.5);

}  // namespace irecon
