#include "implicit_recon/point_set.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "implicit_recon/error.hpp"
#include "implicit_recon/random.hpp"

namespace irecon {

void PointSet::add(Point3 position, Category category) {
    if (!is_finite(position)) throw Error(ErrorCode::InvalidArgument, "non-finite point coordinate");
    points_.push_back({position, category});
    switch (category) {
    case Category::Surface: ++n_s_; break;
    case Category::Interior: ++n_i_; break;
    case Category::Exterior: ++n_e_; break;
    }
    bbox_.expand(position);
}

std::size_t PointSet::count(Category c) const noexcept {
    switch (c) {
    case Category::Surface: return n_s_;
    case Category::Interior: return n_i_;
    case Category::Exterior: return n_e_;
    }
    return 0;
}

std::vector<Point3> PointSet::positions() const {
    std::vector<Point3> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.position);
    return out;
}

std::vector<Point3> PointSet::positions(Category c) const {
    std::vector<Point3> out;
    for (const auto& p : points_)
        if (p.category == c) out.push_back(p.position);
    return out;
}

std::vector<double> PointSet::labels() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(static_cast<double>(p.label()));
    return out;
}

AffineMap unit_cube_map(std::span<const Point3> points) {
    if (points.empty()) throw Error(ErrorCode::DegenerateCloud, "no points to normalize");
    const Bounds b = bounds_of(points);
    const Point3 ext = b.extent();
    const double longest = std::max({ext.x, ext.y, ext.z});
    if (!(longest > 0.0)) throw Error(ErrorCode::DegenerateCloud, "all points coincide");
    AffineMap map;
    map.scale = 2.0 / longest;
    map.offset = -map.scale * b.center();
    return map;
}

std::pair<std::vector<Point3>, AffineMap> normalize_unit_cube(std::span<const Point3> points) {
    const AffineMap map = unit_cube_map(points);
    const Bounds b = bounds_of(points);
    const Point3 ext = b.extent();
    const int longest = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const Point3& p : points) {
        Point3 q = map.apply(p);
        // Rounding can push a coordinate a few ulps past the cube face.
        for (int a = 0; a < 3; ++a) q[a] = std::clamp(q[a], -1.0, 1.0);
        if (p[longest] == b.lo[longest]) q[longest] = -1.0;
        if (p[longest] == b.hi[longest]) q[longest] = 1.0;
        out.push_back(q);
    }
    return {std::move(out), map};
}

PointSet apply_map(const PointSet& ps, const AffineMap& map) {
    PointSet out;
    for (const auto& p : ps.points()) out.add(map.apply(p.position), p.category);
    const AffineMap& prior = ps.normalization();
    // map(prior(p)) = map.scale * (prior.scale * p + prior.offset) + map.offset
    out.set_normalization({map.scale * prior.scale, map.apply(prior.offset)});
    return out;
}

PointSet label_points(std::span<const Point3> surface, std::span<const Point3> interior,
                      std::span<const Point3> exterior) {
    if (surface.empty()) throw Error(ErrorCode::EmptySurface, "at least one surface point is required");
    PointSet ps;
    for (const Point3& p : surface) ps.add(p, Category::Surface);
    for (const Point3& p : interior) ps.add(p, Category::Interior);
    for (const Point3& p : exterior) ps.add(p, Category::Exterior);
    return ps;
}

Point3 centroid(std::span<const Point3> points) {
    Point3 sum{};
    for (const Point3& p : points) sum = sum + p;
    return (1.0 / static_cast<double>(points.size())) * sum;
}

namespace {

std::vector<std::size_t> pick_indices(std::size_t population, std::size_t count, Rng& rng) {
    std::vector<std::size_t> picked;
    picked.reserve(count);
    if (count <= population) {
        // Partial Fisher-Yates.
        std::vector<std::size_t> pool(population);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + uniform_index(rng, population - i);
            std::swap(pool[i], pool[j]);
            picked.push_back(pool[i]);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) picked.push_back(uniform_index(rng, population));
    }
    return picked;
}

}  // namespace

std::vector<Point3> sample_offset(std::span<const Point3> surface, std::size_t count,
                                  const OffsetSampling& sampling, std::span<const Point3> normals) {
    if (count == 0) return {};
    if (surface.empty()) throw Error(ErrorCode::EmptySurface, "cannot sample from an empty surface");
    const bool inward = sampling.direction == OffsetDirection::Inward;
    if (sampling.mode == OffsetMode::CentroidShrink) {
        if (inward && !(sampling.amount > 0.0 && sampling.amount < 1.0))
            throw Error(ErrorCode::InvalidArgument, "inward shrink factor must lie in (0, 1)");
        if (!inward && !(sampling.amount > 1.0))
            throw Error(ErrorCode::InvalidArgument, "outward expansion factor must exceed 1");
    } else {
        if (normals.size() != surface.size())
            throw Error(ErrorCode::MissingNormals, "NormalOffset sampling needs one normal per surface point");
        if (!(sampling.amount > 0.0))
            throw Error(ErrorCode::InvalidArgument, "normal offset distance must be positive");
    }

    Rng rng(sampling.seed);
    const std::vector<std::size_t> picked = pick_indices(surface.size(), count, rng);
    std::vector<Point3> out;
    out.reserve(count);
    if (sampling.mode == OffsetMode::CentroidShrink) {
        const Point3 c = centroid(surface);
        for (std::size_t idx : picked) out.push_back(c + sampling.amount * (surface[idx] - c));
    } else {
        const double sign = inward ? -1.0 : 1.0;
        for (std::size_t idx : picked) {
            const Point3 n = normals[idx];
            const double len = norm(n);
            if (!(len > 0.0)) throw Error(ErrorCode::MissingNormals, "zero-length normal at point " + std::to_string(idx));
            out.push_back(surface[idx] + (sign * sampling.amount / len) * n);
        }
    }
    return out;
}

std::vector<Point3> sample_interior(std::span<const Point3> surface, std::size_t n_interior,
                                    OffsetMode mode, double amount, std::uint64_t seed,
                                    std::span<const Point3> normals) {
    return sample_offset(surface, n_interior, {mode, amount, OffsetDirection::Inward, seed}, normals);
}

std::vector<Point3> sample_exterior(std::span<const Point3> surface, std::size_t n_exterior,
                                    OffsetMode mode, double amount, std::uint64_t seed,
                                    std::span<const Point3> normals) {
    return sample_offset(surface, n_exterior, {mode, amount, OffsetDirection::Outward, seed}, normals);
}

std::pair<PointSet, PointSet> split_train_test(const PointSet& ps, double test_fraction,
                                               std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "test fraction must lie in [0, 1)");

    constexpr std::array kCategories{Category::Surface, Category::Interior, Category::Exterior};
    const auto total_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ps.size())));

    // Largest-remainder apportionment of the test quota across categories.
    std::array<std::size_t, 3> quota{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double exact = test_fraction * static_cast<double>(ps.count(kCategories[c]));
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total_test && k < 3; ++k) {
        const std::size_t c = order[k];
        if (quota[c] < ps.count(kCategories[c])) {
            ++quota[c];
            ++assigned;
        }
    }

    Rng rng(seed);
    std::vector<bool> in_test(ps.size(), false);
    const auto points = ps.points();
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i].category == kCategories[c]) members.push_back(i);
        for (std::size_t k : pick_indices(members.size(), quota[c], rng)) in_test[members[k]] = true;
    }

    PointSet train;
    PointSet test;
    for (std::size_t i = 0; i < points.size(); ++i)
        (in_test[i] ? test : train).add(points[i].position, points[i].category);
    train.set_normalization(ps.normalization());
    test.set_normalization(ps.normalization());
    return {std::move(train), std::move(test)};
}

PointSet synth_sphere(std::size_t n_surface, std::size_t n_interior, double radius,
                      std::uint64_t seed, double shrink) {
    if (n_surface == 0) throw Error(ErrorCode::EmptySurface, "sphere needs at least one surface point");
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");

    Rng rng(seed);
    std::vector<Point3> surface;
    surface.reserve(n_surface);
    for (std::size_t i = 0; i < n_surface; ++i) {
        // Archimedes: z uniform on [-1, 1] gives a uniform density on the sphere.
        const double z = uniform(rng, -1.0, 1.0);
        const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        Point3 u{rho * std::cos(phi), rho * std::sin(phi), z};
        u = (1.0 / norm(u)) * u;
        surface.push_back(radius * u);
    }
    const std::vector<Point3> interior =
        sample_interior(surface, n_interior, OffsetMode::CentroidShrink, shrink, rng());
    return label_points(surface, interior, {});
}

}  // namespace irecon
