#include "implicit_recon/isosurface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>

#include "implicit_recon/error.hpp"

namespace irecon {
namespace {

#include "mc_tables.inc"

// Corner c of a cell, as (dx, dy, dz) offsets from its minimum node.
constexpr std::array<std::array<std::uint8_t, 3>, 8> kCornerOffset{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

// Cell edge e joins corners kEdgeCorners[e][0] -> kEdgeCorners[e][1].
constexpr std::array<std::array<std::uint8_t, 2>, 12> kEdgeCorners{{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
    {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

constexpr std::size_t kChunkColumns = 8192;

}  // namespace

void ScalarField::validate() const {
    if (resolution.nx < 2 || resolution.ny < 2 || resolution.nz < 2)
        throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 nodes per axis");
    const Point3 ext = bounds.extent();
    if (!(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) || !is_finite(ext))
        throw Error(ErrorCode::InvalidArgument, "grid bounds must have positive finite extent");
    if (values.size() != resolution.count())
        throw Error(ErrorCode::ShapeMismatch, "field has " + std::to_string(values.size()) + " values, expected " +
                                                  std::to_string(resolution.count()));
}

Point3 ScalarField::spacing() const noexcept {
    const Point3 ext = bounds.extent();
    return {ext.x / static_cast<double>(resolution.nx - 1), ext.y / static_cast<double>(resolution.ny - 1),
            ext.z / static_cast<double>(resolution.nz - 1)};
}

Point3 ScalarField::node(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    const Point3 h = spacing();
    // The last node lands exactly on the upper bound.
    auto coord = [](double lo, double hi, double step, std::size_t idx, std::size_t n) {
        return idx + 1 == n ? hi : lo + step * static_cast<double>(idx);
    };
    return {coord(bounds.lo.x, bounds.hi.x, h.x, i, resolution.nx),
            coord(bounds.lo.y, bounds.hi.y, h.y, j, resolution.ny),
            coord(bounds.lo.z, bounds.hi.z, h.z, k, resolution.nz)};
}

ScalarField evaluate_grid(const NetworkConfig& config, const Params& params, const Bounds& bounds,
                          GridResolution resolution, const AffineMap& normalization, unsigned threads) {
    if (config.input_dim != 3 || config.output_dim != 1)
        throw Error(ErrorCode::InvalidArgument, "grid evaluation needs a 3 -> 1 network");
    validate(config);
    check_shapes(config, params);
    ScalarField field{resolution, bounds, {}};
    field.values.resize(resolution.count());
    field.validate();

    const std::size_t total = resolution.count();
    const std::size_t chunks = (total + kChunkColumns - 1) / kChunkColumns;
    auto run_chunk = [&](std::size_t chunk) {
        const std::size_t begin = chunk * kChunkColumns;
        const std::size_t end = std::min(total, begin + kChunkColumns);
        Matrix batch(3, end - begin);
        for (std::size_t flat = begin; flat < end; ++flat) {
            const std::size_t i = flat % resolution.nx;
            const std::size_t j = (flat / resolution.nx) % resolution.ny;
            const std::size_t k = flat / (resolution.nx * resolution.ny);
            const Point3 q = normalization.apply(field.node(i, j, k));
            batch(0, flat - begin) = q.x;
            batch(1, flat - begin) = q.y;
            batch(2, flat - begin) = q.z;
        }
        const Matrix out = forward(config, params, batch);
        std::copy(out.values().begin(), out.values().end(), field.values.begin() + static_cast<std::ptrdiff_t>(begin));
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return field;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t c = t; c < chunks; c += threads) run_chunk(c);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return field;
}

TriangleMesh marching_cubes(const ScalarField& field, double threshold) {
    field.validate();
    const GridResolution res = field.resolution;

    std::vector<double> values = field.values;
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) scale = 1.0;
    for (double& v : values)
        if (v == threshold) v = threshold + 1e-12 * scale;

    auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return values[field.index(i, j, k)]; };

    TriangleMesh mesh;
    // Vertex id per (node, axis) edge; UINT32_MAX when not yet created.
    constexpr std::uint32_t kNone = UINT32_MAX;
    std::array<std::vector<std::uint32_t>, 3> edge_vertex;
    for (auto& v : edge_vertex) v.assign(res.count(), kNone);

    auto vertex_on = [&](std::size_t i, std::size_t j, std::size_t k, int axis) -> std::uint32_t {
        std::uint32_t& slot = edge_vertex[axis][field.index(i, j, k)];
        if (slot != kNone) return slot;
        const std::size_t i1 = i + (axis == 0), j1 = j + (axis == 1), k1 = k + (axis == 2);
        const double va = at(i, j, k);
        const double vb = at(i1, j1, k1);
        const Point3 pa = field.node(i, j, k);
        const Point3 pb = field.node(i1, j1, k1);
        const double t = (threshold - va) / (vb - va);
        Point3 p = pa;
        p[axis] = pa[axis] + t * (pb[axis] - pa[axis]);
        slot = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        mesh.provenance.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                   static_cast<std::uint32_t>(k), static_cast<std::uint8_t>(axis)});
        return slot;
    };

    for (std::size_t k = 0; k + 1 < res.nz; ++k) {
        for (std::size_t j = 0; j + 1 < res.ny; ++j) {
            for (std::size_t i = 0; i + 1 < res.nx; ++i) {
                unsigned cube = 0;
                for (unsigned c = 0; c < 8; ++c)
                    if (at(i + kCornerOffset[c][0], j + kCornerOffset[c][1], k + kCornerOffset[c][2]) < threshold)
                        cube |= 1u << c;
                const unsigned crossing = kEdgeTable[cube];
                if (crossing == 0) continue;

                std::array<std::uint32_t, 12> ids{};
                for (unsigned e = 0; e < 12; ++e) {
                    if (!(crossing & (1u << e))) continue;
                    const auto& a = kCornerOffset[kEdgeCorners[e][0]];
                    const auto& b = kCornerOffset[kEdgeCorners[e][1]];
                    int axis = 0;
                    while (a[axis] == b[axis]) ++axis;
                    // Start from the lower of the two corners along the axis.
                    const auto& lo = a[axis] < b[axis] ? a : b;
                    ids[e] = vertex_on(i + lo[0], j + lo[1], k + lo[2], axis);
                }

                const auto& tris = kTriTable[cube];
                for (std::size_t t = 0; t < 16 && tris[t] >= 0; t += 3) {
                    // Table order already faces the below-threshold corners.
                    const std::array<std::uint32_t, 3> tri{ids[tris[t]], ids[tris[t + 1]], ids[tris[t + 2]]};
                    const Point3 n = cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                                           mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
                    if (n.x == 0.0 && n.y == 0.0 && n.z == 0.0) continue;
                    mesh.triangles.push_back(tri);
                }
            }
        }
    }
    return mesh;
}

Bounds reconstruction_bounds(const AffineMap& normalization, double inflate) {
    const Bounds unit{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};
    const Bounds grown = unit.inflated(inflate);
    return {normalization.invert(grown.lo), normalization.invert(grown.hi)};
}

}  // namespace irecon
