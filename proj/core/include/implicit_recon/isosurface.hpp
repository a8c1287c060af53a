#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "implicit_recon/geometry.hpp"
#include "implicit_recon/network.hpp"

namespace irecon {

struct GridResolution {
    std::size_t nx = 64;
    std::size_t ny = 64;
    std::size_t nz = 64;

    [[nodiscard]] std::size_t count() const noexcept { return nx * ny * nz; }
    friend bool operator==(const GridResolution&, const GridResolution&) = default;
};

/// Samples on a regular lattice over `bounds`, x fastest then y then z.
struct ScalarField {
    GridResolution resolution;
    Bounds bounds;
    std::vector<double> values;

    /// Throws InvalidArgument unless every axis has >= 2 nodes, the box has
    /// positive extent and the value count matches.
    void validate() const;

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + resolution.nx * (j + resolution.ny * k);
    }
    [[nodiscard]] double at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return values[index(i, j, k)]; }
    [[nodiscard]] Point3 node(std::size_t i, std::size_t j, std::size_t k) const noexcept;
    [[nodiscard]] Point3 spacing() const noexcept;
};

/// Samples `fn` at every node of the lattice.
template <class Fn>
ScalarField sample_field(const Bounds& bounds, GridResolution resolution, Fn&& fn) {
    ScalarField field{resolution, bounds, {}};
    field.values.resize(resolution.count());
    field.validate();
    for (std::size_t k = 0; k < resolution.nz; ++k)
        for (std::size_t j = 0; j < resolution.ny; ++j)
            for (std::size_t i = 0; i < resolution.nx; ++i) field.values[field.index(i, j, k)] = fn(field.node(i, j, k));
    return field;
}

/// Network prediction at every node. Node coordinates (in the original frame)
/// pass through `normalization` before entering the network. Work is split
/// over `threads` column ranges (0 = hardware concurrency); values do not
/// depend on the thread count.
ScalarField evaluate_grid(const NetworkConfig& config, const Params& params, const Bounds& bounds,
                          GridResolution resolution, const AffineMap& normalization = {}, unsigned threads = 0);

/// A grid edge: the lattice node it starts at and the axis it runs along.
struct GridEdge {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;
    std::uint8_t axis = 0;

    friend bool operator==(const GridEdge&, const GridEdge&) = default;
};

struct TriangleMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    /// Grid edge each vertex was interpolated on (empty for meshes not made by
    /// marching_cubes).
    std::vector<GridEdge> provenance;

    [[nodiscard]] bool empty() const noexcept { return triangles.empty(); }
};

/// Marching cubes over every cell with the 256-case lookup table. Vertices are
/// linear interpolants on sign-crossing edges, shared between neighbouring
/// cells. Nodes exactly at the threshold are nudged up by 1e-12 * max|value|.
/// Triangles face toward decreasing field values, i.e. outward when the field
/// is positive inside.
TriangleMesh marching_cubes(const ScalarField& field, double threshold = 0.0);

/// Default reconstruction box: the unit cube [-1, 1]^3 in normalized
/// coordinates inflated by 10%, mapped back to the original frame.
Bounds reconstruction_bounds(const AffineMap& normalization, double inflate = 0.1);

}  // namespace irecon
