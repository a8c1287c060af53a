#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "implicit_recon/isosurface.hpp"

namespace irecon {

struct SphereReference {
    double radius = 1.0;
    Point3 center{};
};

struct CloudReference {
    std::vector<Point3> points;
};

using MeshReference = std::variant<std::monostate, SphereReference, CloudReference>;

struct Topology {
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t faces = 0;
    /// Edges used by exactly one triangle.
    std::size_t boundary_edges = 0;
    /// Edges used by three or more triangles.
    std::size_t nonmanifold_edges = 0;
    long long euler_characteristic = 0;
    /// Every edge shared by exactly two triangles.
    bool watertight = false;
};

Topology mesh_topology(const TriangleMesh& mesh);

struct MeshMetrics {
    Topology topology;
    /// Sphere reference: mean and max of | |v - c| - r | over vertices.
    std::optional<double> mean_radial_error;
    std::optional<double> max_radial_error;
    /// Cloud reference: mean distance from each reference point to its
    /// nearest mesh vertex.
    std::optional<double> chamfer;
};

/// Throws EmptyMesh when the mesh has no triangles.
MeshMetrics mesh_metrics(const TriangleMesh& mesh, const MeshReference& reference = {});

/// One-sided Chamfer distance from `from` to the nearest point of `to`.
double one_sided_chamfer(std::span<const Point3> from, std::span<const Point3> to);

}  // namespace irecon
