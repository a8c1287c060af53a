#include "implicit_recon/mesh_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "implicit_recon/error.hpp"

namespace irecon {

Topology mesh_topology(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, std::uint32_t> edge_use;
    edge_use.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            std::uint64_t a = t[e];
            std::uint64_t b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_use[(a << 32) | b];
        }
    }
    Topology topo;
    topo.vertices = mesh.vertices.size();
    topo.faces = mesh.triangles.size();
    topo.edges = edge_use.size();
    for (const auto& [key, uses] : edge_use) {
        if (uses == 1) ++topo.boundary_edges;
        if (uses > 2) ++topo.nonmanifold_edges;
    }
    topo.euler_characteristic = static_cast<long long>(topo.vertices) - static_cast<long long>(topo.edges) +
                                static_cast<long long>(topo.faces);
    topo.watertight = topo.faces > 0 && topo.boundary_edges == 0 && topo.nonmanifold_edges == 0;
    return topo;
}

namespace {

/// Uniform bucket grid for nearest-vertex queries.
class PointGrid {
public:
    explicit PointGrid(std::span<const Point3> points) : points_(points) {
        box_ = bounds_of(points);
        const Point3 ext = box_.extent();
        const double longest = std::max({ext.x, ext.y, ext.z, 1e-12});
        // About two points per cell on average for a surface-like set.
        const double target = std::cbrt(static_cast<double>(points.size()) / 2.0);
        cell_ = longest / std::max(1.0, target);
        for (int a = 0; a < 3; ++a)
            dims_[a] = std::max<long>(1, static_cast<long>(std::floor(ext[a] / cell_)) + 1);
        for (std::size_t idx = 0; idx < points.size(); ++idx) buckets_[cell_of(points[idx])].push_back(idx);
    }

    double nearest_distance(Point3 q) const {
        const auto c = cell_of(q);
        long last_ring = 0;
        for (int a = 0; a < 3; ++a) last_ring = std::max({last_ring, std::labs(c[a]), std::labs(c[a] - dims_[a])});
        double best = std::numeric_limits<double>::infinity();
        for (long ring = 0;; ++ring) {
            for (long dz = -ring; dz <= ring; ++dz)
                for (long dy = -ring; dy <= ring; ++dy)
                    for (long dx = -ring; dx <= ring; ++dx) {
                        if (std::max({std::labs(dx), std::labs(dy), std::labs(dz)}) != ring) continue;
                        const auto it = buckets_.find({c[0] + dx, c[1] + dy, c[2] + dz});
                        if (it == buckets_.end()) continue;
                        for (std::size_t idx : it->second) best = std::min(best, norm(points_[idx] - q));
                    }
            // Anything in ring r+1 is at least r * cell away from q's cell.
            if (best <= static_cast<double>(ring) * cell_) return best;
            if (ring >= last_ring) return best;
        }
    }

private:
    std::array<long, 3> cell_of(Point3 p) const {
        return {static_cast<long>(std::floor((p.x - box_.lo.x) / cell_)),
                static_cast<long>(std::floor((p.y - box_.lo.y) / cell_)),
                static_cast<long>(std::floor((p.z - box_.lo.z) / cell_))};
    }

    std::span<const Point3> points_;
    Bounds box_;
    double cell_ = 1.0;
    std::array<long, 3> dims_{};
    std::map<std::array<long, 3>, std::vector<std::size_t>> buckets_;
};

}  // namespace

double one_sided_chamfer(std::span<const Point3> from, std::span<const Point3> to) {
    if (from.empty()) return 0.0;
    if (to.empty()) throw Error(ErrorCode::EmptyMesh, "no target points for Chamfer distance");
    const PointGrid grid(to);
    double sum = 0.0;
    for (const Point3& p : from) sum += grid.nearest_distance(p);
    return sum / static_cast<double>(from.size());
}

MeshMetrics mesh_metrics(const TriangleMesh& mesh, const MeshReference& reference) {
    if (mesh.triangles.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no triangles");
    MeshMetrics m;
    m.topology = mesh_topology(mesh);
    if (const auto* sphere = std::get_if<SphereReference>(&reference)) {
        double sum = 0.0;
        double worst = 0.0;
        for (const Point3& v : mesh.vertices) {
            const double err = std::fabs(norm(v - sphere->center) - sphere->radius);
            sum += err;
            worst = std::max(worst, err);
        }
        m.mean_radial_error = sum / static_cast<double>(mesh.vertices.size());
        m.max_radial_error = worst;
    } else if (const auto* cloud = std::get_if<CloudReference>(&reference)) {
        m.chamfer = one_sided_chamfer(cloud->points, mesh.vertices);
    }
    return m;
}

}  // namespace irecon
