#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "implicit_recon/geometry.hpp"
#include "implicit_recon/point_set.hpp"

namespace irecon {

enum class PointFormat { XYZ, OBJ, PLY };

/// Parses "xyz", "obj" or "ply" (case-insensitive). Throws InvalidArgument.
PointFormat parse_point_format(std::string_view name);
/// Guesses the format from the file extension.
std::optional<PointFormat> point_format_from_extension(const std::filesystem::path& path);

struct PointCloud {
    std::vector<Point3> points;
    /// Per-point normals, empty when the file carries none. Same length as
    /// `points` otherwise.
    std::vector<Point3> normals;
};

/// Reads every vertex record in file order. Non-vertex records (OBJ faces,
/// PLY face elements, comments) are skipped.
///
/// XYZ: whitespace-separated `x y z` per line; `#` starts a comment; a sixth
///      column triple is taken as the normal.
/// OBJ: `v x y z` records, `vn` records when their count matches `v`.
/// PLY: ascii or binary_little_endian, `element vertex` with x/y/z and
///      optional nx/ny/nz of float or double type.
PointCloud load_point_cloud(const std::filesystem::path& path, PointFormat format);

std::vector<Point3> load_points(const std::filesystem::path& path, PointFormat format);

/// Labeled dataset interchange: one `x y z label` row per point, `#` comments.
PointSet load_labeled_xyz(const std::filesystem::path& path);
void save_labeled_xyz(const PointSet& points, const std::filesystem::path& path);

}  // namespace irecon
