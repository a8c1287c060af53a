#pragma once

#include <filesystem>
#include <string_view>

#include "implicit_recon/isosurface.hpp"

namespace irecon {

enum class MeshFormat { OBJ, PLY };

MeshFormat parse_mesh_format(std::string_view name);

/// Writes the mesh with 9 significant digits per coordinate. Identical meshes
/// produce identical bytes. PLY output is ASCII with double coordinates.
void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format);

/// Debug dump: a text header
///   IRFIELD 1
///   dims nx ny nz
///   bounds lox loy loz hix hiy hiz
///   data f64le
/// followed by the raw little-endian doubles in x-fastest order.
void write_field_dump(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_field_dump(const std::filesystem::path& path);

}  // namespace irecon
