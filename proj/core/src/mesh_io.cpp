#include "implicit_recon/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {

MeshFormat parse_mesh_format(std::string_view name) {
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "obj") return MeshFormat::OBJ;
    if (n == "ply") return MeshFormat::PLY;
    throw Error(ErrorCode::InvalidArgument, "unknown mesh format '" + std::string(name) + "'");
}

void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
    for (const auto& tri : mesh.triangles)
        for (std::uint32_t v : tri)
            if (v >= mesh.vertices.size()) throw Error(ErrorCode::IndexOutOfRange, "triangle index out of range");

    std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    char buf[160];
    if (format == MeshFormat::OBJ) {
        std::snprintf(buf, sizeof buf, "# vertices %zu faces %zu\n", mesh.vertices.size(), mesh.triangles.size());
        out << buf;
        for (const Point3& p : mesh.vertices) {
            std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x, p.y, p.z);
            out << buf;
        }
        for (const auto& t : mesh.triangles) {
            std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
            out << buf;
        }
    } else {
        out << "ply\nformat ascii 1.0\n";
        out << "element vertex " << mesh.vertices.size() << "\n";
        out << "property double x\nproperty double y\nproperty double z\n";
        out << "element face " << mesh.triangles.size() << "\n";
        out << "property list uchar int vertex_indices\nend_header\n";
        for (const Point3& p : mesh.vertices) {
            std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
            out << buf;
        }
        for (const auto& t : mesh.triangles) {
            std::snprintf(buf, sizeof buf, "3 %u %u %u\n", t[0], t[1], t[2]);
            out << buf;
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void write_field_dump(const ScalarField& field, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little);
    field.validate();
    std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    char buf[256];
    const auto& r = field.resolution;
    const auto& b = field.bounds;
    std::snprintf(buf, sizeof buf, "IRFIELD 1\ndims %zu %zu %zu\nbounds %.17g %.17g %.17g %.17g %.17g %.17g\ndata f64le\n",
                  r.nx, r.ny, r.nz, b.lo.x, b.lo.y, b.lo.z, b.hi.x, b.hi.y, b.hi.z);
    out << buf;
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

ScalarField read_field_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, path.string());
    std::string line;
    auto expect_line = [&](std::size_t no) {
        if (!std::getline(in, line)) throw ParseError(no, "truncated field header");
        return std::istringstream(line);
    };
    if (!std::getline(in, line) || line != "IRFIELD 1") throw ParseError(1, "not a field dump");
    ScalarField field;
    std::string key;
    auto dims = expect_line(2);
    if (!(dims >> key >> field.resolution.nx >> field.resolution.ny >> field.resolution.nz) || key != "dims")
        throw ParseError(2, "bad dims line");
    auto bounds = expect_line(3);
    auto& b = field.bounds;
    if (!(bounds >> key >> b.lo.x >> b.lo.y >> b.lo.z >> b.hi.x >> b.hi.y >> b.hi.z) || key != "bounds")
        throw ParseError(3, "bad bounds line");
    if (!std::getline(in, line) || line != "data f64le") throw ParseError(4, "bad data line");
    field.values.resize(field.resolution.count());
    if (!in.read(reinterpret_cast<char*>(field.values.data()),
                 static_cast<std::streamsize>(field.values.size() * sizeof(double))))
        throw ParseError(0, "truncated field data");
    field.validate();
    return field;
}

}  // namespace irecon
