#include "implicit_recon/point_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorCode::FileNotFound, path.string());
    std::ifstream in(path, mode);
    if (!in) throw Error(ErrorCode::FileNotFound, path.string());
    return in;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

double parse_double(std::string_view token, std::size_t line_no) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(line_no, "expected a number, got '" + std::string(token) + "'");
    if (!std::isfinite(value)) throw ParseError(line_no, "non-finite coordinate");
    return value;
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

PointCloud load_xyz(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    PointCloud cloud;
    bool with_normals = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(strip_comment(line));
        if (tokens.empty()) continue;
        if (tokens.size() < 3) throw ParseError(line_no, "expected at least 3 coordinates");
        const Point3 p{parse_double(tokens[0], line_no), parse_double(tokens[1], line_no),
                       parse_double(tokens[2], line_no)};
        if (cloud.points.empty()) with_normals = tokens.size() == 6;
        if (with_normals) {
            if (tokens.size() != 6) throw ParseError(line_no, "inconsistent column count (expected 6)");
            cloud.normals.push_back({parse_double(tokens[3], line_no), parse_double(tokens[4], line_no),
                                     parse_double(tokens[5], line_no)});
        } else {
            for (std::size_t k = 3; k < tokens.size(); ++k) parse_double(tokens[k], line_no);
        }
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud load_obj(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    PointCloud cloud;
    std::vector<Point3> normals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(strip_comment(line));
        if (tokens.empty()) continue;
        if (tokens[0] != "v" && tokens[0] != "vn") continue;
        if (tokens.size() < 4) throw ParseError(line_no, "'" + std::string(tokens[0]) + "' needs 3 components");
        const Point3 p{parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
                       parse_double(tokens[3], line_no)};
        (tokens[0] == "v" ? cloud.points : normals).push_back(p);
    }
    if (normals.size() == cloud.points.size()) cloud.normals = std::move(normals);
    return cloud;
}

// --- PLY -------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    return std::nullopt;
}

std::size_t ply_size(PlyType t) {
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

template <class T>
T read_le(const unsigned char* bytes) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

double decode(PlyType t, const unsigned char* b) {
    switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(b);
    case PlyType::UInt8: return read_le<std::uint8_t>(b);
    case PlyType::Int16: return read_le<std::int16_t>(b);
    case PlyType::UInt16: return read_le<std::uint16_t>(b);
    case PlyType::Int32: return read_le<std::int32_t>(b);
    case PlyType::UInt32: return read_le<std::uint32_t>(b);
    case PlyType::Float32: return read_le<float>(b);
    case PlyType::Float64: return read_le<double>(b);
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

PointCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in = open_input(path, std::ios::in | std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") throw ParseError(1, "missing 'ply' magic");
    enum class Encoding { Ascii, BinaryLE } encoding = Encoding::Ascii;
    bool have_format = false;
    std::vector<PlyElement> elements;
    for (;;) {
        if (!next_line()) throw ParseError(line_no, "unterminated header");
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError(line_no, "malformed format line");
            if (tok[1] == "ascii") encoding = Encoding::Ascii;
            else if (tok[1] == "binary_little_endian") encoding = Encoding::BinaryLE;
            else throw ParseError(line_no, "unsupported PLY encoding '" + std::string(tok[1]) + "'");
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError(line_no, "malformed element line");
            PlyElement e;
            e.name = std::string(tok[1]);
            const auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
            if (ec != std::errc() || p != tok[2].data() + tok[2].size())
                throw ParseError(line_no, "bad element count");
            elements.push_back(std::move(e));
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError(line_no, "property before any element");
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                const auto ct = ply_type(tok[2]);
                const auto vt = ply_type(tok[3]);
                if (!ct || !vt) throw ParseError(line_no, "unknown list property type");
                prop.is_list = true;
                prop.count_type = *ct;
                prop.type = *vt;
                prop.name = std::string(tok[4]);
            } else if (tok.size() == 3) {
                const auto t = ply_type(tok[1]);
                if (!t) throw ParseError(line_no, "unknown property type '" + std::string(tok[1]) + "'");
                prop.type = *t;
                prop.name = std::string(tok[2]);
            } else {
                throw ParseError(line_no, "malformed property line");
            }
            elements.back().properties.push_back(std::move(prop));
        } else {
            throw ParseError(line_no, "unexpected header keyword '" + std::string(tok[0]) + "'");
        }
    }
    if (!have_format) throw ParseError(line_no, "missing format line");

    const auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                        [](const PlyElement& e) { return e.name == "vertex"; });
    if (vertex_it == elements.end()) throw ParseError(line_no, "no vertex element");

    auto index_of = [&](std::string_view name) -> int {
        for (std::size_t i = 0; i < vertex_it->properties.size(); ++i)
            if (vertex_it->properties[i].name == name) return static_cast<int>(i);
        return -1;
    };
    const std::array<int, 3> pos_idx{index_of("x"), index_of("y"), index_of("z")};
    const std::array<int, 3> nrm_idx{index_of("nx"), index_of("ny"), index_of("nz")};
    for (int i : pos_idx)
        if (i < 0) throw ParseError(line_no, "vertex element lacks x/y/z");
    const bool with_normals = nrm_idx[0] >= 0 && nrm_idx[1] >= 0 && nrm_idx[2] >= 0;
    for (const PlyProperty& p : vertex_it->properties) {
        const bool wanted = p.name == "x" || p.name == "y" || p.name == "z" ||
                            (with_normals && (p.name == "nx" || p.name == "ny" || p.name == "nz"));
        if (wanted && (p.is_list || (p.type != PlyType::Float32 && p.type != PlyType::Float64)))
            throw ParseError(line_no, "property '" + p.name + "' must be float or double");
    }

    PointCloud cloud;
    cloud.points.reserve(vertex_it->count);
    std::vector<double> row;

    if (encoding == Encoding::Ascii) {
        for (auto e = elements.begin(); e != elements.end(); ++e) {
            for (std::size_t k = 0; k < e->count; ++k) {
                if (!next_line()) throw ParseError(line_no, "unexpected end of file in element '" + e->name + "'");
                if (e != vertex_it) continue;
                const auto tok = split_ws(line);
                if (tok.size() < e->properties.size()) throw ParseError(line_no, "too few vertex values");
                row.clear();
                for (std::size_t i = 0; i < e->properties.size(); ++i) row.push_back(parse_double(tok[i], line_no));
                cloud.points.push_back({row[pos_idx[0]], row[pos_idx[1]], row[pos_idx[2]]});
                if (with_normals) cloud.normals.push_back({row[nrm_idx[0]], row[nrm_idx[1]], row[nrm_idx[2]]});
            }
            if (e == vertex_it) break;
        }
        return cloud;
    }

    std::vector<unsigned char> buf;
    auto read_bytes = [&](std::size_t n) -> const unsigned char* {
        buf.resize(n);
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
            throw ParseError(0, "truncated binary body");
        return buf.data();
    };
    for (auto e = elements.begin(); e != elements.end(); ++e) {
        for (std::size_t k = 0; k < e->count; ++k) {
            row.clear();
            for (const PlyProperty& p : e->properties) {
                if (p.is_list) {
                    const double n = decode(p.count_type, read_bytes(ply_size(p.count_type)));
                    if (n < 0) throw ParseError(0, "negative list length");
                    read_bytes(static_cast<std::size_t>(n) * ply_size(p.type));
                    row.push_back(0.0);
                } else {
                    row.push_back(decode(p.type, read_bytes(ply_size(p.type))));
                }
            }
            if (e != vertex_it) continue;
            const Point3 pt{row[pos_idx[0]], row[pos_idx[1]], row[pos_idx[2]]};
            if (!is_finite(pt)) throw ParseError(0, "non-finite vertex " + std::to_string(k));
            cloud.points.push_back(pt);
            if (with_normals) cloud.normals.push_back({row[nrm_idx[0]], row[nrm_idx[1]], row[nrm_idx[2]]});
        }
        if (e == vertex_it) break;
    }
    return cloud;
}

}  // namespace

PointFormat parse_point_format(std::string_view name) {
    const std::string n = lower(name);
    if (n == "xyz") return PointFormat::XYZ;
    if (n == "obj") return PointFormat::OBJ;
    if (n == "ply") return PointFormat::PLY;
    throw Error(ErrorCode::InvalidArgument, "unknown point format '" + std::string(name) + "'");
}

std::optional<PointFormat> point_format_from_extension(const std::filesystem::path& path) {
    const std::string ext = lower(path.extension().string());
    if (ext == ".xyz" || ext == ".txt") return PointFormat::XYZ;
    if (ext == ".obj") return PointFormat::OBJ;
    if (ext == ".ply") return PointFormat::PLY;
    return std::nullopt;
}

PointCloud load_point_cloud(const std::filesystem::path& path, PointFormat format) {
    switch (format) {
    case PointFormat::XYZ: return load_xyz(path);
    case PointFormat::OBJ: return load_obj(path);
    case PointFormat::PLY: return load_ply(path);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown point format");
}

std::vector<Point3> load_points(const std::filesystem::path& path, PointFormat format) {
    return load_point_cloud(path, format).points;
}

PointSet load_labeled_xyz(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    PointSet ps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(strip_comment(line));
        if (tokens.empty()) continue;
        if (tokens.size() != 4) throw ParseError(line_no, "expected 'x y z label'");
        const Point3 p{parse_double(tokens[0], line_no), parse_double(tokens[1], line_no),
                       parse_double(tokens[2], line_no)};
        Category c;
        if (tokens[3] == "0") c = Category::Surface;
        else if (tokens[3] == "1" || tokens[3] == "+1") c = Category::Interior;
        else if (tokens[3] == "-1") c = Category::Exterior;
        else throw ParseError(line_no, "label must be -1, 0 or 1");
        ps.add(p, c);
    }
    return ps;
}

void save_labeled_xyz(const PointSet& points, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << "# x y z label (surface 0, interior 1, exterior -1)\n";
    out << "# n_s " << points.n_surface() << " n_i " << points.n_interior() << " n_e "
        << points.n_exterior() << '\n';
    char buf[128];
    for (const LabeledPoint& p : points.points()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %d\n", p.position.x, p.position.y,
                      p.position.z, p.label());
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace irecon
