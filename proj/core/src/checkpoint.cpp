#include "implicit_recon/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'I', 'R', 'C', 'K', 'P', 'T', '\0', '\0'};

template <class T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw Error(ErrorCode::BadCheckpoint, "truncated checkpoint " + path.string());
    return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    check_shapes(ck.config, ck.params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.config.kind));
    put<std::uint64_t>(out, ck.config.input_dim);
    put<std::uint64_t>(out, ck.config.output_dim);
    put<std::uint64_t>(out, ck.config.hidden_layers);
    put<std::uint64_t>(out, ck.config.width);
    put<std::uint64_t>(out, ck.config.skip_period);
    put<std::uint64_t>(out, ck.config.seed);
    put<double>(out, ck.normalization.scale);
    put<double>(out, ck.normalization.offset.x);
    put<double>(out, ck.normalization.offset.y);
    put<double>(out, ck.normalization.offset.z);
    const std::vector<double> flat = ck.params.flatten();
    put<std::uint64_t>(out, flat.size());
    out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, path.string());

    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw Error(ErrorCode::BadCheckpoint, path.string() + " is not a checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw Error(ErrorCode::BadCheckpoint, "unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    const auto kind = get<std::uint32_t>(in, path);
    if (kind > static_cast<std::uint32_t>(Architecture::SqrHw))
        throw Error(ErrorCode::BadCheckpoint, "unknown architecture tag " + std::to_string(kind));
    ck.config.kind = static_cast<Architecture>(kind);
    ck.config.input_dim = get<std::uint64_t>(in, path);
    ck.config.output_dim = get<std::uint64_t>(in, path);
    ck.config.hidden_layers = get<std::uint64_t>(in, path);
    ck.config.width = get<std::uint64_t>(in, path);
    ck.config.skip_period = get<std::uint64_t>(in, path);
    ck.config.seed = get<std::uint64_t>(in, path);
    ck.normalization.scale = get<double>(in, path);
    ck.normalization.offset.x = get<double>(in, path);
    ck.normalization.offset.y = get<double>(in, path);
    ck.normalization.offset.z = get<double>(in, path);
    try {
        ck.params = zero_params(ck.config);
    } catch (const Error& e) {
        throw Error(ErrorCode::BadCheckpoint, std::string("invalid config: ") + e.what());
    }
    const auto count = get<std::uint64_t>(in, path);
    if (count != ck.params.parameter_count())
        throw Error(ErrorCode::BadCheckpoint, "parameter count does not match config");
    std::vector<double> flat(count);
    if (!in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double))))
        throw Error(ErrorCode::BadCheckpoint, "truncated parameter block");
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::BadCheckpoint, "trailing bytes after parameter block");
    ck.params.assign(flat);
    return ck;
}

}  // namespace irecon
