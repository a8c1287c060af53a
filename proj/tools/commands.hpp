#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "implicit_recon/isosurface.hpp"
#include "implicit_recon/mesh_io.hpp"
#include "implicit_recon/mesh_metrics.hpp"
#include "implicit_recon/network.hpp"
#include "implicit_recon/point_io.hpp"
#include "implicit_recon/point_set.hpp"
#include "implicit_recon/trainer.hpp"

namespace irecon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Thrown for flag combinations that are rejected before any work starts.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fixed artifact names inside --out.
inline constexpr const char* kDatasetFile = "dataset.xyz";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kLossFile = "loss.csv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kFieldFile = "field.raw";
std::string histogram_file(std::size_t layer, std::size_t epoch);
std::string mesh_file(MeshFormat format);

struct SynthConfig {
    std::string shape = "sphere";
    std::size_t n_surface = 200;
    std::size_t n_interior = 20;
    double radius = 1.0;
    double shrink = 0.5;
    std::uint64_t seed = 0;
    std::filesystem::path out = ".";
};

/// Settings for `train`. Exactly one of `data` (labeled XYZ) or `surface`
/// (raw cloud that gets interior/exterior samples attached) is set.
struct RunConfig {
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> surface;
    std::optional<PointFormat> surface_format;

    std::size_t n_interior = 0;
    std::size_t n_exterior = 0;
    OffsetMode mode = OffsetMode::CentroidShrink;
    double shrink = 0.5;
    double expand = 1.2;
    double offset = 0.05;
    std::uint64_t data_seed = 0;

    double test_fraction = 0.0;
    std::uint64_t split_seed = 0;

    NetworkConfig network{};
    LbfgsOptions lbfgs{};
    std::vector<std::size_t> snapshots{100, 1000};
    bool snapshot_last = true;
    std::size_t bins = 50;
    std::size_t checkpoint_every = 0;

    std::filesystem::path out = ".";
};

struct ReconstructConfig {
    std::filesystem::path checkpoint;
    GridResolution resolution{};
    MeshFormat format = MeshFormat::OBJ;
    double threshold = 0.0;
    double inflate = 0.1;
    std::optional<double> sphere_radius;
    std::optional<std::filesystem::path> reference_cloud;
    bool dump_field = false;
    unsigned threads = 0;
    std::filesystem::path out = ".";
};

struct TrainOutcome {
    TrainReport report;
    std::optional<double> test_loss;
    std::vector<std::string> histogram_files;
};

struct ReconstructOutcome {
    TriangleMesh mesh;
    std::optional<MeshMetrics> metrics;
    std::filesystem::path mesh_path;
};

struct LayerGradientSummary {
    std::size_t epoch = 0;
    std::size_t layer = 0;
    double median_abs_gradient = 0.0;
};

struct DiagnoseSummary {
    double final_loss = 0.0;
    std::size_t epochs = 0;
    /// std / mean of the weight-norm trace over the final 10% of epochs.
    double norm_stability = 0.0;
    std::vector<LayerGradientSummary> gradients;
};

/// Throws UsageError for invalid settings.
void validate(const SynthConfig& config);
void validate(const RunConfig& config);
void validate(const ReconstructConfig& config);

std::filesystem::path cmd_synth(const SynthConfig& config);
TrainOutcome cmd_train(const RunConfig& config, std::ostream& log);
ReconstructOutcome cmd_reconstruct(const ReconstructConfig& config, std::ostream& log);
/// Throws MissingArtifact naming the first absent file.
DiagnoseSummary cmd_diagnose(const std::filesystem::path& dir);

void print_summary(const DiagnoseSummary& summary, std::ostream& out);

/// Parses "N" or "NX,NY,NZ".
GridResolution parse_resolution(const std::string& text);
/// Parses a comma list of epochs; the token "last" sets `last`.
std::vector<std::size_t> parse_snapshots(const std::string& text, bool& last);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace irecon::cli
