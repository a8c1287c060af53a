#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "implicit_recon/backprop.hpp"
#include "implicit_recon/checkpoint.hpp"
#include "implicit_recon/diagnostics.hpp"
#include "implicit_recon/error.hpp"
#include "implicit_recon/random.hpp"

namespace irecon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kReportVersion = 1;

std::size_t parse_count(std::string_view token, std::string_view what) {
    std::size_t value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw UsageError("invalid " + std::string(what) + " '" + std::string(token) + "'");
    return value;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        part.erase(0, part.find_first_not_of(" \t"));
        part.erase(part.find_last_not_of(" \t") + 1);
        parts.push_back(part);
    }
    return parts;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

PointSet load_training_points(const RunConfig& config) {
    if (config.data) return load_labeled_xyz(*config.data);

    const PointFormat format = config.surface_format ? *config.surface_format
                                                     : *point_format_from_extension(*config.surface);
    const PointCloud cloud = load_point_cloud(*config.surface, format);
    const double inward = config.mode == OffsetMode::CentroidShrink ? config.shrink : config.offset;
    const double outward = config.mode == OffsetMode::CentroidShrink ? config.expand : config.offset;
    Rng rng(config.data_seed);
    const std::uint64_t interior_seed = rng();
    const std::uint64_t exterior_seed = rng();
    const auto interior =
        sample_interior(cloud.points, config.n_interior, config.mode, inward, interior_seed, cloud.normals);
    const auto exterior =
        sample_exterior(cloud.points, config.n_exterior, config.mode, outward, exterior_seed, cloud.normals);
    return label_points(cloud.points, interior, exterior);
}

json counts_json(const PointSet& ps) {
    return {{"surface", ps.n_surface()}, {"interior", ps.n_interior()}, {"exterior", ps.n_exterior()}};
}

}  // namespace

std::string histogram_file(std::size_t layer, std::size_t epoch) {
    return "hist_L" + std::to_string(layer) + "_E" + std::to_string(epoch) + ".csv";
}

std::string mesh_file(MeshFormat format) { return format == MeshFormat::OBJ ? "mesh.obj" : "mesh.ply"; }

GridResolution parse_resolution(const std::string& text) {
    const auto parts = split_commas(text);
    if (parts.size() != 1 && parts.size() != 3)
        throw UsageError("resolution must be N or NX,NY,NZ, got '" + text + "'");
    GridResolution res;
    if (parts.size() == 1) {
        res.nx = res.ny = res.nz = parse_count(parts[0], "resolution");
    } else {
        res.nx = parse_count(parts[0], "resolution");
        res.ny = parse_count(parts[1], "resolution");
        res.nz = parse_count(parts[2], "resolution");
    }
    return res;
}

std::vector<std::size_t> parse_snapshots(const std::string& text, bool& last) {
    last = false;
    std::vector<std::size_t> epochs;
    if (text.empty()) return epochs;
    for (const auto& part : split_commas(text)) {
        if (part == "last") {
            last = true;
            continue;
        }
        const std::size_t epoch = parse_count(part, "snapshot epoch");
        if (epoch == 0) throw UsageError("snapshot epochs are 1-based");
        epochs.push_back(epoch);
    }
    return epochs;
}

void validate(const SynthConfig& config) {
    if (config.shape != "sphere") throw UsageError("unknown shape '" + config.shape + "' (available: sphere)");
    if (config.n_surface == 0) throw UsageError("--ns must be positive");
    if (!(config.radius > 0.0) || !std::isfinite(config.radius)) throw UsageError("--radius must be positive");
    if (config.n_interior > 0 && !(config.shrink > 0.0 && config.shrink < 1.0))
        throw UsageError("--shrink must lie in (0, 1)");
}

void validate(const RunConfig& config) {
    if (config.data.has_value() == config.surface.has_value())
        throw UsageError("give exactly one of --data (labeled xyz) or --surface (raw cloud)");
    if (config.data && (config.n_interior > 0 || config.n_exterior > 0))
        throw UsageError("--ni/--ne only apply to --surface input; --data is already labeled");
    if (config.surface && !config.surface_format && !point_format_from_extension(*config.surface))
        throw UsageError("cannot infer the format of " + config.surface->string() + "; pass --format");
    if (config.mode == OffsetMode::CentroidShrink) {
        if (config.n_interior > 0 && !(config.shrink > 0.0 && config.shrink < 1.0))
            throw UsageError("--shrink must lie in (0, 1)");
        if (config.n_exterior > 0 && !(config.expand > 1.0)) throw UsageError("--expand must exceed 1");
    } else if ((config.n_interior > 0 || config.n_exterior > 0) && !(config.offset > 0.0)) {
        throw UsageError("--offset must be positive");
    }
    if (!(config.test_fraction >= 0.0 && config.test_fraction < 1.0))
        throw UsageError("--test-fraction must lie in [0, 1)");
    if (config.network.input_dim != 3 || config.network.output_dim != 1)
        throw UsageError("networks map 3 coordinates to 1 value");
    if (config.bins == 0) throw UsageError("--bins must be positive");
    try {
        irecon::validate(config.network);
        irecon::validate(config.lbfgs, 1);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (config.lbfgs.max_iterations == 0) throw UsageError("--max-epochs must be positive");
}

void validate(const ReconstructConfig& config) {
    if (config.checkpoint.empty()) throw UsageError("--checkpoint is required");
    const auto& r = config.resolution;
    if (r.nx < 2 || r.ny < 2 || r.nz < 2) throw UsageError("every grid axis needs at least 2 nodes");
    if (!(config.inflate >= 0.0) || !std::isfinite(config.inflate)) throw UsageError("--inflate must be >= 0");
    if (!std::isfinite(config.threshold)) throw UsageError("--threshold must be finite");
    if (config.sphere_radius && config.reference_cloud)
        throw UsageError("give at most one of --sphere-radius and --reference");
    if (config.sphere_radius && !(*config.sphere_radius > 0.0)) throw UsageError("--sphere-radius must be positive");
}

fs::path cmd_synth(const SynthConfig& config) {
    validate(config);
    const PointSet ps = synth_sphere(config.n_surface, config.n_interior, config.radius, config.seed, config.shrink);
    ensure_dir(config.out);
    const fs::path path = config.out / kDatasetFile;
    save_labeled_xyz(ps, path);
    return path;
}

TrainOutcome cmd_train(const RunConfig& config, std::ostream& log) {
    validate(config);
    const PointSet raw = load_training_points(config);
    const AffineMap map = unit_cube_map(raw.positions());
    const PointSet all = apply_map(raw, map);
    auto [train_set, test_set] = split_train_test(all, config.test_fraction, config.split_seed);

    ensure_dir(config.out);
    const fs::path checkpoint_path = config.out / kCheckpointFile;

    TrainOptions options;
    options.lbfgs = config.lbfgs;
    options.snapshot_epochs = config.snapshots;
    options.snapshot_last = config.snapshot_last;
    options.histogram_bins = config.bins;
    if (config.checkpoint_every > 0) {
        options.on_epoch = [&](std::size_t epoch, const Params& params) {
            if (epoch % config.checkpoint_every == 0)
                save_checkpoint({config.network, params, map}, checkpoint_path);
        };
    }

    TrainOutcome outcome{train(config.network, train_set, options), std::nullopt, {}};
    const TrainReport& report = outcome.report;
    save_checkpoint({config.network, report.params, map}, checkpoint_path);
    write_loss_csv(report.log, config.out / kLossFile);

    json snapshots = json::array();
    for (const auto& snap : report.log.snapshots) {
        json files = json::array();
        for (std::size_t h = 0; h < snap.layers.size(); ++h) {
            const std::string name = histogram_file(h + 1, snap.epoch);
            write_histogram_csv(snap.layers[h], config.out / name);
            files.push_back(name);
            outcome.histogram_files.push_back(name);
        }
        snapshots.push_back({{"epoch", snap.epoch}, {"files", files}});
    }

    if (!test_set.empty())
        outcome.test_loss = evaluate_loss(config.network, report.params, to_batch(test_set.positions()),
                                          test_set.labels());

    const auto& net = config.network;
    json doc = {
        {"version", kReportVersion},
        {"network",
         {{"architecture", std::string(to_string(net.kind))},
          {"hidden_layers", net.hidden_layers},
          {"width", net.width},
          {"skip_period", net.skip_period},
          {"init_seed", net.seed},
          {"parameters", report.params.parameter_count()}}},
        {"optimizer",
         {{"memory", config.lbfgs.memory},
          {"max_epochs", config.lbfgs.max_iterations},
          {"grad_tol", config.lbfgs.grad_tol},
          {"loss_tol", config.lbfgs.loss_tol}}},
        {"train_points", counts_json(train_set)},
        {"test_points", counts_json(test_set)},
        {"epochs", report.epochs},
        {"termination", std::string(to_string(report.reason))},
        {"initial_loss", report.initial_loss},
        {"final_loss", report.final_loss},
        {"test_loss", outcome.test_loss ? json(*outcome.test_loss) : json(nullptr)},
        {"snapshots", snapshots},
    };
    write_text(config.out / kReportFile, doc.dump(2) + "\n");

    log << "termination: " << to_string(report.reason) << "\n"
        << "epochs: " << report.epochs << "\n"
        << "final loss: " << report.final_loss << "\n";
    if (outcome.test_loss) log << "test loss: " << *outcome.test_loss << "\n";
    log << "time: " << report.seconds << " s\n";
    return outcome;
}

ReconstructOutcome cmd_reconstruct(const ReconstructConfig& config, std::ostream& log) {
    validate(config);
    const Checkpoint ckpt = load_checkpoint(config.checkpoint);
    MeshReference reference;
    if (config.sphere_radius) reference = SphereReference{*config.sphere_radius, {}};
    if (config.reference_cloud) {
        const auto format = point_format_from_extension(*config.reference_cloud);
        if (!format) throw UsageError("cannot infer the format of " + config.reference_cloud->string());
        reference = CloudReference{load_points(*config.reference_cloud, *format)};
    }

    const Bounds box = reconstruction_bounds(ckpt.normalization, config.inflate);
    const ScalarField field =
        evaluate_grid(ckpt.config, ckpt.params, box, config.resolution, ckpt.normalization, config.threads);
    ensure_dir(config.out);
    if (config.dump_field) write_field_dump(field, config.out / kFieldFile);

    ReconstructOutcome outcome{marching_cubes(field, config.threshold), std::nullopt,
                               config.out / mesh_file(config.format)};
    export_mesh(outcome.mesh, outcome.mesh_path, config.format);
    if (outcome.mesh.empty()) {
        log << "warning: EmptyIsosurface: no crossing of " << config.threshold
            << " inside the grid; wrote an empty mesh\n";
        return outcome;
    }
    outcome.metrics = mesh_metrics(outcome.mesh, reference);
    const auto& t = outcome.metrics->topology;
    log << "vertices: " << t.vertices << "\n"
        << "faces: " << t.faces << "\n"
        << "euler characteristic: " << t.euler_characteristic << "\n"
        << "watertight: " << (t.watertight ? "yes" : "no") << "\n";
    if (outcome.metrics->mean_radial_error)
        log << "mean radial error: " << *outcome.metrics->mean_radial_error << "\n"
            << "max radial error: " << *outcome.metrics->max_radial_error << "\n";
    if (outcome.metrics->chamfer) log << "chamfer: " << *outcome.metrics->chamfer << "\n";
    return outcome;
}

DiagnoseSummary cmd_diagnose(const fs::path& dir) {
    const fs::path report_path = dir / kReportFile;
    if (!fs::exists(report_path)) throw Error(ErrorCode::MissingArtifact, report_path.string());
    const std::vector<EpochRecord> records = read_loss_csv(dir / kLossFile);

    json doc;
    try {
        std::ifstream in(report_path);
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, report_path.string() + ": " + e.what());
    }

    DiagnoseSummary summary;
    summary.epochs = records.size();
    if (!records.empty()) summary.final_loss = records.back().loss;
    std::vector<double> norms;
    norms.reserve(records.size());
    for (const auto& r : records) norms.push_back(r.frobenius);
    if (!norms.empty()) summary.norm_stability = tail_stability(norms);

    for (const auto& snap : doc.at("snapshots")) {
        const auto epoch = snap.at("epoch").get<std::size_t>();
        std::size_t layer = 0;
        for (const auto& file : snap.at("files")) {
            ++layer;
            const Histogram hist = read_histogram_csv(dir / file.get<std::string>());
            summary.gradients.push_back({epoch, layer, median_abs_from_histogram(hist)});
        }
    }
    return summary;
}

void print_summary(const DiagnoseSummary& summary, std::ostream& out) {
    out << "final loss: " << summary.final_loss << "\n"
        << "epochs: " << summary.epochs << "\n"
        << "norm stability (std/mean, last 10%): " << summary.norm_stability << "\n";
    if (summary.gradients.empty()) return;
    out << "epoch,layer,median_abs_gradient\n";
    for (const auto& g : summary.gradients)
        out << g.epoch << "," << g.layer << "," << g.median_abs_gradient << "\n";
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Implicit surface reconstruction from labeled point clouds"};
    app.require_subcommand(1);

    SynthConfig synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a labeled sample of a sphere");
    synth_cmd->add_option("shape", synth.shape, "Shape to sample")->check(CLI::IsMember({"sphere"}));
    synth_cmd->add_option("--ns", synth.n_surface, "Surface points")->capture_default_str();
    synth_cmd->add_option("--ni", synth.n_interior, "Interior points")->capture_default_str();
    synth_cmd->add_option("--radius", synth.radius, "Sphere radius")->capture_default_str();
    synth_cmd->add_option("--shrink", synth.shrink, "Interior shrink factor toward the centroid")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Sampling seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();

    RunConfig run_cfg;
    std::string arch = "sqrhw";
    std::string mode = "shrink";
    std::string surface_format;
    std::string snapshots = "100,1000,last";
    std::string data_path;
    std::string surface_path;
    auto* train_cmd = app.add_subcommand("train", "Fit a network to a labeled point set");
    auto* data_opt = train_cmd->add_option("--data", data_path, "Labeled xyz dataset (x y z label)");
    auto* surface_opt = train_cmd->add_option("--surface", surface_path, "Raw surface cloud (xyz, obj or ply)");
    data_opt->excludes(surface_opt);
    train_cmd->add_option("--format", surface_format, "Surface cloud format")
        ->check(CLI::IsMember({"xyz", "obj", "ply"}));
    train_cmd->add_option("--ni", run_cfg.n_interior, "Interior samples to generate")->capture_default_str();
    train_cmd->add_option("--ne", run_cfg.n_exterior, "Exterior samples to generate")->capture_default_str();
    train_cmd->add_option("--mode", mode, "Sampling mode: shrink (toward centroid) or normal")
        ->check(CLI::IsMember({"shrink", "normal"}))
        ->capture_default_str();
    train_cmd->add_option("--shrink", run_cfg.shrink, "Interior shrink factor")->capture_default_str();
    train_cmd->add_option("--expand", run_cfg.expand, "Exterior expansion factor")->capture_default_str();
    train_cmd->add_option("--offset", run_cfg.offset, "Normal offset distance")->capture_default_str();
    train_cmd->add_option("--data-seed", run_cfg.data_seed, "Sampling seed")->capture_default_str();
    train_cmd->add_option("--arch", arch, "pn, res, hw or sqrhw")
        ->check(CLI::IsMember({"pn", "res", "hw", "sqrhw"}))
        ->capture_default_str();
    train_cmd->add_option("--layers", run_cfg.network.hidden_layers, "Hidden layers")->capture_default_str();
    train_cmd->add_option("--width", run_cfg.network.width, "Neurons per hidden layer")->capture_default_str();
    train_cmd->add_option("--skip-period", run_cfg.network.skip_period, "Skip connection every k-th layer")
        ->capture_default_str();
    train_cmd->add_option("--init-seed", run_cfg.network.seed, "Weight initialization seed")->capture_default_str();
    run_cfg.lbfgs.max_iterations = 400;
    train_cmd->add_option("--max-epochs", run_cfg.lbfgs.max_iterations, "Epoch limit")->capture_default_str();
    train_cmd->add_option("--grad-tol", run_cfg.lbfgs.grad_tol, "Gradient tolerance")->capture_default_str();
    train_cmd->add_option("--loss-tol", run_cfg.lbfgs.loss_tol, "Relative loss decrease tolerance")
        ->capture_default_str();
    train_cmd->add_option("--memory", run_cfg.lbfgs.memory, "L-BFGS memory")->capture_default_str();
    train_cmd->add_option("--snapshots", snapshots, "Histogram epochs, comma separated; 'last' for the final epoch")
        ->capture_default_str();
    train_cmd->add_option("--bins", run_cfg.bins, "Histogram bins")->capture_default_str();
    train_cmd->add_option("--test-fraction", run_cfg.test_fraction, "Held-out fraction")->capture_default_str();
    train_cmd->add_option("--split-seed", run_cfg.split_seed, "Train/test split seed")->capture_default_str();
    train_cmd->add_option("--checkpoint-every", run_cfg.checkpoint_every, "Also checkpoint every k epochs (0 = off)")
        ->capture_default_str();
    train_cmd->add_option("--out", run_cfg.out, "Output directory")->capture_default_str();

    ReconstructConfig recon;
    std::string resolution = "64";
    std::string mesh_format = "obj";
    double sphere_radius = 0.0;
    std::string reference_path;
    auto* recon_cmd = app.add_subcommand("reconstruct", "Extract the zero level set of a trained network");
    recon_cmd->add_option("--checkpoint", recon.checkpoint, "Checkpoint file")->required();
    recon_cmd->add_option("--resolution", resolution, "N or NX,NY,NZ grid nodes")->capture_default_str();
    recon_cmd->add_option("--format", mesh_format, "obj or ply")
        ->check(CLI::IsMember({"obj", "ply"}))
        ->capture_default_str();
    recon_cmd->add_option("--threshold", recon.threshold, "Iso value")->capture_default_str();
    recon_cmd->add_option("--inflate", recon.inflate, "Grid padding as a fraction of the unit box")
        ->capture_default_str();
    auto* sphere_opt = recon_cmd->add_option("--sphere-radius", sphere_radius, "Compare against an origin sphere");
    auto* ref_opt = recon_cmd->add_option("--reference", reference_path, "Compare against a point cloud");
    sphere_opt->excludes(ref_opt);
    recon_cmd->add_flag("--dump-field", recon.dump_field, "Also write the sampled field");
    recon_cmd->add_option("--threads", recon.threads, "Worker threads (0 = all cores)")->capture_default_str();
    recon_cmd->add_option("--out", recon.out, "Output directory")->capture_default_str();

    fs::path diagnose_dir = ".";
    auto* diag_cmd = app.add_subcommand("diagnose", "Summarize training diagnostics");
    diag_cmd->add_option("--dir", diagnose_dir, "Training output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth_cmd) {
            out << "wrote " << cmd_synth(synth).string() << "\n";
        } else if (*train_cmd) {
            if (*data_opt) run_cfg.data = data_path;
            if (*surface_opt) run_cfg.surface = surface_path;
            if (!surface_format.empty()) run_cfg.surface_format = parse_point_format(surface_format);
            run_cfg.mode = mode == "shrink" ? OffsetMode::CentroidShrink : OffsetMode::NormalOffset;
            run_cfg.network.kind = parse_architecture(arch);
            run_cfg.snapshots = parse_snapshots(snapshots, run_cfg.snapshot_last);
            cmd_train(run_cfg, out);
        } else if (*recon_cmd) {
            recon.resolution = parse_resolution(resolution);
            recon.format = parse_mesh_format(mesh_format);
            if (*sphere_opt) recon.sphere_radius = sphere_radius;
            if (*ref_opt) recon.reference_cloud = reference_path;
            cmd_reconstruct(recon, out);
        } else if (*diag_cmd) {
            print_summary(cmd_diagnose(diagnose_dir), out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace irecon::cli
