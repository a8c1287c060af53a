#include "implicit_recon/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "implicit_recon/error.hpp"
#include "implicit_recon/random.hpp"

namespace irecon {

std::string_view to_string(Architecture kind) noexcept {
    switch (kind) {
    case Architecture::Pn: return "pn";
    case Architecture::Res: return "res";
    case Architecture::Hw: return "hw";
    case Architecture::SqrHw: return "sqrhw";
    }
    return "?";
}

Architecture parse_architecture(std::string_view name) {
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "pn" || n == "plain") return Architecture::Pn;
    if (n == "res" || n == "resnet") return Architecture::Res;
    if (n == "hw") return Architecture::Hw;
    if (n == "sqrhw") return Architecture::SqrHw;
    throw Error(ErrorCode::InvalidArgument, "unknown architecture '" + std::string(name) + "'");
}

std::size_t NetworkConfig::layer_width(std::size_t h) const noexcept {
    if (h == 0) return input_dim;
    if (h <= hidden_layers) return width;
    return output_dim;
}

bool NetworkConfig::has_skip(std::size_t h) const noexcept {
    return kind != Architecture::Pn && h >= 2 && h <= hidden_layers && skip_period != 0 &&
           h % skip_period == 0;
}

void validate(const NetworkConfig& config) {
    if (config.input_dim == 0 || config.output_dim == 0)
        throw Error(ErrorCode::InvalidArgument, "input and output dimensions must be positive");
    if (config.hidden_layers == 0) throw Error(ErrorCode::InvalidArgument, "need at least one hidden layer");
    if (config.width == 0) throw Error(ErrorCode::InvalidArgument, "hidden width must be positive");
    if (config.skip_period == 0) throw Error(ErrorCode::InvalidArgument, "skip period must be at least 1");
    if (config.kind == Architecture::Res) {
        for (std::size_t h = 1; h <= config.hidden_layers; ++h)
            if (config.has_skip(h) && config.layer_width(h - 1) != config.layer_width(h))
                throw Error(ErrorCode::ShapeMismatch,
                            "residual skip on layer " + std::to_string(h) + " spans unequal widths");
    }
}

std::size_t Params::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> Params::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const Layer& l : layers) {
        flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void Params::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count())
        throw Error(ErrorCode::ShapeMismatch, "flat vector has " + std::to_string(flat.size()) +
                                                  " entries, expected " + std::to_string(parameter_count()));
    std::size_t k = 0;
    for (Layer& l : layers) {
        for (double& w : l.weight.values()) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
}

Params zero_params(const NetworkConfig& config) {
    validate(config);
    Params params;
    params.layers.reserve(config.layer_count());
    for (std::size_t h = 1; h <= config.layer_count(); ++h)
        params.layers.push_back({Matrix(config.layer_width(h), config.layer_width(h - 1)),
                                 std::vector<double>(config.layer_width(h), 0.0)});
    return params;
}

Params init_params(const NetworkConfig& config) {
    Params params = zero_params(config);
    Rng rng(config.seed);
    for (std::size_t h = 1; h <= config.layer_count(); ++h) {
        const double fan = static_cast<double>(config.layer_width(h - 1) + config.layer_width(h));
        const double a = std::sqrt(6.0 / fan);
        for (double& w : params.layers[h - 1].weight.values()) {
            // uniform(-a, a) can return exactly -a; resample to keep the interval open.
            do {
                w = uniform(rng, -a, a);
            } while (w == -a);
        }
    }
    return params;
}

Params unflatten(const NetworkConfig& config, std::span<const double> flat) {
    Params params = zero_params(config);
    params.assign(flat);
    return params;
}

void check_shapes(const NetworkConfig& config, const Params& params) {
    if (params.layers.size() != config.layer_count())
        throw Error(ErrorCode::ShapeMismatch, "params have " + std::to_string(params.layers.size()) +
                                                  " layers, config expects " +
                                                  std::to_string(config.layer_count()));
    for (std::size_t h = 1; h <= config.layer_count(); ++h) {
        const Layer& l = params.layers[h - 1];
        if (l.weight.rows() != config.layer_width(h) || l.weight.cols() != config.layer_width(h - 1) ||
            l.bias.size() != config.layer_width(h))
            throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(h) + " has wrong shape");
    }
}

Matrix layer_affine(const Matrix& weight, std::span<const double> bias, const Matrix& input) {
    if (weight.cols() != input.rows())
        throw Error(ErrorCode::ShapeMismatch, "weight has " + std::to_string(weight.cols()) +
                                                  " columns but input has " + std::to_string(input.rows()) +
                                                  " rows");
    if (bias.size() != weight.rows())
        throw Error(ErrorCode::ShapeMismatch, "bias length does not match weight rows");
    const std::size_t n = input.cols();
    Matrix out(weight.rows(), n);
    for (std::size_t i = 0; i < weight.rows(); ++i) {
        std::span<double> dst = out.row(i);
        std::fill(dst.begin(), dst.end(), bias[i]);
        for (std::size_t j = 0; j < weight.cols(); ++j) {
            const double w = weight(i, j);
            const std::span<const double> src = input.row(j);
            for (std::size_t c = 0; c < n; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

namespace {

void require_finite(const Matrix& m, std::size_t layer, const char* what) {
    for (double v : m.values())
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteActivation,
                        std::string(what) + " of layer " + std::to_string(layer) + " is not finite");
}

}  // namespace

ForwardTrace forward_trace(const NetworkConfig& config, const Params& params, const Matrix& batch) {
    validate(config);
    check_shapes(config, params);
    if (batch.rows() != config.input_dim)
        throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.rows()) +
                                                  " rows, network expects " + std::to_string(config.input_dim));
    require_finite(batch, 0, "input");

    const std::size_t layers = config.layer_count();
    ForwardTrace trace;
    trace.z.resize(layers + 1);
    trace.skip.resize(layers + 1);
    trace.p.reserve(layers + 1);
    trace.p.push_back(batch);

    for (std::size_t h = 1; h <= layers; ++h) {
        const Layer& layer = params.layers[h - 1];
        Matrix z = layer_affine(layer.weight, layer.bias, trace.p[h - 1]);
        require_finite(z, h, "pre-activation");
        if (h == layers) {
            trace.p.push_back(z);
            trace.z[h] = std::move(z);
            break;
        }
        Matrix out(z.rows(), z.cols());
        const auto zv = z.values();
        auto ov = out.values();
        for (std::size_t k = 0; k < zv.size(); ++k) ov[k] = std::tanh(zv[k]);
        if (config.has_skip(h)) {
            Matrix skip;
            switch (config.kind) {
            case Architecture::Res: skip = trace.p[h - 1]; break;
            case Architecture::Hw: skip = z; break;
            case Architecture::SqrHw: {
                skip = Matrix(z.rows(), z.cols());
                auto sv = skip.values();
                for (std::size_t k = 0; k < zv.size(); ++k) sv[k] = zv[k] * zv[k];
                break;
            }
            case Architecture::Pn: break;
            }
            const auto sv = skip.values();
            for (std::size_t k = 0; k < ov.size(); ++k) ov[k] += sv[k];
            trace.skip[h] = std::move(skip);
        }
        require_finite(out, h, "activation");
        trace.z[h] = std::move(z);
        trace.p.push_back(std::move(out));
    }
    return trace;
}

Matrix forward(const NetworkConfig& config, const Params& params, const Matrix& batch) {
    ForwardTrace trace = forward_trace(config, params, batch);
    return std::move(trace.p.back());
}

}  // namespace irecon
