#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "implicit_recon/matrix.hpp"

namespace irecon {

/// Hidden-layer variants. All share the pre-activation Z = W p + b of a layer;
/// on skip layers the output is tanh(Z) plus
///   Res:   the layer input p
///   Hw:    Z
///   SqrHw: Z ⊙ Z
enum class Architecture { Pn, Res, Hw, SqrHw };

std::string_view to_string(Architecture kind) noexcept;
/// Accepts "pn", "res", "hw", "sqrhw" (case-insensitive).
Architecture parse_architecture(std::string_view name);

struct NetworkConfig {
    Architecture kind = Architecture::Pn;
    std::size_t input_dim = 3;
    std::size_t output_dim = 1;
    std::size_t hidden_layers = 5;
    std::size_t width = 50;
    /// Hidden layer h (1-based) carries a skip term when h >= 2 and
    /// h % skip_period == 0. A period larger than hidden_layers disables skips.
    std::size_t skip_period = 2;
    std::uint64_t seed = 0;

    /// Number of affine layers, hidden plus output.
    [[nodiscard]] std::size_t layer_count() const noexcept { return hidden_layers + 1; }
    /// Width t^(h) for h in [0, hidden_layers + 1].
    [[nodiscard]] std::size_t layer_width(std::size_t h) const noexcept;
    /// True when layer h (1-based) adds a skip term.
    [[nodiscard]] bool has_skip(std::size_t h) const noexcept;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Throws InvalidArgument (or ShapeMismatch for Res spans of unequal width).
void validate(const NetworkConfig& config);

struct Layer {
    Matrix weight;             // t^(h) x t^(h-1)
    std::vector<double> bias;  // t^(h)

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Weights and biases of every affine layer, index 0 being layer h = 1.
/// The flat parameter vector lists each layer's weights row-major followed by
/// its bias, layer by layer.
struct Params {
    std::vector<Layer> layers;

    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] std::vector<double> flatten() const;
    /// Overwrites the values in place; `flat` must have parameter_count() entries.
    void assign(std::span<const double> flat);

    friend bool operator==(const Params&, const Params&) = default;
};

/// Zero-filled parameters with the shapes implied by `config`.
Params zero_params(const NetworkConfig& config);
/// Glorot-uniform weights in (-a, a), a = sqrt(6 / (fan_in + fan_out)); zero biases.
Params init_params(const NetworkConfig& config);
Params unflatten(const NetworkConfig& config, std::span<const double> flat);
void check_shapes(const NetworkConfig& config, const Params& params);

/// Z = W p + b, b broadcast over batch columns. Summation runs over the input
/// index in ascending order for every column, so a column's result does not
/// depend on the batch it was evaluated in.
Matrix layer_affine(const Matrix& weight, std::span<const double> bias, const Matrix& input);

/// Intermediate values of one forward pass. Index h runs over 0..H+1;
/// entry 0 of `z` and `skip` is unused.
struct ForwardTrace {
    std::vector<Matrix> z;     // pre-activation Z^(h)
    std::vector<Matrix> skip;  // skip term added on layer h, empty when none
    std::vector<Matrix> p;     // layer outputs; p[0] is the input batch

    [[nodiscard]] const Matrix& prediction() const noexcept { return p.back(); }
    [[nodiscard]] std::size_t layer_count() const noexcept { return p.empty() ? 0 : p.size() - 1; }
};

/// Forward pass over a feature-major batch (input_dim x n). The output layer is
/// affine only. Throws ShapeMismatch or NonFiniteActivation.
ForwardTrace forward_trace(const NetworkConfig& config, const Params& params, const Matrix& batch);

/// Forward pass returning only the output_dim x n predictions.
Matrix forward(const NetworkConfig& config, const Params& params, const Matrix& batch);

}  // namespace irecon
