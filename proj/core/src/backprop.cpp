#include "implicit_recon/backprop.hpp"

#include <cmath>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {

double mse_loss(std::span<const double> predictions, std::span<const double> labels, std::size_t samples) {
    if (predictions.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                                   std::to_string(labels.size()) + " labels");
    if (predictions.empty()) throw Error(ErrorCode::EmptyBatch, "mse of an empty batch");
    if (samples == 0) samples = predictions.size();
    // Neumaier-compensated sum keeps the loss accurate to a few ulps, which the
    // line search relies on once the loss gets small.
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = labels[i] - predictions[i];
        const double term = r * r;
        const double t = sum + term;
        carry += std::fabs(sum) >= term ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return (sum + carry) / static_cast<double>(samples);
}

std::vector<double> GradientRecord::flatten() const {
    std::vector<double> flat;
    for (const Layer& l : layers) {
        flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

GradientRecord backward(const NetworkConfig& config, const Params& params, const ForwardTrace& trace,
                        std::span<const double> labels) {
    check_shapes(config, params);
    const std::size_t layers = config.layer_count();
    if (trace.p.size() != layers + 1 || trace.z.size() != layers + 1 || trace.skip.size() != layers + 1)
        throw Error(ErrorCode::TraceMismatch, "trace depth does not match the network");
    const std::size_t n = trace.p[0].cols();
    if (n == 0) throw Error(ErrorCode::EmptyBatch, "backward on an empty batch");
    for (std::size_t h = 0; h <= layers; ++h) {
        if (trace.p[h].rows() != config.layer_width(h) || trace.p[h].cols() != n)
            throw Error(ErrorCode::TraceMismatch, "trace output of layer " + std::to_string(h) + " has wrong shape");
        if (h > 0 && (trace.z[h].rows() != config.layer_width(h) || trace.z[h].cols() != n))
            throw Error(ErrorCode::TraceMismatch, "trace pre-activation of layer " + std::to_string(h) +
                                                      " has wrong shape");
        if (h > 0 && h < layers && config.has_skip(h) != !trace.skip[h].empty())
            throw Error(ErrorCode::TraceMismatch, "trace skip layout does not match the architecture");
    }
    if (labels.size() != config.output_dim * n)
        throw Error(ErrorCode::TraceMismatch, "labels do not match the traced batch");

    GradientRecord record;
    record.layers.resize(layers);

    // dL/dp for the current layer's output.
    Matrix dp(config.output_dim, n);
    {
        const auto pred = trace.p[layers].values();
        auto d = dp.values();
        const double scale = 2.0 / static_cast<double>(n);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = scale * (pred[k] - labels[k]);
    }

    for (std::size_t h = layers; h >= 1; --h) {
        const Matrix& z = trace.z[h];
        const Matrix& input = trace.p[h - 1];
        Matrix dz = dp;
        if (h < layers) {
            auto dzv = dz.values();
            const auto zv = z.values();
            const auto dpv = dp.values();
            for (std::size_t k = 0; k < dzv.size(); ++k) {
                const double t = std::tanh(zv[k]);
                dzv[k] = dpv[k] * (1.0 - t * t);
            }
            if (config.has_skip(h)) {
                if (config.kind == Architecture::Hw) {
                    for (std::size_t k = 0; k < dzv.size(); ++k) dzv[k] += dpv[k];
                } else if (config.kind == Architecture::SqrHw) {
                    for (std::size_t k = 0; k < dzv.size(); ++k) dzv[k] += 2.0 * zv[k] * dpv[k];
                }
            }
        }

        const Layer& layer = params.layers[h - 1];
        Layer& grad = record.layers[h - 1];
        grad.weight = Matrix(layer.weight.rows(), layer.weight.cols());
        grad.bias.assign(layer.bias.size(), 0.0);
        // dL/dW = sum over samples of dz ⊗ p^(h-1).
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            const auto dzi = dz.row(i);
            double bsum = 0.0;
            for (std::size_t c = 0; c < n; ++c) bsum += dzi[c];
            grad.bias[i] = bsum;
            for (std::size_t j = 0; j < input.rows(); ++j) {
                const auto pj = input.row(j);
                double s = 0.0;
                for (std::size_t c = 0; c < n; ++c) s += dzi[c] * pj[c];
                grad.weight(i, j) = s;
            }
        }
        if (h == 1) break;

        Matrix dprev(input.rows(), n);
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            const auto dzi = dz.row(i);
            for (std::size_t j = 0; j < input.rows(); ++j) {
                const double w = layer.weight(i, j);
                auto dst = dprev.row(j);
                for (std::size_t c = 0; c < n; ++c) dst[c] += w * dzi[c];
            }
        }
        if (config.has_skip(h) && config.kind == Architecture::Res) {
            auto dv = dprev.values();
            const auto dpv = dp.values();
            for (std::size_t k = 0; k < dv.size(); ++k) dv[k] += dpv[k];
        }
        dp = std::move(dprev);
    }

    for (const Layer& l : record.layers) {
        for (double v : l.weight.values())
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteActivation, "non-finite weight gradient");
        for (double v : l.bias)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteActivation, "non-finite bias gradient");
    }
    return record;
}

LossGradient loss_and_gradient(const NetworkConfig& config, const Params& params, const Matrix& batch,
                               std::span<const double> labels) {
    const ForwardTrace trace = forward_trace(config, params, batch);
    LossGradient out;
    out.loss = mse_loss(trace.prediction().values(), labels, batch.cols());
    out.gradient = backward(config, params, trace, labels);
    return out;
}

double evaluate_loss(const NetworkConfig& config, const Params& params, const Matrix& batch,
                     std::span<const double> labels) {
    const Matrix pred = forward(config, params, batch);
    return mse_loss(pred.values(), labels, batch.cols());
}

std::vector<double> finite_diff_gradient(const NetworkConfig& config, const Params& params,
                                         const Matrix& batch, std::span<const double> labels, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    std::vector<double> flat = params.flatten();
    Params probe = params;
    std::vector<double> grad(flat.size());
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double original = flat[k];
        flat[k] = original + step;
        probe.assign(flat);
        const double up = evaluate_loss(config, probe, batch, labels);
        flat[k] = original - step;
        probe.assign(flat);
        const double down = evaluate_loss(config, probe, batch, labels);
        flat[k] = original;
        grad[k] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace irecon
