#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ordent/matrix.hpp"

namespace ordent {

enum class Activation { relu, tanh };

// glorot_uniform: weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
// zero biases. uniform_fan_in: weights and biases ~ U(-a, a) with
// a = 1 / sqrt(fan_in); trains noticeably better on the operator tasks.
enum class WeightInit { glorot_uniform, uniform_fan_in };

// Two-layer fully connected network: hidden = act(W1 x + b1), output
// predictions = W2 hidden + b2. The hidden activations are the feature
// vectors the regularizers and entropy estimates operate on.
struct MlpParams {
    Matrix w1;                // hidden x input
    std::vector<double> b1;   // hidden
    Matrix w2;                // output x hidden
    std::vector<double> b2;   // output
    Activation activation = Activation::relu;

    int input_dim() const noexcept { return w1.cols(); }
    int hidden_dim() const noexcept { return w1.rows(); }
    int output_dim() const noexcept { return w2.rows(); }

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Norms below this are clamped before dividing, so dead-ReLU rows normalize
// to zero instead of NaN. The normalization Jacobian uses the same clamp.
inline constexpr double kFeatureNormFloor = 1e-12;

// Glorot-uniform weights, zero biases. Each tensor draws from its own
// derived stream, so W1 is identical across heads of different output
// widths given the same seed.
MlpParams init_params(int input_dim, int hidden, int output_dim, std::uint64_t seed,
                      Activation activation = Activation::relu);

struct ForwardCache {
    Matrix inputs;            // batch x input
    Matrix pre_activation;    // batch x hidden
    Matrix features;          // z, batch x hidden
    Matrix normalized;        // z / max(||z||, floor), batch x hidden
    std::vector<double> feature_norms;  // clamped row norms
    Matrix predictions;       // batch x output
};

ForwardCache forward(const MlpParams& p, const Matrix& inputs);

struct Gradients {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

// Loss gradients flowing back into the network. Any member may be empty
// (treated as zero): d_predictions is batch x output, d_features and
// d_normalized are batch x hidden. d_normalized is pulled back through the
// normalization Jacobian (I - n n^T) / max(||z||, floor).
struct UpstreamGrads {
    Matrix d_predictions;
    Matrix d_features;
    Matrix d_normalized;
};

Gradients backward(const MlpParams& p, const ForwardCache& cache, const UpstreamGrads& upstream);

// Checkpoint: one header line (dims, activation, format version) followed by
// the flat weight list at 17 significant digits; round-trips exactly.
void save_params(const MlpParams& p, const std::filesystem::path& path);
MlpParams load_params(const std::filesystem::path& path);

} // namespace ordent
