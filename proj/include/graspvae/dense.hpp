#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace graspvae {

enum class Activation { tanh, sigmoid, linear, quaternion_normalizer };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
    int input_width = 1;
    int output_width = 1;
    Activation activation = Activation::tanh;

    /// Widths >= 1; quaternion_normalizer layers must be 4 wide.
    void validate() const;
    bool operator==(const LayerSpec&) const = default;
};

struct DenseLayer {
    LayerSpec spec;
    Eigen::MatrixXd weights;  // output_width x input_width
    Eigen::VectorXd bias;
};

/// Feed-forward stack of fully connected layers. Samples are matrix columns.
///
/// Every construction or mutable access stamps the network with a fresh
/// state id; forward caches remember the id and `backward` refuses a cache
/// taken from a different parameter state.
class DenseNetwork {
public:
    DenseNetwork() = default;
    /// Zero weights and biases. Throws ShapeError when widths do not chain.
    explicit DenseNetwork(std::vector<LayerSpec> specs);

    /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static DenseNetwork glorot(std::vector<LayerSpec> specs, std::mt19937_64& rng);

    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }
    const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
    DenseLayer& mutable_layer(std::size_t i);
    std::span<const DenseLayer> layers() const { return layers_; }

    int input_width() const;
    int output_width() const;
    std::uint64_t state_id() const { return state_id_; }

private:
    void touch();

    std::vector<DenseLayer> layers_;
    std::uint64_t state_id_ = 0;
};

std::size_t count_parameters(const DenseNetwork& net);

struct ForwardCache {
    std::uint64_t state_id = 0;
    std::vector<Eigen::MatrixXd> inputs;       // per layer
    std::vector<Eigen::MatrixXd> activations;  // per layer, after activation
    std::vector<Eigen::MatrixXd> quaternion_pre;  // guarded pre-activations, normalizer layers only
    /// Columns where the normalizer guard nudged a near-zero pre-activation.
    std::size_t guarded_columns = 0;
};

/// Throws ShapeError if `input.rows()` differs from the first layer's width.
Eigen::MatrixXd forward(const DenseNetwork& net, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

struct NetworkGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;

    static NetworkGradients zeros_like(const DenseNetwork& net);
    NetworkGradients& operator+=(const NetworkGradients& other);
};

struct BackwardResult {
    NetworkGradients parameters;
    Eigen::MatrixXd input_gradient;
};

/// Reverse-mode pass. `output_gradient` is dLoss/dOutput with one column per
/// sample of the cached forward call. Throws UsageError on a stale cache.
BackwardResult backward(const DenseNetwork& net, const ForwardCache& cache, const Eigen::MatrixXd& output_gradient);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Eigen::MatrixXd> weight_m, weight_v;
    std::vector<Eigen::VectorXd> bias_m, bias_v;
    std::uint64_t step = 0;

    static AdamState for_network(const DenseNetwork& net, AdamConfig config = {});
};

/// One bias-corrected Adam update in place. Gradients are checked for
/// finiteness before anything is modified (NumericError names the layer).
void adam_step(DenseNetwork& net, const NetworkGradients& grads, AdamState& state);

nlohmann::ordered_json network_to_json(const DenseNetwork& net);
DenseNetwork network_from_json(const nlohmann::json& j);

}  // namespace graspvae
