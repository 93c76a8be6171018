#include "graspvae/dense.hpp"

#include "graspvae/errors.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace graspvae {
namespace {

std::uint64_t next_state_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

constexpr double kNormalizerFloor = 1e-9;

void check_shape(const DenseNetwork& net, const NetworkGradients& g) {
    if (g.weights.size() != net.size() || g.bias.size() != net.size())
        throw ShapeError("gradient layer count does not match network");
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        if (g.weights[i].rows() != l.weights.rows() || g.weights[i].cols() != l.weights.cols() ||
            g.bias[i].size() != l.bias.size())
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
        case Activation::quaternion_normalizer: return "quaternion_normalizer";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    for (auto a : {Activation::tanh, Activation::sigmoid, Activation::linear, Activation::quaternion_normalizer}) {
        if (to_string(a) == name) return a;
    }
    throw FormatError("unknown activation '" + std::string(name) + "'");
}

void LayerSpec::validate() const {
    if (input_width < 1 || output_width < 1)
        throw ShapeError("layer widths must be positive, got " + std::to_string(input_width) + "->" +
                         std::to_string(output_width));
    if (activation == Activation::quaternion_normalizer && output_width != 4)
        throw ShapeError("quaternion_normalizer layer must have output width 4");
}

DenseNetwork::DenseNetwork(std::vector<LayerSpec> specs) {
    layers_.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        specs[i].validate();
        if (i > 0 && specs[i].input_width != specs[i - 1].output_width)
            throw ShapeError("layer " + std::to_string(i) + " input width " + std::to_string(specs[i].input_width) +
                             " does not match previous output width " + std::to_string(specs[i - 1].output_width));
        DenseLayer l;
        l.spec = specs[i];
        l.weights = Eigen::MatrixXd::Zero(specs[i].output_width, specs[i].input_width);
        l.bias = Eigen::VectorXd::Zero(specs[i].output_width);
        layers_.push_back(std::move(l));
    }
    touch();
}

DenseNetwork DenseNetwork::glorot(std::vector<LayerSpec> specs, std::mt19937_64& rng) {
    DenseNetwork net(std::move(specs));
    for (auto& l : net.layers_) {
        const double limit = std::sqrt(6.0 / (l.spec.input_width + l.spec.output_width));
        std::uniform_real_distribution<double> dist(-limit, limit);
        // Row-major fill so the draw order matches the serialized layout.
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = dist(rng);
    }
    net.touch();
    return net;
}

DenseLayer& DenseNetwork::mutable_layer(std::size_t i) {
    touch();
    return layers_.at(i);
}

int DenseNetwork::input_width() const { return layers_.empty() ? 0 : layers_.front().spec.input_width; }
int DenseNetwork::output_width() const { return layers_.empty() ? 0 : layers_.back().spec.output_width; }

void DenseNetwork::touch() { state_id_ = next_state_id(); }

std::size_t count_parameters(const DenseNetwork& net) {
    std::size_t n = 0;
    for (const auto& l : net.layers())
        n += static_cast<std::size_t>(l.spec.input_width) * l.spec.output_width + l.spec.output_width;
    return n;
}

Eigen::MatrixXd forward(const DenseNetwork& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
    if (net.empty()) return input;
    if (input.rows() != net.input_width())
        throw ShapeError("network expects input width " + std::to_string(net.input_width()) + ", got " +
                         std::to_string(input.rows()));
    if (cache) {
        *cache = ForwardCache{};
        cache->state_id = net.state_id();
        cache->inputs.reserve(net.size());
        cache->activations.reserve(net.size());
        cache->quaternion_pre.resize(net.size());
    }
    Eigen::MatrixXd x = input;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        Eigen::MatrixXd z = l.weights * x;
        z.colwise() += l.bias;
        switch (l.spec.activation) {
            case Activation::tanh: z = z.array().tanh(); break;
            case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse(); break;
            case Activation::linear: break;
            case Activation::quaternion_normalizer:
                for (Eigen::Index c = 0; c < z.cols(); ++c) {
                    if (z.col(c).norm() < kNormalizerFloor) {
                        z(3, c) += kNormalizerFloor;
                        if (cache) ++cache->guarded_columns;
                    }
                }
                if (cache) cache->quaternion_pre[i] = z;
                z = z.array().rowwise() / z.colwise().norm().array();
                break;
        }
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->activations.push_back(z);
        }
        x = std::move(z);
    }
    return x;
}

NetworkGradients NetworkGradients::zeros_like(const DenseNetwork& net) {
    NetworkGradients g;
    for (const auto& l : net.layers()) {
        g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

NetworkGradients& NetworkGradients::operator+=(const NetworkGradients& other) {
    if (other.weights.size() != weights.size()) throw ShapeError("gradient layer count mismatch");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] += other.weights[i];
        bias[i] += other.bias[i];
    }
    return *this;
}

BackwardResult backward(const DenseNetwork& net, const ForwardCache& cache, const Eigen::MatrixXd& output_gradient) {
    if (cache.state_id != net.state_id() || cache.inputs.size() != net.size())
        throw UsageError("forward cache does not belong to this network state");
    BackwardResult out;
    if (net.empty()) {
        out.input_gradient = output_gradient;
        return out;
    }
    const auto batch = cache.inputs.front().cols();
    if (output_gradient.rows() != net.output_width() || output_gradient.cols() != batch)
        throw ShapeError("output gradient shape does not match cached forward pass");

    out.parameters.weights.resize(net.size());
    out.parameters.bias.resize(net.size());
    Eigen::MatrixXd grad = output_gradient;
    for (std::size_t k = net.size(); k-- > 0;) {
        const auto& l = net.layer(k);
        const auto& y = cache.activations[k];
        switch (l.spec.activation) {
            case Activation::tanh: grad.array() *= 1.0 - y.array().square(); break;
            case Activation::sigmoid: grad.array() *= y.array() * (1.0 - y.array()); break;
            case Activation::linear: break;
            case Activation::quaternion_normalizer: {
                // d(v/|v|) = (I - u u^T) / |v|, u = v/|v|
                const auto& v = cache.quaternion_pre[k];
                for (Eigen::Index c = 0; c < grad.cols(); ++c) {
                    const double norm = v.col(c).norm();
                    const double along = y.col(c).dot(grad.col(c));
                    grad.col(c) = (grad.col(c) - along * y.col(c)) / norm;
                }
                break;
            }
        }
        out.parameters.weights[k] = grad * cache.inputs[k].transpose();
        out.parameters.bias[k] = grad.rowwise().sum();
        grad = l.weights.transpose() * grad;
    }
    out.input_gradient = std::move(grad);
    return out;
}

AdamState AdamState::for_network(const DenseNetwork& net, AdamConfig config) {
    AdamState s;
    s.config = config;
    const auto zeros = NetworkGradients::zeros_like(net);
    s.weight_m = zeros.weights;
    s.weight_v = zeros.weights;
    s.bias_m = zeros.bias;
    s.bias_v = zeros.bias;
    return s;
}

void adam_step(DenseNetwork& net, const NetworkGradients& grads, AdamState& state) {
    check_shape(net, grads);
    if (state.weight_m.size() != net.size()) throw ShapeError("optimizer state does not match network");
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!grads.weights[i].allFinite() || !grads.bias[i].allFinite())
            throw NumericError("non-finite gradient in layer " + std::to_string(i));
    }
    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(c.beta1, t);
    const double correct2 = 1.0 - std::pow(c.beta2, t);
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        param.array() -= c.learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + c.epsilon);
    };
    for (std::size_t i = 0; i < net.size(); ++i) {
        auto& l = net.mutable_layer(i);
        update(l.weights, grads.weights[i], state.weight_m[i], state.weight_v[i]);
        update(l.bias, grads.bias[i], state.bias_m[i], state.bias_v[i]);
    }
}

nlohmann::ordered_json network_to_json(const DenseNetwork& net) {
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& l : net.layers()) {
        nlohmann::ordered_json jl;
        jl["input_width"] = l.spec.input_width;
        jl["output_width"] = l.spec.output_width;
        jl["activation"] = std::string(to_string(l.spec.activation));
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index col = 0; col < l.weights.cols(); ++col) w.push_back(l.weights(r, col));
        jl["weights"] = std::move(w);
        jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back(std::move(jl));
    }
    return layers;
}

DenseNetwork network_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("network must be an array of layers");
    std::vector<LayerSpec> specs;
    for (const auto& jl : j) {
        specs.push_back({jl.at("input_width").get<int>(), jl.at("output_width").get<int>(),
                         activation_from_string(jl.at("activation").get<std::string>())});
    }
    DenseNetwork net(specs);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto w = j[i].at("weights").get<std::vector<double>>();
        const auto b = j[i].at("bias").get<std::vector<double>>();
        auto& l = net.mutable_layer(i);
        if (w.size() != static_cast<std::size_t>(l.weights.size()) ||
            b.size() != static_cast<std::size_t>(l.bias.size()))
            throw FormatError("layer " + std::to_string(i) + " weight arrays do not match its widths");
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = w[k++];
        for (std::size_t r = 0; r < b.size(); ++r) l.bias[static_cast<Eigen::Index>(r)] = b[r];
    }
    return net;
}

}  // namespace graspvae
