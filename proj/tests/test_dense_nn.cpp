#include "graspvae/dense.hpp"
#include "graspvae/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace graspvae;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
    return m;
}

// Analytic vs central-difference gradient of sum(G .* net(X)).
double gradient_check(DenseNetwork& net, std::mt19937_64& rng, int batch = 3) {
    const Eigen::MatrixXd x = random_matrix(net.input_width(), batch, rng);
    const Eigen::MatrixXd g = random_matrix(net.output_width(), batch, rng);
    ForwardCache cache;
    forward(net, x, &cache);
    const auto analytic = backward(net, cache, g).parameters;
    const auto numeric = oracle::finite_difference(net, [&] { return forward(net, x).cwiseProduct(g).sum(); });
    return oracle::relative_error(analytic, numeric);
}

}  // namespace

TEST_CASE("forward examples") {
    SUBCASE("identity linear layer") {
        DenseNetwork net({{2, 2, Activation::linear}});
        net.mutable_layer(0).weights.setIdentity();
        const Eigen::MatrixXd y = forward(net, Eigen::Vector2d(1, 2));
        CHECK(y(0, 0) == 1.0);
        CHECK(y(1, 0) == 2.0);
    }
    SUBCASE("zero tanh layer") {
        DenseNetwork net({{3, 5, Activation::tanh}});
        CHECK(forward(net, Eigen::Vector3d(4, -2, 9)).isZero(0.0));
    }
    SUBCASE("quaternion normalizer") {
        DenseNetwork net({{4, 4, Activation::quaternion_normalizer}});
        net.mutable_layer(0).weights.setIdentity();
        const Eigen::MatrixXd y = forward(net, Eigen::Vector4d(1, 1, 1, 1));
        CHECK((y - Eigen::Vector4d::Constant(0.5)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("width mismatch") {
        DenseNetwork net({{3, 2, Activation::tanh}});
        CHECK_THROWS_AS(forward(net, Eigen::Vector2d(1, 2)), ShapeError);
    }
}

TEST_CASE("layer specs are validated") {
    CHECK_THROWS_AS(DenseNetwork({{0, 2, Activation::tanh}}), ShapeError);
    CHECK_THROWS_AS(DenseNetwork({{3, 3, Activation::quaternion_normalizer}}), ShapeError);
    CHECK_THROWS_AS(DenseNetwork({{3, 4, Activation::tanh}, {5, 2, Activation::tanh}}), ShapeError);
    for (auto a : {Activation::tanh, Activation::sigmoid, Activation::linear, Activation::quaternion_normalizer})
        CHECK(activation_from_string(to_string(a)) == a);
}

TEST_CASE("quaternion normalizer output is unit length") {
    std::mt19937_64 rng(4);
    DenseNetwork net({{4, 4, Activation::quaternion_normalizer}});
    net.mutable_layer(0).weights.setIdentity();
    Eigen::MatrixXd x = random_matrix(4, 500, rng);
    for (Eigen::Index c = 0; c < x.cols(); ++c) x.col(c) *= std::pow(10.0, -8.0 + 12.0 * (c % 10) / 9.0);
    const Eigen::MatrixXd y = forward(net, x);
    for (Eigen::Index c = 0; c < y.cols(); ++c) CHECK(std::abs(y.col(c).norm() - 1.0) < 1e-12);

    ForwardCache cache;
    const Eigen::MatrixXd z = forward(net, Eigen::Vector4d::Zero(), &cache);
    CHECK(cache.guarded_columns == 1);
    CHECK((z - Eigen::Vector4d(0, 0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("backward closed forms") {
    SUBCASE("linear layer") {
        std::mt19937_64 rng(2);
        auto net = DenseNetwork::glorot({{3, 2, Activation::linear}}, rng);
        const Eigen::Vector3d x(0.5, -1.0, 2.0);
        const Eigen::Vector2d g(0.3, -0.7);
        ForwardCache cache;
        forward(net, x, &cache);
        const auto r = backward(net, cache, g);
        CHECK((r.parameters.weights[0] - g * x.transpose()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((r.parameters.bias[0] - g).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((r.input_gradient - net.layer(0).weights.transpose() * g).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("normalizer jacobian at the identity quaternion") {
        DenseNetwork net({{4, 4, Activation::quaternion_normalizer}});
        net.mutable_layer(0).weights.setIdentity();
        ForwardCache cache;
        forward(net, Eigen::Vector4d(0, 0, 0, 1), &cache);
        const auto r = backward(net, cache, Eigen::Vector4d(1, 0, 0, 0));
        CHECK((r.input_gradient - Eigen::Vector4d(1, 0, 0, 0)).norm() < 1e-15);
    }
    SUBCASE("normalizer jacobian matches (I - vv^T)/|v|") {
        DenseNetwork net({{4, 4, Activation::quaternion_normalizer}});
        net.mutable_layer(0).weights.setIdentity();
        const Eigen::Vector4d v(0.3, -2.0, 0.5, 1.5), g(0.2, 0.1, -0.4, 0.9);
        ForwardCache cache;
        forward(net, v, &cache);
        const Eigen::Vector4d vh = v.normalized();
        const Eigen::Vector4d expected = (Eigen::Matrix4d::Identity() - vh * vh.transpose()) * g / v.norm();
        CHECK((backward(net, cache, g).input_gradient - expected).norm() < 1e-14);
    }
}

TEST_CASE("stale cache is refused") {
    std::mt19937_64 rng(1);
    auto net = DenseNetwork::glorot({{2, 3, Activation::tanh}, {3, 1, Activation::linear}}, rng);
    ForwardCache cache;
    forward(net, Eigen::Vector2d(1, 1), &cache);
    CHECK_NOTHROW(backward(net, cache, Eigen::MatrixXd::Ones(1, 1)));
    net.mutable_layer(0).bias[0] += 0.1;
    CHECK_THROWS_AS(backward(net, cache, Eigen::MatrixXd::Ones(1, 1)), UsageError);
    CHECK_THROWS_AS(backward(net, ForwardCache{}, Eigen::MatrixXd::Ones(1, 1)), UsageError);
}

TEST_CASE("three-layer tanh network gradient, seed 7") {
    std::mt19937_64 rng(7);
    auto net = DenseNetwork::glorot(
        {{4, 6, Activation::tanh}, {6, 5, Activation::tanh}, {5, 3, Activation::tanh}}, rng);
    CHECK(gradient_check(net, rng) < 1e-6);
}

TEST_CASE("analytic gradients match finite differences for every activation") {
    for (auto a : {Activation::tanh, Activation::sigmoid, Activation::linear, Activation::quaternion_normalizer}) {
        CAPTURE(to_string(a));
        const int w = a == Activation::quaternion_normalizer ? 4 : 5;
        double worst = 0.0;
        for (std::uint64_t seed = 100; seed < 125; ++seed) {
            std::mt19937_64 rng(seed);
            auto net = DenseNetwork::glorot({{3, 6, Activation::tanh}, {6, w, a}, {w, 2, Activation::sigmoid}}, rng);
            worst = std::max(worst, gradient_check(net, rng));
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("adam") {
    SUBCASE("zero gradients leave parameters alone") {
        std::mt19937_64 rng(3);
        auto net = DenseNetwork::glorot({{3, 4, Activation::tanh}}, rng);
        const auto before = net.layer(0).weights;
        auto state = AdamState::for_network(net);
        adam_step(net, NetworkGradients::zeros_like(net), state);
        CHECK(state.step == 1);
        CHECK((net.layer(0).weights.array() == before.array()).all());
    }
    SUBCASE("first step moves by the learning rate") {
        DenseNetwork net({{1, 1, Activation::linear}});
        auto state = AdamState::for_network(net);
        auto g = NetworkGradients::zeros_like(net);
        g.weights[0](0, 0) = 1.0;
        adam_step(net, g, state);
        CHECK(net.layer(0).weights(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
        CHECK(net.layer(0).bias[0] == 0.0);
    }
    SUBCASE("quadratic descent agrees with the scalar oracle") {
        // p is the single bias; loss (p - 3)^2
        DenseNetwork net({{1, 1, Activation::linear}});
        auto state = AdamState::for_network(net, AdamConfig{.learning_rate = 0.05});
        for (int t = 0; t < 200; ++t) {
            auto g = NetworkGradients::zeros_like(net);
            g.bias[0][0] = 2.0 * (net.layer(0).bias[0] - 3.0);
            adam_step(net, g, state);
        }
        const double p = net.layer(0).bias[0];
        CHECK(p == doctest::Approx(oracle::adam_quadratic(0.05, 200)).epsilon(1e-12));
        CHECK(std::abs(p - 3.0) < 0.1);
    }
    SUBCASE("non-finite gradient names the layer and changes nothing") {
        std::mt19937_64 rng(3);
        auto net = DenseNetwork::glorot({{2, 2, Activation::tanh}, {2, 2, Activation::tanh}}, rng);
        const auto before = net.layer(0).weights;
        auto state = AdamState::for_network(net);
        auto g = NetworkGradients::zeros_like(net);
        g.weights[0](0, 0) = 1.0;
        g.bias[1][1] = std::nan("");
        try {
            adam_step(net, g, state);
            FAIL("expected a numeric error");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
        }
        CHECK(state.step == 0);
        CHECK((net.layer(0).weights.array() == before.array()).all());
    }
}

TEST_CASE("parameter counts") {
    CHECK(count_parameters(DenseNetwork({{4, 8, Activation::tanh}})) == 40);
    CHECK(count_parameters(DenseNetwork()) == 0);
    CHECK(count_parameters(DenseNetwork({{3, 16, Activation::tanh}, {16, 2, Activation::linear}})) == 64 + 34);
}

TEST_CASE("training steps are deterministic") {
    auto run = [] {
        std::mt19937_64 rng(21);
        auto net = DenseNetwork::glorot({{3, 5, Activation::tanh}, {5, 4, Activation::quaternion_normalizer}}, rng);
        auto state = AdamState::for_network(net);
        const Eigen::MatrixXd x = random_matrix(3, 4, rng);
        for (int i = 0; i < 10; ++i) {
            ForwardCache cache;
            const Eigen::MatrixXd y = forward(net, x, &cache);
            adam_step(net, backward(net, cache, y).parameters, state);
        }
        return net;
    };
    const auto a = run(), b = run();
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK((a.layer(k).weights.array() == b.layer(k).weights.array()).all());
        CHECK((a.layer(k).bias.array() == b.layer(k).bias.array()).all());
    }
}

TEST_CASE("json round trip is exact") {
    std::mt19937_64 rng(5);
    auto net = DenseNetwork::glorot({{3, 7, Activation::sigmoid}, {7, 4, Activation::quaternion_normalizer}}, rng);
    net.mutable_layer(0).bias.setConstant(0.1 / 3.0);
    const auto back = network_from_json(nlohmann::json::parse(network_to_json(net).dump()));
    REQUIRE(back.size() == net.size());
    for (std::size_t k = 0; k < net.size(); ++k) {
        CHECK(back.layer(k).spec == net.layer(k).spec);
        CHECK((back.layer(k).weights.array() == net.layer(k).weights.array()).all());
        CHECK((back.layer(k).bias.array() == net.layer(k).bias.array()).all());
    }
}
