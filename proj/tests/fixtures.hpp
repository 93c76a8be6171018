#pragma once

// Shared, lazily trained models so the expensive fits happen once per test run.

#include "graspvae/hgg.hpp"
#include "graspvae/task.hpp"

#include <memory>

namespace fixture {

struct TrainedModel {
    graspvae::SyntheticGraspTask task;
    graspvae::GraspDataset data;
    graspvae::HggModel model;
    graspvae::TrainingReport report;
};

/// Default HGG trained on 75 records per stable pose of the default task.
inline const TrainedModel& trained_default() {
    static const std::unique_ptr<TrainedModel> cached = [] {
        auto task = graspvae::SyntheticGraspTask::default_task();
        std::mt19937_64 rng(1);
        auto data = graspvae::generate_primitives(task, 75, rng);
        auto model = graspvae::build_hgg(graspvae::HggArchitecture{}, data.stats, 1);
        auto report = graspvae::train(model, data, graspvae::TrainingConfig{});
        return std::make_unique<TrainedModel>(
            TrainedModel{std::move(task), std::move(data), std::move(model), std::move(report)});
    }();
    return *cached;
}

/// Mean squared position error (normalized units, summed over x, y, z)
/// through the posterior mean.
inline double position_reconstruction(const graspvae::HggModel& model, const graspvae::GraspDataset& data) {
    const Eigen::MatrixXd x = graspvae::normalized_inputs(data.records, model.stats());
    const Eigen::MatrixXd mu = model.encode_normalized(x).topRows(model.latent_dim());
    const Eigen::MatrixXd y = model.decode_normalized(mu, x.bottomRows(4));
    return (y.topRows(3) - x.topRows(3)).array().square().rowwise().mean().sum();
}

}  // namespace fixture
