#pragma once

#include "graspvae/model.hpp"
#include "graspvae/task.hpp"

#include <random>
#include <span>
#include <vector>

namespace graspvae {

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation of fractional ranks. Throws UsageError on length
/// mismatch or fewer than 2 values, and ValidationError when either series is
/// constant (correlation undefined).
double spearman(std::span<const double> xs, std::span<const double> ys);

struct ModelMetrics {
    double mean_position_error = 0.0;     // meters
    double mean_orientation_error = 0.0;  // degrees
    double success_share = 0.0;           // fraction in [0, 1]
    std::size_t reconstructed = 0;
    std::size_t sampled = 0;
};

/// Reconstruction through the posterior mean on the given records, in
/// physical units: position distance and 2*acos(|q_hat . q|) in degrees.
ModelMetrics reconstruction_metrics(const GraspModel& model, std::span<const GraspRecord> records);

/// Reconstruction errors over the training records resting on `plane`, plus
/// the oracle success share of `n_samples` prior samples decoded with `plane`.
/// Throws UsageError when no record uses `plane`.
ModelMetrics evaluate_model(const GraspModel& model, std::span<const GraspRecord> training,
                            const SyntheticGraspTask& task, const TabletopPlane& plane, std::size_t n_samples,
                            std::mt19937_64& rng);

/// Oracle success share of prior samples for one plane.
double success_share(const GraspModel& model, const SyntheticGraspTask& task, const TabletopPlane& plane,
                     std::size_t n_samples, std::mt19937_64& rng);

}  // namespace graspvae
