#pragma once

#include "graspvae/hgg.hpp"
#include "graspvae/task.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace graspvae {

struct Hyperparameters {
    std::size_t network_size = 30000;  // target trainable parameters
    int latent_dim = 3;
    double kl_coefficient = 0.0005;
};

struct HyperparameterGrid {
    std::vector<std::size_t> network_sizes;
    std::vector<int> latent_dims;
    std::vector<double> kl_coefficients;

    /// Row-major expansion: network size outermost, KL coefficient innermost.
    std::vector<Hyperparameters> expand() const;
    /// Sizes within 12k-30k parameters, latent dims 2-6, KL coefficients
    /// 0.0002-0.01; throws ValidationError otherwise.
    void validate() const;
};

struct Indicators {
    /// Sum of per-parameter MSE (normalized units) through the posterior mean.
    double reconstruction_error = 0.0;
    /// Dataset-mean KL per latent variable, averaged over the latent variables.
    double kl_divergence = 0.0;
    int used_latent_variables = 0;
    /// Oracle success share of prior samples, averaged over the stable poses.
    double success_share = 0.0;
};

struct SweepRecord {
    Hyperparameters hyperparameters;
    std::uint64_t seed = 0;
    std::size_t parameter_count = 0;
    Indicators indicators;
    bool ok = true;
    std::string error;
};

inline constexpr std::array<const char*, 4> kIndicatorNames = {"used_latent_variables", "reconstruction_error",
                                                               "kl_divergence", "success_share"};
inline constexpr std::array<const char*, 3> kHyperparameterNames = {"latent_dim", "kl_coefficient", "network_size"};

/// Spearman coefficients, indicators (rows) by hyperparameters (columns), in
/// the order of kIndicatorNames / kHyperparameterNames. Entries are empty when
/// a series is constant.
struct CorrelationTable {
    std::array<std::array<std::optional<double>, 3>, 4> rho;
    std::size_t runs_used = 0;
};

struct SweepOptions {
    TrainingConfig training;  // kl_coefficient and seed are overridden per run
    std::size_t per_pose_count = 75;
    std::size_t success_samples = 1000;
    int jobs = 1;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    CorrelationTable table;
};

/// Indicators of a trained model on its training data.
Indicators compute_indicators(const HggModel& model, const GraspDataset& dataset, const SyntheticGraspTask& task,
                              std::size_t success_samples, std::uint64_t seed);

/// Trains one model per grid point and seed (seed drives the dataset, the
/// initialization and training). Runs fan out over `options.jobs` worker
/// threads; records come back in grid-major, seed-minor order. Failed runs
/// are kept with `ok == false` and left out of the correlations.
SweepResult run_sweep(const SyntheticGraspTask& task, const HyperparameterGrid& grid,
                      const std::vector<std::uint64_t>& seeds, const SweepOptions& options);

CorrelationTable correlation_table(const std::vector<SweepRecord>& records);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);
nlohmann::ordered_json correlation_to_json(const CorrelationTable& table);

}  // namespace graspvae
