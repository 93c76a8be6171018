#pragma once

#include "graspvae/dataset.hpp"
#include "graspvae/dense.hpp"
#include "graspvae/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace graspvae {

/// Layer widths of the conditional VAE.
///
/// Encoder: four input heads (position 3, orientation 4, spread 1, tabletop 4)
/// each map their slice through `input_head_widths` (tanh); the concatenated
/// head outputs go through `main_widths` (tanh) and a linear layer of width
/// 2n (means, then log-variances).
///
/// Decoder: the latent sample is concatenated with its own tabletop head
/// output, passed through `main_widths` reversed, then through three output
/// heads with hidden widths `output_head_widths` ending in a sigmoid (3), a
/// quaternion normalizer (4) and a sigmoid (1).
struct HggArchitecture {
    int latent_dim = 3;
    std::vector<int> input_head_widths = {16, 16};
    std::vector<int> main_widths = {96, 80};
    std::vector<int> output_head_widths = {16};

    void validate() const;
    /// Encoder plus decoder trainable parameters.
    std::size_t parameter_count() const;

    /// Default layout with the main widths scaled so the parameter count
    /// lands as close as possible to `target_parameters`.
    static HggArchitecture for_size(int latent_dim, std::size_t target_parameters);

    bool operator==(const HggArchitecture&) const = default;
};

struct KlDivergence {
    Eigen::VectorXd per_variable;
    double sum = 0.0;
};

/// KL(N(mean, exp(log_variance)) || N(0, I)), per variable and summed.
KlDivergence kl_divergence(const LatentDistribution& dist);

/// mean + eps * exp(log_variance / 2) with eps ~ N(0, I) drawn from `rng`.
Eigen::VectorXd reparameterize(const LatentDistribution& dist, std::mt19937_64& rng);

struct LossBreakdown {
    Vector8d per_parameter = Vector8d::Zero();  // batch-mean squared error per gripper parameter
    double position = 0.0;
    double orientation = 0.0;
    double spread = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;  // batch mean of per-sample KL sums
    double total = 0.0;
};

class HggModel;

struct LossGradients {
    std::vector<NetworkGradients> networks;
};

struct LossEvaluation {
    LossBreakdown breakdown;
    LossGradients gradients;  // empty unless requested
    std::size_t guarded_normalizations = 0;
};

class HggModel final : public GraspModel {
public:
    enum Part : std::size_t {
        kEncPosition,
        kEncOrientation,
        kEncSpread,
        kEncTable,
        kEncMain,
        kDecTable,
        kDecMain,
        kDecPosition,
        kDecOrientation,
        kDecSpread,
        kPartCount
    };
    static constexpr std::array<const char*, kPartCount> kPartNames = {
        "encoder_position", "encoder_orientation", "encoder_spread", "encoder_tabletop", "encoder_main",
        "decoder_tabletop", "decoder_main",        "decoder_position", "decoder_orientation", "decoder_spread"};

    HggModel(HggArchitecture arch, NormalizationStats stats, std::array<DenseNetwork, kPartCount> networks);

    int latent_dim() const override { return arch_.latent_dim; }
    LatentDistribution encode(const GraspRecord& record) const override;
    GraspConfiguration decode(const Eigen::VectorXd& latent, const TabletopPlane& plane) const override;

    /// Batched encoder on normalized 12-row inputs; returns 2n rows.
    Eigen::MatrixXd encode_normalized(const Eigen::MatrixXd& inputs) const;
    /// Batched decoder on latents (n rows) and normalized planes (4 rows);
    /// returns 8 rows of network units.
    Eigen::MatrixXd decode_normalized(const Eigen::MatrixXd& latents, const Eigen::MatrixXd& planes) const;

    /// Composite loss for normalized inputs with fixed reparameterization
    /// noise (n x batch). Gradients are filled when `with_gradients`.
    LossEvaluation evaluate(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& noise, double kl_coefficient,
                            bool with_gradients) const;

    const HggArchitecture& architecture() const { return arch_; }
    const NormalizationStats& stats() const { return stats_; }
    const DenseNetwork& network(Part p) const { return networks_[p]; }
    DenseNetwork& mutable_network(Part p) { return networks_[p]; }
    std::size_t parameter_count() const;

private:
    HggArchitecture arch_;
    NormalizationStats stats_;
    std::array<DenseNetwork, kPartCount> networks_;
};

/// Glorot-initialized model. Throws ShapeError on invalid widths.
HggModel build_hgg(const HggArchitecture& arch, const NormalizationStats& stats, std::uint64_t seed);

/// Normalized inputs for a set of records, one column each (12 rows).
Eigen::MatrixXd normalized_inputs(std::span<const GraspRecord> records, const NormalizationStats& stats);

/// Loss on a batch of records; reparameterization noise drawn from `rng`.
/// Throws UsageError on an empty batch.
LossBreakdown loss(const HggModel& model, std::span<const GraspRecord> batch, double kl_coefficient,
                   std::mt19937_64& rng);

struct TrainingConfig {
    double kl_coefficient = 0.0005;
    int epochs = 2000;
    int batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    void validate(std::size_t dataset_size) const;
};

struct EpochLoss {
    double position = 0.0;
    double orientation = 0.0;
    double spread = 0.0;
    double kl = 0.0;
    double total = 0.0;

    bool operator==(const EpochLoss&) const = default;
};

struct TrainingReport {
    std::vector<EpochLoss> epochs;
    /// Dataset-mean KL of each latent variable under the final encoder.
    Eigen::VectorXd final_kl_per_variable;
    int used_latent_variables = 0;
    double used_threshold = 0.0;
    std::size_t guarded_normalizations = 0;
};

/// Mean KL above this many nats marks a latent variable as used.
inline constexpr double kUsedLatentThreshold = 0.05;

/// Dataset-mean per-variable KL with the deterministic encoder.
Eigen::VectorXd mean_kl_per_variable(const HggModel& model, std::span<const GraspRecord> records);
int count_used_latents(const Eigen::VectorXd& kl_per_variable, double threshold = kUsedLatentThreshold);

using EpochCallback = std::function<void(int epoch, const EpochLoss&)>;

/// Minibatch Adam training, single-threaded and deterministic in `config.seed`.
/// Throws NumericError with epoch/batch context when the loss goes non-finite.
TrainingReport train(HggModel& model, const GraspDataset& dataset, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {});

/// epoch,recon_position,recon_orientation,recon_spread,kl,total
void write_loss_log(std::ostream& out, const TrainingReport& report);

nlohmann::ordered_json architecture_to_json(const HggArchitecture& arch);
HggArchitecture architecture_from_json(const nlohmann::json& j);
nlohmann::ordered_json model_to_json(const HggModel& model);
HggModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const HggModel& model);
HggModel load_model(const std::filesystem::path& path);

}  // namespace graspvae
