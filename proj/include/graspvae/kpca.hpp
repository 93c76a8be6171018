#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace graspvae {

enum class Kernel { rbf, linear };
std::string_view to_string(Kernel k);
Kernel kernel_from_string(std::string_view name);

struct KpcaConfig {
    Kernel kernel = Kernel::rbf;
    /// RBF width exp(-gamma * |x - y|^2). Unset: median heuristic,
    /// gamma = 1 / (2 * (bandwidth_scale * median pairwise distance)^2).
    std::optional<double> gamma;
    double bandwidth_scale = 3.0;
    /// Fraction of the centered-kernel spectrum the estimate must retain.
    double threshold = 0.9;

    void validate() const;
};

struct SpectrumReport {
    std::vector<double> eigenvalues;  // descending, negatives clipped to 0
    std::vector<double> cumulative;   // nondecreasing, last entry 1
    int dimension = 0;
    double gamma = 0.0;  // RBF width actually used (0 for linear)
    /// All eigenvalues vanish (e.g. repeated points); dimension is 0.
    bool degenerate = false;
    /// Eigenvalues below -1e-10 * max that were clipped.
    int clipped_negative = 0;

    /// Smallest m with cumulative[m-1] >= threshold (0 when degenerate).
    int dimension_for(double threshold) const;
};

/// Kernel-PCA intrinsic dimension of a point set (one point per row).
/// Throws UsageError for fewer than 3 points and NumericError for non-finite
/// kernel entries.
SpectrumReport estimate_dimension(const Eigen::MatrixXd& points, const KpcaConfig& config = {});

/// K - 1K - K1 + 1K1 with 1 the all-1/n matrix.
Eigen::MatrixXd center_kernel(const Eigen::MatrixXd& kernel);

nlohmann::ordered_json spectrum_to_json(const SpectrumReport& report);

}  // namespace graspvae
