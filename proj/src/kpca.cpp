#include "graspvae/kpca.hpp"

#include "graspvae/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace graspvae {

std::string_view to_string(Kernel k) { return k == Kernel::rbf ? "rbf" : "linear"; }

Kernel kernel_from_string(std::string_view name) {
    if (name == "rbf") return Kernel::rbf;
    if (name == "linear") return Kernel::linear;
    throw ValidationError("unknown kernel '" + std::string(name) + "'");
}

void KpcaConfig::validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("information threshold must be in (0, 1]");
    if (gamma && !(*gamma > 0.0)) throw ValidationError("explicit gamma must be positive");
    if (!(bandwidth_scale > 0.0)) throw ValidationError("bandwidth scale must be positive");
}

int SpectrumReport::dimension_for(double threshold) const {
    if (degenerate) return 0;
    for (std::size_t m = 0; m < cumulative.size(); ++m)
        if (cumulative[m] >= threshold - 1e-12) return static_cast<int>(m + 1);
    return static_cast<int>(cumulative.size());
}

Eigen::MatrixXd center_kernel(const Eigen::MatrixXd& k) {
    const Eigen::VectorXd col_mean = k.colwise().mean().transpose();
    const Eigen::VectorXd row_mean = k.rowwise().mean();
    const double all_mean = k.mean();
    Eigen::MatrixXd c = k;
    c.colwise() -= row_mean;
    c.rowwise() -= col_mean.transpose();
    c.array() += all_mean;
    return c;
}

SpectrumReport estimate_dimension(const Eigen::MatrixXd& points, const KpcaConfig& config) {
    config.validate();
    const Eigen::Index n = points.rows();
    if (n < 3) throw UsageError("kernel-PCA needs at least 3 points");
    if (!points.allFinite()) throw NumericError("input points have non-finite coordinates");

    SpectrumReport report;
    Eigen::MatrixXd k(n, n);
    if (config.kernel == Kernel::linear) {
        k = points * points.transpose();
    } else {
        Eigen::MatrixXd sq(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = (points.row(i) - points.row(j)).squaredNorm();
        double gamma = 0.0;
        if (config.gamma) {
            gamma = *config.gamma;
        } else {
            std::vector<double> dist;
            dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i + 1; j < n; ++j) dist.push_back(std::sqrt(sq(i, j)));
            auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
            std::nth_element(dist.begin(), mid, dist.end());
            double median = *mid;
            if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
            if (median <= 0.0) {
                // Mostly repeated points: fall back to the nonzero distances.
                std::vector<double> nonzero;
                std::copy_if(dist.begin(), dist.end(), std::back_inserter(nonzero), [](double d) { return d > 0.0; });
                if (!nonzero.empty()) {
                    auto m = nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() / 2);
                    std::nth_element(nonzero.begin(), m, nonzero.end());
                    median = *m;
                }
            }
            const double width = config.bandwidth_scale * median;
            gamma = width > 0.0 ? 1.0 / (2.0 * width * width) : 1.0;
        }
        report.gamma = gamma;
        k = (-gamma * sq.array()).exp();
    }
    if (!k.allFinite()) throw NumericError("kernel matrix has non-finite entries");

    const Eigen::MatrixXd centered = center_kernel(k);
    const Eigen::MatrixXd sym = 0.5 * (centered + centered.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigen-decomposition of the kernel matrix failed");

    std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    const double top = std::max(ev.front(), 0.0);
    for (double& v : ev) {
        if (v < 0.0) {
            if (v < -1e-10 * top) ++report.clipped_negative;
            v = 0.0;
        }
    }
    double total = 0.0;
    for (double v : ev) total += v;
    // Scale-aware zero test: the centered matrix of identical points is
    // zero up to rounding of the raw kernel entries.
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    report.eigenvalues = ev;
    report.cumulative.resize(ev.size());
    if (!(total > 1e-12 * scale * static_cast<double>(n))) {
        report.degenerate = true;
        std::fill(report.cumulative.begin(), report.cumulative.end(), 1.0);
        report.dimension = 0;
        return report;
    }
    double run = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        run += ev[i];
        report.cumulative[i] = std::min(1.0, run / total);
    }
    report.cumulative.back() = 1.0;
    report.dimension = report.dimension_for(config.threshold);
    return report;
}

nlohmann::ordered_json spectrum_to_json(const SpectrumReport& r) {
    nlohmann::ordered_json j;
    j["dimension"] = r.dimension;
    j["degenerate"] = r.degenerate;
    j["gamma"] = r.gamma;
    j["clipped_negative"] = r.clipped_negative;
    j["eigenvalues"] = r.eigenvalues;
    j["cumulative"] = r.cumulative;
    return j;
}

}  // namespace graspvae
