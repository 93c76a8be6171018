#include "graspvae/metrics.hpp"

#include "graspvae/errors.hpp"
#include "graspvae/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace graspvae {

std::vector<double> fractional_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw UsageError("spearman needs equal-length series");
    if (xs.size() < 2) throw UsageError("spearman needs at least 2 values");
    const auto rx = fractional_ranks(xs);
    const auto ry = fractional_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman correlation undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ModelMetrics reconstruction_metrics(const GraspModel& model, std::span<const GraspRecord> records) {
    ModelMetrics m;
    for (const auto& r : records) {
        const GraspConfiguration g = model.decode(model.encode(r).mean, r.plane);
        m.mean_position_error += (g.position - r.grasp.position).norm();
        m.mean_orientation_error += rotation_angle(g.orientation, r.grasp.orientation) * 180.0 / std::numbers::pi;
    }
    m.reconstructed = records.size();
    if (!records.empty()) {
        m.mean_position_error /= static_cast<double>(records.size());
        m.mean_orientation_error /= static_cast<double>(records.size());
    }
    return m;
}

double success_share(const GraspModel& model, const SyntheticGraspTask& task, const TabletopPlane& plane,
                     std::size_t n_samples, std::mt19937_64& rng) {
    if (n_samples == 0) return 0.0;
    std::size_t ok = 0;
    for (const auto& g : sample_prior(model, plane, n_samples, rng))
        if (oracle_success(task, GraspRecord{g, plane, std::nullopt}).success) ++ok;
    return static_cast<double>(ok) / static_cast<double>(n_samples);
}

ModelMetrics evaluate_model(const GraspModel& model, std::span<const GraspRecord> training,
                            const SyntheticGraspTask& task, const TabletopPlane& plane, std::size_t n_samples,
                            std::mt19937_64& rng) {
    std::vector<GraspRecord> on_plane;
    std::copy_if(training.begin(), training.end(), std::back_inserter(on_plane),
                 [&](const GraspRecord& r) { return r.plane.approx_equal(plane); });
    if (on_plane.empty()) throw UsageError("no training record rests on the requested plane");
    ModelMetrics m = reconstruction_metrics(model, on_plane);
    m.success_share = success_share(model, task, plane, n_samples, rng);
    m.sampled = n_samples;
    return m;
}

}  // namespace graspvae
