#include "graspvae/explorer.hpp"

#include "graspvae/dataset.hpp"
#include "graspvae/errors.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace graspvae {

std::vector<LatentSample> sample_prior_latents(const GraspModel& model, const TabletopPlane& plane,
                                               std::size_t count, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::vector<LatentSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXd z(model.latent_dim());
        for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
        GraspConfiguration g = model.decode(z, plane);
        out.push_back({std::move(z), g, -1, 0.0});
    }
    return out;
}

std::vector<GraspConfiguration> sample_prior(const GraspModel& model, const TabletopPlane& plane, std::size_t count,
                                             std::mt19937_64& rng) {
    std::vector<GraspConfiguration> out;
    out.reserve(count);
    for (auto& s : sample_prior_latents(model, plane, count, rng)) out.push_back(s.grasp);
    return out;
}

void SweepPlan::validate(int latent_dim) const {
    if (latent_dim < 2) throw UsageError("latent sweeps need at least two latent dimensions");
    if (axis_a < 0 || axis_b < 0 || axis_a >= latent_dim || axis_b >= latent_dim)
        throw UsageError("sweep axis index out of range for latent dimension " + std::to_string(latent_dim));
    if (axis_a == axis_b) throw UsageError("sweep axes must be distinct");
    if (points_per_circle < 1) throw UsageError("points per circle must be positive");
    for (double d : diameters)
        if (!(d > 0.0)) throw UsageError("circle diameters must be positive");
    if (center.size() != 0 && center.size() != latent_dim)
        throw UsageError("sweep center must have one coordinate per latent dimension");
}

std::vector<LatentSample> sweep(const GraspModel& model, const SweepPlan& plan) {
    const int n = model.latent_dim();
    plan.validate(n);
    const Eigen::VectorXd center = plan.center.size() ? plan.center : Eigen::VectorXd::Zero(n);

    std::vector<LatentSample> out;
    out.reserve(1 + plan.diameters.size() * static_cast<std::size_t>(plan.points_per_circle));
    out.push_back({center, model.decode(center, plan.plane), 0, 0.0});
    for (std::size_t ring = 0; ring < plan.diameters.size(); ++ring) {
        const double radius = plan.diameters[ring] / 2.0;
        for (int k = 0; k < plan.points_per_circle; ++k) {
            const double angle = 2.0 * std::numbers::pi * k / plan.points_per_circle;
            Eigen::VectorXd z = center;
            z[plan.axis_a] += radius * std::cos(angle);
            z[plan.axis_b] += radius * std::sin(angle);
            out.push_back({z, model.decode(z, plan.plane), static_cast<int>(ring + 1), angle});
        }
    }
    return out;
}

void write_latent_samples(std::ostream& out, std::span<const LatentSample> samples, const TabletopPlane& plane) {
    for (const auto& s : samples) {
        auto j = record_to_json(GraspRecord{s.grasp, plane, std::nullopt});
        j["latent"] = std::vector<double>(s.latent.data(), s.latent.data() + s.latent.size());
        if (s.ring >= 0) {
            j["ring"] = s.ring;
            j["angle"] = s.angle;
        }
        out << j.dump() << '\n';
    }
}

void write_latent_csv(std::ostream& out, std::span<const LatentSample> samples) {
    const auto n = samples.empty() ? 0 : samples.front().latent.size();
    out << "ring,angle";
    for (Eigen::Index i = 0; i < n; ++i) out << ",l" << i;
    out << ",x,y,z,qx,qy,qz,qw,spread\n";
    const auto old = out.precision(17);
    for (const auto& s : samples) {
        out << s.ring << ',' << s.angle;
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << s.latent[i];
        const Vector8d g = s.grasp.as_vector();
        for (int i = 0; i < 8; ++i) out << ',' << g[i];
        out << '\n';
    }
    out.precision(old);
}

}  // namespace graspvae
