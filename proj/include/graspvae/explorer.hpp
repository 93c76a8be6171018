#pragma once

#include "graspvae/model.hpp"

#include <json.hpp>

#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace graspvae {

struct LatentSample;

/// Decodes `count` standard-normal latents with the given plane.
std::vector<GraspConfiguration> sample_prior(const GraspModel& model, const TabletopPlane& plane, std::size_t count,
                                             std::mt19937_64& rng);

/// Deterministic visit of the latent space: the center, then concentric
/// circles in the plane of two latent axes.
struct SweepPlan {
    Eigen::VectorXd center;  // empty means the origin
    std::vector<double> diameters = {0.5, 1.0};
    int points_per_circle = 8;
    TabletopPlane plane;
    int axis_a = 0;
    int axis_b = 1;

    /// Throws UsageError on bad axes, diameters or center size.
    void validate(int latent_dim) const;
};

struct LatentSample {
    Eigen::VectorXd latent;
    GraspConfiguration grasp;
    int ring = -1;       // sweeps: 0 is the center, then 1, 2, ... inner to outer; -1 for prior samples
    double angle = 0.0;  // radians, counterclockwise from axis_a
};

/// Same draws as `sample_prior`, keeping the latent of each sample.
std::vector<LatentSample> sample_prior_latents(const GraspModel& model, const TabletopPlane& plane,
                                               std::size_t count, std::mt19937_64& rng);

/// Center first, then circles inner to outer, each counterclockwise from
/// angle 0 with evenly spaced points. Coordinates off the two swept axes stay
/// at the center value.
std::vector<LatentSample> sweep(const GraspModel& model, const SweepPlan& plan);

/// One JSON object per line: the grasp record fields plus "latent", and
/// "ring"/"angle" for sweep samples.
void write_latent_samples(std::ostream& out, std::span<const LatentSample> samples, const TabletopPlane& plane);
/// ring,angle,l0..l{n-1},x,y,z,qx,qy,qz,qw,spread
void write_latent_csv(std::ostream& out, std::span<const LatentSample> samples);

}  // namespace graspvae
