#pragma once

#include "graspvae/grasp.hpp"

#include <Eigen/Core>

namespace graspvae {

/// Diagonal Gaussian posterior over the latent variables.
struct LatentDistribution {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_variance;

    Eigen::Index size() const { return mean.size(); }
};

/// Anything that maps grasps to latent posteriors and latents back to grasps,
/// conditioned on the tabletop plane. The generator and the evaluation code
/// only rely on this surface.
class GraspModel {
public:
    virtual ~GraspModel() = default;
    virtual int latent_dim() const = 0;
    virtual LatentDistribution encode(const GraspRecord& record) const = 0;
    virtual GraspConfiguration decode(const Eigen::VectorXd& latent, const TabletopPlane& plane) const = 0;
};

}  // namespace graspvae
