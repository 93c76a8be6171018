#pragma once

#include "graspvae/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graspvae {

/// One resting pose of the object. Primitives for this pose approach from
/// angles (about the cylinder axis, radians) inside the sector.
struct StablePose {
    std::string name;
    TabletopPlane plane;
    double sector_min = 0.0;
    double sector_max = 0.0;
};

/// Analytic stand-in for a simulated grasping setup: a cylinder of the given
/// radius and height along the object z-axis. A grasp succeeds when the
/// gripper sits in a band around the side, points its approach axis at the
/// cylinder axis, uses the prescribed spread and keeps clear of the table.
struct SyntheticGraspTask {
    double radius = 0.04;
    double height = 0.20;
    double standoff_min = 0.01;
    double standoff_max = 0.03;
    double grasp_height_min = 0.05;
    double grasp_height_max = 0.15;
    double spread = std::numbers::pi / 6.0;
    double radial_tolerance = 0.01;
    double angular_tolerance = 10.0 * std::numbers::pi / 180.0;
    double spread_tolerance = 5.0 * std::numbers::pi / 180.0;
    double clearance = 0.02;
    std::vector<StablePose> poses;

    /// Upright (table z = 0) and lying on its side (table x = -radius).
    static SyntheticGraspTask default_task();
    void validate() const;

    /// Index of the pose whose plane matches within `tol`, or -1.
    int find_pose(const TabletopPlane& plane, double tol = 1e-6) const;
};

/// Grasp on the manifold: approach angle `phi`, gap `standoff` between the
/// palm frame and the surface, height `grasp_height` along the axis. The
/// gripper z-axis points at the cylinder axis and its x-axis along it.
GraspConfiguration manifold_grasp(const SyntheticGraspTask& task, double phi, double standoff, double grasp_height);

/// Uniform samples on each pose's part of the manifold; `per_pose_counts[i]`
/// records for pose i, labelled with grasp_type = i. Every record passes
/// `oracle_success`.
std::vector<GraspRecord> generate_primitive_records(const SyntheticGraspTask& task,
                                                    std::span<const std::size_t> per_pose_counts,
                                                    std::mt19937_64& rng);
std::vector<GraspRecord> generate_primitive_records(const SyntheticGraspTask& task, std::size_t per_pose_count,
                                                    std::mt19937_64& rng);
GraspDataset generate_primitives(const SyntheticGraspTask& task, std::size_t per_pose_count, std::mt19937_64& rng);

enum class OracleFailure { none, radial, height, angular, spread, table_collision };
std::string_view to_string(OracleFailure f);

struct OracleVerdict {
    bool success = false;
    OracleFailure reason = OracleFailure::none;
};

/// Checks the clauses in order radial, height, angular, spread, table
/// clearance and reports the first one violated. Throws UsageError when the
/// record's plane is not one of the task's stable poses.
OracleVerdict oracle_success(const SyntheticGraspTask& task, const GraspRecord& record);

nlohmann::ordered_json task_to_json(const SyntheticGraspTask& task);
/// Missing keys keep their default values; missing "poses" keeps the default poses.
SyntheticGraspTask task_from_json(const nlohmann::json& j);
SyntheticGraspTask load_task(const std::filesystem::path& path);

}  // namespace graspvae
