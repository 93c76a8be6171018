#pragma once

#include "graspvae/grasp.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace graspvae {

/// Min/max statistics for the min-max scaled dimensions. Position bounds come
/// from the data; the spread range is the gripper's physical range [0, pi/2].
/// Quaternion and plane normal components are not scaled.
struct NormalizationStats {
    Eigen::Vector3d position_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d position_max = Eigen::Vector3d::Ones();
    double spread_min = 0.0;
    double spread_max = kMaxSpread;

    static NormalizationStats from_records(std::span<const GraspRecord> records);

    /// Throws DegenerateDatasetError naming the first dimension with max <= min.
    void validate() const;

    /// Divisor applied to the plane offset d: position extent along the axis
    /// where the plane normal has its largest component.
    double plane_offset_scale(const Eigen::Vector3d& normal) const;

    bool operator==(const NormalizationStats&) const = default;
};

struct GraspDataset {
    std::vector<GraspRecord> records;
    NormalizationStats stats;

    static GraspDataset from_records(std::vector<GraspRecord> records);
    std::size_t size() const { return records.size(); }
};

struct NormalizedRecord {
    /// x, y, z, qx, qy, qz, qw, spread, a, b, c, d
    Vector12d values;
    /// A position or spread coordinate fell outside [0, 1].
    bool out_of_range = false;
};

struct DenormalizedGrasp {
    GraspConfiguration grasp;
    bool spread_clamped = false;
};

NormalizedRecord normalize(const GraspRecord& record, const NormalizationStats& stats);
Eigen::Vector4d normalize_plane(const TabletopPlane& plane, const NormalizationStats& stats);
Vector8d normalize_grasp(const GraspConfiguration& grasp, const NormalizationStats& stats);

/// Inverse of the grasp part of `normalize`. The quaternion slice is
/// renormalized; a slice with norm <= 1e-9 throws DegenerateOrientationError.
DenormalizedGrasp denormalize(const Vector8d& values, const NormalizationStats& stats);

// Dataset files: JSON Lines with keys position, quaternion, spread, plane and
// optional grasp_type.
nlohmann::ordered_json record_to_json(const GraspRecord& record);
GraspRecord record_from_json(const nlohmann::json& j, double quaternion_tolerance = 1e-6);

GraspDataset load_dataset(const std::filesystem::path& path);
GraspDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, std::span<const GraspRecord> records);
void write_dataset(std::ostream& out, std::span<const GraspRecord> records);

/// 13 columns: x,y,z,qx,qy,qz,qw,spread,a,b,c,d,grasp_type
void write_csv(std::ostream& out, std::span<const GraspRecord> records);

nlohmann::ordered_json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& j);

}  // namespace graspvae
