#include "graspvae/task.hpp"

#include "graspvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace graspvae {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool is_discrete_spread(double s) {
    for (double v : {0.0, std::numbers::pi / 6.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0})
        if (std::abs(s - v) <= 1e-9) return true;
    return false;
}

}  // namespace

SyntheticGraspTask SyntheticGraspTask::default_task() {
    SyntheticGraspTask t;
    t.poses.push_back({"upright", TabletopPlane::make(0.0, 0.0, 1.0, 0.0), -160.0 * kDeg, -20.0 * kDeg});
    t.poses.push_back({"lying", TabletopPlane::make(1.0, 0.0, 0.0, t.radius), -70.0 * kDeg, 70.0 * kDeg});
    return t;
}

void SyntheticGraspTask::validate() const {
    if (!(radius > 0.0) || !(height > 0.0)) throw ValidationError("cylinder radius and height must be positive");
    if (!(standoff_min >= 0.0) || !(standoff_max > standoff_min)) throw ValidationError("standoff range is empty");
    if (!(grasp_height_max > grasp_height_min)) throw ValidationError("graspable height range is empty");
    if (!is_discrete_spread(spread)) throw ValidationError("spread must be one of 0, pi/6, pi/4, pi/2");
    if (!(radial_tolerance > 0.0) || !(angular_tolerance > 0.0) || !(spread_tolerance > 0.0) || !(clearance > 0.0))
        throw ValidationError("tolerances must be positive");
    if (poses.empty()) throw ValidationError("task needs at least one stable pose");
    for (const auto& p : poses)
        if (!(p.sector_max > p.sector_min)) throw ValidationError("approach sector of pose '" + p.name + "' is empty");
}

int SyntheticGraspTask::find_pose(const TabletopPlane& plane, double tol) const {
    for (std::size_t i = 0; i < poses.size(); ++i)
        if (poses[i].plane.approx_equal(plane, tol)) return static_cast<int>(i);
    return -1;
}

GraspConfiguration manifold_grasp(const SyntheticGraspTask& task, double phi, double standoff, double grasp_height) {
    const Eigen::Vector3d radial(std::cos(phi), std::sin(phi), 0.0);
    Eigen::Matrix3d frame;
    frame.col(0) = Eigen::Vector3d::UnitZ();
    frame.col(2) = -radial;
    frame.col(1) = frame.col(2).cross(frame.col(0));
    const Eigen::Vector3d position = (task.radius + standoff) * radial + grasp_height * Eigen::Vector3d::UnitZ();
    return GraspConfiguration::make(position, Eigen::Quaterniond(frame), task.spread);
}

std::vector<GraspRecord> generate_primitive_records(const SyntheticGraspTask& task,
                                                    std::span<const std::size_t> per_pose_counts,
                                                    std::mt19937_64& rng) {
    task.validate();
    if (per_pose_counts.size() != task.poses.size())
        throw UsageError("need one primitive count per stable pose");
    std::vector<GraspRecord> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t p = 0; p < task.poses.size(); ++p) {
        const auto& pose = task.poses[p];
        for (std::size_t k = 0; k < per_pose_counts[p]; ++k) {
            // Rejection keeps only clearance-feasible manifold points.
            for (int attempt = 0;; ++attempt) {
                if (attempt == 10000)
                    throw ValidationError("approach sector of pose '" + pose.name + "' has no feasible grasps");
                const double phi = pose.sector_min + unit(rng) * (pose.sector_max - pose.sector_min);
                const double s = task.standoff_min + unit(rng) * (task.standoff_max - task.standoff_min);
                const double z = task.grasp_height_min + unit(rng) * (task.grasp_height_max - task.grasp_height_min);
                GraspRecord r{manifold_grasp(task, phi, s, z), pose.plane, static_cast<int>(p)};
                if (oracle_success(task, r).success) {
                    out.push_back(std::move(r));
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<GraspRecord> generate_primitive_records(const SyntheticGraspTask& task, std::size_t per_pose_count,
                                                    std::mt19937_64& rng) {
    const std::vector<std::size_t> counts(task.poses.size(), per_pose_count);
    return generate_primitive_records(task, counts, rng);
}

GraspDataset generate_primitives(const SyntheticGraspTask& task, std::size_t per_pose_count, std::mt19937_64& rng) {
    return GraspDataset::from_records(generate_primitive_records(task, per_pose_count, rng));
}

std::string_view to_string(OracleFailure f) {
    switch (f) {
        case OracleFailure::none: return "none";
        case OracleFailure::radial: return "radial";
        case OracleFailure::height: return "height";
        case OracleFailure::angular: return "angular";
        case OracleFailure::spread: return "spread";
        case OracleFailure::table_collision: return "table-collision";
    }
    return "unknown";
}

OracleVerdict oracle_success(const SyntheticGraspTask& task, const GraspRecord& record) {
    if (task.find_pose(record.plane) < 0) throw UsageError("record plane is not a stable pose of the task");
    const auto& g = record.grasp;
    const auto fail = [](OracleFailure f) { return OracleVerdict{false, f}; };

    const double rho = std::hypot(g.position.x(), g.position.y());
    const double band_lo = task.radius + task.standoff_min;
    const double band_hi = task.radius + task.standoff_max;
    if (std::max({0.0, band_lo - rho, rho - band_hi}) > task.radial_tolerance) return fail(OracleFailure::radial);

    const double z = g.position.z();
    if (z < task.grasp_height_min - task.radial_tolerance || z > task.grasp_height_max + task.radial_tolerance)
        return fail(OracleFailure::height);

    const Eigen::Vector3d inward = -Eigen::Vector3d(g.position.x(), g.position.y(), 0.0) / rho;
    const double cos_dev = std::clamp(g.approach().dot(inward), -1.0, 1.0);
    if (std::acos(cos_dev) > task.angular_tolerance) return fail(OracleFailure::angular);

    if (std::abs(g.spread - task.spread) > task.spread_tolerance) return fail(OracleFailure::spread);

    if (record.plane.signed_distance(g.position) < task.clearance) return fail(OracleFailure::table_collision);
    return {true, OracleFailure::none};
}

nlohmann::ordered_json task_to_json(const SyntheticGraspTask& t) {
    nlohmann::ordered_json j;
    j["radius"] = t.radius;
    j["height"] = t.height;
    j["standoff"] = {t.standoff_min, t.standoff_max};
    j["grasp_height"] = {t.grasp_height_min, t.grasp_height_max};
    j["spread"] = t.spread;
    j["radial_tol"] = t.radial_tolerance;
    j["angular_tol_deg"] = t.angular_tolerance / kDeg;
    j["spread_tol_deg"] = t.spread_tolerance / kDeg;
    j["clearance"] = t.clearance;
    auto poses = nlohmann::ordered_json::array();
    for (const auto& p : t.poses) {
        nlohmann::ordered_json jp;
        jp["name"] = p.name;
        const Eigen::Vector4d c = p.plane.coefficients();
        jp["plane"] = {c[0], c[1], c[2], c[3]};
        jp["approach_sector_deg"] = {p.sector_min / kDeg, p.sector_max / kDeg};
        poses.push_back(std::move(jp));
    }
    j["poses"] = std::move(poses);
    return j;
}

SyntheticGraspTask task_from_json(const nlohmann::json& j) {
    SyntheticGraspTask t = SyntheticGraspTask::default_task();
    try {
        auto range = [&](const char* key, double& lo, double& hi) {
            if (!j.contains(key)) return;
            const auto v = j.at(key).get<std::vector<double>>();
            if (v.size() != 2) throw FormatError(std::string("'") + key + "' must be [min, max]");
            lo = v[0];
            hi = v[1];
        };
        auto scalar = [&](const char* key, double& out, double scale = 1.0) {
            if (j.contains(key)) out = j.at(key).get<double>() * scale;
        };
        scalar("radius", t.radius);
        scalar("height", t.height);
        range("standoff", t.standoff_min, t.standoff_max);
        range("grasp_height", t.grasp_height_min, t.grasp_height_max);
        scalar("spread", t.spread);
        scalar("radial_tol", t.radial_tolerance);
        scalar("angular_tol_deg", t.angular_tolerance, kDeg);
        scalar("spread_tol_deg", t.spread_tolerance, kDeg);
        scalar("clearance", t.clearance);
        if (j.contains("poses")) {
            t.poses.clear();
            for (const auto& jp : j.at("poses")) {
                StablePose p;
                p.name = jp.value("name", "pose" + std::to_string(t.poses.size()));
                const auto c = jp.at("plane").get<std::vector<double>>();
                if (c.size() != 4) throw FormatError("pose plane must have 4 coefficients");
                p.plane = TabletopPlane::make(c[0], c[1], c[2], c[3]);
                const auto s = jp.at("approach_sector_deg").get<std::vector<double>>();
                if (s.size() != 2) throw FormatError("approach_sector_deg must be [min, max]");
                p.sector_min = s[0] * kDeg;
                p.sector_max = s[1] * kDeg;
                t.poses.push_back(std::move(p));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed task definition: ") + e.what());
    }
    t.validate();
    return t;
}

SyntheticGraspTask load_task(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open task file " + path.string());
    try {
        return task_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid task JSON: ") + e.what());
    }
}

}  // namespace graspvae
