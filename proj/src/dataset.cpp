#include "graspvae/dataset.hpp"

#include "graspvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace graspvae {
namespace {

constexpr const char* kPositionNames[3] = {"position.x", "position.y", "position.z"};

double scale01(double v, double lo, double hi) { return (v - lo) / (hi - lo); }
double unscale01(double v, double lo, double hi) { return lo + v * (hi - lo); }

template <std::size_t N>
Eigen::Matrix<double, N, 1> fixed_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != N)
        throw FormatError(std::string("key '") + key + "' must be an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (std::size_t i = 0; i < N; ++i) {
        if (!arr[i].is_number()) throw FormatError(std::string("key '") + key + "' holds a non-number");
        out[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return out;
}

}  // namespace

NormalizationStats NormalizationStats::from_records(std::span<const GraspRecord> records) {
    if (records.empty()) throw DegenerateDatasetError("dataset has no records", "all");
    NormalizationStats s;
    s.position_min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    s.position_max = -s.position_min;
    for (const auto& r : records) {
        s.position_min = s.position_min.cwiseMin(r.grasp.position);
        s.position_max = s.position_max.cwiseMax(r.grasp.position);
    }
    s.validate();
    return s;
}

void NormalizationStats::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (!(position_max[i] > position_min[i]))
            throw DegenerateDatasetError(std::string("no spread of values along ") + kPositionNames[i],
                                         kPositionNames[i]);
    }
    if (!(spread_max > spread_min)) throw DegenerateDatasetError("no spread of values along spread", "spread");
}

double NormalizationStats::plane_offset_scale(const Eigen::Vector3d& normal) const {
    Eigen::Index axis = 0;
    normal.cwiseAbs().maxCoeff(&axis);
    return position_max[axis] - position_min[axis];
}

GraspDataset GraspDataset::from_records(std::vector<GraspRecord> records) {
    GraspDataset d;
    d.stats = NormalizationStats::from_records(records);
    d.records = std::move(records);
    return d;
}

Vector8d normalize_grasp(const GraspConfiguration& grasp, const NormalizationStats& stats) {
    stats.validate();
    const Eigen::Quaterniond q = canonicalize(grasp.orientation);
    Vector8d v;
    for (int i = 0; i < 3; ++i) v[i] = scale01(grasp.position[i], stats.position_min[i], stats.position_max[i]);
    v.segment<4>(3) << q.x(), q.y(), q.z(), q.w();
    v[7] = scale01(grasp.spread, stats.spread_min, stats.spread_max);
    return v;
}

Eigen::Vector4d normalize_plane(const TabletopPlane& plane, const NormalizationStats& stats) {
    stats.validate();
    Eigen::Vector4d v;
    v << plane.normal, plane.offset / stats.plane_offset_scale(plane.normal);
    return v;
}

NormalizedRecord normalize(const GraspRecord& record, const NormalizationStats& stats) {
    NormalizedRecord out;
    const Vector8d g = normalize_grasp(record.grasp, stats);
    out.values << g, normalize_plane(record.plane, stats);
    for (int i : {0, 1, 2, 7}) {
        if (g[i] < 0.0 || g[i] > 1.0) out.out_of_range = true;
    }
    return out;
}

DenormalizedGrasp denormalize(const Vector8d& values, const NormalizationStats& stats) {
    stats.validate();
    const Eigen::Vector4d qv = values.segment<4>(3);
    const double qn = qv.norm();
    if (!(qn > 1e-9)) throw DegenerateOrientationError("decoded quaternion slice has near-zero norm");
    DenormalizedGrasp out;
    auto& g = out.grasp;
    for (int i = 0; i < 3; ++i) g.position[i] = unscale01(values[i], stats.position_min[i], stats.position_max[i]);
    g.orientation = canonicalize(Eigen::Quaterniond(qv[3] / qn, qv[0] / qn, qv[1] / qn, qv[2] / qn));
    const double spread = unscale01(values[7], stats.spread_min, stats.spread_max);
    g.spread = std::clamp(spread, 0.0, kMaxSpread);
    out.spread_clamped = g.spread != spread;
    return out;
}

nlohmann::ordered_json record_to_json(const GraspRecord& record) {
    const auto& g = record.grasp;
    nlohmann::ordered_json j;
    j["position"] = {g.position.x(), g.position.y(), g.position.z()};
    j["quaternion"] = {g.orientation.x(), g.orientation.y(), g.orientation.z(), g.orientation.w()};
    j["spread"] = g.spread;
    const Eigen::Vector4d p = record.plane.coefficients();
    j["plane"] = {p[0], p[1], p[2], p[3]};
    if (record.grasp_type) j["grasp_type"] = *record.grasp_type;
    return j;
}

GraspRecord record_from_json(const nlohmann::json& j, double quaternion_tolerance) {
    if (!j.is_object()) throw FormatError("record is not a JSON object");
    const Eigen::Vector3d pos = fixed_array<3>(j, "position");
    const Eigen::Vector4d q = fixed_array<4>(j, "quaternion");
    if (!j.contains("spread") || !j.at("spread").is_number()) throw FormatError("missing numeric key 'spread'");
    const Eigen::Vector4d plane = fixed_array<4>(j, "plane");

    GraspRecord r;
    r.grasp = GraspConfiguration::make(pos, Eigen::Quaterniond(q[3], q[0], q[1], q[2]), j.at("spread").get<double>(),
                                       quaternion_tolerance);
    r.plane = TabletopPlane::make(plane);
    if (j.contains("grasp_type") && !j.at("grasp_type").is_null()) {
        if (!j.at("grasp_type").is_number_integer()) throw FormatError("grasp_type must be an integer");
        r.grasp_type = j.at("grasp_type").get<int>();
    }
    return r;
}

GraspDataset read_dataset(std::istream& in) {
    std::vector<GraspRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            records.push_back(record_from_json(j));
        } catch (const FormatError& e) {
            throw FormatError(e.what(), line_no);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return GraspDataset::from_records(std::move(records));
}

GraspDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open dataset file " + path.string());
    return read_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const GraspRecord> records) {
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void save_dataset(const std::filesystem::path& path, std::span<const GraspRecord> records) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write dataset file " + path.string());
    write_dataset(out, records);
}

void write_csv(std::ostream& out, std::span<const GraspRecord> records) {
    out << "x,y,z,qx,qy,qz,qw,spread,a,b,c,d,grasp_type\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (const auto& r : records) {
        row.str("");
        const Vector8d g = r.grasp.as_vector();
        const Eigen::Vector4d p = r.plane.coefficients();
        for (int i = 0; i < 8; ++i) row << g[i] << ',';
        for (int i = 0; i < 4; ++i) row << p[i] << ',';
        if (r.grasp_type) row << *r.grasp_type;
        out << row.str() << '\n';
    }
}

nlohmann::ordered_json stats_to_json(const NormalizationStats& s) {
    nlohmann::ordered_json j;
    j["position_min"] = {s.position_min.x(), s.position_min.y(), s.position_min.z()};
    j["position_max"] = {s.position_max.x(), s.position_max.y(), s.position_max.z()};
    j["spread_min"] = s.spread_min;
    j["spread_max"] = s.spread_max;
    return j;
}

NormalizationStats stats_from_json(const nlohmann::json& j) {
    NormalizationStats s;
    s.position_min = fixed_array<3>(j, "position_min");
    s.position_max = fixed_array<3>(j, "position_max");
    s.spread_min = j.at("spread_min").get<double>();
    s.spread_max = j.at("spread_max").get<double>();
    s.validate();
    return s;
}

}  // namespace graspvae
