#include "graspvae/dataset.hpp"
#include "graspvae/errors.hpp"
#include "graspvae/task.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace graspvae;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
    std::filesystem::create_directories(GRASPVAE_TEST_TMP);
    return std::filesystem::path(GRASPVAE_TEST_TMP) / name;
}

Eigen::Quaterniond random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
}

std::vector<GraspRecord> sample_records(std::size_t per_pose, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return generate_primitive_records(SyntheticGraspTask::default_task(), per_pose, rng);
}

}  // namespace

TEST_CASE("canonicalize is idempotent and keeps the rotation") {
    std::mt19937_64 rng(3);
    std::vector<Eigen::Quaterniond> probes;
    for (int i = 0; i < 200; ++i) probes.push_back(random_quaternion(rng));
    // qw == 0 and leading-zero edge cases
    probes.emplace_back(0.0, 0.0, -1.0, 0.0);
    probes.emplace_back(0.0, 0.0, 0.0, -1.0);
    probes.emplace_back(0.0, -0.6, 0.8, 0.0);

    for (const auto& q : probes) {
        const auto c = canonicalize(q);
        const auto neg = canonicalize(Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z()));
        CHECK(c.w() >= 0.0);
        CHECK((canonicalize(c).coeffs() - c.coeffs()).norm() == 0.0);
        CHECK((neg.coeffs() - c.coeffs()).norm() < 1e-15);
        CHECK((c.toRotationMatrix() - q.toRotationMatrix()).norm() < 1e-12);
    }
    const auto c = canonicalize(Eigen::Quaterniond(0.0, 0.0, -0.6, 0.8));
    CHECK(c.y() == doctest::Approx(0.6));
}

TEST_CASE("grasp configuration validation") {
    const Eigen::Vector3d p(0.1, 0.2, 0.3);
    CHECK_THROWS_AS(GraspConfiguration::make(p, Eigen::Quaterniond(2.0, 0.0, 0.0, 0.0), 0.1), ValidationError);
    CHECK_THROWS_AS(GraspConfiguration::make(p, Eigen::Quaterniond::Identity(), -0.1), ValidationError);
    CHECK_THROWS_AS(GraspConfiguration::make(p, Eigen::Quaterniond::Identity(), 1.6), ValidationError);
    const auto g = GraspConfiguration::make(p, Eigen::Quaterniond(-1.0, 0.0, 0.0, 0.0), kMaxSpread);
    CHECK(g.orientation.w() == 1.0);
    CHECK(std::abs(g.orientation.norm() - 1.0) < 1e-9);
}

TEST_CASE("tabletop plane is stored with a unit normal") {
    const auto p = TabletopPlane::make(0.0, 0.0, 2.0, -0.4);
    CHECK(p.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.offset == doctest::Approx(-0.2));
    CHECK(p.signed_distance(Eigen::Vector3d(0, 0, 0.5)) == doctest::Approx(0.3));
    CHECK_THROWS_AS(TabletopPlane::make(0, 0, 0, 1), ValidationError);
}

TEST_CASE("normalize maps the affine endpoints and midpoint") {
    NormalizationStats stats;
    stats.position_min = {-0.1, 0.0, 0.2};
    stats.position_max = {0.1, 0.4, 0.6};
    GraspRecord r{GraspConfiguration::make({-0.1, 0.4, 0.4}, Eigen::Quaterniond::Identity(), std::numbers::pi / 4),
                  TabletopPlane::make(0, 0, 1, -0.2), std::nullopt};
    const auto n = normalize(r, stats);
    CHECK(n.values[0] == 0.0);
    CHECK(n.values[1] == doctest::Approx(1.0));
    CHECK(n.values[2] == doctest::Approx(0.5));
    CHECK(n.values[7] == doctest::Approx(0.5));
    CHECK((n.values.segment<4>(3) == Eigen::Vector4d(0, 0, 0, 1)));
    // d scaled by the z extent (normal is along z)
    CHECK(n.values[11] == doctest::Approx(-0.2 / 0.4));
    CHECK_FALSE(n.out_of_range);

    r.grasp.position.x() = 0.3;
    CHECK(normalize(r, stats).out_of_range);

    NormalizationStats bad = stats;
    bad.position_max.y() = bad.position_min.y();
    CHECK_THROWS_AS(normalize(r, bad), DegenerateDatasetError);
}

TEST_CASE("denormalize") {
    NormalizationStats stats;
    stats.position_min = {0.0, -1.0, 2.0};
    stats.position_max = {1.0, 1.0, 4.0};

    Vector8d v = Vector8d::Constant(0.5);
    v.segment<4>(3) = Eigen::Vector4d(0, 0, 0, 1);
    const auto d = denormalize(v, stats);
    CHECK(d.grasp.position.isApprox(Eigen::Vector3d(0.5, 0.0, 3.0)));
    CHECK(d.grasp.spread == doctest::Approx(std::numbers::pi / 4));
    CHECK((d.grasp.orientation.coeffs() == Eigen::Quaterniond::Identity().coeffs()));
    CHECK_FALSE(d.spread_clamped);

    v[7] = 1.3;
    const auto clamped = denormalize(v, stats);
    CHECK(clamped.spread_clamped);
    CHECK(clamped.grasp.spread == kMaxSpread);

    v.segment<4>(3) = Eigen::Vector4d(0, 0, 0, 1e-15);
    CHECK_THROWS_AS(denormalize(v, stats), DegenerateOrientationError);

    v.segment<4>(3) = Eigen::Vector4d(0, 0, 0, -3.0);
    v[7] = 0.5;
    CHECK(denormalize(v, stats).grasp.orientation.w() == doctest::Approx(1.0));
}

TEST_CASE("normalize then denormalize reproduces every dataset record") {
    const auto data = GraspDataset::from_records(sample_records(60, 11));
    for (const auto& r : data.records) {
        const auto back = denormalize(normalize(r, data.stats).values.head<8>(), data.stats);
        CHECK((back.grasp.position - r.grasp.position).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(back.grasp.spread - r.grasp.spread) < 1e-12);
        CHECK((back.grasp.orientation.coeffs() - canonicalize(r.grasp.orientation).coeffs()).cwiseAbs().maxCoeff() <
              1e-9);
    }
}

TEST_CASE("normalization stats ignore record order and are a fixed point") {
    auto records = sample_records(40, 5);
    const auto stats = NormalizationStats::from_records(records);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(records.begin(), records.end(), rng);
        CHECK(NormalizationStats::from_records(records) == stats);
    }
    const auto data = GraspDataset::from_records(records);
    CHECK(NormalizationStats::from_records(data.records) == data.stats);
}

TEST_CASE("dataset files") {
    SUBCASE("145 records round-trip in order") {
        std::mt19937_64 rng(1);
        const std::vector<std::size_t> counts = {145, 0};
        const auto records = generate_primitive_records(SyntheticGraspTask::default_task(), counts, rng);
        const auto path = tmp_path("pipe_scale.jsonl");
        save_dataset(path, records);
        const auto loaded = load_dataset(path);
        REQUIRE(loaded.size() == 145);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK((loaded.records[i].grasp.position == records[i].grasp.position));
            CHECK((loaded.records[i].grasp.orientation.coeffs() == records[i].grasp.orientation.coeffs()));
            CHECK(loaded.records[i].grasp_type == records[i].grasp_type);
        }
    }
    SUBCASE("empty file is degenerate") {
        std::istringstream in("");
        CHECK_THROWS_AS(read_dataset(in), DegenerateDatasetError);
    }
    SUBCASE("non-unit quaternion is rejected") {
        std::istringstream in(R"({"position":[0,0,0],"quaternion":[0,0,0,2],"spread":0.1,"plane":[0,0,1,0]})");
        CHECK_THROWS_AS(read_dataset(in), ValidationError);
    }
    SUBCASE("quaternion within 1e-6 of unit is accepted and renormalized") {
        std::istringstream in(
            "{\"position\":[0,0,0],\"quaternion\":[0,0,0,1.0000005],\"spread\":0.1,\"plane\":[0,0,1,0]}\n"
            "{\"position\":[1,1,1],\"quaternion\":[0,0,0,1],\"spread\":0.1,\"plane\":[0,0,1,0]}\n");
        const auto d = read_dataset(in);
        CHECK(d.records[0].grasp.orientation.w() == 1.0);
    }
    SUBCASE("parse errors carry the line number") {
        std::istringstream in("{\"position\":[0,0,0],\"quaternion\":[0,0,0,1],\"spread\":0.1,\"plane\":[0,0,1,0]}\n"
                              "\n"
                              "{\"position\":[0,0],\"quaternion\":[0,0,0,1],\"spread\":0.1,\"plane\":[0,0,1,0]}\n");
        try {
            read_dataset(in);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(e.line() == 3);
        }
        std::istringstream garbage("not json\n");
        CHECK_THROWS_AS(read_dataset(garbage), FormatError);
    }
    SUBCASE("degenerate dimension is named") {
        std::istringstream in("{\"position\":[0,0,0],\"quaternion\":[0,0,0,1],\"spread\":0.1,\"plane\":[0,0,1,0]}\n"
                              "{\"position\":[0,1,1],\"quaternion\":[0,0,0,1],\"spread\":0.1,\"plane\":[0,0,1,0]}\n");
        try {
            read_dataset(in);
            FAIL("expected a degenerate dataset");
        } catch (const DegenerateDatasetError& e) {
            CHECK(e.dimension() == "position.x");
        }
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset(tmp_path("nope.jsonl")), UsageError); }
}

TEST_CASE("csv export has a fixed 13-column header") {
    const auto records = sample_records(3, 2);
    std::ostringstream out;
    write_csv(out, records);
    std::istringstream in(out.str());
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "x,y,z,qx,qy,qz,qw,spread,a,b,c,d,grasp_type");
    std::getline(in, row);
    CHECK(std::count(row.begin(), row.end(), ',') == 12);
}
