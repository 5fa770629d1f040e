#include "roomfuse/measurements.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "test_support.hpp"

using namespace roomfuse;
using roomfuse::testing::random_plane;
using roomfuse::testing::random_pose;
using roomfuse::testing::TempDir;

namespace {

Intrinsics test_camera() {
    Intrinsics K;
    K.fx = 200.0;
    K.fy = 200.0;
    K.cx = 160.0;
    K.cy = 120.0;
    K.width = 320;
    K.height = 240;
    return K;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// A camera-frame plane a box on the image actually hits in front of the lens.
Plane facing_plane(double depth = 4.0) {
    return canonicalize(Vec4(0, 0, 1, -depth));
}

Measurement simple_measurement(int frame, PlaneClass klass = PlaneClass::Wall) {
    Measurement m;
    m.frame_id = frame;
    m.klass = klass;
    m.score = 0.9;
    m.bbox = BBox{40, 30, 280, 210};
    m.plane_cam = facing_plane();
    return m;
}

} // namespace

TEST(PlaneClassNames, RoundTrip) {
    EXPECT_STREQ(to_string(PlaneClass::Wall), "wall");
    EXPECT_STREQ(to_string(PlaneClass::FloorCeiling), "floor_ceiling");
    EXPECT_EQ(plane_class_from_string("wall"), PlaneClass::Wall);
    EXPECT_EQ(plane_class_from_string("floor_ceiling"), PlaneClass::FloorCeiling);
    EXPECT_THROW(plane_class_from_string("door"), std::invalid_argument);
}

TEST(LoadSequence, EmptyMeasurementFileGivesEmptyBundle) {
    TempDir dir;
    write_file(dir / "m.jsonl", "");
    write_file(dir / "p.traj", "# comment only\n1 0 0 0 0 0 0 1\n");
    const SequenceBundle b = load_sequence(dir / "m.jsonl", dir / "p.traj", test_camera());
    EXPECT_TRUE(b.measurements.empty());
    EXPECT_EQ(b.poses.size(), 1u);
}

TEST(LoadSequence, MissingPoseIsFatal) {
    TempDir dir;
    write_file(dir / "m.jsonl",
               R"({"frame": 7, "class": "wall", "score": 0.5, "bbox": [0,0,10,10], "plane": [0,0,1,-2]})"
               "\n");
    write_file(dir / "p.traj", "1 0 0 0 0 0 0 1\n");
    try {
        load_sequence(dir / "m.jsonl", dir / "p.traj", test_camera());
        FAIL() << "expected MissingPose";
    } catch (const MissingPose& e) {
        EXPECT_EQ(e.frame_id, 7);
    }
}

TEST(LoadSequence, ParseErrorsCarryLineNumbers) {
    TempDir dir;
    write_file(dir / "p.traj", "1 0 0 0 0 0 0 1\n");
    const auto K = test_camera();

    write_file(dir / "bad.jsonl",
               R"({"frame": 1, "class": "wall", "score": 0.5, "bbox": [0,0,10,10], "plane": [0,0,1,-2]})"
               "\n{ not json\n");
    try {
        load_sequence(dir / "bad.jsonl", dir / "p.traj", K);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2);
    }

    write_file(dir / "extra.jsonl",
               R"({"frame": 1, "class": "wall", "score": 0.5, "bbox": [0,0,10,10], "plane": [0,0,1,-2], "color": 3})"
               "\n");
    EXPECT_THROW(load_sequence(dir / "extra.jsonl", dir / "p.traj", K), ParseError);

    write_file(dir / "score.jsonl",
               R"({"frame": 1, "class": "wall", "score": 1.5, "bbox": [0,0,10,10], "plane": [0,0,1,-2]})"
               "\n");
    EXPECT_THROW(load_sequence(dir / "score.jsonl", dir / "p.traj", K), InvariantViolation);

    write_file(dir / "bbox.jsonl",
               R"({"frame": 1, "class": "wall", "score": 0.5, "bbox": [10,0,0,10], "plane": [0,0,1,-2]})"
               "\n");
    EXPECT_THROW(load_sequence(dir / "bbox.jsonl", dir / "p.traj", K), InvariantViolation);

    write_file(dir / "oob.jsonl",
               R"({"frame": 1, "class": "wall", "score": 0.5, "bbox": [0,0,10,999], "plane": [0,0,1,-2]})"
               "\n");
    EXPECT_THROW(load_sequence(dir / "oob.jsonl", dir / "p.traj", K), InvariantViolation);
}

TEST(LoadPoses, RejectsBadTrajectoryLines) {
    TempDir dir;
    write_file(dir / "short.traj", "1 0 0 0\n");
    EXPECT_THROW(load_poses(dir / "short.traj"), ParseError);

    write_file(dir / "dup.traj", "1 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n");
    EXPECT_THROW(load_poses(dir / "dup.traj"), ParseError);

    write_file(dir / "nonunit.traj", "1 0 0 0 0.5 0.5 0.5 0.9\n");
    EXPECT_THROW(load_poses(dir / "nonunit.traj"), ParseError);

    write_file(dir / "frame0.traj", "0 0 0 0 0 0 0 1\n");
    EXPECT_THROW(load_poses(dir / "frame0.traj"), ParseError);

    write_file(dir / "locale.traj", "2 1,5 0 0 0 0 0 1\n");
    EXPECT_THROW(load_poses(dir / "locale.traj"), ParseError);
}

TEST(SaveLoadSequence, RoundTripIsBitExact) {
    TempDir dir;
    std::mt19937 rng(97);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> px(0.0, 320.0), py(0.0, 240.0);
    const Intrinsics K = test_camera();

    SequenceBundle b;
    b.intrinsics = K;
    for (int f = 1; f <= 20; ++f)
        b.poses.emplace(f, random_pose(rng));
    for (int i = 0; i < 200; ++i) {
        Measurement m;
        m.frame_id = 1 + static_cast<int>(u01(rng) * 19.999);
        m.klass = u01(rng) < 0.5 ? PlaneClass::Wall : PlaneClass::FloorCeiling;
        m.score = u01(rng);
        double x0 = px(rng), x1 = px(rng), y0 = py(rng), y1 = py(rng);
        if (x0 > x1)
            std::swap(x0, x1);
        if (y0 > y1)
            std::swap(y0, y1);
        if (x1 - x0 < 1e-3 || y1 - y0 < 1e-3)
            continue;
        m.bbox = BBox{x0, y0, x1, y1};
        m.plane_cam = random_plane(rng);
        b.measurements.push_back(m);
    }
    ASSERT_GT(b.measurements.size(), 100u);

    save_sequence(b, dir / "m.jsonl", dir / "p.traj");
    const SequenceBundle r = load_sequence(dir / "m.jsonl", dir / "p.traj", K);

    ASSERT_EQ(r.measurements.size(), b.measurements.size());
    for (std::size_t i = 0; i < b.measurements.size(); ++i) {
        const Measurement& a = b.measurements[i];
        const Measurement& c = r.measurements[i];
        EXPECT_EQ(a.frame_id, c.frame_id);
        EXPECT_EQ(a.klass, c.klass);
        EXPECT_EQ(a.score, c.score);
        EXPECT_EQ(a.bbox.x0, c.bbox.x0);
        EXPECT_EQ(a.bbox.y0, c.bbox.y0);
        EXPECT_EQ(a.bbox.x1, c.bbox.x1);
        EXPECT_EQ(a.bbox.y1, c.bbox.y1);
        EXPECT_EQ(a.plane_cam.coeffs(), c.plane_cam.coeffs());
    }
    ASSERT_EQ(r.poses.size(), b.poses.size());
    for (const auto& [frame, pose] : b.poses) {
        const Pose& back = r.poses.at(frame);
        EXPECT_EQ(pose.translation(), back.translation());
        EXPECT_EQ(pose.quaternion().coeffs(), back.quaternion().coeffs());
    }

    // Saving the reloaded bundle reproduces the files byte for byte.
    save_sequence(r, dir / "m2.jsonl", dir / "p2.traj");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(dir / "m.jsonl"), slurp(dir / "m2.jsonl"));
    EXPECT_EQ(slurp(dir / "p.traj"), slurp(dir / "p2.traj"));
}

TEST(LiftToWorld, IdentityPoseKeepsPlane) {
    SequenceBundle b;
    b.intrinsics = test_camera();
    b.poses.emplace(1, Pose());
    b.measurements.push_back(simple_measurement(1));

    LiftReport report;
    const auto lifted = lift_to_world(b, &report);
    ASSERT_EQ(lifted.size(), 1u);
    EXPECT_EQ(report.lifted, 1);
    EXPECT_EQ(report.dropped(), 0);
    EXPECT_EQ(lifted[0].plane_world.coeffs(), b.measurements[0].plane_cam.coeffs());
    for (const Vec3& v : lifted[0].patch_world.lifted())
        EXPECT_NEAR(lifted[0].plane_world.signed_distance(v), 0.0, 1e-6);
}

TEST(LiftToWorld, TwoViewsOfOneWallAgree) {
    // A fixed world wall x = 3, observed from two different poses.
    const Plane wall_world = canonicalize(Vec4(1, 0, 0, -3));
    std::mt19937 rng(55);

    SequenceBundle b;
    b.intrinsics = test_camera();
    std::vector<Pose> cams;
    // Cameras near the origin looking roughly down +x so the wall is in view.
    for (int i = 0; i < 2; ++i) {
        const double yaw = (i == 0 ? 0.15 : -0.2);
        // camera z axis toward +x: columns right(-y ish), down(-z), forward(+x)
        Mat3 R;
        R.col(0) = Vec3(std::sin(yaw), -std::cos(yaw), 0); // right
        R.col(1) = Vec3(0, 0, -1);                         // down
        R.col(2) = Vec3(std::cos(yaw), std::sin(yaw), 0);  // forward
        cams.emplace_back(R, Vec3(0.2 * i, 0.1 * i, 1.0));
    }
    for (int i = 0; i < 2; ++i) {
        b.poses.emplace(i + 1, cams[i]);
        Measurement m = simple_measurement(i + 1);
        m.plane_cam = transform_plane(wall_world, cams[i].inverse());
        b.measurements.push_back(m);
    }

    const auto lifted = lift_to_world(b);
    ASSERT_EQ(lifted.size(), 2u);
    EXPECT_LT((lifted[0].plane_world.coeffs() - wall_world.coeffs()).norm(), 1e-9);
    EXPECT_LT((lifted[1].plane_world.coeffs() - wall_world.coeffs()).norm(), 1e-9);
    (void)rng;
}

TEST(LiftToWorld, HorizonCrossingBoxIsDroppedAndCounted) {
    const Intrinsics K = test_camera();
    SequenceBundle b;
    b.intrinsics = K;
    b.poses.emplace(1, Pose());

    // Plane whose normal is orthogonal to the ray through the box's top-left
    // corner: that corner's ray runs along the plane.
    Measurement m = simple_measurement(1);
    const Vec3 ray = K.ray(Vec2(m.bbox.x0, m.bbox.y0));
    const Vec3 n = ray.cross(Vec3::UnitX()).normalized();
    m.plane_cam = canonicalize(Vec4(n.x(), n.y(), n.z(), 1.0));
    b.measurements.push_back(m);
    b.measurements.push_back(simple_measurement(1)); // healthy one

    LiftReport report;
    const auto lifted = lift_to_world(b, &report);
    EXPECT_EQ(lifted.size(), 1u);
    EXPECT_EQ(report.lifted, 1);
    EXPECT_EQ(report.dropped_ray_parallel, 1);

    // Plane entirely behind the camera: every corner fails.
    SequenceBundle b2;
    b2.intrinsics = K;
    b2.poses.emplace(1, Pose());
    Measurement behind = simple_measurement(1);
    behind.plane_cam = canonicalize(Vec4(0, 0, 1, 4)); // z = -4
    b2.measurements.push_back(behind);
    LiftReport r2;
    EXPECT_TRUE(lift_to_world(b2, &r2).empty());
    EXPECT_EQ(r2.dropped_behind_camera, 1);
}

TEST(LiftToWorld, OutputOrderedByFrameThenInput) {
    SequenceBundle b;
    b.intrinsics = test_camera();
    for (int f = 1; f <= 3; ++f)
        b.poses.emplace(f, Pose());
    // Shuffled input frames with distinguishable scores.
    const int frames[] = {3, 1, 2, 1, 3};
    const double scores[] = {0.1, 0.2, 0.3, 0.4, 0.5};
    for (int i = 0; i < 5; ++i) {
        Measurement m = simple_measurement(frames[i]);
        m.score = scores[i];
        b.measurements.push_back(m);
    }
    const auto lifted = lift_to_world(b);
    ASSERT_EQ(lifted.size(), 5u);
    const double want_scores[] = {0.2, 0.4, 0.3, 0.1, 0.5};
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(lifted[i].source.score, want_scores[i]) << i;
    }
}

TEST(FilterGrazing, ThresholdBehaviour) {
    SequenceBundle b;
    b.intrinsics = test_camera();
    b.poses.emplace(1, Pose());

    auto with_normal_angle = [&](double deg) {
        const double th = deg * M_PI / 180.0;
        Measurement m = simple_measurement(1);
        // Normal at `deg` away from the optical axis. The box sits right of
        // the plane horizon for every tested tilt so lifting never drops it.
        m.bbox = BBox{200, 100, 280, 140};
        m.plane_cam = canonicalize(Vec4(std::sin(th), 0, std::cos(th), -3.0));
        return m;
    };

    b.measurements.push_back(with_normal_angle(0.0));  // fronto-parallel: kept
    b.measurements.push_back(with_normal_angle(59.0)); // kept
    b.measurements.push_back(with_normal_angle(60.0)); // boundary: kept
    b.measurements.push_back(with_normal_angle(61.0)); // dropped
    b.measurements.push_back(with_normal_angle(89.5)); // nearly perpendicular: dropped

    const auto lifted = lift_to_world(b);
    ASSERT_EQ(lifted.size(), 5u);
    const auto kept = filter_grazing(lifted, 30.0);
    ASSERT_EQ(kept.size(), 3u);
    EXPECT_NEAR(std::abs(kept[0].source.plane_cam.normal().z()), 1.0, 1e-12);

    // Idempotent and order-preserving.
    const auto again = filter_grazing(kept, 30.0);
    ASSERT_EQ(again.size(), kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
        EXPECT_EQ(again[i].source.plane_cam.coeffs(), kept[i].source.plane_cam.coeffs());

    EXPECT_THROW(filter_grazing(lifted, 0.0), ConfigError);
    EXPECT_THROW(filter_grazing(lifted, 95.0), ConfigError);
}
