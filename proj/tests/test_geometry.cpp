#include "roomfuse/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace roomfuse;
using roomfuse::testing::point_in_convex;
using roomfuse::testing::random_convex_polygon;
using roomfuse::testing::random_plane;
using roomfuse::testing::random_pose;
using roomfuse::testing::random_unit_vec;

TEST(Plane, CanonicalizeKnownValues) {
    // The plane z = 2 written as 2z - 4 = 0; the canonical representative
    // must carry a non-negative offset.
    const Plane p = canonicalize(Vec4(0, 0, 2, -4));
    EXPECT_NEAR(p.normal().x(), 0.0, 1e-15);
    EXPECT_NEAR(p.normal().y(), 0.0, 1e-15);
    EXPECT_NEAR(p.normal().z(), -1.0, 1e-15);
    EXPECT_NEAR(p.offset(), 2.0, 1e-15);
    EXPECT_TRUE(p.is_canonical());

    // Plane through the origin: sign fixed by the first nonzero component.
    const Plane q = canonicalize(Vec4(0, -3, 0, 0));
    EXPECT_NEAR(q.normal().y(), 1.0, 1e-15);
    EXPECT_EQ(q.offset(), 0.0);
    EXPECT_TRUE(q.is_canonical());
}

TEST(Plane, CanonicalizeIsExactlyIdempotent) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        Vec4 raw(u(rng), u(rng), u(rng), u(rng));
        if (raw.head<3>().norm() < 1e-6)
            continue;
        const Plane once = canonicalize(raw);
        const Plane twice = canonicalize(once.coeffs());
        EXPECT_EQ(once.coeffs(), twice.coeffs()) << "raw = " << raw.transpose();
    }
}

TEST(Plane, CanonicalizeIsScaleAndSignInvariant) {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    const double scales[] = {0.25, 3.0, 1e6, 1e-3};
    for (int i = 0; i < 200; ++i) {
        Vec4 raw(u(rng), u(rng), u(rng), u(rng));
        if (raw.head<3>().norm() < 1e-6)
            continue;
        const Plane base = canonicalize(raw);
        for (double s : scales) {
            EXPECT_LT((canonicalize(s * raw).coeffs() - base.coeffs()).norm(), 1e-9);
            EXPECT_LT((canonicalize(-s * raw).coeffs() - base.coeffs()).norm(), 1e-9);
        }
    }
}

TEST(Plane, CanonicalizeRejectsZeroNormal) {
    EXPECT_THROW(canonicalize(Vec4(0, 0, 0, 1)), DegeneratePlane);
    EXPECT_THROW(canonicalize(Vec4(1e-13, 0, 0, 1)), DegeneratePlane);
}

TEST(Plane, ConstructorRejectsNonUnitNormal) {
    EXPECT_THROW(Plane(Vec3(0, 0, 2), 1.0), InvariantViolation);
}

TEST(Plane, ProjectLandsOnPlane) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const Plane p = random_plane(rng);
        const Vec3 x(u(rng), u(rng), u(rng));
        const Vec3 y = p.project(x);
        EXPECT_NEAR(p.signed_distance(y), 0.0, 1e-12);
        // Residual vector is parallel to the normal.
        EXPECT_NEAR((x - y).cross(p.normal()).norm(), 0.0, 1e-12);
    }
}

TEST(Pose, RoundTripThroughInverse) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const Pose T = random_pose(rng);
        const Vec3 x(u(rng), u(rng), u(rng));
        EXPECT_LT((T.inverse().apply(T.apply(x)) - x).norm(), 1e-9);
        EXPECT_LT((T.apply(T.inverse().apply(x)) - x).norm(), 1e-9);
    }
}

TEST(Pose, CompositionMatchesSequentialApplication) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 300; ++i) {
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const Vec3 x(u(rng), u(rng), u(rng));
        EXPECT_LT(((a * b).apply(x) - a.apply(b.apply(x))).norm(), 1e-12);
    }
}

TEST(Pose, RejectsImproperRotation) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0; // reflection
    EXPECT_THROW(Pose(flip, Vec3::Zero()), InvariantViolation);

    Mat3 skew = Mat3::Identity();
    skew(0, 1) = 0.1;
    EXPECT_THROW(Pose(skew, Vec3::Zero()), InvariantViolation);
}

TEST(TransformPlane, PointsOnPlaneStayOnPlane) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 1000; ++i) {
        const Plane p_cam = random_plane(rng);
        const Pose T = random_pose(rng);
        const Plane p_world = transform_plane(p_cam, T);
        EXPECT_TRUE(p_world.is_canonical());

        const Frame f = make_frame(p_cam);
        const Vec3 x_cam = f.to_world(Vec2(u(rng), u(rng)));
        ASSERT_NEAR(p_cam.signed_distance(x_cam), 0.0, 1e-12);
        EXPECT_NEAR(p_world.signed_distance(T.apply(x_cam)), 0.0, 1e-9);
    }
}

TEST(TransformPlane, ComposesLikePoses) {
    std::mt19937 rng(17);
    for (int i = 0; i < 300; ++i) {
        const Plane p = random_plane(rng);
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const Plane direct = transform_plane(p, a * b);
        const Plane stepped = transform_plane(transform_plane(p, b), a);
        EXPECT_LT((direct.coeffs() - stepped.coeffs()).norm(), 1e-9);
    }
}

TEST(TransformPlane, IdentityPoseIsNoOp) {
    std::mt19937 rng(19);
    for (int i = 0; i < 100; ++i) {
        const Plane p = random_plane(rng);
        const Plane q = transform_plane(p, Pose());
        EXPECT_EQ(p.coeffs(), q.coeffs());
    }
}

namespace {

Intrinsics test_camera() {
    Intrinsics K;
    K.fx = 100.0;
    K.fy = 100.0;
    K.cx = 32.0;
    K.cy = 24.0;
    K.width = 64;
    K.height = 48;
    return K;
}

} // namespace

TEST(Backproject, PrincipalPointHitsPlaneHeadOn) {
    const Intrinsics K = test_camera();
    const Plane p = canonicalize(Vec4(0, 0, 1, -4)); // z = 4
    const Vec3 x = backproject_pixel(Vec2(K.cx, K.cy), K, p);
    EXPECT_LT((x - Vec3(0, 0, 4)).norm(), 1e-12);
}

TEST(Backproject, HitLiesOnRayAndPlane) {
    const Intrinsics K = test_camera();
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> px(0.0, K.width), py(0.0, K.height);
    std::uniform_real_distribution<double> depth(0.5, 10.0);
    int accepted = 0;
    for (int i = 0; i < 2000; ++i) {
        // Random plane, then keep only configurations that actually intersect
        // in front of the camera.
        Vec3 n = random_unit_vec(rng);
        const Plane p = canonicalize(Vec4(n.x(), n.y(), n.z(), depth(rng)));
        const Vec2 pix(px(rng), py(rng));
        const Vec3 ray = K.ray(pix);
        if (std::abs(p.normal().dot(ray)) < 1e-6)
            continue;
        if (-p.offset() / p.normal().dot(ray) <= 0) {
            EXPECT_THROW(backproject_pixel(pix, K, p), BehindCamera);
            continue;
        }
        const Vec3 x = backproject_pixel(pix, K, p);
        EXPECT_NEAR(p.signed_distance(x), 0.0, 1e-9);
        EXPECT_NEAR(x.cross(ray).norm(), 0.0, 1e-9); // collinear with the ray
        EXPECT_GT(x.z(), 0.0);
        ++accepted;
    }
    EXPECT_GT(accepted, 500);
}

TEST(Backproject, ParallelRayThrows) {
    const Intrinsics K = test_camera();
    const Vec2 pix(K.cx, K.cy); // ray (0, 0, 1)
    // Plane containing the ray direction: normal orthogonal to it.
    const Plane p = canonicalize(Vec4(1, 0, 0, 2));
    EXPECT_THROW(backproject_pixel(pix, K, p), RayParallel);
}

TEST(Backproject, PlaneBehindCameraThrows) {
    const Intrinsics K = test_camera();
    const Plane p = canonicalize(Vec4(0, 0, 1, 4)); // z = -4
    EXPECT_THROW(backproject_pixel(Vec2(K.cx, K.cy), K, p), BehindCamera);
}

TEST(BBoxToPatch, FullImageAreaMatchesClosedForm) {
    const Intrinsics K = test_camera();
    const Plane p = canonicalize(Vec4(0, 0, 1, -4)); // z = 4
    const BBox full{0, 0, double(K.width), double(K.height)};
    const PlanarPolygon patch = bbox_to_patch(full, K, p);
    ASSERT_EQ(patch.size(), 4u);
    // At depth 4 a pixel subtends 4/100 m; the image is 64 x 48 pixels.
    const double expect_w = K.width * 4.0 / K.fx;
    const double expect_h = K.height * 4.0 / K.fy;
    EXPECT_NEAR(patch.area(), expect_w * expect_h, 1e-9);
    for (const Vec3& v : patch.lifted())
        EXPECT_NEAR(p.signed_distance(v), 0.0, 1e-9);
}

TEST(BBoxToPatch, RejectsDegenerateInput) {
    const Intrinsics K = test_camera();
    const Plane p = canonicalize(Vec4(0, 0, 1, -4));
    EXPECT_THROW(bbox_to_patch(BBox{10, 10, 10, 20}, K, p), InvariantViolation);
    EXPECT_THROW(bbox_to_patch(BBox{10, 20, 10.0001, 20.0001}, K, p), DegeneratePatch);
}

TEST(IntersectPlanes, KnownCorner) {
    const Plane floor = canonicalize(Vec4(0, 0, 1, 0));
    const Plane wall = canonicalize(Vec4(1, 0, 0, -2)); // x = 2
    const Line3 line = intersect_planes(floor, wall);
    EXPECT_NEAR(std::abs(line.direction.y()), 1.0, 1e-12);
    EXPECT_NEAR(line.point.x(), 2.0, 1e-12);
    EXPECT_NEAR(line.point.z(), 0.0, 1e-12);
}

TEST(IntersectPlanes, LineLiesInBothPlanes) {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> t(-20.0, 20.0);
    int tested = 0;
    for (int i = 0; i < 1000; ++i) {
        const Plane a = random_plane(rng);
        const Plane b = random_plane(rng);
        if (a.normal().cross(b.normal()).norm() < 1e-3)
            continue;
        const Line3 line = intersect_planes(a, b);
        EXPECT_NEAR(line.direction.norm(), 1.0, 1e-12);
        for (int k = 0; k < 3; ++k) {
            const Vec3 x = line.point + t(rng) * line.direction;
            EXPECT_NEAR(a.signed_distance(x), 0.0, 1e-8);
            EXPECT_NEAR(b.signed_distance(x), 0.0, 1e-8);
        }
        ++tested;
    }
    EXPECT_GT(tested, 900);
}

TEST(IntersectPlanes, ParallelPairsThrow) {
    const Plane a = canonicalize(Vec4(0, 0, 1, 0));
    const Plane b = canonicalize(Vec4(0, 0, 1, -1));
    EXPECT_THROW(intersect_planes(a, b), ParallelPlanes);
    // Same surface family, opposite raw orientation.
    const Plane c = canonicalize(Vec4(0, 0, -1, -3));
    EXPECT_THROW(intersect_planes(a, c), ParallelPlanes);
}

TEST(FrameTest, OrthonormalRightHandedOnPlane) {
    std::mt19937 rng(31);
    for (int i = 0; i < 500; ++i) {
        const Plane p = random_plane(rng);
        const Frame f = make_frame(p);
        EXPECT_NEAR(f.u.norm(), 1.0, 1e-12);
        EXPECT_NEAR(f.v.norm(), 1.0, 1e-12);
        EXPECT_NEAR(f.u.dot(f.v), 0.0, 1e-12);
        EXPECT_LT((f.u.cross(f.v) - p.normal()).norm(), 1e-12);
        EXPECT_NEAR(p.signed_distance(f.origin), 0.0, 1e-12);

        const Vec2 local(0.7, -2.3);
        EXPECT_LT((f.to_local(f.to_world(local)) - local).norm(), 1e-12);
    }
}

TEST(PlanarPolygonTest, UnitSquareBasics) {
    const Plane p = canonicalize(Vec4(0, 0, 1, 0));
    const std::vector<Vec3> pts = {
        Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    const PlanarPolygon poly = PlanarPolygon::from_points(p, pts);
    EXPECT_EQ(poly.size(), 4u);
    EXPECT_NEAR(poly.area(), 1.0, 1e-12);
    EXPECT_LT((poly.centroid() - Vec2(0.5, 0.5)).norm(), 1e-12);

    // Clockwise input is re-oriented, not rejected.
    std::vector<Vec3> cw(pts.rbegin(), pts.rend());
    EXPECT_NEAR(PlanarPolygon::from_points(p, cw).area(), 1.0, 1e-12);
}

TEST(PlanarPolygonTest, LiftedVerticesSatisfyPlane) {
    std::mt19937 rng(37);
    for (int i = 0; i < 200; ++i) {
        const Plane p = random_plane(rng);
        const Frame f = make_frame(p);
        const PlanarPolygon poly(p, f, random_convex_polygon(rng));
        for (const Vec3& v : poly.lifted())
            EXPECT_NEAR(p.signed_distance(v), 0.0, 1e-9);
        EXPECT_GT(poly.area(), 0.0);
    }
}

TEST(PlanarPolygonTest, RejectsBadInput) {
    const Plane p = canonicalize(Vec4(0, 0, 1, 0));
    const Frame f = make_frame(p);
    EXPECT_THROW(PlanarPolygon(p, f, {Vec2(0, 0), Vec2(1, 0)}), InvariantViolation);

    // Bow-tie self intersection.
    EXPECT_THROW(PlanarPolygon(p, f, {Vec2(0, 0), Vec2(1, 1), Vec2(1, 0), Vec2(0, 1)}),
                 InvariantViolation);

    // Vertex off the plane.
    EXPECT_THROW(
        PlanarPolygon::from_points(p, {Vec3(0, 0, 0), Vec3(1, 0, 0.1), Vec3(1, 1, 0)}),
        InvariantViolation);
}

TEST(PolygonKernel, ClipHalfPlaneKnownValues) {
    const std::vector<Vec2> square = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    // Keep x >= 0.5.
    const auto right = clip_half_plane(square, Vec2(1, 0), -0.5);
    EXPECT_NEAR(polygon_signed_area(right), 0.5, 1e-12);
    // Keep everything.
    EXPECT_EQ(clip_half_plane(square, Vec2(1, 0), 1.0).size(), 4u);
    // Keep nothing.
    EXPECT_TRUE(clip_half_plane(square, Vec2(1, 0), -2.0).empty());
}

TEST(PolygonKernel, IntersectionAreaKnownValues) {
    const std::vector<Vec2> a = {Vec2(0, 0), Vec2(2, 0), Vec2(2, 2), Vec2(0, 2)};
    const std::vector<Vec2> b = {Vec2(1, 1), Vec2(3, 1), Vec2(3, 3), Vec2(1, 3)};
    EXPECT_NEAR(convex_intersection_area(a, b), 1.0, 1e-12);
    EXPECT_NEAR(convex_intersection_area(b, a), 1.0, 1e-12);
    EXPECT_NEAR(convex_intersection_area(a, a), 4.0, 1e-12);

    const std::vector<Vec2> far = {Vec2(10, 10), Vec2(11, 10), Vec2(11, 11), Vec2(10, 11)};
    EXPECT_EQ(convex_intersection_area(a, far), 0.0);
}

TEST(PolygonKernel, IntersectionAreaMatchesMonteCarlo) {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = random_convex_polygon(rng, 7);
        const auto b = random_convex_polygon(rng, 5);
        const double exact = convex_intersection_area(a, b);

        // Uniform sampling over the AABB of polygon a.
        double lo_x = 1e9, lo_y = 1e9, hi_x = -1e9, hi_y = -1e9;
        for (const Vec2& p : a) {
            lo_x = std::min(lo_x, p.x());
            lo_y = std::min(lo_y, p.y());
            hi_x = std::max(hi_x, p.x());
            hi_y = std::max(hi_y, p.y());
        }
        const double box_area = (hi_x - lo_x) * (hi_y - lo_y);
        const int n = 400000;
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            const Vec2 p(lo_x + (hi_x - lo_x) * u01(rng), lo_y + (hi_y - lo_y) * u01(rng));
            if (point_in_convex(a, p) && point_in_convex(b, p))
                ++hits;
        }
        const double est = box_area * hits / n;
        const double frac = static_cast<double>(hits) / n;
        const double sigma = box_area * std::sqrt(frac * (1.0 - frac) / n);
        EXPECT_NEAR(exact, est, 5.0 * sigma + 1e-3) << "trial " << trial;
    }
}

TEST(PolygonIntersectionArea, RequiresSharedFrame) {
    const Plane p = canonicalize(Vec4(0, 0, 1, 0));
    const Plane q = canonicalize(Vec4(0, 0, 1, -1));
    const std::vector<Vec2> sq = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    const PlanarPolygon on_p(p, make_frame(p), sq);
    const PlanarPolygon on_q(q, make_frame(q), sq);
    EXPECT_THROW(polygon_intersection_area(on_p, on_q), InvariantViolation);
    EXPECT_NEAR(polygon_intersection_area(on_p, on_p), 1.0, 1e-12);
}

TEST(ProjectPatch, IdentityWhenPlanesCoincide) {
    const Plane p = canonicalize(Vec4(0, 0, 1, -2));
    const Frame f = make_frame(p);
    const PlanarPolygon src(p, f, {Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(0, 1)});
    const PlanarPolygon out = project_patch(src, src);
    ASSERT_EQ(out.size(), src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        EXPECT_LT((out.vertices()[i] - src.vertices()[i]).norm(), 1e-12);
}

TEST(ProjectPatch, AreaScalesByDihedralCosine) {
    const double angles[] = {10.0, 30.0, 45.0, 59.9};
    for (double deg : angles) {
        const double th = deg * M_PI / 180.0;
        const Plane dst = canonicalize(Vec4(0, 0, 1, 0));
        const Plane src = canonicalize(Vec4(std::sin(th), 0, std::cos(th), 0));
        const Frame sf = make_frame(src);
        const PlanarPolygon patch(src, sf, {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)});
        const PlanarPolygon dst_poly(dst, make_frame(dst),
                                     {Vec2(-9, -9), Vec2(9, -9), Vec2(9, 9), Vec2(-9, 9)});
        const PlanarPolygon out = project_patch(patch, dst_poly);
        ASSERT_EQ(out.size(), 4u);
        EXPECT_NEAR(out.area(), patch.area() * std::cos(th), 1e-9) << deg << " deg";
        // Vertex-wise: each output point is the foot of the corresponding input.
        for (std::size_t i = 0; i < 4; ++i) {
            const Vec3 foot = dst.project(patch.lift(i));
            EXPECT_LT((out.frame().to_world(out.vertices()[i]) - foot).norm(), 1e-9);
        }
    }
}

TEST(ProjectPatch, ThrowsPastAngleLimit) {
    const Plane dst = canonicalize(Vec4(0, 0, 1, 0));
    const PlanarPolygon dst_poly(dst, make_frame(dst),
                                 {Vec2(-9, -9), Vec2(9, -9), Vec2(9, 9), Vec2(-9, 9)});
    for (double deg : {60.001, 75.0, 89.0}) {
        const double th = deg * M_PI / 180.0;
        const Plane src = canonicalize(Vec4(std::sin(th), 0, std::cos(th), 0));
        const PlanarPolygon patch(src, make_frame(src),
                                  {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)});
        EXPECT_THROW(project_patch(patch, dst_poly), NearPerpendicular) << deg;
    }
    // Exactly at the limit (within slack) still projects.
    const double th = 60.0 * M_PI / 180.0;
    const Plane src = canonicalize(Vec4(std::sin(th), 0, std::cos(th), 0));
    const PlanarPolygon patch(src, make_frame(src),
                              {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)});
    EXPECT_NO_THROW(project_patch(patch, dst_poly));
}

TEST(BBoxIoU, KnownValues) {
    const BBox a{0, 0, 2, 2};
    const BBox b{1, 1, 3, 3};
    EXPECT_NEAR(bbox_iou(a, b), 1.0 / 7.0, 1e-12);
    EXPECT_NEAR(bbox_iou(a, a), 1.0, 1e-12);
    EXPECT_EQ(bbox_iou(a, BBox{5, 5, 6, 6}), 0.0);
}
