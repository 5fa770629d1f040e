#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

#include "roomfuse/common.hpp"

namespace roomfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// An infinite oriented plane {x : n·x + d = 0} with unit normal n and
/// offset d in meters. Canonical form: d >= 0; when d is zero (within
/// tolerance) the first nonzero normal component is positive, so the two
/// antipodal parameter vectors of one surface collapse to one representative.
class Plane {
public:
    Plane() : normal_(0, 0, 1), offset_(0) {}
    Plane(const Vec3& unit_normal, double offset);

    const Vec3& normal() const { return normal_; }
    double offset() const { return offset_; }
    Vec4 coeffs() const { return Vec4(normal_.x(), normal_.y(), normal_.z(), offset_); }

    /// Signed distance of a point from the plane (n·x + d).
    double signed_distance(const Vec3& x) const { return normal_.dot(x) + offset_; }

    /// Closest point on the plane to x.
    Vec3 project(const Vec3& x) const { return x - signed_distance(x) * normal_; }

    bool is_canonical() const;

private:
    Vec3 normal_;
    double offset_;
};

/// Normalize a raw 4-vector (a, b, c, d) to a canonical Plane.
/// Throws DegeneratePlane if the normal part is (near) zero.
Plane canonicalize(const Vec4& raw);

/// Rigid camera-to-world transform. Rotation is stored as a unit quaternion
/// so that trajectory files round-trip exactly; the matrix is derived.
class Pose {
public:
    Pose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
    Pose(const Quat& q, const Vec3& t);
    Pose(const Mat3& rotation, const Vec3& t);

    const Quat& quaternion() const { return q_; }
    const Vec3& translation() const { return t_; }
    Mat3 rotation() const { return q_.toRotationMatrix(); }

    Vec3 apply(const Vec3& x) const { return q_ * x + t_; }
    Vec3 rotate(const Vec3& v) const { return q_ * v; }

    Pose inverse() const;
    /// Composition: (a * b).apply(x) == a.apply(b.apply(x)).
    Pose operator*(const Pose& rhs) const;

private:
    Quat q_;
    Vec3 t_;
};

/// Pinhole intrinsics. Pixel coordinates live in the continuous image
/// rectangle [0, width] x [0, height].
struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const;

    /// Unit-depth ray through a pixel: ((u-cx)/fx, (v-cy)/fy, 1).
    Vec3 ray(const Vec2& px) const {
        return Vec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0);
    }
    /// Perspective projection of a camera-frame point. Throws BehindCamera
    /// for z <= 0.
    Vec2 project(const Vec3& x) const;

    bool contains(const Vec2& px) const {
        return px.x() >= 0 && px.x() <= width && px.y() >= 0 && px.y() <= height;
    }
};

/// Axis-aligned pixel rectangle (x0, y0) .. (x1, y1), x0 < x1, y0 < y1.
struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool valid() const { return x0 < x1 && y0 < y1; }
};

/// Intersection-over-union of two pixel rectangles.
double bbox_iou(const BBox& a, const BBox& b);

/// Orthonormal 2D coordinate frame embedded in 3D: origin plus in-plane
/// axes u, v with u x v equal to the plane normal.
struct Frame {
    Vec3 origin = Vec3::Zero();
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();

    Vec2 to_local(const Vec3& world) const {
        const Vec3 r = world - origin;
        return Vec2(u.dot(r), v.dot(r));
    }
    Vec3 to_world(const Vec2& local) const { return origin + local.x() * u + local.y() * v; }
};

/// Canonical frame for a plane: origin at the point closest to the world
/// origin, axes chosen deterministically from the normal.
Frame make_frame(const Plane& plane);

/// A simple counter-clockwise polygon embedded in a plane. Vertices are 2D
/// coordinates in the attached frame; lifted vertices satisfy the plane
/// equation within tolerance.
class PlanarPolygon {
public:
    PlanarPolygon(const Plane& plane, const Frame& frame, std::vector<Vec2> vertices);

    /// Build with the plane's canonical frame from 3D points (orientation is
    /// fixed up to counter-clockwise automatically).
    static PlanarPolygon from_points(const Plane& plane, const std::vector<Vec3>& points);

    const Plane& plane() const { return plane_; }
    const Frame& frame() const { return frame_; }
    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    Vec3 lift(std::size_t i) const { return frame_.to_world(vertices_[i]); }
    std::vector<Vec3> lifted() const;

    double area() const;
    Vec2 centroid() const;

private:
    Plane plane_;
    Frame frame_;
    std::vector<Vec2> vertices_;
};

struct Line3 {
    Vec3 point;
    Vec3 direction; // unit
};

// --- plane operations -------------------------------------------------------

/// Express a camera-frame plane in world coordinates; re-canonicalized.
Plane transform_plane(const Plane& p_cam, const Pose& cam_to_world);

/// Intersect the ray through a pixel with a plane. Throws RayParallel when
/// the ray runs along the plane and BehindCamera when the hit is at s <= 0.
Vec3 backproject_pixel(const Vec2& px, const Intrinsics& K, const Plane& p);

/// Back-project the four corners of a bounding box onto a plane, giving the
/// quadrilateral the box subtends on that surface.
PlanarPolygon bbox_to_patch(const BBox& bbox, const Intrinsics& K, const Plane& p);

/// Intersection line of two non-parallel planes.
Line3 intersect_planes(const Plane& a, const Plane& b);

/// Orthogonally project a patch onto the plane of `dst`, expressed in dst's
/// frame. Vertex order and count are preserved. Throws NearPerpendicular when
/// the normals disagree by more than `max_angle_deg`.
PlanarPolygon project_patch(const PlanarPolygon& src, const PlanarPolygon& dst,
                            double max_angle_deg = 60.0);

// --- 2D polygon kernel ------------------------------------------------------

/// Signed shoelace area; positive for counter-clockwise rings.
double polygon_signed_area(const std::vector<Vec2>& poly);

/// Clip a polygon against the half-plane {p : n·p + c >= 0}.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& n, double c);

/// Area of the intersection of two convex CCW polygons in a shared frame.
double convex_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

/// Intersection area of two patches already expressed in the same frame.
double polygon_intersection_area(const PlanarPolygon& a, const PlanarPolygon& b);

} // namespace roomfuse
