#include "roomfuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roomfuse {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Renormalize only when measurably off unit length, so canonicalizing an
// already-canonical plane (or pose quaternion) is a bit-exact no-op.
bool needs_rescale(double norm) { return std::abs(norm - 1.0) > 4 * kEps; }

Quat stable_unit(Quat q) {
    const double n = q.norm();
    if (n < tol().degenerate)
        throw InvariantViolation("quaternion has zero norm");
    if (needs_rescale(n))
        q.coeffs() /= n;
    return q;
}

} // namespace

// --- Plane -------------------------------------------------------------------

Plane::Plane(const Vec3& unit_normal, double offset) : normal_(unit_normal), offset_(offset) {
    if (std::abs(normal_.norm() - 1.0) > tol().unit)
        throw InvariantViolation("plane normal is not unit length");
}

bool Plane::is_canonical() const {
    if (offset_ > tol().degenerate)
        return true;
    if (offset_ < -tol().degenerate)
        return false;
    for (int i = 0; i < 3; ++i) {
        if (normal_[i] != 0.0)
            return normal_[i] > 0.0;
    }
    return false;
}

Plane canonicalize(const Vec4& raw) {
    const double norm = raw.head<3>().norm();
    if (norm < tol().degenerate)
        throw DegeneratePlane("plane coefficients have (near) zero normal");

    Vec3 n = raw.head<3>();
    double d = raw[3];
    if (needs_rescale(norm)) {
        n /= norm;
        d /= norm;
    }

    if (d < -tol().degenerate) {
        n = -n;
        d = -d;
    } else if (d <= tol().degenerate) {
        // Offset is zero within tolerance; disambiguate the antipodal pair by
        // the sign of the first meaningfully nonzero normal component.
        // Components at rounding scale must count as zero here, or the same
        // plane reached through different rotations flips orientation.
        for (int i = 0; i < 3; ++i) {
            if (std::abs(n[i]) > tol().degenerate) {
                if (n[i] < 0.0) {
                    n = -n;
                    d = -d;
                }
                break;
            }
        }
    }
    return Plane(n, d);
}

// --- Pose ----------------------------------------------------------------------

Pose::Pose(const Quat& q, const Vec3& t) : q_(stable_unit(q)), t_(t) {}

Pose::Pose(const Mat3& rotation, const Vec3& t) : t_(t) {
    const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > tol().unit || rotation.determinant() < 0.0)
        throw InvariantViolation("rotation matrix is not a proper rotation");
    q_ = stable_unit(Quat(rotation));
}

Pose Pose::inverse() const {
    const Quat qi = q_.conjugate();
    return Pose(qi, -(qi * t_));
}

Pose Pose::operator*(const Pose& rhs) const {
    return Pose(stable_unit(q_ * rhs.q_), q_ * rhs.t_ + t_);
}

// --- Intrinsics ----------------------------------------------------------------

void Intrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0) || !std::isfinite(cx) || !std::isfinite(cy))
        throw ConfigError("intrinsics: fx and fy must be positive, cx and cy finite");
    if (width <= 0 || height <= 0)
        throw ConfigError("intrinsics: image size must be positive");
}

Vec2 Intrinsics::project(const Vec3& x) const {
    if (x.z() <= 0.0)
        throw BehindCamera("point is at or behind the camera plane");
    return Vec2(fx * x.x() / x.z() + cx, fy * x.y() / x.z() + cy);
}

double bbox_iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (ix <= 0 || iy <= 0)
        return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

// --- Frame ----------------------------------------------------------------------

Frame make_frame(const Plane& plane) {
    const Vec3& n = plane.normal();
    // Reference axis least aligned with the normal, first index wins ties.
    int k = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(n[i]) < std::abs(n[k]))
            k = i;
    }
    Vec3 ref = Vec3::Zero();
    ref[k] = 1.0;

    Frame f;
    f.u = (ref - ref.dot(n) * n).normalized();
    f.v = n.cross(f.u); // unit because n _|_ u; u x v = n by construction
    f.origin = -plane.offset() * n;
    return f;
}

// --- PlanarPolygon ---------------------------------------------------------------

namespace {

// Proper-crossing test for two closed segments; shared endpoints and
// collinear overlap do not count, which is lenient enough for the slivers
// clipping can emit.
bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto side = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    };
    const double d1 = side(a, b, c);
    const double d2 = side(a, b, d);
    const double d3 = side(c, d, a);
    const double d4 = side(c, d, b);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool ring_is_simple(const std::vector<Vec2>& v) {
    const std::size_t m = v.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            // Skip edges sharing a vertex (adjacent, incl. the wrap-around pair).
            if (j == i + 1 || (i == 0 && j == m - 1))
                continue;
            if (segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]))
                return false;
        }
    }
    return true;
}

} // namespace

PlanarPolygon::PlanarPolygon(const Plane& plane, const Frame& frame, std::vector<Vec2> vertices)
    : plane_(plane), frame_(frame), vertices_(std::move(vertices)) {
    if (vertices_.size() < 3)
        throw InvariantViolation("polygon needs at least 3 vertices");
    if (std::abs(frame_.u.norm() - 1.0) > tol().unit || std::abs(frame_.v.norm() - 1.0) > tol().unit ||
        (frame_.u.cross(frame_.v) - plane_.normal()).norm() > tol().unit)
        throw InvariantViolation("polygon frame is not an orthonormal basis of its plane");
    if (std::abs(plane_.signed_distance(frame_.origin)) > tol().on_plane)
        throw InvariantViolation("polygon frame origin is off the plane");

    if (polygon_signed_area(vertices_) < 0.0)
        std::reverse(vertices_.begin(), vertices_.end());
    if (!ring_is_simple(vertices_))
        throw InvariantViolation("polygon is self-intersecting");
}

PlanarPolygon PlanarPolygon::from_points(const Plane& plane, const std::vector<Vec3>& points) {
    const Frame f = make_frame(plane);
    std::vector<Vec2> local;
    local.reserve(points.size());
    for (const Vec3& p : points) {
        if (std::abs(plane.signed_distance(p)) > tol().on_plane)
            throw InvariantViolation("polygon vertex is off the plane");
        local.push_back(f.to_local(p));
    }
    return PlanarPolygon(plane, f, std::move(local));
}

std::vector<Vec3> PlanarPolygon::lifted() const {
    std::vector<Vec3> out;
    out.reserve(vertices_.size());
    for (const Vec2& v : vertices_)
        out.push_back(frame_.to_world(v));
    return out;
}

double PlanarPolygon::area() const { return polygon_signed_area(vertices_); }

Vec2 PlanarPolygon::centroid() const {
    // Area-weighted centroid; falls back to the vertex mean for zero area.
    double a2 = 0.0;
    Vec2 c = Vec2::Zero();
    const std::size_t m = vertices_.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& p = vertices_[i];
        const Vec2& q = vertices_[(i + 1) % m];
        const double w = p.x() * q.y() - q.x() * p.y();
        a2 += w;
        c += w * (p + q);
    }
    if (std::abs(a2) < tol().degenerate) {
        c = Vec2::Zero();
        for (const Vec2& p : vertices_)
            c += p;
        return c / static_cast<double>(m);
    }
    return c / (3.0 * a2);
}

// --- plane operations --------------------------------------------------------------

Plane transform_plane(const Plane& p_cam, const Pose& cam_to_world) {
    const Vec3 n_w = cam_to_world.rotate(p_cam.normal());
    const double d_w = p_cam.offset() - n_w.dot(cam_to_world.translation());
    return canonicalize(Vec4(n_w.x(), n_w.y(), n_w.z(), d_w));
}

Vec3 backproject_pixel(const Vec2& px, const Intrinsics& K, const Plane& p) {
    const Vec3 r = K.ray(px);
    const double denom = p.normal().dot(r);
    if (std::abs(denom) < tol().unit)
        throw RayParallel("pixel ray runs along the plane");
    const double s = -p.offset() / denom;
    if (s <= 0.0)
        throw BehindCamera("plane is behind the camera for this pixel");
    return s * r;
}

PlanarPolygon bbox_to_patch(const BBox& bbox, const Intrinsics& K, const Plane& p) {
    if (!bbox.valid())
        throw InvariantViolation("bounding box is empty or inverted");
    const std::vector<Vec3> corners = {
        backproject_pixel(Vec2(bbox.x0, bbox.y0), K, p),
        backproject_pixel(Vec2(bbox.x1, bbox.y0), K, p),
        backproject_pixel(Vec2(bbox.x1, bbox.y1), K, p),
        backproject_pixel(Vec2(bbox.x0, bbox.y1), K, p),
    };
    PlanarPolygon patch = PlanarPolygon::from_points(p, corners);
    if (patch.area() < 1e-8)
        throw DegeneratePatch("back-projected box collapses to a sliver");
    return patch;
}

Line3 intersect_planes(const Plane& a, const Plane& b) {
    const Vec3 cross = a.normal().cross(b.normal());
    const double len = cross.norm();
    if (len < 1e-6)
        throw ParallelPlanes("planes are parallel within tolerance");
    const Vec3 dir = cross / len;

    // Solve [n_a; n_b; dir] x = [-d_a; -d_b; 0] for the point nearest the
    // origin along the line; the third row pins the component along dir.
    Mat3 A;
    A.row(0) = a.normal();
    A.row(1) = b.normal();
    A.row(2) = dir;
    const Vec3 rhs(-a.offset(), -b.offset(), 0.0);
    return Line3{A.partialPivLu().solve(rhs), dir};
}

PlanarPolygon project_patch(const PlanarPolygon& src, const PlanarPolygon& dst,
                            double max_angle_deg) {
    const double cos_angle = src.plane().normal().dot(dst.plane().normal());
    const double cos_limit = std::cos(max_angle_deg * M_PI / 180.0);
    if (cos_angle < cos_limit - 1e-12)
        throw NearPerpendicular("patch normal deviates too far from the target plane");

    std::vector<Vec2> local;
    local.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        local.push_back(dst.frame().to_local(dst.plane().project(src.lift(i))));
    // cos_angle > 0 keeps orientation, so vertex correspondence survives the
    // constructor's counter-clockwise fix-up.
    return PlanarPolygon(dst.plane(), dst.frame(), std::move(local));
}

// --- 2D polygon kernel ----------------------------------------------------------------

double polygon_signed_area(const std::vector<Vec2>& poly) {
    const std::size_t m = poly.size();
    if (m < 3)
        return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % m];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * twice;
}

std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& n, double c) {
    std::vector<Vec2> out;
    const std::size_t m = poly.size();
    out.reserve(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& p0 = poly[i];
        const Vec2& p1 = poly[(i + 1) % m];
        const double s0 = n.dot(p0) + c;
        const double s1 = n.dot(p1) + c;
        if (s0 >= 0.0)
            out.push_back(p0);
        if ((s0 > 0.0 && s1 < 0.0) || (s0 < 0.0 && s1 > 0.0)) {
            const double t = s0 / (s0 - s1);
            out.push_back(p0 + t * (p1 - p0));
        }
    }
    return out;
}

double convex_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (a.size() < 3 || b.size() < 3)
        return 0.0;
    std::vector<Vec2> acc = a;
    const std::size_t m = b.size();
    for (std::size_t i = 0; i < m && acc.size() >= 3; ++i) {
        const Vec2& p0 = b[i];
        const Vec2& p1 = b[(i + 1) % m];
        // Interior of a CCW polygon lies left of each directed edge.
        const Vec2 n(p0.y() - p1.y(), p1.x() - p0.x());
        acc = clip_half_plane(acc, n, -n.dot(p0));
    }
    return std::max(polygon_signed_area(acc), 0.0);
}

double polygon_intersection_area(const PlanarPolygon& a, const PlanarPolygon& b) {
    if ((a.plane().coeffs() - b.plane().coeffs()).norm() > tol().unit ||
        (a.frame().origin - b.frame().origin).norm() > tol().unit ||
        (a.frame().u - b.frame().u).norm() > tol().unit ||
        (a.frame().v - b.frame().v).norm() > tol().unit)
        throw InvariantViolation("patches live in different frames");
    return convex_intersection_area(a.vertices(), b.vertices());
}

} // namespace roomfuse
