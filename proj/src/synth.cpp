#include "roomfuse/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "roomfuse/common.hpp"

namespace roomfuse {

namespace {

constexpr double kNearClip = 0.05;     // meters in front of the camera
constexpr double kMinPixelArea = 1.0;  // projected polygons below this are invisible
constexpr double kMinClearance = 0.01; // camera distance to any wall, meters

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double polygon_area2(const std::vector<Vec2>& poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        twice += cross2(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * twice;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
    double twice = 0.0;
    Vec2 acc = Vec2::Zero();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double w = cross2(a, b);
        twice += w;
        acc += w * (a + b);
    }
    return acc / (3.0 * twice);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 e = b - a;
    const double len2 = e.squaredNorm();
    if (len2 < 1e-24) return (p - a).norm();
    const double t = std::clamp((p - a).dot(e) / len2, 0.0, 1.0);
    return (p - (a + t * e)).norm();
}

double boundary_distance(const std::vector<Vec2>& poly, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i)
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
    return best;
}

int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = cross2(b - a, c - a);
    const double scale = (b - a).norm() * (c - a).norm();
    if (std::abs(v) <= 1e-12 * std::max(scale, 1.0)) return 0;
    return v > 0.0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
           std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const int o1 = orientation_sign(a, b, c);
    const int o2 = orientation_sign(a, b, d);
    const int o3 = orientation_sign(c, d, a);
    const int o4 = orientation_sign(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::mt19937_64 frame_rng(std::uint64_t seed, int frame_id) {
    return std::mt19937_64(
        splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(frame_id))));
}

/// Clip a 3D polygon to the half-space a.p + c >= 0 (Sutherland-Hodgman).
std::vector<Vec3> clip_half_space3(const std::vector<Vec3>& poly, const Vec3& a, double c) {
    std::vector<Vec3> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = poly[i];
        const Vec3& q = poly[(i + 1) % n];
        const double gp = a.dot(p) + c;
        const double gq = a.dot(q) + c;
        if (gp >= 0.0) out.push_back(p);
        if ((gp > 0.0 && gq < 0.0) || (gp < 0.0 && gq > 0.0))
            out.push_back(p + (gp / (gp - gq)) * (q - p));
    }
    return out;
}

/// Camera rotation from a horizontal heading and a downward pitch, with the
/// image x axis kept level: columns are [right, down, forward] in world
/// coordinates (x-right, y-down, z-forward convention).
Mat3 camera_rotation(double yaw, double pitch_down) {
    const double ct = std::cos(yaw), st = std::sin(yaw);
    const double cp = std::cos(pitch_down), sp = std::sin(pitch_down);
    const Vec3 forward(cp * ct, cp * st, -sp);
    const Vec3 right(st, -ct, 0.0);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = forward.cross(right);
    r.col(2) = forward;
    return r;
}

BBox sanitize_bbox(double x0, double y0, double x1, double y1, const Intrinsics& K) {
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    x0 = std::clamp(x0, 0.0, static_cast<double>(K.width));
    x1 = std::clamp(x1, 0.0, static_cast<double>(K.width));
    y0 = std::clamp(y0, 0.0, static_cast<double>(K.height));
    y1 = std::clamp(y1, 0.0, static_cast<double>(K.height));
    if (x1 - x0 < 1.0) {
        x1 = std::min(static_cast<double>(K.width), x0 + 1.0);
        x0 = x1 - 1.0;
    }
    if (y1 - y0 < 1.0) {
        y1 = std::min(static_cast<double>(K.height), y0 + 1.0);
        y0 = y1 - 1.0;
    }
    return BBox{x0, y0, x1, y1};
}

struct SurfaceGeometry {
    Plane plane;
    std::vector<Vec3> extent;
    PlaneClass klass;
};

Plane perturb_plane(const Plane& exact, const NoiseSpec& noise, std::mt19937_64& rng) {
    Vec3 n = exact.normal();
    double d = exact.offset();
    double scale = 1.0;
    if (noise.heavy_tail) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(rng) < 0.1) scale = 3.0;
    }
    if (noise.sigma_normal_deg > 0.0) {
        std::normal_distribution<double> tilt(0.0, noise.sigma_normal_deg);
        const double angle = std::abs(tilt(rng)) * scale * M_PI / 180.0;
        Vec3 axis;
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        do {
            axis = n.cross(Vec3(coord(rng), coord(rng), coord(rng)));
        } while (axis.norm() < 1e-6);
        n = Eigen::AngleAxisd(angle, axis.normalized()) * n;
    }
    if (noise.sigma_d_m > 0.0) {
        std::normal_distribution<double> shift(0.0, noise.sigma_d_m);
        d += shift(rng) * scale;
    }
    return canonicalize(Vec4(n.x(), n.y(), n.z(), d));
}

} // namespace

void RoomSpec::validate() {
    // Drop repeats and fold collinear neighbours until the ring is stable.
    bool changed = true;
    while (changed && footprint.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < footprint.size() && footprint.size() >= 3; ++i) {
            const Vec2& prev = footprint[(i + footprint.size() - 1) % footprint.size()];
            const Vec2& here = footprint[i];
            const Vec2& next = footprint[(i + 1) % footprint.size()];
            const Vec2 in = here - prev;
            const Vec2 out = next - here;
            const bool duplicate = out.norm() < 1e-9;
            const bool straight =
                std::abs(cross2(in, out)) <= 1e-12 * std::max(in.norm() * out.norm(), 1.0) &&
                in.dot(out) > 0.0;
            if (duplicate || straight) {
                footprint.erase(footprint.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }

    if (footprint.size() < 3)
        throw InvalidFootprint("footprint needs at least 3 distinct, non-collinear vertices");
    const double area = polygon_area2(footprint);
    if (area <= 0.0) throw InvalidFootprint("footprint must wind counter-clockwise");
    if (area < 1.0) throw InvalidFootprint("footprint area must be at least 1 square meter");

    const std::size_t n = footprint.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue; // adjacent edges share a vertex
            if (segments_intersect(footprint[i], footprint[(i + 1) % n], footprint[j],
                                   footprint[(j + 1) % n]))
                throw InvalidFootprint("footprint edges cross each other");
        }

    if (!(height > 1.5 && height < 5.0))
        throw InvalidFootprint("room height must lie in (1.5, 5) meters");
    if (!std::isfinite(floor_z)) throw InvalidFootprint("floor_z must be finite");
}

void NoiseSpec::validate() const {
    if (sigma_normal_deg < 0.0 || sigma_d_m < 0.0 || sigma_bbox_px < 0.0)
        throw ConfigError("noise sigmas must be non-negative");
    if (!(p_dropout >= 0.0 && p_dropout <= 1.0))
        throw ConfigError("p_dropout must lie in [0, 1]");
    if (!(p_spurious >= 0.0 && p_spurious < 1.0))
        throw ConfigError("p_spurious must lie in [0, 1)");
}

const char* to_string(TrajectoryMode m) {
    return m == TrajectoryMode::Orbit ? "orbit" : "random_walk";
}

TrajectoryMode trajectory_mode_from_string(const std::string& s) {
    if (s == "orbit") return TrajectoryMode::Orbit;
    if (s == "random_walk") return TrajectoryMode::RandomWalk;
    throw std::invalid_argument("unknown trajectory mode: " + s);
}

void TrajectorySpec::validate() const {
    if (frames < 1) throw ConfigError("trajectory needs at least one frame");
    if (!(eye_height > 0.0)) throw ConfigError("eye_height must be positive");
}

RoomSurfaces room_planes(const RoomSpec& spec) {
    RoomSpec s = spec;
    s.validate();

    RoomSurfaces out;
    const double top = s.floor_z + s.height;
    const std::size_t n = s.footprint.size();
    out.walls.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = s.footprint[i];
        const Vec2& b = s.footprint[(i + 1) % n];
        const Vec2 e = b - a;
        const Vec2 inward = Vec2(-e.y(), e.x()) / e.norm(); // interior is left of a CCW edge
        const Vec3 normal(inward.x(), inward.y(), 0.0);
        const Plane plane(normal, -inward.dot(a));
        const std::vector<Vec3> corners{
            Vec3(a.x(), a.y(), s.floor_z),
            Vec3(b.x(), b.y(), s.floor_z),
            Vec3(b.x(), b.y(), top),
            Vec3(a.x(), a.y(), top),
        };
        out.walls.push_back(WallTruth{plane, PlanarPolygon::from_points(plane, corners)});
    }
    out.floor = Plane(Vec3(0, 0, 1), -s.floor_z);
    out.ceiling = Plane(Vec3(0, 0, -1), top);
    return out;
}

RoomLayout ground_truth_layout(const RoomSpec& spec) {
    RoomSpec s = spec;
    s.validate();
    const RoomSurfaces surfaces = room_planes(s);

    SceneBounds bounds;
    bounds.min = Vec3(std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(), s.floor_z);
    bounds.max = Vec3(-std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(), s.floor_z + s.height);
    for (const Vec2& v : s.footprint) {
        bounds.min.head<2>() = bounds.min.head<2>().cwiseMin(v);
        bounds.max.head<2>() = bounds.max.head<2>().cwiseMax(v);
    }

    RoomLayout layout;
    for (const WallTruth& w : surfaces.walls) layout.walls.push_back(w.extent);
    layout.floor = surfaces.floor;
    layout.ceiling = surfaces.ceiling;
    layout.bounds = bounds;
    return layout;
}

LayoutComparison compare_layouts(const RoomLayout& predicted, const RoomLayout& truth) {
    // A reconstructed wall may arrive as several segments of one plane (other
    // planes' intersection lines can slice straight through a supported
    // span), so the comparison works on distinct predicted planes. Each
    // distinct plane is represented by its first polygon's index.
    std::vector<int> pred_rep;
    std::vector<Plane> pred_planes;
    for (std::size_t p = 0; p < predicted.walls.size(); ++p) {
        const Plane plane = canonicalize(predicted.walls[p].plane().coeffs());
        bool seen = false;
        for (const Plane& have : pred_planes) {
            if ((have.coeffs() - plane.coeffs()).norm() <= 1e-9) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            pred_rep.push_back(static_cast<int>(p));
            pred_planes.push_back(plane);
        }
    }

    struct Pairing {
        double angle_deg;
        double offset_m;
        int pred;
        int truth;
    };
    std::vector<Pairing> pairings;
    for (std::size_t p = 0; p < pred_planes.size(); ++p) {
        const Plane& pp = pred_planes[p];
        for (std::size_t t = 0; t < truth.walls.size(); ++t) {
            const Plane tp = canonicalize(truth.walls[t].plane().coeffs());
            const double dot = std::clamp(pp.normal().dot(tp.normal()), -1.0, 1.0);
            pairings.push_back(Pairing{std::acos(dot) * 180.0 / M_PI,
                                       std::abs(pp.offset() - tp.offset()),
                                       static_cast<int>(p), static_cast<int>(t)});
        }
    }
    std::sort(pairings.begin(), pairings.end(), [](const Pairing& a, const Pairing& b) {
        if (a.angle_deg != b.angle_deg) return a.angle_deg < b.angle_deg;
        if (a.offset_m != b.offset_m) return a.offset_m < b.offset_m;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.truth < b.truth;
    });

    LayoutComparison out;
    std::vector<char> pred_used(pred_planes.size(), 0);
    std::vector<char> truth_used(truth.walls.size(), 0);
    for (const Pairing& pair : pairings) {
        if (pred_used[static_cast<std::size_t>(pair.pred)] ||
            truth_used[static_cast<std::size_t>(pair.truth)])
            continue;
        pred_used[static_cast<std::size_t>(pair.pred)] = 1;
        truth_used[static_cast<std::size_t>(pair.truth)] = 1;
        out.matches.push_back(
            WallMatch{pred_rep[static_cast<std::size_t>(pair.pred)], pair.truth, pair.angle_deg,
                      pair.offset_m});
        out.max_normal_err_deg = std::max(out.max_normal_err_deg, pair.angle_deg);
        out.max_offset_err_m = std::max(out.max_offset_err_m, pair.offset_m);
    }
    std::sort(out.matches.begin(), out.matches.end(),
              [](const WallMatch& a, const WallMatch& b) { return a.predicted < b.predicted; });
    out.unmatched_predicted = static_cast<int>(
        std::count(pred_used.begin(), pred_used.end(), 0));
    out.unmatched_truth = static_cast<int>(std::count(truth_used.begin(), truth_used.end(), 0));
    return out;
}

bool inside_footprint(const std::vector<Vec2>& footprint, const Vec2& p) {
    if (footprint.size() < 3) return false;
    if (boundary_distance(footprint, p) < 1e-12) return false;
    bool inside = false;
    const std::size_t n = footprint.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = footprint[i];
        const Vec2& b = footprint[(i + 1) % n];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x_cross = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (p.x() < x_cross) inside = !inside;
        }
    }
    return inside;
}

SynthResult generate_sequence(const RoomSpec& room, const TrajectorySpec& traj,
                              const Intrinsics& K, const NoiseSpec& noise) {
    RoomSpec spec = room;
    spec.validate();
    traj.validate();
    noise.validate();
    K.validate();

    if (!(traj.eye_height > 0.1 && traj.eye_height < spec.height - 0.1))
        throw CameraOutsideRoom("eye_height puts the camera outside the floor-ceiling slab");
    const double eye_z = spec.floor_z + traj.eye_height;

    const RoomSurfaces surfaces = room_planes(spec);
    std::vector<SurfaceGeometry> geometry;
    for (const WallTruth& w : surfaces.walls)
        geometry.push_back(SurfaceGeometry{w.plane, w.extent.lifted(), PlaneClass::Wall});
    std::vector<Vec3> floor_ring, ceiling_ring;
    for (const Vec2& v : spec.footprint) {
        floor_ring.emplace_back(v.x(), v.y(), spec.floor_z);
        ceiling_ring.emplace_back(v.x(), v.y(), spec.floor_z + spec.height);
    }
    geometry.push_back(SurfaceGeometry{surfaces.floor, floor_ring, PlaneClass::FloorCeiling});
    geometry.push_back(SurfaceGeometry{surfaces.ceiling, ceiling_ring, PlaneClass::FloorCeiling});

    Vec2 orbit_center = Vec2::Zero();
    double orbit_radius = 0.0;
    if (traj.mode == TrajectoryMode::Orbit) {
        orbit_center = polygon_centroid(spec.footprint);
        if (!inside_footprint(spec.footprint, orbit_center))
            throw CameraOutsideRoom("footprint centroid is not interior; use a random walk");
        orbit_radius = 0.35 * boundary_distance(spec.footprint, orbit_center);
        if (orbit_radius < kMinClearance)
            throw CameraOutsideRoom("footprint is too cramped for an orbit");
    }

    // Pitch phases: level for walls, then down at the floor, then up at the
    // ceiling, so every surface class clears the grazing filter regularly.
    const double kPitch = 40.0 * M_PI / 180.0;
    const std::array<double, 3> pitch_cycle{0.0, kPitch, -kPitch};

    SynthResult result;
    result.bundle.intrinsics = K;
    result.truth.surfaces = surfaces;

    for (int f = 0; f < traj.frames; ++f) {
        const int frame_id = f + 1;
        std::mt19937_64 rng = frame_rng(traj.seed, frame_id);
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        Vec2 position;
        double yaw, pitch;
        if (traj.mode == TrajectoryMode::Orbit) {
            const double theta = 2.0 * M_PI * f / traj.frames;
            position = orbit_center + orbit_radius * Vec2(std::cos(theta), std::sin(theta));
            yaw = theta;
            pitch = pitch_cycle[static_cast<std::size_t>(f % 3)];
        } else {
            const Vec2 lo(
                std::min_element(spec.footprint.begin(), spec.footprint.end(),
                                 [](const Vec2& a, const Vec2& b) { return a.x() < b.x(); })
                    ->x(),
                std::min_element(spec.footprint.begin(), spec.footprint.end(),
                                 [](const Vec2& a, const Vec2& b) { return a.y() < b.y(); })
                    ->y());
            const Vec2 hi(
                std::max_element(spec.footprint.begin(), spec.footprint.end(),
                                 [](const Vec2& a, const Vec2& b) { return a.x() < b.x(); })
                    ->x(),
                std::max_element(spec.footprint.begin(), spec.footprint.end(),
                                 [](const Vec2& a, const Vec2& b) { return a.y() < b.y(); })
                    ->y());
            std::uniform_real_distribution<double> px(lo.x(), hi.x()), py(lo.y(), hi.y());
            int attempts = 0;
            do {
                if (++attempts > 4096)
                    throw CameraOutsideRoom("could not place the camera inside the footprint");
                position = Vec2(px(rng), py(rng));
            } while (boundary_distance(spec.footprint, position) < 0.15 ||
                     !inside_footprint(spec.footprint, position));
            yaw = 2.0 * M_PI * u01(rng);
            std::uniform_real_distribution<double> tilt(-M_PI / 4.0, M_PI / 4.0);
            pitch = tilt(rng);
        }
        if (!inside_footprint(spec.footprint, position) ||
            boundary_distance(spec.footprint, position) < kMinClearance)
            throw CameraOutsideRoom("trajectory left the room interior");

        const Pose pose(camera_rotation(yaw, pitch), Vec3(position.x(), position.y(), eye_z));
        const Pose world_to_cam = pose.inverse();
        result.bundle.poses.emplace(frame_id, pose);

        std::vector<int>& visible = result.truth.visibility[frame_id];
        for (std::size_t s = 0; s < geometry.size(); ++s) {
            std::vector<Vec3> poly;
            poly.reserve(geometry[s].extent.size());
            for (const Vec3& v : geometry[s].extent) poly.push_back(world_to_cam.apply(v));

            poly = clip_half_space3(poly, Vec3(0, 0, 1), -kNearClip);
            poly = clip_half_space3(poly, Vec3(K.fx, 0, K.cx), 0.0);
            poly = clip_half_space3(poly, Vec3(-K.fx, 0, K.width - K.cx), 0.0);
            poly = clip_half_space3(poly, Vec3(0, K.fy, K.cy), 0.0);
            poly = clip_half_space3(poly, Vec3(0, -K.fy, K.height - K.cy), 0.0);
            if (poly.size() < 3) continue;

            std::vector<Vec2> pixels;
            pixels.reserve(poly.size());
            for (const Vec3& p : poly)
                pixels.emplace_back(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
            if (std::abs(polygon_area2(pixels)) < kMinPixelArea) continue;

            visible.push_back(static_cast<int>(s));
            if (u01(rng) < noise.p_dropout) continue;

            double x0 = pixels[0].x(), x1 = x0, y0 = pixels[0].y(), y1 = y0;
            for (const Vec2& px : pixels) {
                x0 = std::min(x0, px.x());
                x1 = std::max(x1, px.x());
                y0 = std::min(y0, px.y());
                y1 = std::max(y1, px.y());
            }
            if (noise.sigma_bbox_px > 0.0) {
                std::normal_distribution<double> jitter(0.0, noise.sigma_bbox_px);
                x0 += jitter(rng);
                y0 += jitter(rng);
                x1 += jitter(rng);
                y1 += jitter(rng);
            }

            Measurement m;
            m.frame_id = frame_id;
            m.klass = geometry[s].klass;
            m.score = std::clamp(std::abs(polygon_area2(pixels)) / (K.width * K.height), 0.05, 1.0);
            m.bbox = sanitize_bbox(x0, y0, x1, y1, K);
            m.plane_cam = perturb_plane(transform_plane(geometry[s].plane, world_to_cam), noise, rng);
            result.bundle.measurements.push_back(m);
        }

        if (u01(rng) < noise.p_spurious) {
            std::uniform_real_distribution<double> ux(5.0, K.width - 5.0);
            std::uniform_real_distribution<double> uy(5.0, K.height - 5.0);
            std::uniform_real_distribution<double> uz(0.8, 4.0);
            std::uniform_real_distribution<double> half(4.0, 30.0);
            const Vec2 center(ux(rng), uy(rng));
            const Vec3 anchor = K.ray(center) * uz(rng);
            Vec3 n;
            double d;
            std::uniform_real_distribution<double> coord(-1.0, 1.0);
            do {
                n = Vec3(coord(rng), coord(rng), coord(rng));
            } while (n.norm() < 1e-3 || std::abs(n.normalized().dot(K.ray(center).normalized())) < 0.3);
            n.normalize();
            d = -n.dot(anchor);
            if (std::abs(d) < 0.05) d = d < 0.0 ? -0.05 : 0.05;

            Measurement junk;
            junk.frame_id = frame_id;
            junk.klass = u01(rng) < 0.7 ? PlaneClass::Wall : PlaneClass::FloorCeiling;
            std::uniform_real_distribution<double> sc(0.2, 0.8);
            junk.score = sc(rng);
            junk.bbox = sanitize_bbox(center.x() - half(rng), center.y() - half(rng),
                                      center.x() + half(rng), center.y() + half(rng), K);
            junk.plane_cam = canonicalize(Vec4(n.x(), n.y(), n.z(), d));
            result.bundle.measurements.push_back(junk);
        }
    }

    return result;
}

} // namespace roomfuse
