#include "roomfuse/measurements.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace roomfuse {

using nlohmann::ordered_json;

const char* to_string(PlaneClass c) {
    return c == PlaneClass::Wall ? "wall" : "floor_ceiling";
}

PlaneClass plane_class_from_string(const std::string& s) {
    if (s == "wall")
        return PlaneClass::Wall;
    if (s == "floor_ceiling")
        return PlaneClass::FloorCeiling;
    throw std::invalid_argument("unknown plane class '" + s + "'");
}

namespace {

// Shortest decimal form that parses back to the identical double, written
// with to_chars so the active locale cannot interfere.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, int line) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError(line, "bad number '" + std::string(token) + "'");
    return v;
}

long parse_int(std::string_view token, int line) {
    long v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError(line, "bad integer '" + std::string(token) + "'");
    return v;
}

Measurement parse_measurement_line(const std::string& text, int line, const Intrinsics& K) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line, e.what());
    }
    if (!j.is_object())
        throw ParseError(line, "expected a JSON object");

    static const std::vector<std::string> required = {"frame", "class", "score", "bbox", "plane"};
    for (const auto& key : required) {
        if (!j.contains(key))
            throw ParseError(line, "missing key '" + key + "'");
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(required.begin(), required.end(), key) == required.end())
            throw ParseError(line, "unknown key '" + key + "'");
    }

    Measurement m;
    try {
        m.frame_id = j.at("frame").get<int>();
        m.score = j.at("score").get<double>();
        const auto bbox = j.at("bbox").get<std::vector<double>>();
        const auto plane = j.at("plane").get<std::vector<double>>();
        if (bbox.size() != 4)
            throw ParseError(line, "bbox needs 4 numbers");
        if (plane.size() != 4)
            throw ParseError(line, "plane needs 4 numbers");
        m.klass = plane_class_from_string(j.at("class").get<std::string>());
        m.bbox = BBox{bbox[0], bbox[1], bbox[2], bbox[3]};
        m.plane_cam = canonicalize(Vec4(plane[0], plane[1], plane[2], plane[3]));
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(line, e.what());
    }

    if (m.frame_id <= 0)
        throw InvariantViolation("line " + std::to_string(line) + ": frame id must be positive");
    if (!(m.score >= 0.0 && m.score <= 1.0))
        throw InvariantViolation("line " + std::to_string(line) + ": score outside [0,1]");
    if (!m.bbox.valid())
        throw InvariantViolation("line " + std::to_string(line) + ": bbox is empty or inverted");
    if (!K.contains(Vec2(m.bbox.x0, m.bbox.y0)) || !K.contains(Vec2(m.bbox.x1, m.bbox.y1)))
        throw InvariantViolation("line " + std::to_string(line) + ": bbox outside image bounds");
    return m;
}

} // namespace

std::vector<Measurement> load_measurements(const std::filesystem::path& path,
                                           const Intrinsics& intrinsics) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open measurement file " + path.string());
    std::vector<Measurement> out;
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty() || text.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        out.push_back(parse_measurement_line(text, line, intrinsics));
    }
    return out;
}

void save_measurements(const std::vector<Measurement>& measurements,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write measurement file " + path.string());
    for (const Measurement& m : measurements) {
        ordered_json j;
        j["frame"] = m.frame_id;
        j["class"] = to_string(m.klass);
        j["score"] = m.score;
        j["bbox"] = {m.bbox.x0, m.bbox.y0, m.bbox.x1, m.bbox.y1};
        const Vec4 p = m.plane_cam.coeffs();
        j["plane"] = {p[0], p[1], p[2], p[3]};
        out << j.dump() << '\n';
    }
    if (!out)
        throw IoError("failed while writing " + path.string());
}

std::map<int, Pose> load_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open pose file " + path.string());
    std::map<int, Pose> poses;
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos || text[first] == '#')
            continue;

        std::istringstream ss(text);
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok)
            tokens.push_back(tok);
        if (tokens.size() != 8)
            throw ParseError(line, "expected 8 fields: frame tx ty tz qx qy qz qw");

        const long frame = parse_int(tokens[0], line);
        if (frame <= 0)
            throw ParseError(line, "frame id must be positive");
        if (poses.count(static_cast<int>(frame)))
            throw ParseError(line, "duplicate pose for frame " + std::to_string(frame));

        double f[7];
        for (int i = 0; i < 7; ++i)
            f[i] = parse_double(tokens[i + 1], line);
        const Vec3 t(f[0], f[1], f[2]);
        const Quat q(f[6], f[3], f[4], f[5]); // file order qx qy qz qw
        if (std::abs(q.norm() - 1.0) > 1e-6)
            throw ParseError(line, "quaternion is not unit length");
        poses.emplace(static_cast<int>(frame), Pose(q, t));
    }
    return poses;
}

void save_poses(const std::map<int, Pose>& poses, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write pose file " + path.string());
    out << "# frame tx ty tz qx qy qz qw (camera-to-world)\n";
    for (const auto& [frame, pose] : poses) {
        const Vec3& t = pose.translation();
        const Quat& q = pose.quaternion();
        out << frame << ' ' << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
            << format_double(t.z()) << ' ' << format_double(q.x()) << ' ' << format_double(q.y())
            << ' ' << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
    }
    if (!out)
        throw IoError("failed while writing " + path.string());
}

SequenceBundle load_sequence(const std::filesystem::path& measurement_path,
                             const std::filesystem::path& pose_path,
                             const Intrinsics& intrinsics) {
    intrinsics.validate();
    SequenceBundle bundle;
    bundle.intrinsics = intrinsics;
    bundle.poses = load_poses(pose_path);
    bundle.measurements = load_measurements(measurement_path, intrinsics);
    for (const Measurement& m : bundle.measurements) {
        if (!bundle.poses.count(m.frame_id))
            throw MissingPose(m.frame_id);
    }
    return bundle;
}

void save_sequence(const SequenceBundle& bundle,
                   const std::filesystem::path& measurement_path,
                   const std::filesystem::path& pose_path) {
    save_measurements(bundle.measurements, measurement_path);
    save_poses(bundle.poses, pose_path);
}

std::vector<GlobalMeasurement> lift_to_world(const SequenceBundle& bundle, LiftReport* report) {
    // Stable order: by frame id, then by position in the input list.
    std::vector<std::size_t> order(bundle.measurements.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return bundle.measurements[a].frame_id < bundle.measurements[b].frame_id;
    });

    LiftReport local;
    std::vector<GlobalMeasurement> out;
    out.reserve(bundle.measurements.size());
    for (std::size_t idx : order) {
        const Measurement& m = bundle.measurements[idx];
        const auto pose_it = bundle.poses.find(m.frame_id);
        if (pose_it == bundle.poses.end())
            throw MissingPose(m.frame_id);
        const Pose& pose = pose_it->second;
        try {
            const PlanarPolygon patch_cam = bbox_to_patch(m.bbox, bundle.intrinsics, m.plane_cam);
            const Plane plane_world = transform_plane(m.plane_cam, pose);
            std::vector<Vec3> corners;
            corners.reserve(patch_cam.size());
            for (const Vec3& v : patch_cam.lifted())
                corners.push_back(pose.apply(v));
            out.push_back(GlobalMeasurement{
                m, plane_world, PlanarPolygon::from_points(plane_world, corners)});
            ++local.lifted;
        } catch (const RayParallel&) {
            ++local.dropped_ray_parallel;
        } catch (const BehindCamera&) {
            ++local.dropped_behind_camera;
        } catch (const DegeneratePatch&) {
            ++local.dropped_degenerate_patch;
        }
    }
    if (report)
        *report = local;
    return out;
}

std::vector<GlobalMeasurement> filter_grazing(const std::vector<GlobalMeasurement>& measurements,
                                              double min_angle_deg) {
    if (!(min_angle_deg > 0.0 && min_angle_deg < 90.0))
        throw ConfigError("grazing filter angle must lie in (0, 90) degrees");
    // keep iff arccos(|n_cam . z|) <= 90 - min_angle, i.e. |n_cam . z| >= sin(min_angle);
    // the slack keeps the exact boundary on the inclusive side.
    const double min_dot = std::sin(min_angle_deg * M_PI / 180.0) - 1e-12;
    std::vector<GlobalMeasurement> out;
    out.reserve(measurements.size());
    for (const GlobalMeasurement& g : measurements) {
        if (std::abs(g.source.plane_cam.normal().z()) >= min_dot)
            out.push_back(g);
    }
    return out;
}

} // namespace roomfuse
