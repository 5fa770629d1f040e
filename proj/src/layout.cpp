#include "roomfuse/layout.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace roomfuse {

namespace {

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_face_fan(std::ostream& os, int first_vertex, int count) {
    for (int k = 1; k + 1 < count; ++k)
        os << "f " << first_vertex << ' ' << first_vertex + k << ' ' << first_vertex + k + 1
           << '\n';
}

void write_polygon(std::ostream& os, const PlanarPolygon& poly, const char* name,
                   int& next_vertex) {
    os << "o " << name << '\n';
    for (const Vec3& v : poly.lifted())
        os << "v " << fmt9(v.x()) << ' ' << fmt9(v.y()) << ' ' << fmt9(v.z()) << '\n';
    write_face_fan(os, next_vertex, static_cast<int>(poly.size()));
    next_vertex += static_cast<int>(poly.size());
}

constexpr std::array<std::array<int, 3>, 12> kPalette = {{{230, 25, 75},
                                                          {60, 180, 75},
                                                          {255, 225, 25},
                                                          {0, 130, 200},
                                                          {245, 130, 48},
                                                          {145, 30, 180},
                                                          {70, 240, 240},
                                                          {240, 50, 230},
                                                          {210, 245, 60},
                                                          {250, 190, 212},
                                                          {0, 128, 128},
                                                          {220, 190, 255}}};

} // namespace

double RoomLayout::total_wall_area() const {
    double a = 0.0;
    for (const PlanarPolygon& w : walls) a += w.area();
    return a;
}

RoomLayout assemble(const std::vector<CandidateSegment>& candidates, const Plane& floor,
                    const Plane& ceiling, const SceneBounds& bounds) {
    RoomLayout layout;
    layout.floor = floor;
    layout.ceiling = ceiling;
    layout.bounds = bounds;
    // Slab interior is the side of each plane a mid-reference point lies on,
    // matching the convention the candidate generator clipped with.
    const Vec3 mid = 0.5 * (floor.project(bounds.center()) + ceiling.project(bounds.center()));
    const double sf = floor.signed_distance(mid) >= 0.0 ? 1.0 : -1.0;
    const double sc = ceiling.signed_distance(mid) >= 0.0 ? 1.0 : -1.0;
    for (const CandidateSegment& c : candidates) {
        if (!c.accepted) continue;
        for (const Vec3& v : c.polygon.lifted())
            if (sf * floor.signed_distance(v) < -tol().on_plane ||
                sc * ceiling.signed_distance(v) < -tol().on_plane)
                throw InvariantViolation("assemble: wall vertex outside the floor-ceiling slab");
        layout.walls.push_back(c.polygon);
    }
    if (layout.walls.empty()) throw EmptyLayout();
    return layout;
}

void export_mesh(const RoomLayout& layout, const std::filesystem::path& path) {
    if (layout.walls.empty()) throw EmptyLayout();

    std::ostringstream os;
    os << "# roomfuse " << kVersion << " room layout\n";
    os << "# walls: " << layout.walls.size() << "  wall area: " << fmt9(layout.total_wall_area())
       << " m^2\n";
    os << "# floor:";
    for (int i = 0; i < 4; ++i) os << ' ' << fmt9(layout.floor.coeffs()[i]);
    os << "\n# ceiling:";
    for (int i = 0; i < 4; ++i) os << ' ' << fmt9(layout.ceiling.coeffs()[i]);
    os << "\n# bounds:";
    for (int i = 0; i < 3; ++i) os << ' ' << fmt9(layout.bounds.min[i]);
    for (int i = 0; i < 3; ++i) os << ' ' << fmt9(layout.bounds.max[i]);
    os << '\n';

    int next_vertex = 1;
    for (std::size_t i = 0; i < layout.walls.size(); ++i)
        write_polygon(os, layout.walls[i], ("wall_" + std::to_string(i)).c_str(), next_vertex);
    write_polygon(os, clip_plane_to_bounds(layout.floor, layout.bounds), "floor", next_vertex);
    write_polygon(os, clip_plane_to_bounds(layout.ceiling, layout.bounds), "ceiling", next_vertex);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << os.str();
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

LabelImage render_layout2d(const std::vector<Measurement>& frame_measurements,
                           const Intrinsics& K) {
    K.validate();
    for (std::size_t i = 1; i < frame_measurements.size(); ++i)
        if (frame_measurements[i].frame_id != frame_measurements[0].frame_id)
            throw InvariantViolation("render_layout2d: measurements span multiple frames");

    LabelImage img;
    img.width = K.width;
    img.height = K.height;
    img.labels.assign(static_cast<std::size_t>(K.width) * K.height, 0);
    img.depth.assign(static_cast<std::size_t>(K.width) * K.height,
                     std::numeric_limits<double>::infinity());

    for (std::size_t det = 0; det < frame_measurements.size(); ++det) {
        const Measurement& m = frame_measurements[det];
        // Pixels whose centers fall inside the (continuous) box.
        const int px0 = std::max(0, static_cast<int>(std::ceil(m.bbox.x0 - 0.5)));
        const int px1 = std::min(K.width - 1, static_cast<int>(std::floor(m.bbox.x1 - 0.5)));
        const int py0 = std::max(0, static_cast<int>(std::ceil(m.bbox.y0 - 0.5)));
        const int py1 = std::min(K.height - 1, static_cast<int>(std::floor(m.bbox.y1 - 0.5)));

        for (int py = py0; py <= py1; ++py) {
            for (int px = px0; px <= px1; ++px) {
                double depth;
                try {
                    depth = backproject_pixel(Vec2(px + 0.5, py + 0.5), K, m.plane_cam).z();
                } catch (const RayParallel&) {
                    continue;
                } catch (const BehindCamera&) {
                    continue;
                }
                const std::size_t at = static_cast<std::size_t>(py) * K.width + px;
                if (depth < img.depth[at] - 1e-9) {
                    img.depth[at] = depth;
                    img.labels[at] = static_cast<int>(det) + 1;
                }
            }
        }
    }

    for (std::size_t i = 0; i < img.labels.size(); ++i)
        if (img.labels[i] == 0) img.depth[i] = 0.0;
    return img;
}

void save_pgm(const LabelImage& image, const std::filesystem::path& path) {
    int maxval = 1;
    for (int l : image.labels) maxval = std::max(maxval, l);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P2\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (x) out << ' ';
            out << image.label_at(x, y);
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

LabelImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string magic;
    in >> magic;
    if (magic != "P2") throw ParseError(1, "expected ASCII PGM magic P2, got '" + magic + "'");

    LabelImage img;
    int maxval = 0;
    if (!(in >> img.width >> img.height >> maxval))
        throw ParseError(1, "malformed PGM header");
    if (img.width <= 0 || img.height <= 0 || maxval <= 0)
        throw ParseError(1, "PGM dimensions and maxval must be positive");

    img.labels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < img.labels.size(); ++i) {
        if (!(in >> img.labels[i]))
            throw ParseError(1, "PGM truncated at sample " + std::to_string(i));
        if (img.labels[i] < 0 || img.labels[i] > maxval)
            throw ParseError(1, "PGM sample out of range at " + std::to_string(i));
    }
    return img;
}

void save_ppm(const LabelImage& image, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P3\n" << image.width << ' ' << image.height << '\n' << 255 << '\n';
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const int l = image.label_at(x, y);
            const std::array<int, 3> rgb =
                l == 0 ? std::array<int, 3>{0, 0, 0} : kPalette[(l - 1) % kPalette.size()];
            if (x) out << "  ";
            out << rgb[0] << ' ' << rgb[1] << ' ' << rgb[2];
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

} // namespace roomfuse
