#include "roomfuse/cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "roomfuse/layout.hpp"

namespace fs = std::filesystem;

namespace roomfuse {

namespace {

using nlohmann::ordered_json;

// Shortest round-trip decimal form, so resolved configs reload exactly.
std::string format_double(double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("not a number: '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("not an integer: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("not a non-negative integer: '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("not a boolean (true/false): '" + s + "'");
}

std::string footprint_to_json(const std::vector<Vec2>& footprint) {
    ordered_json j = ordered_json::array();
    for (const Vec2& v : footprint) j.push_back({v.x(), v.y()});
    return j.dump();
}

std::vector<Vec2> footprint_from_json(const std::string& s) {
    ordered_json j;
    try {
        j = ordered_json::parse(s);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("footprint is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw ConfigError("footprint must be a JSON array of [x, y] pairs");
    std::vector<Vec2> footprint;
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError("footprint must be a JSON array of [x, y] pairs");
        footprint.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    return footprint;
}

/// One addressable config key: where it lives, what it means (with unit),
/// and string-typed accessors the file parser, the flag overrides, the
/// serializer, and --help all share.
struct KeySpec {
    std::string section;
    std::string key;
    std::string describe;
    std::function<std::string(const AppConfig&)> get;
    std::function<void(AppConfig&, const std::string&)> set;
};

// The field accessor is a generic lambda like [](auto& c) -> auto& { ... },
// so the same object serves the const getter and the mutating setter.
template <typename F>
KeySpec double_key(const char* section, const char* key, const char* describe, F field) {
    return {section, key, describe,
            [field](const AppConfig& c) { return format_double(field(c)); },
            [field](AppConfig& c, const std::string& v) { field(c) = parse_double(v); }};
}

template <typename F>
KeySpec int_key(const char* section, const char* key, const char* describe, F field) {
    return {section, key, describe,
            [field](const AppConfig& c) { return std::to_string(field(c)); },
            [field](AppConfig& c, const std::string& v) { field(c) = parse_int(v); }};
}

template <typename F>
KeySpec u64_key(const char* section, const char* key, const char* describe, F field) {
    return {section, key, describe,
            [field](const AppConfig& c) { return std::to_string(field(c)); },
            [field](AppConfig& c, const std::string& v) { field(c) = parse_u64(v); }};
}

template <typename F>
KeySpec bool_key(const char* section, const char* key, const char* describe, F field) {
    return {section, key, describe,
            [field](const AppConfig& c) { return field(c) ? std::string("true") : std::string("false"); },
            [field](AppConfig& c, const std::string& v) { field(c) = parse_bool(v); }};
}

template <typename F>
KeySpec optional_double_key(const char* section, const char* key, const char* describe, F field) {
    return {section, key, describe,
            [field](const AppConfig& c) {
                const std::optional<double>& v = field(c);
                return v ? format_double(*v) : std::string("none");
            },
            [field](AppConfig& c, const std::string& v) {
                if (v == "none")
                    field(c).reset();
                else
                    field(c) = parse_double(v);
            }};
}

const std::vector<KeySpec>& registry() {
    static const std::vector<KeySpec> keys = {
        double_key("intrinsics", "fx", "focal length x, pixels",
                   [](auto& c) -> auto& { return c.intrinsics.fx; }),
        double_key("intrinsics", "fy", "focal length y, pixels",
                   [](auto& c) -> auto& { return c.intrinsics.fy; }),
        double_key("intrinsics", "cx", "principal point x, pixels",
                   [](auto& c) -> auto& { return c.intrinsics.cx; }),
        double_key("intrinsics", "cy", "principal point y, pixels",
                   [](auto& c) -> auto& { return c.intrinsics.cy; }),
        int_key("intrinsics", "width", "image width, pixels",
                [](auto& c) -> auto& { return c.intrinsics.width; }),
        int_key("intrinsics", "height", "image height, pixels",
                [](auto& c) -> auto& { return c.intrinsics.height; }),

        {"room", "footprint", "wall outline as JSON [[x, y], ...], meters, counter-clockwise",
         [](const AppConfig& c) { return footprint_to_json(c.room.footprint); },
         [](AppConfig& c, const std::string& v) { c.room.footprint = footprint_from_json(v); }},
        double_key("room", "floor_z", "floor elevation, meters",
                   [](auto& c) -> auto& { return c.room.floor_z; }),
        double_key("room", "height", "floor-to-ceiling height, meters",
                   [](auto& c) -> auto& { return c.room.height; }),

        {"trajectory", "mode", "camera path: orbit or random_walk",
         [](const AppConfig& c) { return std::string(to_string(c.trajectory.mode)); },
         [](AppConfig& c, const std::string& v) {
             try {
                 c.trajectory.mode = trajectory_mode_from_string(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
             }
         }},
        int_key("trajectory", "frames", "number of frames, count",
                [](auto& c) -> auto& { return c.trajectory.frames; }),
        u64_key("trajectory", "seed", "random seed for the camera path and the noise",
                [](auto& c) -> auto& { return c.trajectory.seed; }),
        double_key("trajectory", "eye_height", "camera height above the floor, meters",
                   [](auto& c) -> auto& { return c.trajectory.eye_height; }),

        double_key("noise", "sigma_normal_deg", "plane normal tilt sigma, degrees",
                   [](auto& c) -> auto& { return c.noise.sigma_normal_deg; }),
        double_key("noise", "sigma_d_m", "plane offset sigma, meters",
                   [](auto& c) -> auto& { return c.noise.sigma_d_m; }),
        double_key("noise", "sigma_bbox_px", "bounding-box corner jitter sigma, pixels",
                   [](auto& c) -> auto& { return c.noise.sigma_bbox_px; }),
        double_key("noise", "p_dropout", "chance of losing a visible detection, probability",
                   [](auto& c) -> auto& { return c.noise.p_dropout; }),
        double_key("noise", "p_spurious", "chance of one junk detection per frame, probability",
                   [](auto& c) -> auto& { return c.noise.p_spurious; }),
        bool_key("noise", "heavy_tail", "mix in 3x outliers at 10 percent, true or false",
                 [](auto& c) -> auto& { return c.noise.heavy_tail; }),

        double_key("pipeline", "min_angle_deg",
                   "grazing filter: minimum view angle onto a surface, degrees",
                   [](auto& c) -> auto& { return c.pipeline.min_angle_deg; }),
        double_key("pipeline", "w_min",
                   "minimum mixture weight for a cluster to become a room plane, fraction",
                   [](auto& c) -> auto& { return c.pipeline.w_min; }),
        int_key("pipeline", "k_max_walls", "mixture components for wall clustering, count",
                [](auto& c) -> auto& { return c.pipeline.k_max_walls; }),
        int_key("pipeline", "k_max_fc", "mixture components for floor/ceiling clustering, count",
                [](auto& c) -> auto& { return c.pipeline.k_max_fc; }),
        int_key("pipeline", "n_voters", "cluster members that vote per candidate segment, count",
                [](auto& c) -> auto& { return c.pipeline.n_voters; }),
        double_key("pipeline", "t_vc", "inlier bar on the voter-area overlap, fraction",
                   [](auto& c) -> auto& { return c.pipeline.voting.t_vc; }),
        double_key("pipeline", "t_cv", "inlier bar on the candidate-area overlap, fraction",
                   [](auto& c) -> auto& { return c.pipeline.voting.t_cv; }),
        double_key("pipeline", "a", "inlier-ratio exponent in the segment energy, unitless",
                   [](auto& c) -> auto& { return c.pipeline.voting.a; }),
        double_key("pipeline", "e_min", "segment acceptance energy threshold, unitless",
                   [](auto& c) -> auto& { return c.pipeline.voting.e_min; }),
        int_key("pipeline", "v_min", "minimum voters for a segment to be accepted, count",
                [](auto& c) -> auto& { return c.pipeline.voting.v_min; }),
        {"pipeline", "ratio_mode", "energy scaling: divide_paper_literal or multiply_corrected",
         [](const AppConfig& c) { return std::string(to_string(c.pipeline.voting.ratio_mode)); },
         [](AppConfig& c, const std::string& v) {
             try {
                 c.pipeline.voting.ratio_mode = ratio_mode_from_string(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
             }
         }},
        double_key("pipeline", "gap_m",
                   "assumed floor-to-ceiling distance when only one is seen, meters",
                   [](auto& c) -> auto& { return c.pipeline.gap_m; }),
        double_key("pipeline", "margin_m", "scene bounds inflation, meters",
                   [](auto& c) -> auto& { return c.pipeline.margin_m; }),
        u64_key("pipeline", "seed", "random seed for the mixture initialization",
                [](auto& c) -> auto& { return c.pipeline.seed; }),
        double_key("pipeline", "s_n", "normal scale in the clustering feature, unitless",
                   [](auto& c) -> auto& { return c.pipeline.s_n; }),
        optional_double_key("pipeline", "fallback_floor_z",
                            "floor elevation used when no horizontal cluster is found, meters or none",
                            [](auto& c) -> auto& { return c.pipeline.fallback_floor_z; }),
        optional_double_key("pipeline", "fallback_height",
                            "room height used when no horizontal cluster is found, meters or none",
                            [](auto& c) -> auto& { return c.pipeline.fallback_height; }),
    };
    return keys;
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
    for (const KeySpec& k : registry())
        if (k.section == section && k.key == key) return &k;
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const KeySpec& k : registry())
        if (k.section == section) return true;
    return false;
}

std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && is_space(s[i])) ++i;
    return s.substr(i);
}

void ensure_run_dir(const fs::path& out_dir, const std::vector<std::string>& outputs,
                    bool force) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create run directory " + out_dir.string() + ": " + ec.message());
    if (force) return;
    for (const std::string& name : outputs)
        if (fs::exists(out_dir / name))
            throw ConfigError("refusing to overwrite " + (out_dir / name).string() +
                              "; pass --force");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed while writing " + path.string());
}

ordered_json plane_json(const Plane& p) {
    return {{"normal", {p.normal().x(), p.normal().y(), p.normal().z()}},
            {"offset", p.offset()}};
}

std::string ground_truth_json(const RoomSpec& room, const GroundTruth& truth) {
    ordered_json j;
    ordered_json footprint = ordered_json::array();
    for (const Vec2& v : room.footprint) footprint.push_back({v.x(), v.y()});
    j["room"] = {{"footprint", footprint}, {"floor_z", room.floor_z}, {"height", room.height}};
    ordered_json walls = ordered_json::array();
    for (const WallTruth& w : truth.surfaces.walls) walls.push_back(plane_json(w.plane));
    j["surfaces"] = {{"walls", walls},
                     {"floor", plane_json(truth.surfaces.floor)},
                     {"ceiling", plane_json(truth.surfaces.ceiling)}};
    ordered_json visibility = ordered_json::object();
    for (const auto& [frame, ids] : truth.visibility)
        visibility[std::to_string(frame)] = ids;
    j["visibility"] = visibility;
    return j.dump(2) + "\n";
}

} // namespace

AppConfig default_config() {
    AppConfig c;
    c.intrinsics = {520.0, 520.0, 320.0, 240.0, 640, 480};
    c.room.footprint = {Vec2(-2.0, -2.0), Vec2(2.0, -2.0), Vec2(2.0, 2.0), Vec2(-2.0, 2.0)};
    return c;
}

void apply_config_text(AppConfig& config, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    const auto fail = [&](const std::string& why) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section)) fail("unknown config section '" + section + "'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (section.empty()) fail("key '" + key + "' appears before any [section]");
        const KeySpec* spec = find_key(section, key);
        if (!spec) fail("unknown config key " + section + "." + key);
        try {
            spec->set(config, value);
        } catch (const ConfigError& e) {
            fail(section + "." + key + ": " + e.what());
        }
    }
}

void apply_config_file(AppConfig& config, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(config, text.str(), path.string());
}

std::string serialize_config(const AppConfig& config) {
    std::ostringstream out;
    std::string section;
    for (const KeySpec& k : registry()) {
        if (k.section != section) {
            if (!section.empty()) out << "\n";
            out << "[" << k.section << "]\n";
            section = k.section;
        }
        out << k.key << " = " << k.get(config) << "\n";
    }
    return out.str();
}

std::vector<ConfigKeyDoc> config_key_docs() {
    const AppConfig defaults = default_config();
    std::vector<ConfigKeyDoc> docs;
    docs.reserve(registry().size());
    for (const KeySpec& k : registry())
        docs.push_back({k.section + "." + k.key, k.describe, k.get(defaults)});
    return docs;
}

void cmd_synth(const AppConfig& config, const fs::path& out_dir, bool force, std::ostream& out) {
    AppConfig cfg = config;
    cfg.intrinsics.validate();
    cfg.room.validate();
    cfg.trajectory.validate();
    cfg.noise.validate();

    const SynthResult result =
        generate_sequence(cfg.room, cfg.trajectory, cfg.intrinsics, cfg.noise);

    ensure_run_dir(out_dir,
                   {"resolved.cfg", "measurements.jsonl", "poses.traj", "truth.obj", "truth.json"},
                   force);
    write_text(out_dir / "resolved.cfg", serialize_config(cfg));
    save_sequence(result.bundle, out_dir / "measurements.jsonl", out_dir / "poses.traj");
    export_mesh(ground_truth_layout(cfg.room), out_dir / "truth.obj");
    write_text(out_dir / "truth.json", ground_truth_json(cfg.room, result.truth));

    out << "wrote " << (out_dir / "resolved.cfg").string() << "\n";
    out << "wrote " << (out_dir / "measurements.jsonl").string() << " ("
        << result.bundle.measurements.size() << " detections over " << result.bundle.poses.size()
        << " frames)\n";
    out << "wrote " << (out_dir / "poses.traj").string() << "\n";
    out << "wrote " << (out_dir / "truth.obj").string() << " ("
        << result.truth.surfaces.walls.size() << " walls)\n";
    out << "wrote " << (out_dir / "truth.json").string() << "\n";
}

RunReport cmd_reconstruct(const AppConfig& config, const fs::path& measurement_path,
                          const fs::path& pose_path, const fs::path& out_dir, bool force,
                          std::ostream& out) {
    AppConfig cfg = config;
    cfg.intrinsics.validate();
    cfg.pipeline.validate();

    const SequenceBundle bundle = load_sequence(measurement_path, pose_path, cfg.intrinsics);
    const ReconstructionResult result = reconstruct(bundle, cfg.pipeline);

    ensure_run_dir(out_dir, {"resolved.cfg", "report.json", "layout.obj"}, force);
    write_text(out_dir / "resolved.cfg", serialize_config(cfg));
    save_report(result.report, out_dir / "report.json");
    out << "wrote " << (out_dir / "resolved.cfg").string() << "\n";
    out << "wrote " << (out_dir / "report.json").string() << "\n";
    if (result.layout) {
        export_mesh(*result.layout, out_dir / "layout.obj");
        out << "wrote " << (out_dir / "layout.obj").string() << " (" << result.layout->wall_count()
            << " wall segments, accepted " << result.report.counts.accepted << " of "
            << result.report.counts.candidates << " candidates)\n";
    } else {
        // Drop a stale layout from an earlier (forced) run so the directory
        // never pairs a failed report with someone else's mesh.
        std::error_code ec;
        fs::remove(out_dir / "layout.obj", ec);
        out << "reconstruction failed: " << result.report.failure << " ("
            << result.report.failure_detail << ")\n";
    }
    return result.report;
}

EvalPlanesOutcome cmd_eval_planes(const AppConfig& config, const fs::path& pred_path,
                                  const fs::path& gt_path, const fs::path& out_dir, bool force,
                                  std::ostream& out) {
    AppConfig cfg = config;
    cfg.intrinsics.validate();

    const std::vector<Measurement> preds = load_measurements(pred_path, cfg.intrinsics);
    const std::vector<Measurement> gts = load_measurements(gt_path, cfg.intrinsics);
    const std::vector<MatchedPair> pairs = match_by_bbox(preds, gts);

    EvalPlanesOutcome outcome;
    outcome.pred_total = static_cast<int>(preds.size());
    outcome.gt_total = static_cast<int>(gts.size());
    outcome.matched = static_cast<int>(pairs.size());
    if (pairs.empty()) {
        out << "warning: no prediction matched a ground-truth box at IoU >= 0.5 (" << preds.size()
            << " predictions, " << gts.size() << " ground truth)\n";
        return outcome;
    }

    std::vector<std::pair<Plane, Plane>> normal_pairs;
    std::vector<PlaneLocationItem> items;
    normal_pairs.reserve(pairs.size());
    items.reserve(pairs.size());
    for (const MatchedPair& m : pairs) {
        const Measurement& p = preds[m.pred];
        const Measurement& g = gts[m.gt];
        normal_pairs.push_back({p.plane_cam, g.plane_cam});
        // The protocol scores the region the detector claimed, so pixels come
        // from the predicted box.
        items.push_back({p.plane_cam, p.bbox, cfg.intrinsics, g.plane_cam});
    }
    outcome.normals = normal_error_stats(normal_pairs);
    outcome.location = plane_location_stats(items);

    ensure_run_dir(out_dir, {"resolved.cfg", "metrics.json"}, force);
    write_text(out_dir / "resolved.cfg", serialize_config(cfg));
    write_text(out_dir / "metrics.json",
               plane_metrics_json(outcome.normals, outcome.location) + "\n");

    out << "matched " << outcome.matched << " of " << preds.size() << " predictions to "
        << gts.size() << " ground-truth detections\n";
    out << format_plane_metric_tables(outcome.normals, outcome.location);
    out << "wrote " << (out_dir / "metrics.json").string() << "\n";
    return outcome;
}

double cmd_eval_2d(const fs::path& pred_path, const fs::path& gt_path, std::ostream& out) {
    const LabelImage pred = load_pgm(pred_path);
    const LabelImage gt = load_pgm(gt_path);
    const double error = pixel_error_2d(pred, gt);
    std::array<char, 32> buf;
    std::snprintf(buf.data(), buf.size(), "%.2f", error);
    out << "pixel error: " << buf.data() << "%\n";
    return error;
}

void cmd_render(const AppConfig& config, const fs::path& measurement_path,
                const fs::path& pose_path, int frame_id, const fs::path& out_dir, bool force,
                std::ostream& out) {
    AppConfig cfg = config;
    cfg.intrinsics.validate();

    const std::map<int, Pose> poses = load_poses(pose_path);
    if (poses.find(frame_id) == poses.end()) throw UnknownFrame(frame_id);
    const std::vector<Measurement> all = load_measurements(measurement_path, cfg.intrinsics);
    std::vector<Measurement> frame_measurements;
    std::copy_if(all.begin(), all.end(), std::back_inserter(frame_measurements),
                 [frame_id](const Measurement& m) { return m.frame_id == frame_id; });

    const LabelImage image = render_layout2d(frame_measurements, cfg.intrinsics);

    const std::string stem = "frame_" + std::to_string(frame_id);
    ensure_run_dir(out_dir, {"resolved.cfg", stem + ".pgm", stem + ".ppm"}, force);
    write_text(out_dir / "resolved.cfg", serialize_config(cfg));
    save_pgm(image, out_dir / (stem + ".pgm"));
    save_ppm(image, out_dir / (stem + ".ppm"));
    out << "wrote " << (out_dir / (stem + ".pgm")).string() << " and "
        << (out_dir / (stem + ".ppm")).string() << " (" << frame_measurements.size()
        << " detections)\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fuse per-frame plane detections into a single 3D room layout", "roomfuse"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    app.get_formatter()->column_width(38);

    std::string config_path;
    CLI::Option* config_opt =
        app.add_option("--config", config_path, "config file applied before flag overrides");
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override trajectory.seed and pipeline.seed together");
    int threads = 1;
    app.add_option("--threads", threads,
                   "upper bound on worker threads (every stage currently runs sequentially)")
        ->check(CLI::PositiveNumber);
    bool force = false;
    app.add_flag("--force", force, "overwrite existing files in the run directory");
    std::string out_dir = "run";
    app.add_option("--out", out_dir, "run directory for all outputs")
        ->capture_default_str();

    // Every config key doubles as a --section.key flag; flags win over the
    // file because they are applied after it.
    const AppConfig defaults = default_config();
    std::map<std::string, std::string> override_values;
    std::vector<std::pair<const KeySpec*, CLI::Option*>> override_opts;
    std::map<std::string, CLI::Option_group*> groups;
    for (const KeySpec& k : registry()) {
        auto [slot_it, inserted] = groups.try_emplace(k.section, nullptr);
        if (inserted)
            slot_it->second = app.add_option_group("config: " + k.section);
        const std::string name = k.section + "." + k.key;
        CLI::Option* opt = slot_it->second->add_option(
            "--" + name, override_values[name], k.describe + " (default " + k.get(defaults) + ")");
        override_opts.emplace_back(&k, opt);
    }

    std::string measurement_path, pose_path, pred_path, gt_path;
    int frame_id = 0;

    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic detection sequence with ground truth");
    CLI::App* rec =
        app.add_subcommand("reconstruct", "fuse a detection sequence into a room layout");
    rec->add_option("--measurements", measurement_path, "detection file (.jsonl)")->required();
    rec->add_option("--poses", pose_path, "trajectory file (.traj)")->required();
    CLI::App* evp = app.add_subcommand(
        "eval-planes", "score predicted plane detections against ground-truth detections");
    evp->add_option("--pred", pred_path, "predicted detection file (.jsonl)")->required();
    evp->add_option("--gt", gt_path, "ground-truth detection file (.jsonl)")->required();
    CLI::App* ev2 = app.add_subcommand("eval-2d", "pixel error between two label maps");
    ev2->add_option("--pred", pred_path, "predicted label map (.pgm)")->required();
    ev2->add_option("--gt", gt_path, "ground-truth label map (.pgm)")->required();
    CLI::App* ren =
        app.add_subcommand("render", "reproject one frame's detections into a label image");
    ren->add_option("--measurements", measurement_path, "detection file (.jsonl)")->required();
    ren->add_option("--poses", pose_path, "trajectory file (.traj)")->required();
    ren->add_option("--frame", frame_id, "frame id to render")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2; // --help and --version exit 0, usage errors 2
    }

    try {
        AppConfig cfg = defaults;
        if (config_opt->count() > 0) apply_config_file(cfg, config_path);
        for (const auto& [spec, opt] : override_opts) {
            if (opt->count() == 0) continue;
            const std::string name = spec->section + "." + spec->key;
            try {
                spec->set(cfg, override_values[name]);
            } catch (const ConfigError& e) {
                throw ConfigError("--" + name + ": " + e.what());
            }
        }
        if (seed) {
            cfg.trajectory.seed = *seed;
            cfg.pipeline.seed = *seed;
        }
        (void)threads; // accepted as an upper bound; every stage is sequential

        if (app.got_subcommand(synth)) {
            cmd_synth(cfg, out_dir, force, out);
            return 0;
        }
        if (app.got_subcommand(rec))
            return cmd_reconstruct(cfg, measurement_path, pose_path, out_dir, force, out).ok()
                       ? 0
                       : 4;
        if (app.got_subcommand(evp))
            return cmd_eval_planes(cfg, pred_path, gt_path, out_dir, force, out).matched > 0 ? 0
                                                                                             : 4;
        if (app.got_subcommand(ev2)) {
            cmd_eval_2d(pred_path, gt_path, out);
            return 0;
        }
        if (app.got_subcommand(ren)) {
            cmd_render(cfg, measurement_path, pose_path, frame_id, out_dir, force, out);
            return 0;
        }
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionMismatch& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const InvariantViolation& e) {
        // Loaders raise this for records that parse but fail validation.
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const MissingPose& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return 3;
    } catch (const PipelineFailure& e) {
        err << "pipeline failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace roomfuse
