// Command-line frontend: one binary with synth / reconstruct / eval-planes /
// eval-2d / render subcommands, driven by an INI-style config file whose keys
// CLI flags can override (flags win). Every command that writes does so into
// a run directory together with the fully resolved config, and refuses to
// overwrite existing files unless forced. The command functions are exposed
// here so tests can call them directly, without spawning a process.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "roomfuse/measurements.hpp"
#include "roomfuse/metrics.hpp"
#include "roomfuse/pipeline.hpp"
#include "roomfuse/synth.hpp"

namespace roomfuse {

/// Everything a run can configure, one member per config-file section.
struct AppConfig {
    Intrinsics intrinsics;
    RoomSpec room;
    TrajectorySpec trajectory;
    NoiseSpec noise;
    PipelineConfig pipeline;
};

/// Baseline configuration: the default 640x480 camera and a 4 m square room.
AppConfig default_config();

/// Apply `key = value` lines grouped under [section] headers to the config.
/// Unknown sections or keys and malformed values raise ConfigError with
/// `origin:line` context; `#` starts a comment; values may be double-quoted.
void apply_config_text(AppConfig& config, const std::string& text, const std::string& origin);

/// apply_config_text on a file's contents. Throws IoError when unreadable.
void apply_config_file(AppConfig& config, const std::filesystem::path& path);

/// Render the config as text the parser accepts; numbers keep full precision,
/// so serialize -> apply -> serialize is a fixed point.
std::string serialize_config(const AppConfig& config);

/// One row per config key, in file order: dotted name, meaning with unit, and
/// the default rendered from default_config(). Drives --help and the docs.
struct ConfigKeyDoc {
    std::string name; // section.key
    std::string describe;
    std::string default_value;
};
std::vector<ConfigKeyDoc> config_key_docs();

/// Generate a synthetic sequence: writes resolved.cfg, measurements.jsonl,
/// poses.traj, truth.obj (the exact room mesh) and truth.json (true planes
/// plus the per-frame visibility) into out_dir.
void cmd_synth(const AppConfig& config, const std::filesystem::path& out_dir, bool force,
               std::ostream& out);

/// Run the reconstruction pipeline on a measurement + pose file pair: writes
/// resolved.cfg, report.json and, when the run succeeds, layout.obj. The
/// returned report's ok() decides between exit 0 and 4; it is written either
/// way.
RunReport cmd_reconstruct(const AppConfig& config, const std::filesystem::path& measurement_path,
                          const std::filesystem::path& pose_path,
                          const std::filesystem::path& out_dir, bool force, std::ostream& out);

struct EvalPlanesOutcome {
    int matched = 0;
    int pred_total = 0;
    int gt_total = 0;
    NormalErrorStats normals;
    PlaneLocationStats location;
};

/// Match predicted to ground-truth detections by bounding box (IoU >= 0.5,
/// same frame and class) and score the matched planes: prints the two metric
/// tables and writes resolved.cfg + metrics.json. With no matches it only
/// warns, writes nothing, and the caller exits 4.
EvalPlanesOutcome cmd_eval_planes(const AppConfig& config, const std::filesystem::path& pred_path,
                                  const std::filesystem::path& gt_path,
                                  const std::filesystem::path& out_dir, bool force,
                                  std::ostream& out);

/// Pixel error between two label maps, printed as a percentage with two
/// decimals. Writes nothing.
double cmd_eval_2d(const std::filesystem::path& pred_path, const std::filesystem::path& gt_path,
                   std::ostream& out);

/// Reproject one frame's detections into a label image: writes resolved.cfg,
/// frame_<id>.pgm (labels) and frame_<id>.ppm (color preview). The frame must
/// have a pose (UnknownFrame otherwise); a frame without detections renders
/// all-background.
void cmd_render(const AppConfig& config, const std::filesystem::path& measurement_path,
                const std::filesystem::path& pose_path, int frame_id,
                const std::filesystem::path& out_dir, bool force, std::ostream& out);

/// Full argv-to-exit-code dispatch: parses flags, loads the config file,
/// applies overrides, runs the subcommand, and maps errors to exit codes
/// (0 ok, 2 usage/config, 3 IO/parse, 4 structured pipeline/eval failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace roomfuse
