#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "assetgen/metrics.hpp"
#include "assetgen/oracle.hpp"
#include "assetgen/refine.hpp"
#include "assetgen/texture.hpp"

namespace assetgen
{
    inline constexpr const char* kToolVersion = "1.0.0";

    struct ViewSpec
    {
        int count = 6;
        double radius = 2.0;
        double fov_deg = 40.0;
        int resolution = 256;
        int color_scale = 2;

        std::vector<CameraView> cameras() const;
    };

    struct PlaceParams
    {
        std::filesystem::path scene;
        std::filesystem::path asset; // empty: the textured mesh (pipeline) or the reference
        double asset_scale = 1.0;
        size_t n_poses = 4;
        double clearance = 0.3;
        int max_frames = 8;
        double ground_spacing = 0.25;
        CameraView camera; // look_at is replaced by the region center when auto_look_at
        bool auto_look_at = true;
    };

    // Everything a run needs. Paths are absolute after loading (relative ones resolve
    // against the config file's directory).
    struct PipelineConfig
    {
        uint64_t seed = 0;
        std::filesystem::path output = "runs";

        std::filesystem::path reference;
        bool normalize_reference = true;
        bool colorize_reference = true; // procedural colors for an uncolored reference

        std::filesystem::path mesh;        // texture / eval input
        std::filesystem::path supervision; // external supervision directory
        std::filesystem::path initial;     // starting mesh instead of init.mode

        ViewSpec views;
        NoiseSpec noise;
        InitMode init = InitMode::Sphere;
        RefinementConfig refine;
        TextureParams texture;
        GeometryParams metrics;
        PlaceParams place;
        int ablate_iterations = 30;

        // Copies the seed into every stochastic stage.
        void propagate_seed();
    };

    enum class Command
    {
        Supervise,
        Refine,
        Texture,
        Eval,
        Place,
        Pipeline,
        Ablate,
    };

    std::string to_string(Command c);

    // TOML text -> config. Unknown keys, wrong types and out-of-range values throw
    // ConfigError prefixed with "<source>:<line>:<column>".
    PipelineConfig parse_config(const std::string& text, const std::string& source_name, const std::filesystem::path& base_dir);
    PipelineConfig load_config(const std::filesystem::path& path);

    // Fully resolved config as TOML; parse_config(to_toml(c)) reproduces c.
    std::string to_toml(const PipelineConfig& config);

    // Value checks plus DataError for referenced files the command needs but that do not exist.
    void validate_for(const PipelineConfig& config, Command command);

    // <base>/<command>-<UTC timestamp>[-n], created fresh.
    std::filesystem::path make_run_dir(const std::filesystem::path& base, Command command);

    // config.toml (resolved) and run.json (tool, version, command, config hash).
    void write_run_metadata(const std::filesystem::path& run_dir, const PipelineConfig& config, Command command);

    // Each command writes its outputs into run_dir. Progress goes to stderr; files hold
    // no timings, so reruns with the same config are byte-identical.
    void cmd_supervise(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_refine(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_texture(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_eval(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_place(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_pipeline(const PipelineConfig& config, const std::filesystem::path& run_dir);
    void cmd_ablate_iterations(const PipelineConfig& config, const std::filesystem::path& run_dir);

    void run_command(Command command, const PipelineConfig& config, const std::filesystem::path& run_dir);

    struct AblationRow
    {
        int iteration = 0;
        double chamfer = 0.0;
        double f_score = 0.0;
    };

    // Refines for config.ablate_iterations iterations and scores the initial mesh (row 0)
    // and every iteration's mesh against the reference.
    std::vector<AblationRow> ablate_iterations(const TriangleMesh& reference, const SupervisionSet& supervision,
        const TriangleMesh& initial, const PipelineConfig& config);
    std::string ablation_csv(const std::vector<AblationRow>& rows);
} // namespace assetgen
