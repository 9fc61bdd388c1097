#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "assetgen/corpus.hpp"
#include "assetgen/errors.hpp"
#include "assetgen/parallel.hpp"
#include "assetgen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace assetgen;

namespace
{
    const fs::path kData = ASSETGEN_DATA_DIR;

    std::string config_error(const std::string& text)
    {
        try
        {
            parse_config(text, "run.toml", "/base");
        }
        catch (const ConfigError& e)
        {
            return e.what();
        }
        return "no error";
    }

    std::string slurp(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path scratch(const std::string& name)
    {
        const fs::path dir = fs::temp_directory_path() / ("assetgen_test_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    std::string quick_config(const fs::path& data)
    {
        return "seed = 3\n[reference]\npath = \"" + (data / "corpus" / "icosphere.obj").string() +
               "\"\n[views]\nresolution = 64\n[refine]\niterations = 2\ninner_steps = 3\n[metrics]\nsamples = 2048\nvoxel_resolution = 16\n";
    }
} // namespace

TEST_CASE("config defaults and overrides")
{
    const PipelineConfig d = parse_config("", "run.toml", "/base");
    CHECK(d.refine.iterations == 20);
    CHECK(d.refine.lambda_mask == 1.0);
    CHECK(d.refine.lambda_lap == 0.5);
    CHECK(d.views.count == 6);
    CHECK(d.views.resolution == 256);
    CHECK(d.place.clearance == 0.3);
    CHECK(d.output == fs::path("/base/runs"));

    const PipelineConfig c = parse_config("seed = 42\noutput = \"/abs/out\"\n[reference]\npath = \"shapes/a.obj\"\n"
                                          "[refine]\noptimizer = \"sgd\"\nstep_size = 2\n[noise]\nmask_radius = -2\n",
        "run.toml", "/base");
    CHECK(c.seed == 42);
    CHECK(c.noise.seed == 42);
    CHECK(c.refine.seed == 42);
    CHECK(c.metrics.seed == 42);
    CHECK(c.output == fs::path("/abs/out"));
    CHECK(c.reference == fs::path("/base/shapes/a.obj"));
    CHECK(c.refine.optimizer == OptimizerKind::Sgd);
    CHECK(c.refine.step_size == 2.0);
    CHECK(c.noise.mask_radius == -2);
}

TEST_CASE("config errors carry file, line and column")
{
    CHECK(config_error("seed = 1\n[refine]\niteratons = 3\n") == "run.toml:3:1: unknown key 'refine.iteratons'");
    CHECK(config_error("[refine]\niterations = \"x\"\n") == "run.toml:2:14: refine.iterations: expected an integer");
    CHECK(config_error("[refine]\niterations = 0\n") == "run.toml:2:14: refine.iterations: value 0 outside [1, 100000]");
    CHECK(config_error("[views]\ncount = 5\n") == "run.toml:2:9: views.count: expected 4, 6 or 8");
    CHECK(config_error("[init]\nmode = \"cone\"\n").rfind("run.toml:2:8: init.mode: ", 0) == 0);
    CHECK(config_error("[refine]\nedge_length_start = 0.01\nedge_length_end = 0.05\n") ==
          "run.toml:3:19: refine.edge_length_end: must not exceed refine.edge_length_start");
    CHECK(config_error("[place.camera]\nlook_at = [1, 2]\n") == "run.toml:2:11: place.camera.look_at: expected an array of 3 numbers");
    CHECK(config_error("[noise]\nnormal_sigma_deg = true\n") == "run.toml:2:20: noise.normal_sigma_deg: expected a number");
    CHECK(config_error("[bogus]\nx = 1\n") == "run.toml:1:2: unknown key 'bogus'");
    CHECK(config_error("[refine\n").rfind("run.toml:1:8: ", 0) == 0);
}

TEST_CASE("resolved config round trips")
{
    PipelineConfig c = parse_config("seed = 9\n[reference]\npath = \"a.obj\"\n[refine]\nremesh = false\ngradient_smoothing = 2.5\n"
                                    "[place.camera]\nlook_at = [1, 2, 3]\n",
        "run.toml", "/base");
    const std::string text = to_toml(c);
    const PipelineConfig back = parse_config(text, "resolved.toml", "/elsewhere");
    CHECK(to_toml(back) == text);
    CHECK(back.reference == fs::path("/base/a.obj"));
    CHECK_FALSE(back.refine.remesh);
    CHECK_FALSE(back.place.auto_look_at);
    CHECK(back.place.camera.look_at == Vec3(1, 2, 3));
    CHECK(to_toml(parse_config(to_toml(parse_config("", "x", "/b")), "y", "/c")) == to_toml(parse_config("", "x", "/b")));
}

TEST_CASE("validation names missing files")
{
    PipelineConfig c = parse_config("[reference]\npath = \"/nonexistent/ref.obj\"\n", "run.toml", "/base");
    try
    {
        validate_for(c, Command::Refine);
        FAIL("expected an error");
    }
    catch (const DataError& e)
    {
        CHECK(std::string(e.what()).find("/nonexistent/ref.obj") != std::string::npos);
    }
    c.reference = kData / "corpus" / "cube.obj";
    CHECK_NOTHROW(validate_for(c, Command::Refine));
    CHECK_THROWS_AS(validate_for(c, Command::Eval), DataError); // input.mesh unset
    CHECK_THROWS_AS(validate_for(c, Command::Place), DataError);
}

TEST_CASE("eval of a mesh against itself")
{
    const fs::path dir = scratch("eval");
    PipelineConfig c = parse_config("", "run.toml", "/base");
    c.reference = kData / "corpus" / "torus.obj";
    c.mesh = c.reference;
    c.colorize_reference = false;
    c.normalize_reference = false;
    cmd_eval(c, dir);
    const nlohmann::json report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["chamfer"].get<double>() == 0.0);
    CHECK(report["volume_iou"].get<double>() == 1.0);
    CHECK(report["f_score"].get<double>() == 1.0);
    CHECK(slurp(dir / "report.csv") == "chamfer,volume_iou,f_score,tau,psnr,ssim\n0,1,1,0.05,,\n");
}

TEST_CASE("run directories are fresh and self-describing")
{
    const fs::path base = scratch("rundirs");
    const fs::path a = make_run_dir(base, Command::Eval);
    const fs::path b = make_run_dir(base, Command::Eval);
    CHECK(a != b);
    CHECK(a.filename().string().rfind("eval-", 0) == 0);
    const PipelineConfig c = parse_config("seed = 5\n", "run.toml", "/base");
    write_run_metadata(a, c, Command::Eval);
    const nlohmann::json meta = nlohmann::json::parse(slurp(a / "run.json"));
    CHECK(meta["version"] == kToolVersion);
    CHECK(meta["command"] == "eval");
    CHECK(parse_config(slurp(a / "config.toml"), "config.toml", a).seed == 5);
    write_run_metadata(b, c, Command::Eval);
    CHECK(slurp(a / "run.json") == slurp(b / "run.json"));
}

TEST_CASE("small pipeline run is reproducible across thread counts")
{
    const fs::path base = scratch("repro");
    const PipelineConfig c = parse_config(quick_config(kData), "run.toml", base);
    const fs::path a = base / "a";
    const fs::path b = base / "b";
    fs::create_directories(a);
    fs::create_directories(b);
    set_thread_count(1);
    cmd_pipeline(c, a);
    set_thread_count(3);
    cmd_pipeline(c, b);
    set_thread_count(0);
    for (const char* name : {"trace.csv", "report.json", "report.csv", "texture_report.json"})
    {
        CAPTURE(name);
        REQUIRE(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    const nlohmann::json report = nlohmann::json::parse(slurp(a / "report.json"));
    CHECK(report["iterations"] == 2);
    CHECK(report["psnr"].get<double>() > report["naive_psnr"].get<double>());
}

TEST_CASE("ablation scores the initial mesh and every iteration")
{
    PipelineConfig c = parse_config(quick_config(kData), "run.toml", "/base");
    c.ablate_iterations = 3;
    const TriangleMesh ref = load_corpus_shape(kData / "corpus", "icosphere");
    const SupervisionSet sup = render_supervision(ref, c.views.cameras());
    const std::vector<AblationRow> rows = ablate_iterations(ref, sup, make_coarse_initial(ref, InitMode::Sphere), c);
    REQUIRE(rows.size() == 4);
    for (int i = 0; i < 4; ++i)
    {
        CHECK(rows[static_cast<size_t>(i)].iteration == i);
        CHECK(rows[static_cast<size_t>(i)].chamfer > 0.0);
    }
    const std::string csv = ablation_csv({{0, 0.5, 0.25}, {1, 0.125, 1.0}});
    CHECK(csv == "iteration,chamfer,f_score\n0,0.5,0.25\n1,0.125,1\n");
}

TEST_CASE("command line exit codes")
{
    const fs::path dir = scratch("cli");
    const std::string bin = ASSETGEN_CLI;
    auto run = [&](const std::string& args) {
        const int status = std::system((bin + " " + args + " > " + (dir / "out.txt").string() + " 2> " + (dir / "err.txt").string()).c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("--version") == 0);
    CHECK(slurp(dir / "out.txt").find(kToolVersion) != std::string::npos);
    CHECK(run("") == 2);
    {
        std::ofstream(dir / "missing.toml") << "[reference]\npath = \"no_such_mesh.obj\"\n";
    }
    CHECK(run("eval --config " + (dir / "missing.toml").string()) == 3);
    CHECK(slurp(dir / "err.txt").find((dir / "no_such_mesh.obj").string()) != std::string::npos);
    {
        std::ofstream(dir / "typo.toml") << "[refine]\nlambda_mask = -1\n";
    }
    CHECK(run("refine --config " + (dir / "typo.toml").string()) == 2);
    CHECK(slurp(dir / "err.txt").find("typo.toml:2:15: refine.lambda_mask") != std::string::npos);
    {
        std::ofstream(dir / "self.toml") << "[reference]\npath = \"" << (kData / "corpus" / "cube.obj").string()
                                         << "\"\ncolorize = false\n[input]\nmesh = \"" << (kData / "corpus" / "cube.obj").string()
                                         << "\"\n[metrics]\nsamples = 1024\n";
    }
    CHECK(run("eval --threads 2 --seed 4 --out " + (dir / "runs").string() + " --config " + (dir / "self.toml").string()) == 0);
    const std::string out = slurp(dir / "out.txt");
    const fs::path run_dir = out.substr(0, out.find('\n'));
    CHECK(fs::exists(run_dir / "report.json"));
    CHECK(parse_config(slurp(run_dir / "config.toml"), "c", run_dir).seed == 4);
}
