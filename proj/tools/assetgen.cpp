#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "assetgen/errors.hpp"
#include "assetgen/parallel.hpp"
#include "assetgen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace assetgen;

namespace
{
    struct Options
    {
        std::string config;
        std::optional<int64_t> seed;
        std::optional<unsigned> threads;
        std::string out;
    };

    int run(Command command, const Options& o)
    {
        if (o.threads)
        {
            set_thread_count(*o.threads);
        }
        PipelineConfig config = load_config(o.config);
        if (o.seed)
        {
            if (*o.seed < 0)
            {
                throw ConfigError("--seed must be non-negative");
            }
            config.seed = static_cast<uint64_t>(*o.seed);
            config.propagate_seed();
        }
        if (!o.out.empty())
        {
            config.output = fs::absolute(o.out);
        }
        validate_for(config, command);
        const fs::path dir = make_run_dir(config.output, command);
        write_run_metadata(dir, config, command);
        run_command(command, config, dir);
        std::cout << dir.string() << std::endl;
        return 0;
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Closed-loop mesh refinement, texturing, evaluation and scene placement"};
    app.set_version_flag("--version", std::string("assetgen ") + kToolVersion);
    app.require_subcommand(1);

    Options opts;
    std::optional<Command> chosen;
    const std::pair<Command, const char*> commands[] = {
        {Command::Supervise, "render oracle supervision for the reference"},
        {Command::Refine, "refine an initial mesh against the supervision"},
        {Command::Texture, "color input.mesh from the supervision color images"},
        {Command::Eval, "compare input.mesh with the reference"},
        {Command::Place, "place assets into a scene and composite frames"},
        {Command::Pipeline, "supervise, refine, texture, evaluate and place in one run"},
        {Command::Ablate, "CD and F-score after every refinement iteration"},
    };
    for (const auto& [command, help] : commands)
    {
        CLI::App* sub = app.add_subcommand(to_string(command), help);
        sub->add_option("--config", opts.config, "TOML config file")->required();
        sub->add_option("--seed", opts.seed, "override the config seed");
        sub->add_option("--threads", opts.threads, "worker threads (0 = all cores)");
        sub->add_option("--out", opts.out, "base directory for run directories");
        sub->callback([&chosen, command = command] { chosen = command; });
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorCategory::Config);
    }

    try
    {
        return run(*chosen, opts);
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return e.exit_code();
    }
    catch (const fs::filesystem_error& e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return static_cast<int>(ErrorCategory::Data);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
