// ncsim command-line front end.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ncsim/config.hpp"
#include "ncsim/presets.hpp"

namespace fs = std::filesystem;
using namespace ncsim;

namespace {

int cmd_presets()
{
    for (const auto& p : presets::catalog())
        fmt::print("{:<24}{}\n", p.id, p.description);
    return 0;
}

int cmd_validate(const std::string& path)
{
    const auto e = config::load_experiment(path);
    config::validate_experiment(e);
    fmt::print("{}: ok ({})\n", path, e.preset.empty() ? "experiment " + e.name : "preset " + e.preset);
    return 0;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            const std::string& out_arg, bool force, const std::string& kernel)
{
    auto e = config::load_experiment(path);
    if (seed) e = config::with_seed(e, *seed);
    config::validate_experiment(e);

    const fs::path out = out_arg.empty() ? fs::path("ncsim-out") / e.name : fs::path(out_arg);
    if (fs::exists(out) && !force)
        throw std::runtime_error(fmt::format(
            "output directory '{}' exists (use --force to replace it)", out.string()));

    const auto k = kernel == "serial" ? engine::KernelKind::Serial : engine::KernelKind::Parallel;
    const auto t0 = std::chrono::steady_clock::now();
    const auto art = config::run_experiment(e, 0, k);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Everything goes to a sibling staging directory first; the final name
    // only appears once all files are complete.
    const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    fs::create_directories(parent);
    const fs::path stage = parent / fmt::format(".{}.partial-{}", out.filename().string(), ::getpid());
    fs::remove_all(stage);
    try {
        presets::write_artifacts(art, stage);
        std::ofstream meta(stage / "meta.json");
        auto m = config::metadata(e, art);
        m["wall_seconds"] = wall;
        meta << m.dump(2) << '\n';
        meta.close();
        if (!meta) throw std::runtime_error("cannot write meta.json");
        if (fs::exists(out)) fs::remove_all(out);
        fs::rename(stage, out);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(stage, ec);
        throw;
    }
    for (const auto& w : art.summary["warnings"]) fmt::print(std::cerr, "warning: {}\n", w.get<std::string>());
    fmt::print("{}: seed {}, {} run(s), conserved={}, {:.2f} s -> {}\n", e.name, e.seed,
               art.runs.size(), art.summary["conserved"].get<bool>(), wall, out.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ncsim: neuromorphic circuit simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment or preset config");
    std::string run_cfg, out_dir, kernel = "parallel";
    std::optional<std::uint64_t> seed;
    bool force = false;
    run->add_option("config", run_cfg, "experiment JSON")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "output directory (default ncsim-out/<name>)");
    run->add_flag("--force", force, "replace an existing output directory");
    run->add_option("--kernel", kernel, "neuron update kernel")
        ->check(CLI::IsMember({"parallel", "serial"}));

    app.add_subcommand("presets", "list built-in presets");

    auto* val = app.add_subcommand("validate", "check a config without running it");
    std::string val_cfg;
    val->add_option("config", val_cfg, "experiment JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand("presets")) return cmd_presets();
        if (app.got_subcommand("validate")) return cmd_validate(val_cfg);
        return cmd_run(run_cfg, seed, out_dir, force, kernel);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "ncsim: error: {}\n", e.what());
        return 2;
    }
}
