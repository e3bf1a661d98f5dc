#include <doctest.h>

#include <string>

#include "ncsim/config.hpp"

using namespace ncsim;
using namespace ncsim::config;

namespace {

const char* kFree = R"({
  "schema": "ncsim.experiment/1",
  "name": "pair",
  "seed": 5,
  "network": {
    "populations": [
      {"name": "a", "size": 4, "slots": [{"name": "input"}, {"name": "exc"}]},
      {"name": "b", "size": 2, "slots": [{"name": "exc"}]}
    ],
    "connections": [{"src": "a", "dst": "b", "slot": "exc", "weight": 0.74}]
  },
  "simulation": {"t_end": 0.3, "traces": [{"quantity": "i_mem", "population": "b"}]},
  "stimuli": [{"label": "drive", "population": "a", "slot": "input", "neurons": "all",
               "weight": 0.74, "poisson": {"rate": 150}}]
})";

std::string what_of(const std::string& text)
{
    try {
        auto e = parse_experiment(text, {}, "cfg.json");
        validate_experiment(e);
    } catch (const ConfigError& err) {
        return err.what();
    } catch (const std::exception& err) {
        return std::string("other: ") + err.what();
    }
    return {};
}

}  // namespace

TEST_CASE("syntax errors report line and column")
{
    const auto w = what_of("{\n  \"seed\": 1,\n  \"preset\" \"fig6-std\"\n}");
    CHECK(w.rfind("cfg.json:3:", 0) == 0);
}

TEST_CASE("field errors name the path")
{
    CHECK(what_of(R"({"preset": "fig6-std", "colour": 1})").find("colour") != std::string::npos);
    CHECK(what_of(R"({"preset": "fig77"})").find("unknown preset") != std::string::npos);
    CHECK(what_of(R"({"preset": "fig6-std", "params": {"rate": "x"}})").find("params.rate") != std::string::npos);
    CHECK(what_of(R"({"preset": "fig6-std", "seed": -1})").find("seed") != std::string::npos);
    CHECK(what_of(R"({"schema": "ncsim.experiment/9", "preset": "fig6-std"})").find("schema") != std::string::npos);

    std::string bad = kFree;
    bad.replace(bad.find("\"rate\": 150"), 11, "\"rate\": -1");
    CHECK(what_of(bad).find("stimuli[0].poisson.rate") != std::string::npos);
    bad = kFree;
    bad.replace(bad.find("\"dst\": \"b\""), 10, "\"dst\": \"q\"");
    CHECK_FALSE(what_of(bad).empty());
    CHECK(what_of(kFree).empty());
}

TEST_CASE("free-form experiments run and conserve")
{
    const auto e = parse_experiment(kFree, {}, "cfg.json");
    CHECK(e.name == "pair");
    CHECK(e.stimuli.at(0).channels.size() == 4);
    const auto a = run_experiment(e, 1);
    REQUIRE(a.runs.size() == 1);
    CHECK(a.summary.at("conserved") == true);
    CHECK(a.summary.at("seed") == 5);
    CHECK(a.summary.at("schema") == presets::kSummarySchema);
    CHECK(a.summary.at("metrics").at("spikes").get<std::size_t>() == a.runs[0].record.spikes.size());
    CHECK(a.runs[0].record.spikes.size() > 0);
}

TEST_CASE("seeds change stimuli and the hash")
{
    const auto e = parse_experiment(kFree);
    const auto f = with_seed(e, 6);
    CHECK(f.seed == 6);
    CHECK(f.stimuli[0].channels[0].times != e.stimuli[0].channels[0].times);
    CHECK(config_hash(e) != config_hash(f));
    CHECK(config_hash(e) == config_hash(parse_experiment(kFree)));
    CHECK(config_hash(e).rfind("fnv1a64:", 0) == 0);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("preset documents carry their parameters")
{
    const auto e = parse_experiment(R"({"preset": "fig7-bursting", "seed": 9, "params": {"duration": 2.0}})");
    CHECK(e.preset == "fig7-bursting");
    CHECK(e.seed == 9);
    CHECK_NOTHROW(validate_experiment(e));
    CHECK_THROWS_AS(parse_experiment(R"({"preset": "fig7-bursting", "network": {}})"), ConfigError);
}
