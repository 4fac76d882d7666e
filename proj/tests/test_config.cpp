#include <cmath>
#include <fstream>

#include "doctest.h"

#include "alphalogics/backtest.hpp"
#include "alphalogics/config.hpp"
#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"
#include "alphalogics/synth.hpp"

using namespace alphalogics;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const fs::path kRunDir = fs::path(ALPHALOGICS_SOURCE_DIR) / "data/run";

Json bundled_json() {
    std::ifstream in(kRunDir / "config.json");
    return Json::parse(in);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("alphalogics_test_config_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("bundled config loads with paths resolved against its directory") {
    const config::RunConfig c = config::load_run_config(kRunDir / "config.json");
    CHECK(c.data.panel == fs::absolute(kRunDir / "panel.csv").lexically_normal());
    CHECK(c.backend.fixtures.filename() == "fixtures.json");
    CHECK(c.output_dir.filename() == "demo");
    CHECK(c.strategy.top_k == 10);
    CHECK(c.strategy.n_drop == 2);
    CHECK(c.loop.rounds == 3);
    CHECK(c.seed == 7);
    CHECK(c.fit.kind == model::ModelKind::Ridge);
    CHECK(c.splits.test.first == Date::parse("2020-07-15"));
}

TEST_CASE("config snapshot round-trips and ignores the output directory") {
    const config::RunConfig c = config::load_run_config(kRunDir / "config.json");
    const Json snap = config::to_json(c);
    CHECK_FALSE(snap.contains("output_dir"));
    const config::RunConfig back = config::run_config_from_json(snap, kRunDir);
    CHECK(config::to_json(back) == snap);

    config::RunConfig moved = c;
    moved.output_dir = "/elsewhere";
    CHECK(config::to_json(moved) == snap);
    moved.seed = 8;
    CHECK(config::to_json(moved) != snap);
}

TEST_CASE("config rejects unknown keys, wrong types and bad ranges") {
    auto rejects = [](const std::function<void(Json&)>& edit) {
        Json j = bundled_json();
        edit(j);
        CHECK_THROWS_AS(config::run_config_from_json(j, kRunDir), SchemaError);
    };
    rejects([](Json& j) { j["extra"] = 1; });
    rejects([](Json& j) { j["data"]["panle"] = "x.csv"; });
    rejects([](Json& j) { j["backend"]["api_key"] = "literal"; });
    rejects([](Json& j) { j["seed"] = "seven"; });
    rejects([](Json& j) { j["schema_version"] = 2; });
    rejects([](Json& j) { j.erase("schema_version"); });
    rejects([](Json& j) { j.erase("splits"); });
    rejects([](Json& j) { j["data"]["panel"] = "missing.csv"; });
    rejects([](Json& j) { j["backend"]["fixtures"] = "missing.json"; });
    rejects([](Json& j) { j["backend"]["kind"] = "carrier-pigeon"; });
    rejects([](Json& j) { j["backend"]["max_retries"] = -1; });
    rejects([](Json& j) { j["model"]["kind"] = "forest"; });
    rejects([](Json& j) { j["loop"]["rounds"] = 0; });
    rejects([](Json& j) { j["objective"] = "sharpe-ish"; });
    rejects([](Json& j) { j["splits"]["test"] = {"2020-05-01", "2020-06-01"}; });  // overlaps validation
    rejects([](Json& j) { j["splits"]["train"] = {"2020-01-01"}; });
    rejects([](Json& j) { j["splits"]["train"] = {"2020-13-01", "2020-05-19"}; });
}

TEST_CASE("http backend config carries no credential, only the variable name") {
    Json j = bundled_json();
    j["backend"] = {{"kind", "http"}, {"base_url", "http://127.0.0.1:9"}, {"model", "m"}, {"api_key_env", "MY_KEY"}};
    const config::RunConfig c = config::run_config_from_json(j, kRunDir);
    CHECK(c.backend.http.api_key_env == "MY_KEY");
    CHECK(config::to_json(c)["backend"].dump().find("MY_KEY") != std::string::npos);
}

TEST_CASE("a run directory is reused only on resume with the same config") {
    const config::RunConfig c = config::load_run_config(kRunDir / "config.json");
    const fs::path dir = scratch("reuse");
    config::RunOptions opts;
    opts.output_dir = dir;
    const config::RunResult first = config::run_pipeline(c, opts);
    CHECK(first.state.complete);
    CHECK_FALSE(first.final_report);
    CHECK_FALSE(fs::exists(dir / "final_report.json"));

    CHECK_THROWS_AS(config::run_pipeline(c, opts), PreconditionError);

    config::RunConfig other = c;
    other.seed = 99;
    opts.resume = true;
    CHECK_THROWS_AS(config::run_pipeline(other, opts), PreconditionError);

    opts.final_run = true;
    const config::RunResult again = config::run_pipeline(c, opts);
    CHECK(again.state.t == first.state.t);
    REQUIRE(again.final_report);
    CHECK(fs::exists(dir / "final_report.json"));

    const Json s = config::summary(again);
    CHECK(s["rounds"] == 3);
    CHECK(s["best_logic"] == again.state.best_id);
    CHECK(s["test"].is_object());
    CHECK_FALSE(s["test"].contains("series"));
    fs::remove_all(dir);
}

TEST_CASE("planted panel is deterministic in the seed") {
    synth::PlantedOptions o;
    o.dates = 40;
    o.instruments = 12;
    const Panel a = synth::planted_panel(o), b = synth::planted_panel(o);
    CHECK(a.num_dates() == 40);
    CHECK(a.num_instruments() == 12);
    CHECK(a.instruments().front() == "SYN001");
    CHECK(a.dates().front() == Date::parse("2020-01-01"));
    CHECK(a.close() == b.close());
    CHECK(a.volume() == b.volume());
    o.seed = 8;
    CHECK_FALSE(synth::planted_panel(o).close() == a.close());

    // weekdays only, OHLC consistent
    for (Date d : a.dates()) CHECK((d.days() + 3) % 7 < 5);  // day 0 was a Thursday
    for (std::size_t t = 0; t < a.num_dates(); ++t)
        for (std::size_t i = 0; i < a.num_instruments(); ++i) {
            CHECK(a.low()(t, i) <= std::min(a.open()(t, i), a.close()(t, i)));
            CHECK(a.high()(t, i) >= std::max(a.open()(t, i), a.close()(t, i)));
            CHECK(a.volume()(t, i) > 0);
        }
}

TEST_CASE("planted panel carries the divergence signal and nothing without strength") {
    auto mean_ic = [](const synth::PlantedOptions& o) {
        const Panel p = synth::planted_panel(o);
        const Matrix score = dsl::evaluate(
            dsl::parse("-(ZSCORE(close / DELAY(close, 1)) - ZSCORE(LOG(volume / DELAY(volume, 1))))"), p);
        Matrix fwd(p.num_dates(), p.num_instruments(), kMissing);
        for (std::size_t t = 0; t + 1 < p.num_dates(); ++t)
            for (std::size_t i = 0; i < p.num_instruments(); ++i)
                fwd(t, i) = p.close()(t + 1, i) / p.close()(t, i) - 1.0;
        const auto ics = backtest::daily_ic(score, fwd, {1, p.num_dates() - 1});
        return backtest::summarize_ic(ics).ic;
    };
    synth::PlantedOptions o;
    CHECK(mean_ic(o) > 0.1);
    o.strength = 0.0;
    CHECK(std::fabs(mean_ic(o)) < 0.05);
}
