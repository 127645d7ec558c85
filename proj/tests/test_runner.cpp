#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "formkac/runner.hpp"

using namespace formkac;
using nlohmann::json;

namespace {

std::string error_of(const std::string& text)
{
    try {
        run_experiment(Config::parse(text, "cfg.toml"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kFk = R"([experiment]
kind = "fk"
seed = 42
q = 1
x0 = [0.0, 0.0, 0.5]
times = [0.25, 1.0]
n_paths = 3000
dt = 2e-3
oracle = true
tolerance = 0.08

[model]
id = "half_space"
dim = 3

[field]
type = "profile"
center = 0.8
width = 0.6
components = [0, 2]
amplitudes = [1.0, 1.0]
)";

}  // namespace

TEST_CASE("config parsing")
{
    const Config c = Config::parse("# comment\n[experiment]\nkind = \"fk\"  # trailing\nseed = 7\n"
                                   "times = [0.5, 1]\nflag = true\nnames = [\"a\", \"b,c\"]\n",
                                   "x.toml");
    const ConfigTable& t = c.table("experiment");
    CHECK(t.string("kind") == "fk");
    CHECK(t.seed("seed") == 7);
    CHECK(t.numbers("times") == std::vector<double>{0.5, 1.0});
    CHECK(t.boolean("flag", false));
    CHECK(t.strings("names") == std::vector<std::string>{"a", "b,c"});
    CHECK(t.line() == 2);
    CHECK_THROWS_AS(t.integer("times"), ConfigError);
    CHECK_THROWS_AS(c.table("model"), ConfigError);
}

TEST_CASE("config errors name the file, line and field")
{
    CHECK(error_of("[experiment]\nkind = \"fk\"\nseed = \n") .find("cfg.toml:3") != std::string::npos);
    CHECK(error_of("[experiment]\nkind = \"fk\"\nseed = 1\nseed = 2\n").find("cfg.toml:4") != std::string::npos);
    CHECK(error_of("kind = \"fk\"\n").find("cfg.toml:1") != std::string::npos);
    const std::string missing = error_of("[experiment]\nkind = \"algebra-suite\"\n");
    CHECK(missing.find("seed") != std::string::npos);
    CHECK(missing.find("cfg.toml:1") != std::string::npos);
    CHECK(error_of("[experiment]\nkind = \"nope\"\nseed = 1\n").find("cfg.toml:2") != std::string::npos);
    const std::string unknown = error_of(
        "[experiment]\nkind = \"bound\"\nseed = 1\nq = 1\ntimes = [1]\nbogus = 3\n[model]\nid = \"ball\"\ndim = 3\n");
    CHECK(unknown.find("bogus") != std::string::npos);
    CHECK(unknown.find("cfg.toml:6") != std::string::npos);
    const std::string model = error_of("[experiment]\nkind = \"bound\"\nseed = 1\nq = 1\ntimes = [1]\n"
                                       "[model]\nid = \"torus\"\ndim = 3\n");
    CHECK(model.find("cfg.toml:7") != std::string::npos);
    const std::string paths = error_of("[experiment]\nkind = \"bound\"\nseed = 1\nq = 1\ntimes = [1]\nn_paths = 5\n"
                                       "[model]\nid = \"ball\"\ndim = 3\n");
    CHECK(paths.find("cfg.toml:6") != std::string::npos);
    CHECK(paths.find("n_paths") != std::string::npos);
    const std::string times = error_of("[experiment]\nkind = \"bound\"\nseed = 1\nq = 1\ntimes = [1, 0.5]\n"
                                       "[model]\nid = \"ball\"\ndim = 3\n");
    CHECK(times.find("cfg.toml:5") != std::string::npos);
    const std::string oracle = error_of("[experiment]\nkind = \"fk\"\nseed = 1\nq = 1\ntimes = [1]\noracle = true\n"
                                        "[model]\nid = \"ball\"\ndim = 3\n");
    CHECK(oracle.find("cfg.toml:6") != std::string::npos);
}

TEST_CASE("CSV encoding and number format")
{
    ResultTable t;
    t.header = {"a", "b"};
    t.add({"plain", "with,comma"});
    t.add({"say \"hi\"", "two\nlines"});
    CHECK(encode_csv(t) == "a,b\nplain,\"with,comma\"\n\"say \"\"hi\"\"\",\"two\nlines\"\n");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-20) == "1e-20");
    CHECK(format_number(123456789012345.0) == "1.23456789012e+14");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("algebra suite reports no failures")
{
    const RunReport r = run_experiment(Config::parse("[experiment]\nkind = \"algebra-suite\"\nseed = 3\n"));
    CHECK(r.pass());
    CHECK(r.failures() == 0);
    CHECK(r.model.empty());
    CHECK(!r.table.rows.empty());
}

TEST_CASE("fk run against the oracle, with byte-identical output across thread counts")
{
    const Config c = Config::parse(kFk);
    RunOptions one;
    one.threads = 1;
    RunOptions three;
    three.threads = 3;
    const RunReport a = run_experiment(c, one);
    const RunReport b = run_experiment(c, three);
    CHECK(a.pass());
    CHECK(a.verdicts.size() == 2);
    CHECK(encode_csv(a.table) == encode_csv(b.table));
    CHECK(a.table.header == std::vector<std::string>{"t", "component", "estimate", "std_error", "ci_low", "ci_high",
                                                     "oracle", "rel_err"});
    CHECK(a.table.rows.size() == 6);
    CHECK(a.table.rows[2][1] == "e2");

    RunOptions other;
    other.seed_override = 43;
    const RunReport d = run_experiment(c, other);
    CHECK(d.seed == 43);
    CHECK(encode_csv(d.table) != encode_csv(a.table));
}

TEST_CASE("summary.json fields")
{
    const RunReport r = run_experiment(Config::parse(kFk));
    const json j = json::parse(summary_json(r));
    CHECK(j["schema_version"] == kSummarySchemaVersion);
    CHECK(j["kind"] == "fk");
    CHECK(j["seed"] == 42);
    CHECK(j["model"]["id"] == "half_space");
    CHECK(j["model"]["dim"] == 3);
    CHECK(j["status"] == "pass");
    CHECK(j["failures"] == 0);
    CHECK(j["verdicts"].size() == 2);
    CHECK(j["columns"].size() == 8);
    CHECK(j["results"].size() == 6);
    CHECK(j["results"][0]["t"].is_number());
    CHECK(j["results"][0]["component"] == "e0");
    CHECK(j["results_csv"] == "results.csv");
    CHECK(j["wall_time_s"].is_number());

    const json alg = json::parse(summary_json(run_experiment(Config::parse("[experiment]\nkind = \"algebra-suite\"\nseed = 1\n"))));
    CHECK(alg["model"].is_null());
}

TEST_CASE("run_command writes reports and maps outcomes to exit codes")
{
    const auto dir = std::filesystem::temp_directory_path() / "formkac_test_runner";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    std::ostringstream out, err;
    const std::string ok = write("ok.toml", "[experiment]\nkind = \"algebra-suite\"\nseed = 1\n");
    CHECK(run_command(ok, dir / "ok", {}, out, err) == 0);
    CHECK(std::filesystem::exists(dir / "ok" / "results.csv"));
    CHECK(std::filesystem::exists(dir / "ok" / "summary.json"));
    CHECK(out.str().find("PASS identities") != std::string::npos);

    std::string strict = kFk;
    strict.replace(strict.find("tolerance = 0.08"), 16, "tolerance = 1e-9");
    CHECK(run_command(write("strict.toml", strict), dir / "strict", {}, out, err) == 2);
    const json j = json::parse(std::ifstream(dir / "strict" / "summary.json"));
    CHECK(j["status"] == "fail");
    CHECK(j["failures"] == 2);

    std::ostringstream err2;
    CHECK(run_command(write("bad.toml", "[experiment]\nkind = 3\n"), dir / "bad", {}, out, err2) == 1);
    CHECK(err2.str().find("bad.toml:2") != std::string::npos);
    CHECK(run_command((dir / "missing.toml").string(), dir / "m", {}, out, err2) == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("model listing")
{
    const std::string text = list_models_text();
    CHECK(text.find("hyperbolic_tube") != std::string::npos);
    CHECK(text.find("range") != std::string::npos);
    const json j = json::parse(list_models_json());
    REQUIRE(j.is_array());
    CHECK(j.size() == 9);
    bool tube = false;
    for (const auto& m : j) {
        CHECK(m.contains("id"));
        CHECK(m.contains("params"));
        tube = tube || m["id"] == "hyperbolic_tube";
    }
    CHECK(tube);
}
