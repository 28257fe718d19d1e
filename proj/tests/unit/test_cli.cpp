#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"
#include "zk/cli.hpp"
#include "zk/errors.hpp"
#include "zk/io.hpp"

using namespace zk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "zklab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("zk_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit with 2") {
        CHECK(cli({}).code == 2);
        CHECK(cli({"no-such-command"}).code == 2);
        CHECK(cli({"asymptotics", "bogus"}).code == 2);
        CHECK(cli({"track"}).code == 2);  // --input is required
        CHECK(cli({"--set", "novalue", "spectrum"}).code == 2);
    }

    TEST_CASE("out-of-range parameters exit with 2") {
        const fs::path d = scratch("range");
        const Outcome r = cli({"--out", d.string(), "--set", "rho=0.05", "z-ode"});
        CHECK(r.code == 2);
        CHECK(r.err.find("rho") != std::string::npos);
        CHECK(cli({"--out", d.string(), "--set", "rho=0.04", "collide"}).code == 2);
        CHECK(cli({"--out", d.string(), "collide", "--mu0", "0.5"}).code == 2);
        CHECK(cli({"--out", d.string(), "ground-state", "--residual-tol", "1e-3"}).code == 2);
        CHECK(cli({"--out", d.string(), "--set", "kind=blob", "field", "dump"}).code == 2);
        fs::remove_all(d);
    }

    TEST_CASE("ground-state writes stamped outputs") {
        const fs::path d = scratch("gs");
        REQUIRE(cli({"--out", d.string(), "ground-state"}).code == 0);
        const std::string csv = slurp(d / "profile.csv");
        CHECK(csv.rfind("# zklab", 0) == 0);
        CHECK(csv.find("# experiment: ground-state") != std::string::npos);
        const auto j = read_json(d / "ground_state.json");
        CHECK(j["experiment"] == "ground-state");
        CHECK(j["config_hash"].get<std::string>().size() == 16);
        CHECK(csv.find(j["config_hash"].get<std::string>()) != std::string::npos);
        CHECK(fs::exists(d / "profile.svg"));
        fs::remove_all(d);
    }

    TEST_CASE("runs are deterministic and overrides reach the config") {
        const fs::path a = scratch("det_a"), b = scratch("det_b");
        const std::vector<std::string> args = {"interaction", "table", "--zmin", "6", "--zmax", "9", "--step", "0.5"};
        auto with = [&](const fs::path& d) {
            std::vector<std::string> v = {"--out", d.string()};
            v.insert(v.end(), args.begin(), args.end());
            return v;
        };
        REQUIRE(cli(with(a)).code == 0);
        REQUIRE(cli(with(b)).code == 0);
        CHECK(slurp(a / "interaction.csv") == slurp(b / "interaction.csv"));
        CHECK(slurp(a / "interaction.json") == slurp(b / "interaction.json"));
        const auto j = read_json(a / "interaction.json");
        CHECK(j["config"]["zmin"] == "6");
        CHECK(j["config"]["step"] == "0.5");
        // --set lands in the same place as the flag sugar
        const fs::path c = scratch("det_c");
        REQUIRE(cli({"--out", c.string(), "--set", "zmin=6", "--set", "zmax=9", "--set", "step=0.5", "interaction",
                     "table"})
                    .code == 0);
        CHECK(read_json(c / "interaction.json")["config_hash"] == j["config_hash"]);
        for (const auto& d : {a, b, c}) fs::remove_all(d);
    }

    TEST_CASE("config file and later overrides") {
        const fs::path d = scratch("cfg");
        fs::create_directories(d);
        {
            std::ofstream os(d / "run.cfg");
            os << "# comment\nzmin = 7\nzmax = 8\nstep = 0.5\n";
        }
        REQUIRE(cli({"--out", d.string(), "--config", (d / "run.cfg").string(), "--set", "zmax=9", "interaction"})
                    .code == 0);
        const auto j = read_json(d / "interaction.json");
        CHECK(j["config"]["zmin"] == "7");
        CHECK(j["config"]["zmax"] == "9");
        CHECK(cli({"--config", (d / "missing.cfg").string(), "spectrum"}).code == 2);
        fs::remove_all(d);
    }

    TEST_CASE("field dump and load round trip") {
        const fs::path d = scratch("field");
        REQUIRE(cli({"--out", d.string(), "--set", "kind=soliton", "--set", "Lx=24", "--set", "Ly=24", "--set", "Nx=128",
                     "--set", "Ny=128", "--set", "t=1.5", "field", "dump", "--name", "q"})
                    .code == 0);
        CHECK(fs::exists(d / "q.bin"));
        const Field2D f = load_field((d / "q").string());
        REQUIRE(cli({"--out", d.string(), "field", "load", "--input", (d / "q").string()}).code == 0);
        const auto j = read_json(d / "field.json")["result"];
        CHECK(j["t"] == 1.5);
        CHECK(j["grid"]["Nx"] == 128);
        CHECK(j["h1"].get<double>() == doctest::Approx(h1_norm(f)).epsilon(1e-14));
        CHECK(j["mean"].get<double>() == doctest::Approx(test::lab().constants().int_q).epsilon(1e-6));
        CHECK(cli({"--out", d.string(), "field", "load", "--input", (d / "nothing").string()}).code == 3);
        fs::remove_all(d);
    }

    TEST_CASE("key = value parsing") {
        KeyValueConfig c = KeyValueConfig::parse("# header\n a = 1.5 \n\nname=x y\n");
        CHECK(c.get_double("a", 0.0) == 1.5);
        CHECK(c.get_string("name", "") == "x y");
        CHECK(c.get_int("missing", 7) == 7);
        CHECK(c.has("missing"));  // defaults are recorded
        CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), ConfigError);
        KeyValueConfig d = KeyValueConfig::parse("name=x y\na=1.5\nmissing=7\n");
        CHECK(c.hash() == d.hash());
        c.apply_overrides({"a=2"});
        CHECK(c.hash() != d.hash());
        CHECK_THROWS_AS(c.get_double("name", 0.0), ConfigError);
    }
}
