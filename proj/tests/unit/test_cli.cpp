#include "mapvol/cli.hpp"
#include "mapvol/error.hpp"
#include "mapvol/report.hpp"
#include "mapvol/svg.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace mapvol;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("mapvol_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mapvol");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

// A simulated MAP panel spanning mid-2009 to early 2015.
fs::path panel_csv() {
    static const fs::path p = [] {
        const fs::path f = scratch() / "panel.csv";
        save_panel(f, fixture::simulate(ModelKind::MAP, 1500, 3).panel);
        return f;
    }();
    return p;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config(nlohmann::json::parse(R"({"input":"a.csv","models":["AMEM","L-MAP"],
        "forecast":{"horizon":30,"x_rule":"mean"},"mcs":{"level":0.25},"seed":9})"));
    CHECK(c.input == "a.csv");
    CHECK(c.models == std::vector<ModelKind>{ModelKind::AMEM, ModelKind::LMAP});
    CHECK(c.horizon == 30);
    CHECK(c.rules.x_rule == XRule::Mean);
    CHECK(c.mcs.level == 0.25);
    CHECK(c.seed == 9);

    const RunConfig d = parse_config(nlohmann::json::object());
    CHECK(d.horizon == 250);
    CHECK(d.models.size() == 5);
    CHECK(d.mcs.replications == 5000);
    CHECK(d.mcs.block_length == 22.0);
    CHECK(d.forecast.tolerance == 0.01);

    try {
        parse_config(nlohmann::json::parse(R"({"forecast":{"horizn":3}})"));
        FAIL("unknown key accepted");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("forecast.horizn") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"colour":1})")), UsageError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"models":["GARCH"]})")), UsageError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"formats":["pdf"]})")), UsageError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"forecast":{"horizon":"long"}})")), UsageError);

    // The resolved configuration parses back to itself.
    const auto j = config_to_json(c);
    CHECK(config_to_json(parse_config(nlohmann::json::parse(j.dump()))) == j);
}

TEST_CASE("config files allow comments") {
    const fs::path p = scratch() / "commented.json";
    std::ofstream(p) << "{\n  // estimation only\n  \"models\": [\"MAP\"]\n}\n";
    CHECK(load_config(p).models == std::vector<ModelKind>{ModelKind::MAP});
}

TEST_CASE("exit codes") {
    const std::string out = (scratch() / "codes").string();
    CHECK(run({"estimate", "-o", out}) == kExitUsage);
    CHECK(run({"bogus"}) == kExitUsage);
    CHECK(run({"estimate", "-i", (scratch() / "absent.csv").string(), "-o", out}) == kExitData);

    const fs::path cfg = scratch() / "badcol.json";
    std::ofstream(cfg) << R"({"input":")" << panel_csv().string() << R"(","columns":{"rv":"rk"},"models":["AMEM"]})";
    CHECK(run({"estimate", "-c", cfg.string(), "-o", out}) == kExitData);

    const fs::path unknown = scratch() / "unknown.json";
    std::ofstream(unknown) << R"({"input":"x.csv","estimaton":{}})";
    CHECK(run({"estimate", "-c", unknown.string(), "-o", out}) == kExitUsage);
}

TEST_CASE("estimate, forecast and irf outputs") {
    const fs::path out = scratch() / "run";
    REQUIRE(run({"estimate", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM,MAP"}) == kExitOk);
    const auto est = read_json(out / "estimate.json");
    REQUIRE(est["models"].size() == 2);
    CHECK(est["models"][0]["coefficients"].size() == 5);
    REQUIRE(est["models"][0]["ljung_box"].size() == 3);
    CHECK(est["models"][0]["ljung_box"][2]["lag"] == 10);
    CHECK(est["models"][1]["coefficients"].size() == 8);
    CHECK(fs::exists(out / "estimate.txt"));
    CHECK(fs::exists(out / "components_MAP.csv"));
    CHECK(fs::exists(out / "marginal_MAP_x.csv") == false);  // constant effect, no series
    CHECK(slurp(out / "components_MAP.svg").rfind("<svg", 0) == 0);

    REQUIRE(run({"forecast", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM,MAP", "--horizon", "1"}) ==
            kExitOk);
    const auto fc = read_json(out / "forecast.json");
    for (const auto& p : fc["paths"]) CHECK(p["mu"].size() == 1);

    REQUIRE(run({"forecast", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM,MAP"}) == kExitOk);
    for (const auto& p : read_json(out / "forecast.json")["paths"]) {
        REQUIRE(p["converged"].get<bool>());
        CHECK(p["convergence_horizon"].get<int>() <= 250);
    }

    REQUIRE(run({"irf", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM,MAP", "--shock", "0.26"}) ==
            kExitOk);
    const auto irf = read_json(out / "irf.json");
    REQUIRE(irf["paths"].size() == 2);
    for (double d : irf["paths"][0]["diff"]) CHECK(d == 0.0);
    CHECK(irf["paths"][1]["diff"][0].get<double>() != 0.0);
    CHECK(slurp(out / "irf.svg").find("</svg>") != std::string::npos);
    CHECK(slurp(out / "irf_AMEM.csv").rfind("step,baseline,shocked,diff\n", 0) == 0);
}

TEST_CASE("identical inputs give byte-identical JSON") {
    const fs::path a = scratch() / "det_a", b = scratch() / "det_b";
    for (const fs::path& d : {a, b}) {
        REQUIRE(run({"forecast", "-i", panel_csv().string(), "-o", d.string(), "-m", "AMEM,LMAP", "--threads",
                     d == a ? "1" : "2"}) == kExitOk);
    }
    CHECK(slurp(a / "forecast.json") == slurp(b / "forecast.json"));
    CHECK_FALSE(slurp(a / "forecast.json").empty());
}

TEST_CASE("model confidence set over two splits") {
    const fs::path out = scratch() / "mcs";
    REQUIRE(run({"mcs", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM,XMAP", "--split", "2012-12-31",
                 "--split", "2013-12-31", "--replications", "300"}) == kExitOk);
    const auto j = read_json(out / "mcs.json");
    REQUIRE(j["splits"].size() == 2);
    CHECK(j["splits"][0]["label"] == "2013");
    for (const auto& s : j["splits"]) {
        for (const char* l : {"MSE", "QLike"}) {
            bool best = false;
            for (const auto& m : s["mcs"][l]["models"]) best = best || m["pvalue"].get<double>() == 1.0;
            CHECK(best);
        }
    }
    const std::string grid = slurp(out / "mcs.txt");
    CHECK(grid.find("2013") != std::string::npos);
    CHECK(grid.find("2014") != std::string::npos);
    CHECK(run({"mcs", "-i", panel_csv().string(), "-o", out.string(), "-m", "AMEM", "--split", "2012-12-31"}) ==
          kExitUsage);
}

TEST_CASE("simulate and stylized") {
    const fs::path out = scratch() / "sim";
    REQUIRE(run({"simulate", "-o", out.string(), "--sim-model", "PMAP", "--sim-length", "400", "--seed", "5"}) ==
            kExitOk);
    const Panel p = load_panel(out / "simulated.csv").panel;
    CHECK(p.size() == 400);
    REQUIRE(run({"stylized", "-i", (out / "simulated.csv").string(), "-o", out.string()}) == kExitOk);
    const auto st = read_json(out / "stylized.json");
    // 20 announcements, the last on the final day has no post-window
    CHECK(st["announcements"]["events"].size() == 19);
    CHECK(st["announcements"]["skipped"] == 1);
}

TEST_CASE("report helpers") {
    CHECK(fixed(-1.8364, 3) == "-1.836");
    std::ostringstream grid;
    McsResult r;
    r.models = {"AMEM", "MAP"};
    r.pvalue = {0.03, 1.0};
    r.member = {false, true};
    r.best = 1;
    McsGridColumn col{"2019", r, r};
    const std::vector<std::string> names{"AMEM", "MAP"};
    write_mcs_grid(grid, names, std::vector<McsGridColumn>{col}, 0.10);
    CHECK(grid.str().find("M Q") != std::string::npos);

    Chart c;
    c.title = "t & <x>";
    c.series.push_back({"a", {1, 2, 3}, {1, 4, 9}, false, false});
    c.series.push_back({"b", {1, 2, 3}, {0.1, std::nan(""), 0.3}, true, true});
    const std::string svg = render_svg(c);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("t &amp; &lt;x&gt;") != std::string::npos);
    CHECK(svg == render_svg(c));
}
