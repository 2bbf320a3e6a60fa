#include <catch_amalgamated.hpp>

#include "phmg/scenario.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

std::string binary() {
    const char* p = std::getenv("PHMG_CLI");
    REQUIRE(p != nullptr);
    return p;
}

// Runs the CLI with stderr merged into stdout.
Run run(const std::string& args) {
    Run r;
    FILE* f = popen((binary() + " " + args + " 2>&1").c_str(), "r");
    REQUIRE(f != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), n);
    const int w = pclose(f);
    r.status = WIFEXITED(w) ? WEXITSTATUS(w) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("phmg_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("export prints a scenario that parses back", "[cli]") {
    const Run r = run("export cigre-feeder1");
    CHECK(r.status == 0);
    CHECK(phmg::parse_scenario(r.out) == phmg::load_scenario("cigre-feeder1"));
}

TEST_CASE("check-eip exit codes", "[cli]") {
    const Run ok = run("check-eip cigre-feeder1");
    CHECK(ok.status == 0);
    CHECK_THAT(ok.out, ContainsSubstring("all loads certified"));
    const Run wide = run("check-eip cigre-feeder1 --vmin 10000 --vmax 30000");
    CHECK(wide.status == 3);
    CHECK_THAT(wide.out, ContainsSubstring("NotCertified"));
}

TEST_CASE("equilibrium after every event tracks the references", "[cli]") {
    const Run r = run("equilibrium cigre-feeder1 --at 7");
    REQUIRE(r.status == 0);
    const std::regex re("max reference error ([0-9.eE+-]+) V");
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, re));
    CHECK(std::stod(m[1].str()) < 1e-6);
    CHECK_THAT(r.out, ContainsSubstring("DGU5"));
    // DGU5 is plugged in by then.
    CHECK(r.out.find("disconnected") == std::string::npos);
}

TEST_CASE("input errors exit with the validation code", "[cli]") {
    const Run missing = run("simulate /nonexistent/scenario.json");
    CHECK(missing.status == 1);
    CHECK_THAT(missing.out, ContainsSubstring("category=validation"));
    CHECK(run("simulate cigre-feeder1 --bogus").status == 1);
    CHECK(run("equilibrium cigre-feeder1 --at -1").status == 1);
}

TEST_CASE("uncertified PI gains exit with the certification code", "[cli]") {
    const fs::path d = scratch("printed");
    auto j = nlohmann::json::parse(phmg::preset_text("cigre-feeder1"));
    j["dgus"][0]["controller"]["k11_form"] = "as_printed";
    std::ofstream(d / "printed.json") << j.dump();
    const Run r = run("export " + (d / "printed.json").string());
    CHECK(r.status == 3);
    CHECK_THAT(r.out, ContainsSubstring("category=certification"));
    fs::remove_all(d);
}

TEST_CASE("short simulation writes its outputs and plots", "[cli]") {
    const fs::path d = scratch("sim");
    const Run r = run("simulate cigre-feeder1 --horizon 0.05 --out " + d.string());
    REQUIRE(r.status == 0);
    for (const char* f : {"trajectory.csv", "metrics.json", "metrics.txt"}) CHECK(fs::exists(d / f));
    CHECK(nlohmann::json::parse(std::ifstream(d / "metrics.json")).is_object());
    const Run p = run("plot " + (d / "trajectory.csv").string() + " --out " + d.string());
    REQUIRE(p.status == 0);
    for (const char* f : {"voltages.svg", "errors.svg", "errors_zoom.svg"}) CHECK(fs::exists(d / f));
    fs::remove_all(d);
}
