// Shells out to the built binary (path in SDFVR_CLI) and checks the command
// contracts: exit codes, diagnostics, artifact layout.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "sdfvr/geometry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() {
    const char* p = std::getenv("SDFVR_CLI");
    REQUIRE(p != nullptr);
    return p;
}

fs::path work() {
    const char* p = std::getenv("SDFVR_WORK");
    const fs::path dir = p ? fs::path(p) : fs::path("cli_work");
    fs::create_directories(dir);
    return dir;
}

struct Result {
    int exit_code;
    std::string output;
};

Result run(const std::string& args) {
    const fs::path log = work() / "last_run.log";
    const std::string cmd = cli() + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream f(log);
    std::string output((std::istreambuf_iterator<char>(f)), {});
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, std::move(output)};
}

std::string write_config(const std::string& name, const json& j) {
    const fs::path p = work() / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
}

json tiny_config() {
    return json{{"seed", 5},
                {"scene", {{"type", "sphere"}, {"radius", 0.1}}},
                {"render", {{"samples", 16}, {"alpha", 0.01}}},
                {"sphere_init",
                 {{"radius", 0.1},
                  {"iterations", 5},
                  {"step_size", 2e-4},
                  {"batch", 16},
                  {"box_halfwidth", 0.3},
                  {"z_dim", 4},
                  {"map_hidden", 8},
                  {"trunk_width", 8},
                  {"feature_width", 4}}}};
}

int count_lines(const fs::path& p) {
    std::ifstream f(p);
    int n = 0;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

TEST_CASE("malformed config exits 1 naming the key") {
    const std::string cfg = write_config("bad.json", json{{"rendur", json::object()}});
    const Result r = run("render --config " + cfg + " --out " + (work() / "bad_out").string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("rendur") != std::string::npos);
}

TEST_CASE("missing network file exits 2") {
    const std::string cfg = write_config(
        "missing_net.json",
        json{{"scene", {{"type", "network"}, {"path", (work() / "nope.sdfn").string()}}}});
    const Result r =
        run("render --config " + cfg + " --out " + (work() / "missing_out").string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("existing run directory requires --force") {
    const std::string cfg = write_config("tiny.json", tiny_config());
    const std::string out = (work() / "force_out").string();
    fs::remove_all(out);
    CHECK(run("render --config " + cfg + " --resolution 8 --out " + out).exit_code == 0);
    const Result again = run("render --config " + cfg + " --resolution 8 --out " + out);
    CHECK(again.exit_code == 1);
    CHECK(run("render --config " + cfg + " --resolution 8 --out " + out + " --force").exit_code ==
          0);
}

TEST_CASE("init-sphere with one iteration writes one history row") {
    json cfg = tiny_config();
    cfg["sphere_init"]["iterations"] = 1;
    const std::string path = write_config("one_iter.json", cfg);
    const fs::path out = work() / "one_iter_out";
    const Result r = run("init-sphere --config " + path + " --out " + out.string() + " --force");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(out / "loss_history.csv") == 2);  // header + one row
    CHECK(fs::exists(out / "network.sdfn"));
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("render writes the manifest with the effective camera") {
    const std::string cfg = write_config("render.json", tiny_config());
    const fs::path out = work() / "render_out";
    const Result r = run("render --config " + cfg + " --azimuth 0.45 --resolution 8 --out " +
                         out.string() + " --force");
    CHECK(r.exit_code == 0);
    for (const char* name : {"color.png", "color.pfm", "opacity.png", "opacity.pfm", "depth.pfm",
                             "depth.png", "manifest.json"})
        CHECK(fs::exists(out / name));
    std::ifstream mf(out / "manifest.json");
    const json manifest = json::parse(mf);
    CHECK(manifest.at("camera").at("azimuth").get<double>() == 0.45);
    // config round trip: the echoed config reloads to the same json
    CHECK(manifest.at("config").at("camera").at("azimuth").get<double>() == 0.45);
}

TEST_CASE("extract-mesh --subdivide 2 multiplies faces by 16") {
    const std::string cfg = write_config("mesh.json", tiny_config());
    const fs::path out0 = work() / "mesh_plain";
    const fs::path out2 = work() / "mesh_sub2";
    CHECK(run("extract-mesh --config " + cfg + " --resolution 24 --out " + out0.string() +
              " --force")
              .exit_code == 0);
    CHECK(run("extract-mesh --config " + cfg + " --resolution 24 --subdivide 2 --out " +
              out2.string() + " --force")
              .exit_code == 0);
    const auto plain = sdfvr::import_ply((out0 / "mesh.ply").string());
    const auto sub = sdfvr::import_ply((out2 / "mesh.ply").string());
    REQUIRE(!plain.faces.empty());
    CHECK(sub.faces.size() == 16 * plain.faces.size());
}

TEST_CASE("extract-mesh with noise writes the property reproducibly") {
    const std::string cfg = write_config("mesh_noise.json", tiny_config());
    const fs::path out_a = work() / "mesh_noise_a";
    const fs::path out_b = work() / "mesh_noise_b";
    for (const auto& out : {out_a, out_b})
        CHECK(run("extract-mesh --config " + cfg + " --resolution 24 --noise --seed 9 --out " +
                  out.string() + " --force")
                  .exit_code == 0);
    const auto a = sdfvr::import_ply((out_a / "mesh.ply").string());
    const auto b = sdfvr::import_ply((out_b / "mesh.ply").string());
    REQUIRE(a.has_noise());
    CHECK(a.noise == b.noise);
}

TEST_CASE("extract-mesh on an empty scene warns and exits 0") {
    json cfg = tiny_config();
    cfg["scene"]["radius"] = 1e-4;  // below grid resolution, no crossing
    const std::string path = write_config("empty_mesh.json", cfg);
    const fs::path out = work() / "empty_mesh_out";
    const Result r =
        run("extract-mesh --config " + path + " --resolution 8 --out " + out.string() +
            " --force");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("empty mesh") != std::string::npos);
    CHECK(sdfvr::import_ply((out / "mesh.ply").string()).faces.empty());
}

TEST_CASE("eval-consistency batch writes one row per identity plus a mean row") {
    const std::string cfg = write_config("eval.json", tiny_config());
    const fs::path out = work() / "eval_out";
    const Result r = run("eval-consistency --config " + cfg +
                         " --resolution 24 --samples 24 --alpha 0.01 --batch 3 --out " +
                         out.string() + " --force");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(out / "aggregate.csv") == 5);  // header + 3 identities + mean
    for (int i = 0; i < 3; ++i)
        CHECK(fs::exists(out / ("report_" + std::to_string(i) + ".json")));
    CHECK(fs::exists(out / "nn_distance.png"));
}

TEST_CASE("eval-consistency on an empty scene exits 2 with a diagnostic") {
    json cfg = tiny_config();
    cfg["scene"]["radius"] = 1e-5;
    const std::string path = write_config("eval_empty.json", cfg);
    const Result r = run("eval-consistency --config " + path +
                         " --resolution 12 --samples 12 --alpha 0.001 --out " +
                         (work() / "eval_empty_out").string() + " --force");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("filtered") != std::string::npos);
}

TEST_CASE("gradcheck reports every trunk layer and both heads") {
    const fs::path out = work() / "grad_out";
    const Result r =
        run("gradcheck --nets 2 --points 2 --seed 3 --out " + out.string() + " --force");
    CHECK(r.exit_code == 0);
    for (const char* name : {"trunk_0", "trunk_1", "trunk_2", "trunk_3", "trunk_4", "trunk_5",
                             "trunk_6", "trunk_7", "sdf_head", "color_head", "color_film",
                             "map_head"})
        CHECK(r.output.find(name) != std::string::npos);
}
