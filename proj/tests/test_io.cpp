#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sdfvr/config.hpp"
#include "sdfvr/errors.hpp"
#include "sdfvr/image_io.hpp"

using namespace sdfvr;
using nlohmann::json;

namespace {

RenderBuffers tiny_buffers() {
    RenderBuffers b;
    b.width = 2;
    b.height = 2;
    b.feature_width = 2;
    b.color = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.25};
    b.feature = {1, 2, 3, 4, 5, 6, 7, 8};
    b.depth = {0.9, 1.0, 1.05, 0.95};
    b.opacity = {1.0, 0.8, 0.4, 0.0};
    b.valid = {1, 1, 0, 0};
    return b;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

}  // namespace

TEST_CASE("pfm header and payload layout") {
    const RenderBuffers b = tiny_buffers();
    const std::string path = "test_io_depth.pfm";
    write_pfm_gray(path, 2, 2, b.depth);
    const std::string bytes = slurp(path);
    CHECK(bytes.substr(0, 3) == "Pf\n");
    CHECK(bytes.find("2 2\n-1.0\n") != std::string::npos);
    // payload: 4 floats, bottom row first
    const std::size_t header = bytes.find("-1.0\n") + 5;
    REQUIRE(bytes.size() - header == 16);
    float v[4];
    std::memcpy(v, bytes.data() + header, 16);
    CHECK(v[0] == doctest::Approx(1.05));  // bottom-left
    CHECK(v[1] == doctest::Approx(0.95));
    CHECK(v[2] == doctest::Approx(0.9));   // top-left
    CHECK(v[3] == doctest::Approx(1.0));
    std::remove(path.c_str());
}

TEST_CASE("png writers are deterministic") {
    const RenderBuffers b = tiny_buffers();
    write_png_rgb("test_io_a.png", 2, 2, color_to_bytes(b));
    write_png_rgb("test_io_b.png", 2, 2, color_to_bytes(b));
    CHECK(slurp("test_io_a.png") == slurp("test_io_b.png"));
    CHECK(slurp("test_io_a.png").substr(1, 3) == "PNG");
    std::remove("test_io_a.png");
    std::remove("test_io_b.png");
}

TEST_CASE("depth visualization normalizes and zeroes invalid pixels") {
    const RenderBuffers b = tiny_buffers();
    const auto bytes = depth_to_bytes(b, 0.88, 1.12);
    CHECK(bytes[0] == static_cast<std::uint8_t>(std::lround((0.9 - 0.88) / 0.24 * 255)));
    CHECK(bytes[2] == 0);  // invalid
    CHECK(bytes[3] == 0);
    CHECK_THROWS_AS(depth_to_bytes(b, 1.0, 1.0), ParamError);
}

TEST_CASE("feature raw dump and sidecar") {
    const RenderBuffers b = tiny_buffers();
    write_feature_raw("test_io_feat.raw", "test_io_feat.json", b);
    const std::string raw = slurp("test_io_feat.raw");
    REQUIRE(raw.size() == 8 * 4);
    float v[8];
    std::memcpy(v, raw.data(), sizeof v);
    for (int i = 0; i < 8; ++i) CHECK(v[i] == doctest::Approx(b.feature[i]));
    const json meta = json::parse(slurp("test_io_feat.json"));
    CHECK(meta.at("width") == 2);
    CHECK(meta.at("height") == 2);
    CHECK(meta.at("channels") == 2);
    CHECK(meta.at("dtype") == "float32");
    std::remove("test_io_feat.raw");
    std::remove("test_io_feat.json");
}

TEST_CASE("config defaults mirror the dataset constants") {
    const RunConfig cfg = config_from_json(json::object());
    CHECK(cfg.camera.fov_deg == 12.0);
    CHECK(cfg.camera.near == 0.88);
    CHECK(cfg.camera.far == 1.12);
    CHECK(cfg.render.samples == 24);
    CHECK(cfg.camera.azimuth_std == 0.3);
    CHECK(cfg.camera.elevation_std == 0.15);
    CHECK(cfg.weights.lambda_view == 15.0);
    CHECK(cfg.weights.lambda_eik == 0.1);
    CHECK(cfg.weights.lambda_surf == 0.05);
    CHECK(cfg.sphere_init.iterations == 10000);
}

TEST_CASE("config rejects unknown keys naming the offender") {
    json j{{"seed", 1}, {"renderr", json::object()}};
    try {
        config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("renderr") != std::string::npos);
    }

    json nested{{"camera", {{"fov_degg", 12.0}}}};
    try {
        config_from_json(nested);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("fov_degg") != std::string::npos);
    }
}

TEST_CASE("config validates semantic constraints") {
    CHECK_THROWS_AS(config_from_json(json{{"scene", {{"type", "cylinder"}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"scene", {{"type", "network"}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"render", {{"samples", 0}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"sphere_init", {{"iterations", 0}}}}), ConfigError);
}

TEST_CASE("effective config round trips") {
    json j{{"seed", 42},
           {"scene", {{"type", "sphere"}, {"radius", 0.1}}},
           {"camera", {{"width", 128}, {"height", 128}}}};
    const RunConfig cfg = config_from_json(j);
    const json effective = config_to_json(cfg);
    const RunConfig again = config_from_json(effective);
    CHECK(config_to_json(again) == effective);
    CHECK(effective.at("seed") == 42);
    CHECK(effective.at("scene").at("radius") == 0.1);
    CHECK(effective.at("camera").at("width") == 128);
    CHECK(effective.at("camera").at("fov_deg") == 12.0);
}
