#include "sdfvr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "sdfvr/errors.hpp"

namespace sdfvr {

namespace {

void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
        throw ShapeError("pixel buffer size mismatch");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw FilesystemError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw FilesystemError("png write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int j = 0; j < height; ++j)
        png_write_row(png, const_cast<png_bytep>(pixels.data() +
                                                 static_cast<std::size_t>(j) * width * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_pfm(const std::string& path, int width, int height, int channels,
               const std::vector<double>& values) {
    if (values.size() != static_cast<std::size_t>(width) * height * channels)
        throw ShapeError("value buffer size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FilesystemError("cannot open for writing: " + path);
    f << (channels == 1 ? "Pf" : "PF") << "\n" << width << " " << height << "\n-1.0\n";
    for (int j = height - 1; j >= 0; --j) {
        for (int i = 0; i < width * channels; ++i) {
            const float v =
                static_cast<float>(values[static_cast<std::size_t>(j) * width * channels + i]);
            f.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    if (!f) throw FilesystemError("write failed: " + path);
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
    write_png(path, width, height, 1, pixels);
}

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels) {
    write_png(path, width, height, 3, pixels);
}

void write_pfm_gray(const std::string& path, int width, int height,
                    const std::vector<double>& values) {
    write_pfm(path, width, height, 1, values);
}

void write_pfm_rgb(const std::string& path, int width, int height,
                   const std::vector<double>& values) {
    write_pfm(path, width, height, 3, values);
}

void write_feature_raw(const std::string& raw_path, const std::string& json_path,
                       const RenderBuffers& buffers) {
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw FilesystemError("cannot open for writing: " + raw_path);
    for (double v : buffers.feature) {
        const float x = static_cast<float>(v);
        raw.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
    if (!raw) throw FilesystemError("write failed: " + raw_path);
    nlohmann::json meta{{"width", buffers.width},
                        {"height", buffers.height},
                        {"channels", buffers.feature_width},
                        {"dtype", "float32"},
                        {"layout", "row-major, channels interleaved"}};
    std::ofstream js(json_path);
    if (!js) throw FilesystemError("cannot open for writing: " + json_path);
    js << meta.dump(2) << "\n";
}

std::vector<std::uint8_t> color_to_bytes(const RenderBuffers& buffers) {
    std::vector<std::uint8_t> out(buffers.pixels() * 3);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(buffers.color[i]);
    return out;
}

std::vector<std::uint8_t> opacity_to_bytes(const RenderBuffers& buffers) {
    std::vector<std::uint8_t> out(buffers.pixels());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(buffers.opacity[i]);
    return out;
}

std::vector<std::uint8_t> depth_to_bytes(const RenderBuffers& buffers, double near, double far) {
    if (!(far > near)) throw ParamError("depth normalization needs far > near");
    std::vector<std::uint8_t> out(buffers.pixels(), 0);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (buffers.valid[i]) out[i] = to_byte((buffers.depth[i] - near) / (far - near));
    return out;
}

}  // namespace sdfvr
