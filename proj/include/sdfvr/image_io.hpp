#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdfvr/render.hpp"

namespace sdfvr {

// 8-bit PNG writers (row 0 at the top).
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);

// 32-bit float PFM, little-endian (negative scale), rows bottom-to-top per
// the format convention.
void write_pfm_gray(const std::string& path, int width, int height,
                    const std::vector<double>& values);
void write_pfm_rgb(const std::string& path, int width, int height,
                   const std::vector<double>& values);

// Raw float32 dump with a JSON sidecar describing the shape.
void write_feature_raw(const std::string& raw_path, const std::string& json_path,
                       const RenderBuffers& buffers);

// Buffer-level helpers.
std::vector<std::uint8_t> color_to_bytes(const RenderBuffers& buffers);
std::vector<std::uint8_t> opacity_to_bytes(const RenderBuffers& buffers);
// Depth visualization normalized by [near, far]; invalid pixels map to 0.
std::vector<std::uint8_t> depth_to_bytes(const RenderBuffers& buffers, double near, double far);

}  // namespace sdfvr
