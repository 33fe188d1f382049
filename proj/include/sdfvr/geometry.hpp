#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdfvr/render.hpp"
#include "sdfvr/rng.hpp"

namespace sdfvr {

struct SdfGrid {
    int resolution = 0;  // samples per axis (res-1 cells)
    Vec3 bounds_min = Vec3::Zero();
    Vec3 bounds_max = Vec3::Zero();
    std::vector<double> values;  // index = (k * res + j) * res + i for (x=i, y=j, z=k)

    double value(int i, int j, int k) const {
        return values[(static_cast<std::size_t>(k) * resolution + j) * resolution + i];
    }
    Vec3 lattice_point(int i, int j, int k) const;
    Vec3 cell_size() const;
};

SdfGrid sample_grid(const FieldEvaluator& field, const Vec3& bounds_min, const Vec3& bounds_max,
                    int resolution, int threads = 0);

void save_grid(const SdfGrid& grid, const std::string& raw_path, const std::string& json_path);

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<float> noise;  // empty or one scalar per vertex

    bool has_noise() const { return !noise.empty(); }
};

// Standard table-driven marching cubes at the given iso level. Vertices are
// interpolated along cell edges and shared via lattice edge ids, so output
// ordering does not depend on the thread count. A grid with no zero crossing
// yields an empty mesh.
TriMesh marching_cubes(const SdfGrid& grid, double iso = 0.0, int threads = 0);

// Midpoint 1-to-4 subdivision; shared edges produce shared midpoints.
// Midpoint noise, when present, is the average of the edge endpoints'.
TriMesh subdivide(const TriMesh& mesh);

// iid standard normal scalar per vertex; geometry untouched
TriMesh attach_vertex_noise(const TriMesh& mesh, Rng& rng);

enum class MeshFormat { Ply, Obj };

// PLY is binary little-endian with an optional per-vertex float "noise"
// property; OBJ is ASCII and drops noise with a warning on stderr.
void export_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format);

// Reads meshes written by export_mesh (PLY only).
TriMesh import_ply(const std::string& path);

}  // namespace sdfvr
