#include "sdfvr/geometry.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "sdfvr/errors.hpp"
#include "sdfvr/mc_tables.hpp"
#include "sdfvr/parallel.hpp"

namespace sdfvr {

Vec3 SdfGrid::lattice_point(int i, int j, int k) const {
    const Vec3 cs = cell_size();
    return bounds_min + Vec3(i * cs.x(), j * cs.y(), k * cs.z());
}

Vec3 SdfGrid::cell_size() const {
    return (bounds_max - bounds_min) / static_cast<double>(resolution - 1);
}

SdfGrid sample_grid(const FieldEvaluator& field, const Vec3& bounds_min, const Vec3& bounds_max,
                    int resolution, int threads) {
    if (resolution < 2) throw ParamError("grid resolution must be at least 2");
    if (!((bounds_max - bounds_min).minCoeff() > 0.0))
        throw ParamError("grid bounds must have positive extent");

    SdfGrid grid;
    grid.resolution = resolution;
    grid.bounds_min = bounds_min;
    grid.bounds_max = bounds_max;
    grid.values.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0.0);

    const std::size_t slab = static_cast<std::size_t>(resolution) * resolution;
    parallel_for(static_cast<std::size_t>(resolution), threads,
                 [&](std::size_t k0, std::size_t k1) {
                     Matrix x(3, static_cast<Eigen::Index>(slab));
                     RowVector d;
                     for (std::size_t k = k0; k < k1; ++k) {
                         Eigen::Index col = 0;
                         for (int j = 0; j < resolution; ++j)
                             for (int i = 0; i < resolution; ++i)
                                 x.col(col++) = grid.lattice_point(i, j, static_cast<int>(k));
                         field.evaluate(x, Matrix(), d, nullptr, nullptr);
                         std::copy(d.data(), d.data() + slab, grid.values.data() + k * slab);
                     }
                 });
    return grid;
}

void save_grid(const SdfGrid& grid, const std::string& raw_path, const std::string& json_path) {
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw FilesystemError("cannot open for writing: " + raw_path);
    for (double v : grid.values) {
        const float f = static_cast<float>(v);
        raw.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
    nlohmann::json meta{
        {"resolution", grid.resolution},
        {"bounds_min", {grid.bounds_min.x(), grid.bounds_min.y(), grid.bounds_min.z()}},
        {"bounds_max", {grid.bounds_max.x(), grid.bounds_max.y(), grid.bounds_max.z()}},
        {"dtype", "float32"},
        {"order", "x fastest, then y, then z"}};
    std::ofstream js(json_path);
    if (!js) throw FilesystemError("cannot open for writing: " + json_path);
    js << meta.dump(2) << "\n";
}

namespace {

// corner offsets matching the case tables
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
                               {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct EdgeRef {
    std::uint64_t id;  // lattice corner index * 3 + axis
    int ci, cj, ck;    // lattice coords of the lower corner
    int axis;
};

EdgeRef global_edge(const SdfGrid& grid, int i, int j, int k, int edge) {
    const int* a = kCorner[kEdgeCorners[edge][0]];
    const int* b = kCorner[kEdgeCorners[edge][1]];
    int axis = 0;
    for (int t = 0; t < 3; ++t)
        if (a[t] != b[t]) axis = t;
    const int ci = i + std::min(a[0], b[0]);
    const int cj = j + std::min(a[1], b[1]);
    const int ck = k + std::min(a[2], b[2]);
    const std::uint64_t corner =
        (static_cast<std::uint64_t>(ck) * grid.resolution + cj) * grid.resolution + ci;
    return {corner * 3 + axis, ci, cj, ck, axis};
}

Vec3 edge_vertex(const SdfGrid& grid, const EdgeRef& e, double iso) {
    int i2 = e.ci, j2 = e.cj, k2 = e.ck;
    (e.axis == 0 ? i2 : e.axis == 1 ? j2 : k2) += 1;
    const double va = grid.value(e.ci, e.cj, e.ck);
    const double vb = grid.value(i2, j2, k2);
    double t = 0.5;
    if (vb != va) t = std::clamp((iso - va) / (vb - va), 0.0, 1.0);
    const Vec3 pa = grid.lattice_point(e.ci, e.cj, e.ck);
    const Vec3 pb = grid.lattice_point(i2, j2, k2);
    return pa + t * (pb - pa);
}

}  // namespace

TriMesh marching_cubes(const SdfGrid& grid, double iso, int threads) {
    if (grid.resolution < 2) throw ParamError("grid resolution must be at least 2");
    const int cells = grid.resolution - 1;

    // Each z-slab collects triangles as global-edge-id triples; slabs are
    // merged in order so the result is independent of the thread count.
    std::vector<std::vector<std::array<EdgeRef, 3>>> per_slab(cells);
    parallel_for(static_cast<std::size_t>(cells), threads, [&](std::size_t k0, std::size_t k1) {
        for (std::size_t k = k0; k < k1; ++k) {
            auto& out = per_slab[k];
            for (int j = 0; j < cells; ++j) {
                for (int i = 0; i < cells; ++i) {
                    int cube = 0;
                    for (int c = 0; c < 8; ++c) {
                        const double v = grid.value(i + kCorner[c][0], j + kCorner[c][1],
                                                    static_cast<int>(k) + kCorner[c][2]);
                        if (v < iso) cube |= 1 << c;
                    }
                    if (mc::kEdgeTable[cube] == 0) continue;
                    const int* tri = mc::kTriTable[cube];
                    for (int t = 0; tri[t] != -1; t += 3) {
                        out.push_back({global_edge(grid, i, j, static_cast<int>(k), tri[t]),
                                       global_edge(grid, i, j, static_cast<int>(k), tri[t + 1]),
                                       global_edge(grid, i, j, static_cast<int>(k), tri[t + 2])});
                    }
                }
            }
        }
    });

    TriMesh mesh;
    std::unordered_map<std::uint64_t, int> vertex_of_edge;
    for (const auto& slab : per_slab) {
        for (const auto& tri : slab) {
            std::array<int, 3> face{};
            for (int c = 0; c < 3; ++c) {
                auto [it, inserted] =
                    vertex_of_edge.try_emplace(tri[c].id, static_cast<int>(mesh.vertices.size()));
                if (inserted) mesh.vertices.push_back(edge_vertex(grid, tri[c], iso));
                face[c] = it->second;
            }
            if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) continue;
            const Vec3 e1 = mesh.vertices[face[1]] - mesh.vertices[face[0]];
            const Vec3 e2 = mesh.vertices[face[2]] - mesh.vertices[face[0]];
            if (e1.cross(e2).norm() == 0.0) continue;
            mesh.faces.push_back(face);
        }
    }
    return mesh;
}

TriMesh subdivide(const TriMesh& mesh) {
    TriMesh out;
    out.vertices = mesh.vertices;
    out.noise = mesh.noise;
    out.faces.reserve(mesh.faces.size() * 4);

    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto [it, inserted] = midpoint.try_emplace(key, static_cast<int>(out.vertices.size()));
        if (inserted) {
            out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
            if (mesh.has_noise()) out.noise.push_back(0.5f * (mesh.noise[a] + mesh.noise[b]));
        }
        return it->second;
    };

    for (const auto& f : mesh.faces) {
        const int m01 = mid(f[0], f[1]);
        const int m12 = mid(f[1], f[2]);
        const int m20 = mid(f[2], f[0]);
        out.faces.push_back({f[0], m01, m20});
        out.faces.push_back({f[1], m12, m01});
        out.faces.push_back({f[2], m20, m12});
        out.faces.push_back({m01, m12, m20});
    }
    return out;
}

TriMesh attach_vertex_noise(const TriMesh& mesh, Rng& rng) {
    TriMesh out = mesh;
    out.noise.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < out.noise.size(); ++i)
        out.noise[i] = static_cast<float>(rng.normal());
    return out;
}

void export_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format) {
    for (const auto& f : mesh.faces)
        for (int v : f)
            if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
                throw ShapeError("face index out of range");
    if (mesh.has_noise() && mesh.noise.size() != mesh.vertices.size())
        throw ShapeError("noise array length must match vertex count");

    if (format == MeshFormat::Obj) {
        if (mesh.has_noise())
            std::cerr << "warning: OBJ cannot carry the per-vertex noise property, dropping it\n";
        std::ofstream f(path);
        if (!f) throw FilesystemError("cannot open for writing: " + path);
        f.precision(9);
        for (const auto& v : mesh.vertices)
            f << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
        for (const auto& t : mesh.faces)
            f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
        if (!f) throw FilesystemError("write failed: " + path);
        return;
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw FilesystemError("cannot open for writing: " + path);
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "element vertex " << mesh.vertices.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    if (mesh.has_noise()) f << "property float noise\n";
    f << "element face " << mesh.faces.size() << "\n";
    f << "property list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        float xyz[3] = {static_cast<float>(mesh.vertices[i].x()),
                        static_cast<float>(mesh.vertices[i].y()),
                        static_cast<float>(mesh.vertices[i].z())};
        f.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
        if (mesh.has_noise())
            f.write(reinterpret_cast<const char*>(&mesh.noise[i]), sizeof(float));
    }
    for (const auto& t : mesh.faces) {
        const std::uint8_t n = 3;
        f.write(reinterpret_cast<const char*>(&n), 1);
        const std::int32_t idx[3] = {t[0], t[1], t[2]};
        f.write(reinterpret_cast<const char*>(idx), sizeof idx);
    }
    if (!f) throw FilesystemError("write failed: " + path);
}

TriMesh import_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FilesystemError("cannot open: " + path);
    std::string line;
    std::getline(f, line);
    if (line != "ply") throw FilesystemError("not a PLY file: " + path);

    std::size_t n_vertices = 0, n_faces = 0;
    bool with_noise = false;
    std::string element;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "end_header") break;
        if (tok == "element") {
            std::size_t count = 0;
            ss >> element >> count;
            if (element == "vertex") n_vertices = count;
            if (element == "face") n_faces = count;
        } else if (tok == "property" && element == "vertex") {
            std::string type, name;
            ss >> type >> name;
            if (name == "noise") with_noise = true;
        }
    }

    TriMesh mesh;
    mesh.vertices.reserve(n_vertices);
    if (with_noise) mesh.noise.reserve(n_vertices);
    for (std::size_t i = 0; i < n_vertices; ++i) {
        float xyz[3];
        f.read(reinterpret_cast<char*>(xyz), sizeof xyz);
        mesh.vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
        if (with_noise) {
            float n;
            f.read(reinterpret_cast<char*>(&n), sizeof n);
            mesh.noise.push_back(n);
        }
    }
    for (std::size_t i = 0; i < n_faces; ++i) {
        std::uint8_t n = 0;
        f.read(reinterpret_cast<char*>(&n), 1);
        if (n != 3) throw FilesystemError("only triangle faces supported: " + path);
        std::int32_t idx[3];
        f.read(reinterpret_cast<char*>(idx), sizeof idx);
        mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
    if (!f) throw FilesystemError("truncated PLY file: " + path);
    return mesh;
}

}  // namespace sdfvr
