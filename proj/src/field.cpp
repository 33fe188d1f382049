#include "sdfvr/field.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sdfvr/errors.hpp"

namespace sdfvr {

namespace {

void check_mods(const FieldNetwork& net, const ModulationSignals& mods) {
    if (mods.layers() != net.modulated_layers())
        throw ShapeError("modulation signal count does not match network depth");
    for (int i = 0; i < net.depth(); ++i) {
        if (mods.gamma[i].size() != net.width() || mods.beta[i].size() != net.width())
            throw ShapeError("modulation width mismatch on trunk layer");
    }
    if (mods.gamma.back().size() != net.feature_width() ||
        mods.beta.back().size() != net.feature_width())
        throw ShapeError("modulation width mismatch on color layer");
}

void check_unit_dirs(const Matrix& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        if (std::abs(v.col(c).norm() - 1.0) > 1e-6)
            throw ShapeError("view direction must be unit length");
    }
}

Matrix affine_batch(const AffineParams& p, const Matrix& x) {
    return (p.W * x).colwise() + p.b;
}

Matrix film_batch(const Matrix& u, const Vector& gamma, const Vector& beta) {
    return ((u.array().colwise() * gamma.array()).colwise() + beta.array()).sin();
}

double lrelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// Forward pass of the trunk with everything the reverse sweep needs.
struct TrunkCache {
    std::vector<Matrix> u;    // W x + b per layer
    std::vector<Matrix> act;  // sin(gamma u + beta) per layer
};

Matrix trunk_forward(const FieldNetwork& net, const ModulationSignals& mods, const Matrix& x,
                     TrunkCache* cache) {
    Matrix cur = x;
    for (int i = 0; i < net.depth(); ++i) {
        Matrix u = affine_batch(net.trunk[i], cur);
        cur = film_batch(u, mods.gamma[i], mods.beta[i]);
        if (cache) {
            cache->u.push_back(std::move(u));
            cache->act.push_back(cur);
        }
    }
    return cur;
}

struct MappingCache {
    std::vector<Vector> pre;  // affine outputs per hidden layer
    std::vector<Vector> act;  // leaky-relu outputs
};

Vector mapping_hidden_forward(const MappingNetwork& net, const Vector& z, MappingCache* cache) {
    Vector cur = z;
    for (const auto& layer : net.hidden) {
        Vector pre = layer.W * cur + layer.b;
        cur = pre.unaryExpr([&](double t) { return lrelu(t, net.leaky_slope); });
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->act.push_back(cur);
        }
    }
    return cur;
}

ModulationSignals split_head(const MappingNetwork& net, const Vector& head_out) {
    ModulationSignals mods;
    Eigen::Index offset = 0;
    for (int w : net.mod_widths) {
        mods.gamma.push_back(head_out.segment(offset, w));
        offset += w;
        mods.beta.push_back(head_out.segment(offset, w));
        offset += w;
    }
    return mods;
}

}  // namespace

ModulationSignals mapping_forward(const MappingNetwork& net, const Vector& z) {
    if (z.size() != net.z_dim()) throw ShapeError("latent dimension mismatch");
    const Vector w = mapping_hidden_forward(net, z, nullptr);
    return split_head(net, net.head.W * w + net.head.b);
}

Vector film_siren_forward(const AffineParams& layer, const Vector& x, const Vector& gamma,
                          const Vector& beta) {
    if (x.size() != layer.in()) throw ShapeError("film layer input width mismatch");
    if (gamma.size() != layer.out() || beta.size() != layer.out())
        throw ShapeError("film layer modulation width mismatch");
    const Vector u = layer.W * x + layer.b;
    return (gamma.array() * u.array() + beta.array()).sin().matrix();
}

void field_query_batch(const FieldNetwork& net, const ModulationSignals& mods, const Matrix& x,
                       const Matrix& v, RowVector& d_out, Matrix* color_out, Matrix* feature_out) {
    check_mods(net, mods);
    if (x.rows() != 3) throw ShapeError("query points must be 3 x B");
    const bool want_color = color_out != nullptr || feature_out != nullptr;
    if (want_color) {
        if (v.rows() != 3 || v.cols() != x.cols())
            throw ShapeError("view directions must be 3 x B");
        check_unit_dirs(v);
    }

    const Matrix h = trunk_forward(net, mods, x, nullptr);
    d_out = ((net.sdf_head.W * h).colwise() + net.sdf_head.b).row(0);

    if (!want_color) return;
    Matrix film_in(h.rows() + 3, h.cols());
    film_in.topRows(h.rows()) = h;
    film_in.bottomRows(3) = v;
    const Matrix feat =
        film_batch(affine_batch(net.color_film, film_in), mods.gamma.back(), mods.beta.back());
    if (feature_out) *feature_out = feat;
    if (color_out) {
        const Matrix cpre = affine_batch(net.color_head, feat);
        *color_out = (1.0 / (1.0 + (-cpre.array()).exp())).matrix();
    }
}

FieldSample field_query(const FieldNetwork& net, const Vec3& x, const Vec3& v,
                        const ModulationSignals& mods) {
    RowVector d;
    Matrix color, feature;
    field_query_batch(net, mods, x, v, d, &color, &feature);
    FieldSample s;
    s.d = d(0);
    s.color = color.col(0);
    s.feature = feature.col(0);
    return s;
}

Vec3 sdf_input_gradient(const FieldNetwork& net, const Vec3& x, const ModulationSignals& mods) {
    check_mods(net, mods);
    TrunkCache cache;
    trunk_forward(net, mods, x, &cache);
    // reverse sweep, d = sdf_head.W * act_7 + b
    Vector g = net.sdf_head.W.row(0).transpose();
    for (int i = net.depth() - 1; i >= 0; --i) {
        const Vector pre =
            (mods.gamma[i].array() * cache.u[i].col(0).array() + mods.beta[i].array()).matrix();
        const Vector scaled =
            (g.array() * pre.array().cos() * mods.gamma[i].array()).matrix();
        g = net.trunk[i].W.transpose() * scaled;
    }
    return g;
}

FieldArch arch_of(const FieldModel& model) {
    FieldArch a;
    a.z_dim = model.mapping.z_dim();
    a.map_hidden = model.mapping.w_dim();
    a.map_depth = static_cast<int>(model.mapping.hidden.size());
    a.trunk_width = model.field.width();
    a.feature_width = model.field.feature_width();
    a.trunk_depth = model.field.depth();
    return a;
}

namespace {

Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

FieldModel make_field_model(const FieldArch& arch, Rng& rng) {
    if (arch.trunk_depth < 1 || arch.map_depth < 1 || arch.trunk_width < 1 ||
        arch.feature_width < 1 || arch.z_dim < 1 || arch.map_hidden < 1)
        throw ShapeError("invalid field architecture");
    FieldModel m;

    // trunk: SIREN init, first layer U[-1/in, 1/in], later U[+-sqrt(6/in)/omega0]
    for (int i = 0; i < arch.trunk_depth; ++i) {
        const int in = i == 0 ? 3 : arch.trunk_width;
        const double bound = i == 0 ? 1.0 / in : std::sqrt(6.0 / in) / arch.omega0;
        m.field.trunk.push_back({uniform_matrix(arch.trunk_width, in, bound, rng),
                                 Vector::Zero(arch.trunk_width)});
    }
    const auto siren_tail = [&](int out, int in) {
        const double bound = std::sqrt(6.0 / in) / arch.omega0;
        return AffineParams{uniform_matrix(out, in, bound, rng), Vector::Zero(out)};
    };
    m.field.sdf_head = siren_tail(1, arch.trunk_width);
    m.field.color_film = siren_tail(arch.feature_width, arch.trunk_width + 3);
    m.field.color_head = siren_tail(3, arch.feature_width);

    // mapping: torch-style U[+-1/sqrt(in)] hidden layers
    for (int i = 0; i < arch.map_depth; ++i) {
        const int in = i == 0 ? arch.z_dim : arch.map_hidden;
        const double bound = 1.0 / std::sqrt(in);
        m.mapping.hidden.push_back({uniform_matrix(arch.map_hidden, in, bound, rng),
                                    uniform_matrix(arch.map_hidden, 1, bound, rng).col(0)});
    }
    for (int i = 0; i < arch.trunk_depth; ++i) m.mapping.mod_widths.push_back(arch.trunk_width);
    m.mapping.mod_widths.push_back(arch.feature_width);

    int head_out = 0;
    for (int w : m.mapping.mod_widths) head_out += 2 * w;
    // small head weights; gamma biases start at omega0 so initial layers run
    // at the base sine frequency, beta biases at zero
    m.mapping.head.W = uniform_matrix(head_out, arch.map_hidden,
                                      0.05 / std::sqrt(arch.map_hidden), rng);
    m.mapping.head.b = Vector::Zero(head_out);
    int offset = 0;
    for (int w : m.mapping.mod_widths) {
        m.mapping.head.b.segment(offset, w).setConstant(arch.omega0);
        offset += 2 * w;
    }
    return m;
}

ModelGradients ModelGradients::zeros_like(const FieldModel& model) {
    ModelGradients g;
    const auto zero_of = [](const AffineParams& p) {
        return AffineParams{Matrix::Zero(p.out(), p.in()), Vector::Zero(p.out())};
    };
    for (const auto& l : model.mapping.hidden) g.map_hidden.push_back(zero_of(l));
    g.map_head = zero_of(model.mapping.head);
    for (const auto& l : model.field.trunk) g.trunk.push_back(zero_of(l));
    g.sdf_head = zero_of(model.field.sdf_head);
    g.color_film = zero_of(model.field.color_film);
    g.color_head = zero_of(model.field.color_head);
    return g;
}

void mapping_backward(const MappingNetwork& net, const Vector& z, const ModulationSignals& d_mods,
                      std::vector<AffineParams>& d_hidden, AffineParams& d_head) {
    MappingCache cache;
    mapping_hidden_forward(net, z, &cache);

    Vector d_out(net.head.out());
    Eigen::Index offset = 0;
    for (size_t k = 0; k < d_mods.gamma.size(); ++k) {
        const Eigen::Index w = d_mods.gamma[k].size();
        d_out.segment(offset, w) = d_mods.gamma[k];
        offset += w;
        d_out.segment(offset, w) = d_mods.beta[k];
        offset += w;
    }

    const Vector& w_latent = cache.act.back();
    d_head.W += d_out * w_latent.transpose();
    d_head.b += d_out;
    Vector g = net.head.W.transpose() * d_out;

    for (int i = static_cast<int>(net.hidden.size()) - 1; i >= 0; --i) {
        const Vector dpre = g.binaryExpr(cache.pre[i], [&](double gi, double pi) {
            return pi >= 0.0 ? gi : gi * net.leaky_slope;
        });
        const Vector& input = i == 0 ? z : cache.act[i - 1];
        d_hidden[i].W += dpre * input.transpose();
        d_hidden[i].b += dpre;
        g = net.hidden[i].W.transpose() * dpre;
    }
}

RegressionResult param_gradient_regression(const FieldModel& model, const Vector& z,
                                           const RegressionBatch& batch) {
    const Eigen::Index B = batch.x.cols();
    if (B == 0) throw ShapeError("regression batch must be nonempty");
    if (batch.x.rows() != 3) throw ShapeError("regression points must be 3 x B");
    if (batch.d_targets.size() != B) throw ShapeError("target count mismatch");
    const bool with_color = batch.c_targets.size() != 0;
    if (with_color && (batch.c_targets.rows() != 3 || batch.c_targets.cols() != B))
        throw ShapeError("color targets must be 3 x B");
    if (with_color && (batch.v.rows() != 3 || batch.v.cols() != B))
        throw ShapeError("view directions must be 3 x B");

    const FieldNetwork& net = model.field;
    MappingCache map_cache;
    const Vector w_latent = mapping_hidden_forward(model.mapping, z, &map_cache);
    const ModulationSignals mods =
        split_head(model.mapping, model.mapping.head.W * w_latent + model.mapping.head.b);
    check_mods(net, mods);

    TrunkCache cache;
    trunk_forward(net, mods, batch.x, &cache);
    const Matrix& h = cache.act.back();
    const RowVector d = ((net.sdf_head.W * h).colwise() + net.sdf_head.b).row(0);

    RegressionResult res;
    res.grads = ModelGradients::zeros_like(model);
    ModulationSignals d_mods;
    for (int i = 0; i < mods.layers(); ++i) {
        d_mods.gamma.push_back(Vector::Zero(mods.gamma[i].size()));
        d_mods.beta.push_back(Vector::Zero(mods.beta[i].size()));
    }

    const RowVector residual = d - batch.d_targets.transpose();
    res.loss = residual.squaredNorm() / static_cast<double>(B);
    const RowVector d_d = 2.0 / static_cast<double>(B) * residual;

    // SDF head
    res.grads.sdf_head.W += d_d * h.transpose();
    res.grads.sdf_head.b(0) += d_d.sum();
    Matrix g_h = net.sdf_head.W.transpose() * d_d;  // width x B

    // color path (optional)
    if (with_color) {
        check_unit_dirs(batch.v);
        Matrix film_in(h.rows() + 3, B);
        film_in.topRows(h.rows()) = h;
        film_in.bottomRows(3) = batch.v;
        const Matrix u8 = affine_batch(net.color_film, film_in);
        const Matrix pre8 =
            ((u8.array().colwise() * mods.gamma.back().array()).colwise() +
             mods.beta.back().array())
                .matrix();
        const Matrix feat = pre8.array().sin().matrix();
        const Matrix cpre = affine_batch(net.color_head, feat);
        const Matrix c = (1.0 / (1.0 + (-cpre.array()).exp())).matrix();

        const Matrix c_res = c - batch.c_targets;
        res.loss += c_res.squaredNorm() / static_cast<double>(3 * B);
        const Matrix d_c = 2.0 / static_cast<double>(3 * B) * c_res;
        const Matrix d_cpre = (d_c.array() * c.array() * (1.0 - c.array())).matrix();

        res.grads.color_head.W += d_cpre * feat.transpose();
        res.grads.color_head.b += d_cpre.rowwise().sum();
        const Matrix g_feat = net.color_head.W.transpose() * d_cpre;

        const Matrix g_pre8 = (g_feat.array() * pre8.array().cos()).matrix();
        d_mods.gamma.back() += (g_pre8.array() * u8.array()).rowwise().sum().matrix();
        d_mods.beta.back() += g_pre8.rowwise().sum();
        const Matrix scaled8 = (g_pre8.array().colwise() * mods.gamma.back().array()).matrix();
        res.grads.color_film.W += scaled8 * film_in.transpose();
        res.grads.color_film.b += scaled8.rowwise().sum();
        g_h += (net.color_film.W.transpose() * scaled8).topRows(h.rows());
    }

    // trunk reverse sweep
    for (int i = net.depth() - 1; i >= 0; --i) {
        const Matrix pre =
            ((cache.u[i].array().colwise() * mods.gamma[i].array()).colwise() +
             mods.beta[i].array())
                .matrix();
        const Matrix g_pre = (g_h.array() * pre.array().cos()).matrix();
        d_mods.gamma[i] += (g_pre.array() * cache.u[i].array()).rowwise().sum().matrix();
        d_mods.beta[i] += g_pre.rowwise().sum();
        const Matrix scaled = (g_pre.array().colwise() * mods.gamma[i].array()).matrix();
        const Matrix& input = i == 0 ? batch.x : cache.act[i - 1];
        res.grads.trunk[i].W += scaled * input.transpose();
        res.grads.trunk[i].b += scaled.rowwise().sum();
        if (i > 0) g_h = net.trunk[i].W.transpose() * scaled;
    }

    mapping_backward(model.mapping, z, d_mods, res.grads.map_hidden, res.grads.map_head);
    return res;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr char kMagic[4] = {'S', 'D', 'F', 'N'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter files are little-endian; big-endian hosts unsupported");

void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_affine(std::ofstream& f, const AffineParams& p) {
    for (int i = 0; i < p.out(); ++i)
        for (int j = 0; j < p.in(); ++j) {
            const float x = static_cast<float>(p.W(i, j));
            f.write(reinterpret_cast<const char*>(&x), sizeof x);
        }
    for (int i = 0; i < p.out(); ++i) {
        const float x = static_cast<float>(p.b(i));
        f.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
}

AffineParams read_affine(std::ifstream& f, int out, int in) {
    AffineParams p{Matrix(out, in), Vector(out)};
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) {
            float x = 0;
            f.read(reinterpret_cast<char*>(&x), sizeof x);
            p.W(i, j) = x;
        }
    for (int i = 0; i < out; ++i) {
        float x = 0;
        f.read(reinterpret_cast<char*>(&x), sizeof x);
        p.b(i) = x;
    }
    return p;
}

}  // namespace

void save_model(const FieldModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FilesystemError("cannot open for writing: " + path);
    const FieldArch a = arch_of(model);
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_u32(f, static_cast<std::uint32_t>(a.z_dim));
    write_u32(f, static_cast<std::uint32_t>(a.map_hidden));
    write_u32(f, static_cast<std::uint32_t>(a.map_depth));
    write_u32(f, static_cast<std::uint32_t>(a.trunk_depth));
    write_u32(f, static_cast<std::uint32_t>(a.trunk_width));
    write_u32(f, static_cast<std::uint32_t>(a.feature_width));
    for (const auto& l : model.mapping.hidden) write_affine(f, l);
    write_affine(f, model.mapping.head);
    for (const auto& l : model.field.trunk) write_affine(f, l);
    write_affine(f, model.field.sdf_head);
    write_affine(f, model.field.color_film);
    write_affine(f, model.field.color_head);
    if (!f) throw FilesystemError("write failed: " + path);
}

FieldModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FilesystemError("cannot open: " + path);
    char magic[4] = {};
    f.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FilesystemError("not a network parameter file: " + path);
    if (read_u32(f) != kVersion) throw FilesystemError("unsupported format version: " + path);

    FieldArch a;
    a.z_dim = static_cast<int>(read_u32(f));
    a.map_hidden = static_cast<int>(read_u32(f));
    a.map_depth = static_cast<int>(read_u32(f));
    a.trunk_depth = static_cast<int>(read_u32(f));
    a.trunk_width = static_cast<int>(read_u32(f));
    a.feature_width = static_cast<int>(read_u32(f));
    if (!f || a.z_dim < 1 || a.map_depth < 1 || a.trunk_depth < 1 || a.trunk_width < 1 ||
        a.feature_width < 1 || a.map_hidden < 1)
        throw FilesystemError("corrupt parameter header: " + path);

    FieldModel m;
    for (int i = 0; i < a.map_depth; ++i)
        m.mapping.hidden.push_back(read_affine(f, a.map_hidden, i == 0 ? a.z_dim : a.map_hidden));
    for (int i = 0; i < a.trunk_depth; ++i) m.mapping.mod_widths.push_back(a.trunk_width);
    m.mapping.mod_widths.push_back(a.feature_width);
    int head_out = 0;
    for (int w : m.mapping.mod_widths) head_out += 2 * w;
    m.mapping.head = read_affine(f, head_out, a.map_hidden);
    for (int i = 0; i < a.trunk_depth; ++i)
        m.field.trunk.push_back(read_affine(f, a.trunk_width, i == 0 ? 3 : a.trunk_width));
    m.field.sdf_head = read_affine(f, 1, a.trunk_width);
    m.field.color_film = read_affine(f, a.feature_width, a.trunk_width + 3);
    m.field.color_head = read_affine(f, 3, a.feature_width);
    if (!f) throw FilesystemError("truncated parameter file: " + path);
    return m;
}

}  // namespace sdfvr
