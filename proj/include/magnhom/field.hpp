#pragma once

// Field containers: Q-periodic scalar fields on the unit cell and vector
// fields on a bounded domain grid, plus the on-disk vector-field format
// (text and binary variants, k-fastest ordering, little-endian doubles).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "magnhom/geometry.hpp"

namespace magnhom {

// Scalar field on the unit cell Q = [0,1]^3, N voxels per axis, interpreted
// Q-periodically by every stencil that touches it.
struct ScalarCellField {
    int resolution = 0;
    std::vector<double> values;
    bool zero_mean = false;

    ScalarCellField() = default;
    explicit ScalarCellField(int n, double fill = 0.0)
        : resolution(n), values(static_cast<std::size_t>(n) * n * n, fill) {
        if (n < 1) throw std::invalid_argument("cell resolution must be positive");
    }

    std::size_t flat(int i, int j, int k) const {
        int n = resolution;
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    }
    double& at(int i, int j, int k) { return values[flat(i, j, k)]; }
    double at(int i, int j, int k) const { return values[flat(i, j, k)]; }
    double at_periodic(int i, int j, int k) const {
        int n = resolution;
        return values[flat(positive_mod(i, n), positive_mod(j, n), positive_mod(k, n))];
    }

    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    void subtract_mean() {
        double m = mean();
        for (double& v : values) v -= m;
        zero_mean = true;
    }
    // RMS value, i.e. the discrete L2(Q) norm (|Q| = 1).
    double l2_norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s / static_cast<double>(values.size()));
    }
};

struct VectorDomainField {
    DomainGrid grid;
    std::vector<Vec3> values;

    VectorDomainField() = default;
    explicit VectorDomainField(const DomainGrid& g, Vec3 fill = {})
        : grid(g), values(g.voxel_count(), fill) {}

    std::size_t flat(int i, int j, int k) const { return grid.resolution.flat(i, j, k); }
    Vec3& at(int i, int j, int k) { return values[flat(i, j, k)]; }
    const Vec3& at(int i, int j, int k) const { return values[flat(i, j, k)]; }

    bool all_finite() const {
        for (const Vec3& v : values)
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) return false;
        return true;
    }
    double max_norm_deviation_from_unit() const {
        double d = 0.0;
        for (const Vec3& v : values) d = std::max(d, std::abs(norm(v) - 1.0));
        return d;
    }
};

inline double dot(const VectorDomainField& a, const VectorDomainField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("field grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += dot(a.values[i], b.values[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Vector-field file format.
//
// Text variant:
//   magnhom-field v1 text
//   extent <ex> <ey> <ez>
//   resolution <nx> <ny> <nz>
//   <mx> <my> <mz>          one triple per voxel, k fastest, then j, then i
//
// Binary variant: the 8-byte magic "MHFIELD1", extent as 3 little-endian
// float64, resolution as 3 little-endian uint32, then 3*nx*ny*nz
// little-endian float64 in the same voxel order.
// ---------------------------------------------------------------------------

namespace detail {

inline bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    std::uint8_t first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if (!host_is_little_endian()) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    std::uint8_t buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw std::runtime_error("unexpected end of binary field file");
    if (!host_is_little_endian()) std::reverse(buf, buf + sizeof(T));
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace detail

inline constexpr char kFieldBinaryMagic[9] = "MHFIELD1";

inline void save_field_text(const VectorDomainField& f, std::ostream& out) {
    out << "magnhom-field v1 text\n";
    char line[128];
    std::snprintf(line, sizeof(line), "extent %.17g %.17g %.17g\n", f.grid.extent.x,
                  f.grid.extent.y, f.grid.extent.z);
    out << line;
    out << "resolution " << f.grid.resolution.nx << ' ' << f.grid.resolution.ny << ' '
        << f.grid.resolution.nz << '\n';
    for (const Vec3& v : f.values) {
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << line;
    }
}

inline void save_field_binary(const VectorDomainField& f, std::ostream& out) {
    out.write(kFieldBinaryMagic, 8);
    detail::write_le(out, f.grid.extent.x);
    detail::write_le(out, f.grid.extent.y);
    detail::write_le(out, f.grid.extent.z);
    detail::write_le(out, static_cast<std::uint32_t>(f.grid.resolution.nx));
    detail::write_le(out, static_cast<std::uint32_t>(f.grid.resolution.ny));
    detail::write_le(out, static_cast<std::uint32_t>(f.grid.resolution.nz));
    for (const Vec3& v : f.values) {
        detail::write_le(out, v.x);
        detail::write_le(out, v.y);
        detail::write_le(out, v.z);
    }
}

inline void save_field(const VectorDomainField& f, const std::string& path,
                       bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open field file for writing: " + path);
    if (binary)
        save_field_binary(f, out);
    else
        save_field_text(f, out);
    if (!out) throw std::runtime_error("write failure on field file: " + path);
}

inline VectorDomainField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open field file: " + path);
    char magic[8] = {};
    in.read(magic, 8);
    if (!in) throw std::runtime_error("field file too short: " + path);
    if (std::memcmp(magic, kFieldBinaryMagic, 8) == 0) {
        Vec3 extent;
        extent.x = detail::read_le<double>(in);
        extent.y = detail::read_le<double>(in);
        extent.z = detail::read_le<double>(in);
        GridSize res;
        res.nx = static_cast<int>(detail::read_le<std::uint32_t>(in));
        res.ny = static_cast<int>(detail::read_le<std::uint32_t>(in));
        res.nz = static_cast<int>(detail::read_le<std::uint32_t>(in));
        VectorDomainField f(DomainGrid(extent, res));
        for (Vec3& v : f.values) {
            v.x = detail::read_le<double>(in);
            v.y = detail::read_le<double>(in);
            v.z = detail::read_le<double>(in);
        }
        return f;
    }
    // Text variant: rewind and parse line-wise.
    in.seekg(0);
    std::string header;
    std::getline(in, header);
    if (header != "magnhom-field v1 text")
        throw std::runtime_error("unrecognized field file header: " + path);
    std::string word;
    Vec3 extent;
    GridSize res;
    in >> word >> extent.x >> extent.y >> extent.z;
    if (!in || word != "extent") throw std::runtime_error("bad extent line in " + path);
    in >> word >> res.nx >> res.ny >> res.nz;
    if (!in || word != "resolution") throw std::runtime_error("bad resolution line in " + path);
    VectorDomainField f(DomainGrid(extent, res));
    for (Vec3& v : f.values) {
        in >> v.x >> v.y >> v.z;
        if (!in) throw std::runtime_error("truncated field data in " + path);
    }
    return f;
}

}  // namespace magnhom
