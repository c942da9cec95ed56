#pragma once

// Small fixed-size linear algebra used throughout: 3-vectors, 3x3 matrices,
// and the grid descriptors for the unit cell Q = [0,1]^3 and the sample
// domain Omega.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace magnhom {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
    return v / n;
}

inline Vec3 axis_unit(int d) {
    Vec3 e;
    e[d] = 1.0;
    return e;
}

// Symmetric storage is not enforced; symmetry is an invariant the callers
// assert where required.
struct Mat3 {
    std::array<std::array<double, 3>, 3> a{};

    static Mat3 identity() {
        Mat3 m;
        m.a[0][0] = m.a[1][1] = m.a[2][2] = 1.0;
        return m;
    }
    static Mat3 diag(double d0, double d1, double d2) {
        Mat3 m;
        m.a[0][0] = d0; m.a[1][1] = d1; m.a[2][2] = d2;
        return m;
    }
    static Mat3 outer(const Vec3& u, const Vec3& v) {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m.a[i][j] = u[i] * v[j];
        return m;
    }

    double& operator()(int i, int j) { return a[i][j]; }
    double operator()(int i, int j) const { return a[i][j]; }

    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.a[i][j] = a[i][j] + o.a[i][j];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.a[i][j] = a[i][j] - o.a[i][j];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.a[i][j] = a[i][j] * s;
        return r;
    }
    Vec3 operator*(const Vec3& v) const {
        return {a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
                a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
                a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z};
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.a[i][j] = a[j][i];
        return r;
    }
};

inline double frobenius_norm(const Mat3& m) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

inline double quadratic_form(const Mat3& m, const Vec3& v) { return dot(m * v, v); }

inline double max_asymmetry(const Mat3& m) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) d = std::max(d, std::abs(m(i, j) - m(j, i)));
    return d;
}

// Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric
// closed form. Input asymmetry is folded in by symmetrization.
inline std::array<double, 3> sym_eigenvalues(const Mat3& m_in) {
    Mat3 m = (m_in + m_in.transposed()) * 0.5;
    double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    std::array<double, 3> eig{};
    if (p1 == 0.0) {
        eig = {m(0, 0), m(1, 1), m(2, 2)};
        std::sort(eig.begin(), eig.end());
        return eig;
    }
    double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
    double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    Mat3 b = (m - Mat3::diag(q, q, q)) * (1.0 / p);
    double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                  b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                  b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    double r = std::clamp(detb / 2.0, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    double e_hi = q + 2.0 * p * std::cos(phi);
    double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
    eig = {e_lo, 3.0 * q - e_hi - e_lo, e_hi};
    return eig;
}

// Voxel index triplet; flattened k-fastest (index = (i*ny + j)*nz + k).
struct Index3 {
    int i = 0, j = 0, k = 0;
};

struct GridSize {
    int nx = 0, ny = 0, nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t flat(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    int dim(int d) const { return d == 0 ? nx : (d == 1 ? ny : nz); }
    bool operator==(const GridSize&) const = default;
};

// Bounded axis-aligned box domain Omega, voxelized cell-centered.
struct DomainGrid {
    Vec3 extent{1.0, 1.0, 1.0};
    GridSize resolution{1, 1, 1};

    DomainGrid() = default;
    DomainGrid(Vec3 ext, GridSize res) : extent(ext), resolution(res) {
        if (ext.x <= 0 || ext.y <= 0 || ext.z <= 0)
            throw std::invalid_argument("domain extent must be positive");
        if (res.nx < 1 || res.ny < 1 || res.nz < 1)
            throw std::invalid_argument("domain resolution must be positive");
    }
    static DomainGrid unit_cube(int n) { return DomainGrid({1, 1, 1}, {n, n, n}); }

    Vec3 pitch() const {
        return {extent.x / resolution.nx, extent.y / resolution.ny, extent.z / resolution.nz};
    }
    double voxel_volume() const {
        Vec3 p = pitch();
        return p.x * p.y * p.z;
    }
    double volume() const { return extent.x * extent.y * extent.z; }
    Vec3 voxel_center(int i, int j, int k) const {
        Vec3 p = pitch();
        return {(i + 0.5) * p.x, (j + 0.5) * p.y, (k + 0.5) * p.z};
    }
    std::size_t voxel_count() const { return resolution.count(); }
    bool operator==(const DomainGrid& o) const {
        return resolution == o.resolution && extent.x == o.extent.x &&
               extent.y == o.extent.y && extent.z == o.extent.z;
    }
};

inline int positive_mod(int v, int n) {
    int r = v % n;
    return r < 0 ? r + n : r;
}

}  // namespace magnhom
