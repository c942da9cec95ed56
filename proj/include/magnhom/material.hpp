#pragma once

// Q-periodic composite material descriptions: per-phase coefficients
// (exchange constant, saturation magnetization, crystal anisotropy) on a
// voxelized unit cell, with validation against the admissibility hypotheses
// (exchange bounded above and below by positive constants, bounded
// magnetization, Lipschitz anisotropy families), structured test-geometry
// generators, cell averages and x/eps sampling onto a domain grid.

#include <cstdint>
#include <string>
#include <vector>

#include "magnhom/field.hpp"
#include "magnhom/geometry.hpp"

namespace magnhom {

enum class AnisotropyKind : std::uint8_t { None = 0, Uniaxial = 1, Cubic = 2 };

inline const char* to_string(AnisotropyKind k) {
    switch (k) {
        case AnisotropyKind::None: return "none";
        case AnisotropyKind::Uniaxial: return "uniaxial";
        case AnisotropyKind::Cubic: return "cubic";
    }
    return "?";
}

struct AnisotropySpec {
    AnisotropyKind kind = AnisotropyKind::None;
    double kappa = 0.0;
    // Uniaxial: axes[0] is the easy axis. Cubic: axes is an orthonormal frame.
    std::array<Vec3, 3> axes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

    static AnisotropySpec none() { return {}; }
    static AnisotropySpec uniaxial(double kappa, const Vec3& axis) {
        AnisotropySpec s;
        s.kind = AnisotropyKind::Uniaxial;
        s.kappa = kappa;
        s.axes[0] = axis;
        return s;
    }
    static AnisotropySpec cubic(double kappa, const std::array<Vec3, 3>& frame) {
        AnisotropySpec s;
        s.kind = AnisotropyKind::Cubic;
        s.kappa = kappa;
        s.axes = frame;
        return s;
    }

    // Largest deviation of the declared axes from a unit/orthonormal frame.
    double frame_defect() const {
        double d = 0.0;
        if (kind == AnisotropyKind::Uniaxial) {
            d = std::abs(norm(axes[0]) - 1.0);
        } else if (kind == AnisotropyKind::Cubic) {
            for (int i = 0; i < 3; ++i) {
                d = std::max(d, std::abs(norm(axes[i]) - 1.0));
                for (int j = i + 1; j < 3; ++j) d = std::max(d, std::abs(dot(axes[i], axes[j])));
            }
        }
        return d;
    }
    // Upper bound of the density over the sphere; used by the coercivity
    // sandwich. Uniaxial peaks at kappa, each cubic term at kappa/4.
    double density_upper_bound() const {
        switch (kind) {
            case AnisotropyKind::None: return 0.0;
            case AnisotropyKind::Uniaxial: return kappa;
            case AnisotropyKind::Cubic: return 0.75 * kappa;
        }
        return 0.0;
    }
};

struct Phase {
    double a_ex = 1.0;
    double M_s = 0.0;
    AnisotropySpec anisotropy;
};

struct CellAverages {
    double mean_a = 0.0;
    double harm_a = 0.0;
    double mean_Ms = 0.0;
    double mean_Ms_sq = 0.0;
};

struct UnitCellMaterial {
    int resolution = 0;                 // N voxels per axis of Q = [0,1]^3
    std::vector<Phase> phases;
    std::vector<std::uint8_t> voxel_map;  // k fastest, then j, then i

    UnitCellMaterial() = default;
    UnitCellMaterial(int n, std::vector<Phase> ph)
        : resolution(n),
          phases(std::move(ph)),
          voxel_map(static_cast<std::size_t>(n) * n * n, 0) {
        if (n < 1) throw std::invalid_argument("cell resolution must be positive");
        if (phases.empty()) throw std::invalid_argument("cell needs at least one phase");
        if (phases.size() > 255) throw std::invalid_argument("at most 255 phases supported");
    }

    std::size_t voxel_count() const { return voxel_map.size(); }
    std::size_t flat(int i, int j, int k) const {
        int n = resolution;
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    }
    std::uint8_t phase_at(int i, int j, int k) const { return voxel_map[flat(i, j, k)]; }
    std::uint8_t& phase_at(int i, int j, int k) { return voxel_map[flat(i, j, k)]; }

    // Phase index at a point of Q, read Q-periodically by nearest voxel.
    std::uint8_t phase_at_point(const Vec3& y) const {
        int n = resolution;
        auto wrap = [n](double c) {
            double f = c - std::floor(c);
            int idx = static_cast<int>(f * n);
            return idx >= n ? n - 1 : idx;  // f == 1-ulp guard
        };
        return phase_at(wrap(y.x), wrap(y.y), wrap(y.z));
    }
    const Phase& phase_at_point_ref(const Vec3& y) const { return phases[phase_at_point(y)]; }

    double a_at(int i, int j, int k) const { return phases[phase_at(i, j, k)].a_ex; }
    double Ms_at(int i, int j, int k) const { return phases[phase_at(i, j, k)].M_s; }

    std::vector<double> volume_fractions() const {
        std::vector<double> frac(phases.size(), 0.0);
        for (std::uint8_t p : voxel_map) frac[p] += 1.0;
        for (double& f : frac) f /= static_cast<double>(voxel_map.size());
        return frac;
    }
};

// ---------------------------------------------------------------------------
// Validation. The report carries the admissibility constants and any
// violations; pass/fail rather than exceptions so the CLI can print it.
// ---------------------------------------------------------------------------

struct ValidationReport {
    bool pass = true;
    double c_ex = 0.0;       // inf of a_ex over phases
    double C_ex = 0.0;       // sup of a_ex
    double C_s = 0.0;        // sup of M_s
    double C_an = 0.0;       // sup of the anisotropy density
    std::vector<std::string> violations;
    std::vector<double> frame_defects;  // per phase

    void fail(std::string msg) {
        pass = false;
        violations.push_back(std::move(msg));
    }
};

inline constexpr double kFrameTol = 1e-12;

inline ValidationReport validate(const UnitCellMaterial& cell) {
    ValidationReport r;
    if (cell.resolution < 1) r.fail("resolution must be >= 1");
    if (cell.phases.empty()) {
        r.fail("no phases defined");
        return r;
    }
    r.c_ex = cell.phases[0].a_ex;
    for (std::size_t p = 0; p < cell.phases.size(); ++p) {
        const Phase& ph = cell.phases[p];
        std::string tag = "phase " + std::to_string(p);
        if (!(ph.a_ex > 0.0)) r.fail(tag + ": a_ex must be > 0 (got " + std::to_string(ph.a_ex) + ")");
        if (ph.M_s < 0.0) r.fail(tag + ": M_s must be >= 0");
        if (ph.anisotropy.kappa < 0.0) r.fail(tag + ": anisotropy kappa must be >= 0");
        double defect = ph.anisotropy.frame_defect();
        r.frame_defects.push_back(defect);
        if (defect > kFrameTol)
            r.fail(tag + ": anisotropy frame defect " + std::to_string(defect) + " exceeds 1e-12");
        r.c_ex = std::min(r.c_ex, ph.a_ex);
        r.C_ex = std::max(r.C_ex, ph.a_ex);
        r.C_s = std::max(r.C_s, ph.M_s);
        r.C_an = std::max(r.C_an, ph.anisotropy.density_upper_bound());
    }
    if (cell.voxel_map.size() != static_cast<std::size_t>(cell.resolution) * cell.resolution *
                                     cell.resolution)
        r.fail("voxel_map size does not match resolution^3");
    for (std::uint8_t v : cell.voxel_map) {
        if (v >= cell.phases.size()) {
            r.fail("voxel references unknown phase index " + std::to_string(int(v)));
            break;
        }
    }
    return r;
}

inline void require_valid(const UnitCellMaterial& cell) {
    ValidationReport r = validate(cell);
    if (!r.pass) throw std::invalid_argument("invalid cell: " + r.violations.front());
}

// ---------------------------------------------------------------------------
// Structured generators. Membership is decided by voxel center.
// ---------------------------------------------------------------------------

inline UnitCellMaterial make_laminate(int axis, const std::vector<double>& fractions,
                                      std::vector<Phase> phases, int n) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("laminate axis must be 0, 1 or 2");
    if (n < 2) throw std::invalid_argument("laminate needs N >= 2");
    if (fractions.size() != phases.size())
        throw std::invalid_argument("laminate needs one fraction per phase");
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw std::invalid_argument("laminate fractions must be nonnegative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("laminate fractions must sum to 1");
    std::vector<double> cumulative(fractions.size());
    double acc = 0.0;
    for (std::size_t p = 0; p < fractions.size(); ++p) {
        acc += fractions[p];
        cumulative[p] = acc;
    }
    cumulative.back() = 1.0;

    UnitCellMaterial cell(n, std::move(phases));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double c = (double(axis == 0 ? i : (axis == 1 ? j : k)) + 0.5) / n;
                std::uint8_t p = 0;
                while (c > cumulative[p]) ++p;
                cell.phase_at(i, j, k) = p;
            }
    return cell;
}

// Columnar checkerboard: 2x2 tiles in the plane transverse to invariant_axis,
// constant along it.
inline UnitCellMaterial make_checkerboard(int invariant_axis, std::vector<Phase> phases, int n) {
    if (invariant_axis < 0 || invariant_axis > 2)
        throw std::invalid_argument("checkerboard axis must be 0, 1 or 2");
    if (phases.size() != 2) throw std::invalid_argument("checkerboard needs exactly 2 phases");
    if (n < 2) throw std::invalid_argument("checkerboard needs N >= 2");
    UnitCellMaterial cell(n, std::move(phases));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                int u, v;
                if (invariant_axis == 0) { u = j; v = k; }
                else if (invariant_axis == 1) { u = i; v = k; }
                else { u = i; v = j; }
                int tu = (2 * u >= n) ? 1 : 0;
                int tv = (2 * v >= n) ? 1 : 0;
                cell.phase_at(i, j, k) = static_cast<std::uint8_t>((tu + tv) % 2);
            }
    return cell;
}

// Spherical inclusion of phase 1 in a phase-0 matrix, centered in Q.
inline UnitCellMaterial make_sphere_inclusion(double radius, const Vec3& center,
                                              std::vector<Phase> phases, int n) {
    if (phases.size() != 2) throw std::invalid_argument("sphere inclusion needs exactly 2 phases");
    if (!(radius > 0.0) || radius > 0.5)
        throw std::invalid_argument("sphere radius must lie in (0, 0.5]");
    if (n < 2) throw std::invalid_argument("sphere inclusion needs N >= 2");
    UnitCellMaterial cell(n, std::move(phases));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Vec3 y{(i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n};
                cell.phase_at(i, j, k) = norm(y - center) <= radius ? 1 : 0;
            }
    return cell;
}

inline UnitCellMaterial make_homogeneous(const Phase& phase, int n) {
    return UnitCellMaterial(n, {phase});
}

inline CellAverages cell_averages(const UnitCellMaterial& cell) {
    CellAverages avg;
    double inv_a = 0.0;
    for (std::uint8_t p : cell.voxel_map) {
        const Phase& ph = cell.phases[p];
        avg.mean_a += ph.a_ex;
        inv_a += 1.0 / ph.a_ex;
        avg.mean_Ms += ph.M_s;
        avg.mean_Ms_sq += ph.M_s * ph.M_s;
    }
    double count = static_cast<double>(cell.voxel_count());
    avg.mean_a /= count;
    avg.mean_Ms /= count;
    avg.mean_Ms_sq /= count;
    avg.harm_a = count / inv_a;
    return avg;
}

// ---------------------------------------------------------------------------
// x/eps sampling.
// ---------------------------------------------------------------------------

// Pointwise two-scale sampler: phase index at x via nearest voxel of the
// fractional coordinate (x/eps mod 1).
struct TwoScaleSampler {
    const UnitCellMaterial* cell = nullptr;
    double epsilon = 1.0;

    std::uint8_t phase_at(const Vec3& x) const {
        return cell->phase_at_point({x.x / epsilon, x.y / epsilon, x.z / epsilon});
    }
    double a_at(const Vec3& x) const { return cell->phases[phase_at(x)].a_ex; }
    double Ms_at(const Vec3& x) const { return cell->phases[phase_at(x)].M_s; }
};

// Per-voxel coefficient fields a_eps, M_eps and the phase map on Omega.
struct SampledCoefficients {
    DomainGrid grid;
    double epsilon = 1.0;
    std::vector<std::uint8_t> phase;
    std::vector<double> a;
    std::vector<double> Ms;
};

inline SampledCoefficients sample_to_domain(const UnitCellMaterial& cell, const DomainGrid& grid,
                                            double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    require_valid(cell);
    TwoScaleSampler sampler{&cell, epsilon};
    SampledCoefficients out;
    out.grid = grid;
    out.epsilon = epsilon;
    out.phase.resize(grid.voxel_count());
    out.a.resize(grid.voxel_count());
    out.Ms.resize(grid.voxel_count());
    const GridSize& res = grid.resolution;
    for (int i = 0; i < res.nx; ++i)
        for (int j = 0; j < res.ny; ++j)
            for (int k = 0; k < res.nz; ++k) {
                std::size_t f = res.flat(i, j, k);
                std::uint8_t p = sampler.phase_at(grid.voxel_center(i, j, k));
                out.phase[f] = p;
                out.a[f] = cell.phases[p].a_ex;
                out.Ms[f] = cell.phases[p].M_s;
            }
    return out;
}

// Resample a cell to a different voxel resolution by nearest-voxel lookup;
// exact when the geometries are grid-aligned.
inline UnitCellMaterial cell_at_resolution(const UnitCellMaterial& cell, int n) {
    UnitCellMaterial out(n, cell.phases);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out.phase_at(i, j, k) =
                    cell.phase_at_point({(i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n});
    return out;
}

// Relabel cell axes by a permutation: new axis d carries what old axis
// perm[d] carried, so the homogenized tensor transforms as
// A'[d][e] == A[perm[d]][perm[e]].
inline UnitCellMaterial permute_axes(const UnitCellMaterial& cell, const std::array<int, 3>& perm) {
    UnitCellMaterial out(cell.resolution, cell.phases);
    int n = cell.resolution;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::array<int, 3> nd{i, j, k};
                std::array<int, 3> od{};
                for (int d = 0; d < 3; ++d) od[perm[d]] = nd[d];
                out.phase_at(i, j, k) = cell.phase_at(od[0], od[1], od[2]);
            }
    return out;
}

}  // namespace magnhom
