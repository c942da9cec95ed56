#pragma once

// Periodic variable-coefficient elliptic cell problems on the unit cell Q
// and the homogenized quantities built from them:
//
//   * exchange correctors phi_j = argmin over periodic phi of
//     <a_ex |grad phi + e_j|^2>_Q, and the homogenized exchange tensor
//     A_hom[j][l] = <a_ex (e_j + grad phi_j) . (e_l + grad phi_l)>_Q;
//
//   * magnetostatic cell correctors w_k solving
//     <grad w_k . grad psi>_Q = -<M_s d_k psi>_Q for all periodic psi,
//     and the correction matrix B[k][l] = <grad w_k . grad w_l>_Q, so the
//     cell contribution to the self-energy density is (B m).m;
//
//   * the Dirichlet value on the tiled cube Q_t (homogeneous boundary
//     conditions realized by masking the boundary voxel layer) and the
//     tangential-corrector defect check.
//
// Discretization: cell-centered finite differences, forward face gradients,
// exchange coefficient per face as the harmonic average of the adjacent
// voxel values (this reproduces the 1D laminate solution exactly on aligned
// grids). Linear solves use conjugate gradients with a Jacobi preconditioner
// on the zero-mean subspace; all reductions are sequential and deterministic.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "magnhom/field.hpp"
#include "magnhom/geometry.hpp"
#include "magnhom/material.hpp"

namespace magnhom {

struct SolveInfo {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

struct SolverNonConvergence : std::runtime_error {
    SolveInfo info;
    explicit SolverNonConvergence(const SolveInfo& i)
        : std::runtime_error("cell solve did not converge: relative residual " +
                             std::to_string(i.rel_residual) + " after " +
                             std::to_string(i.iterations) + " iterations"),
          info(i) {}
};

namespace cellfd {

// Periodic 7-point diffusion stencil with per-face coefficients.
// face[d][flat(v)] is the coefficient of the face between v and v+e_d
// (indices wrap). Grid spacing h = 1/n on Q = [0,1]^3.
struct PeriodicStencil {
    int n = 0;
    double h = 0.0;
    std::array<std::vector<double>, 3> face;

    explicit PeriodicStencil(int n_) : n(n_), h(1.0 / n_) {
        std::size_t count = static_cast<std::size_t>(n) * n * n;
        for (auto& f : face) f.assign(count, 0.0);
    }
    std::size_t flat(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    }
};

inline double harmonic_pair(double a, double b) { return 2.0 * a * b / (a + b); }

inline PeriodicStencil harmonic_face_stencil(const UnitCellMaterial& cell) {
    int n = cell.resolution;
    PeriodicStencil st(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::size_t f = st.flat(i, j, k);
                double a0 = cell.a_at(i, j, k);
                st.face[0][f] = harmonic_pair(a0, cell.a_at((i + 1) % n, j, k));
                st.face[1][f] = harmonic_pair(a0, cell.a_at(i, (j + 1) % n, k));
                st.face[2][f] = harmonic_pair(a0, cell.a_at(i, j, (k + 1) % n));
            }
    return st;
}

inline PeriodicStencil unit_face_stencil(int n) {
    PeriodicStencil st(n);
    for (auto& f : st.face) f.assign(f.size(), 1.0);
    return st;
}

// y = L x with L = -div(c grad .), periodic.
inline void apply(const PeriodicStencil& st, const std::vector<double>& x,
                  std::vector<double>& y) {
    int n = st.n;
    double inv_h2 = 1.0 / (st.h * st.h);
    for (int i = 0; i < n; ++i) {
        int iu = (i + 1) % n, id = (i + n - 1) % n;
        for (int j = 0; j < n; ++j) {
            int ju = (j + 1) % n, jd = (j + n - 1) % n;
            for (int k = 0; k < n; ++k) {
                int ku = (k + 1) % n, kd = (k + n - 1) % n;
                std::size_t c = st.flat(i, j, k);
                double xc = x[c];
                double acc = st.face[0][c] * (xc - x[st.flat(iu, j, k)]) +
                             st.face[0][st.flat(id, j, k)] * (xc - x[st.flat(id, j, k)]) +
                             st.face[1][c] * (xc - x[st.flat(i, ju, k)]) +
                             st.face[1][st.flat(i, jd, k)] * (xc - x[st.flat(i, jd, k)]) +
                             st.face[2][c] * (xc - x[st.flat(i, j, ku)]) +
                             st.face[2][st.flat(i, j, kd)] * (xc - x[st.flat(i, j, kd)]);
                y[c] = acc * inv_h2;
            }
        }
    }
}

inline std::vector<double> diagonal(const PeriodicStencil& st) {
    int n = st.n;
    double inv_h2 = 1.0 / (st.h * st.h);
    std::vector<double> d(st.face[0].size());
    for (int i = 0; i < n; ++i) {
        int id = (i + n - 1) % n;
        for (int j = 0; j < n; ++j) {
            int jd = (j + n - 1) % n;
            for (int k = 0; k < n; ++k) {
                int kd = (k + n - 1) % n;
                std::size_t c = st.flat(i, j, k);
                d[c] = (st.face[0][c] + st.face[0][st.flat(id, j, k)] + st.face[1][c] +
                        st.face[1][st.flat(i, jd, k)] + st.face[2][c] +
                        st.face[2][st.flat(i, j, kd)]) *
                       inv_h2;
            }
        }
    }
    return d;
}

inline double dot_seq(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void subtract_mean(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

// Preconditioned CG on the zero-mean subspace. Right-hand side must be
// (numerically) mean free; the mean is projected out of the iterates and
// residuals every iteration to pin the additive constant.
inline SolveInfo pcg_zero_mean(const PeriodicStencil& st, const std::vector<double>& b_in,
                               std::vector<double>& x, double tol, int max_iter) {
    std::size_t count = b_in.size();
    std::vector<double> b = b_in;
    subtract_mean(b);
    double b_norm = std::sqrt(dot_seq(b, b));
    x.assign(count, 0.0);
    SolveInfo info;
    if (b_norm == 0.0) {
        info.converged = true;
        return info;
    }
    std::vector<double> diag = diagonal(st);
    std::vector<double> r = b, z(count), p(count), lp(count);
    for (std::size_t i = 0; i < count; ++i) z[i] = r[i] / diag[i];
    subtract_mean(z);
    p = z;
    double rz = dot_seq(r, z);
    double res = b_norm;
    int it = 0;
    while (it < max_iter) {
        apply(st, p, lp);
        double p_lp = dot_seq(p, lp);
        if (p_lp <= 0.0) break;  // numerically singular direction
        double alpha = rz / p_lp;
        for (std::size_t i = 0; i < count; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        subtract_mean(x);
        subtract_mean(r);
        ++it;
        res = std::sqrt(dot_seq(r, r));
        if (res <= tol * b_norm) break;
        for (std::size_t i = 0; i < count; ++i) z[i] = r[i] / diag[i];
        subtract_mean(z);
        double rz_next = dot_seq(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < count; ++i) p[i] = z[i] + beta * p[i];
    }
    info.iterations = it;
    info.rel_residual = res / b_norm;
    info.converged = res <= tol * b_norm;
    return info;
}

// Forward face gradient D_d phi(v) = (phi(v+e_d) - phi(v)) / h, periodic.
inline double face_gradient(const PeriodicStencil& st, const std::vector<double>& phi, int i,
                            int j, int k, int d) {
    int n = st.n;
    std::size_t c = st.flat(i, j, k);
    std::size_t up = d == 0 ? st.flat((i + 1) % n, j, k)
                            : (d == 1 ? st.flat(i, (j + 1) % n, k) : st.flat(i, j, (k + 1) % n));
    return (phi[up] - phi[c]) / st.h;
}

}  // namespace cellfd

// ---------------------------------------------------------------------------
// Exchange correctors and A_hom
// ---------------------------------------------------------------------------

struct CorrectorSet {
    std::array<ScalarCellField, 3> phi;
    std::array<SolveInfo, 3> info;
    double tol = 0.0;

    std::array<double, 3> residual_norms() const {
        return {info[0].rel_residual, info[1].rel_residual, info[2].rel_residual};
    }
};

namespace detail {

inline void check_tol(double tol) {
    if (!(tol > 0.0) || tol > 1e-2)
        throw std::invalid_argument("solver tolerance must lie in (0, 1e-2]");
}

// Right-hand side of the Euler-Lagrange equation L phi = b for the corrector
// with imposed mean gradient `row`: b(u) = sum_d row_d (c_d(u) - c_d(u-e_d))/h.
inline std::vector<double> corrector_rhs(const cellfd::PeriodicStencil& st, const Vec3& row) {
    int n = st.n;
    std::vector<double> b(st.face[0].size(), 0.0);
    for (int i = 0; i < n; ++i) {
        int id = (i + n - 1) % n;
        for (int j = 0; j < n; ++j) {
            int jd = (j + n - 1) % n;
            for (int k = 0; k < n; ++k) {
                int kd = (k + n - 1) % n;
                std::size_t c = st.flat(i, j, k);
                double acc = 0.0;
                if (row.x != 0.0) acc += row.x * (st.face[0][c] - st.face[0][st.flat(id, j, k)]);
                if (row.y != 0.0) acc += row.y * (st.face[1][c] - st.face[1][st.flat(i, jd, k)]);
                if (row.z != 0.0) acc += row.z * (st.face[2][c] - st.face[2][st.flat(i, j, kd)]);
                b[c] = acc / st.h;
            }
        }
    }
    return b;
}

inline std::pair<ScalarCellField, SolveInfo> solve_corrector(const cellfd::PeriodicStencil& st,
                                                             const Vec3& row, double tol) {
    std::vector<double> b = corrector_rhs(st, row);
    ScalarCellField phi(st.n);
    SolveInfo info = cellfd::pcg_zero_mean(st, b, phi.values, tol, 50 * st.n);
    phi.zero_mean = true;
    if (!info.converged) throw SolverNonConvergence(info);
    return {std::move(phi), info};
}

}  // namespace detail

// Corrector with mean gradient row (the scalar cell problem for a general
// direction; e_j recovers the standard exchange corrector).
inline std::pair<ScalarCellField, SolveInfo> solve_corrector_for_row(const UnitCellMaterial& cell,
                                                                     const Vec3& row, double tol) {
    detail::check_tol(tol);
    require_valid(cell);
    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(cell);
    return detail::solve_corrector(st, row, tol);
}

inline ScalarCellField solve_exchange_corrector(const UnitCellMaterial& cell, int j, double tol,
                                                SolveInfo* info_out = nullptr) {
    if (j < 0 || j > 2) throw std::invalid_argument("corrector axis must be 0, 1 or 2");
    auto [phi, info] = solve_corrector_for_row(cell, axis_unit(j), tol);
    if (info_out) *info_out = info;
    return phi;
}

inline CorrectorSet solve_exchange_correctors(const UnitCellMaterial& cell, double tol) {
    detail::check_tol(tol);
    require_valid(cell);
    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(cell);
    CorrectorSet set;
    set.tol = tol;
    for (int j = 0; j < 3; ++j) {
        auto [phi, info] = detail::solve_corrector(st, axis_unit(j), tol);
        set.phi[j] = std::move(phi);
        set.info[j] = info;
    }
    return set;
}

// Vertex-based variant of the exchange correctors: unknowns live on cell
// vertices and each voxel contributes its own coefficient times the forward
// corner difference, mirroring the domain-side exchange quadrature. The
// recovery-sequence construction samples these; for 1D-structured cells the
// two discretizations share the same effective tensor.
inline CorrectorSet solve_vertex_correctors(const UnitCellMaterial& cell, double tol) {
    detail::check_tol(tol);
    require_valid(cell);
    int n = cell.resolution;
    cellfd::PeriodicStencil st(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double a = cell.a_at(i, j, k);
                std::size_t f = st.flat(i, j, k);
                st.face[0][f] = a;
                st.face[1][f] = a;
                st.face[2][f] = a;
            }
    CorrectorSet set;
    set.tol = tol;
    for (int j = 0; j < 3; ++j) {
        auto [phi, info] = detail::solve_corrector(st, axis_unit(j), tol);
        set.phi[j] = std::move(phi);
        set.info[j] = info;
    }
    return set;
}

// <a (e_j + grad phi_j).(e_l + grad phi_l)>_Q over the face quadrature,
// symmetrized. The diagonal entries are the corrector energies.
inline Mat3 assemble_A_hom(const UnitCellMaterial& cell, const CorrectorSet& correctors) {
    int n = cell.resolution;
    for (const ScalarCellField& phi : correctors.phi)
        if (phi.resolution != n)
            throw std::invalid_argument("corrector resolution does not match the cell");
    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(cell);
    Mat3 a;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int d = 0; d < 3; ++d) {
                    double c = st.face[d][st.flat(i, j, k)];
                    double g[3];
                    for (int r = 0; r < 3; ++r)
                        g[r] = (d == r ? 1.0 : 0.0) +
                               cellfd::face_gradient(st, correctors.phi[r].values, i, j, k, d);
                    for (int r = 0; r < 3; ++r)
                        for (int s = r; s < 3; ++s) a(r, s) += c * g[r] * g[s];
                }
    double scale = 1.0 / static_cast<double>(cell.voxel_count());
    for (int r = 0; r < 3; ++r)
        for (int s = r; s < 3; ++s) {
            a(r, s) *= scale;
            a(s, r) = a(r, s);
        }
    return a;
}

// Energy <a |row + grad psi|^2>_Q of an arbitrary periodic trial field;
// the corrector is its minimizer (used by the minimality property checks).
inline double corrector_trial_energy(const UnitCellMaterial& cell, const Vec3& row,
                                     const ScalarCellField& psi) {
    int n = cell.resolution;
    if (psi.resolution != n) throw std::invalid_argument("trial resolution mismatch");
    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(cell);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int d = 0; d < 3; ++d) {
                    double g = row[d] + cellfd::face_gradient(st, psi.values, i, j, k, d);
                    acc += st.face[d][st.flat(i, j, k)] * g * g;
                }
    return acc / static_cast<double>(cell.voxel_count());
}

// ---------------------------------------------------------------------------
// Magnetostatic cell correctors and B
// ---------------------------------------------------------------------------

namespace detail {

// Face sample of M_s along direction k: the face between v and v+e_k carries
// the value of voxel v. One-sided sampling keeps the multiset of face values
// equal to the multiset of voxel values, which makes the 1D variance
// identity for B exact on aligned laminates.
inline std::vector<double> demag_rhs(const UnitCellMaterial& cell, int k) {
    int n = cell.resolution;
    double h = 1.0 / n;
    std::vector<double> b(cell.voxel_count(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int kk = 0; kk < n; ++kk) {
                int id = (i + n - 1) % n, jd = (j + n - 1) % n, kd = (kk + n - 1) % n;
                double m_here = cell.Ms_at(i, j, kk);
                double m_prev = k == 0 ? cell.Ms_at(id, j, kk)
                                       : (k == 1 ? cell.Ms_at(i, jd, kk) : cell.Ms_at(i, j, kd));
                b[cell.flat(i, j, kk)] = (m_here - m_prev) / h;
            }
    return b;
}

}  // namespace detail

inline ScalarCellField solve_demag_corrector(const UnitCellMaterial& cell, int k, double tol,
                                             SolveInfo* info_out = nullptr) {
    if (k < 0 || k > 2) throw std::invalid_argument("corrector axis must be 0, 1 or 2");
    detail::check_tol(tol);
    require_valid(cell);
    cellfd::PeriodicStencil st = cellfd::unit_face_stencil(cell.resolution);
    std::vector<double> b = detail::demag_rhs(cell, k);
    ScalarCellField w(cell.resolution);
    SolveInfo info = cellfd::pcg_zero_mean(st, b, w.values, tol, 50 * cell.resolution);
    w.zero_mean = true;
    if (!info.converged) throw SolverNonConvergence(info);
    if (info_out) *info_out = info;
    return w;
}

inline CorrectorSet solve_demag_correctors(const UnitCellMaterial& cell, double tol) {
    CorrectorSet set;
    set.tol = tol;
    for (int k = 0; k < 3; ++k) set.phi[k] = solve_demag_corrector(cell, k, tol, &set.info[k]);
    return set;
}

// B[k][l] = <grad w_k . grad w_l>_Q; symmetric PSD by construction (Gram
// matrix of the corrector gradients).
inline Mat3 assemble_B_demag(const UnitCellMaterial& cell, const CorrectorSet& w) {
    int n = cell.resolution;
    for (const ScalarCellField& f : w.phi)
        if (f.resolution != n)
            throw std::invalid_argument("corrector resolution does not match the cell");
    cellfd::PeriodicStencil st = cellfd::unit_face_stencil(n);
    Mat3 b;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int d = 0; d < 3; ++d) {
                    double g[3];
                    for (int r = 0; r < 3; ++r)
                        g[r] = cellfd::face_gradient(st, w.phi[r].values, i, j, k, d);
                    for (int r = 0; r < 3; ++r)
                        for (int s = r; s < 3; ++s) b(r, s) += g[r] * g[s];
                }
    double scale = 1.0 / static_cast<double>(cell.voxel_count());
    for (int r = 0; r < 3; ++r)
        for (int s = r; s < 3; ++s) {
            b(r, s) *= scale;
            b(s, r) = b(r, s);
        }
    return b;
}

// ---------------------------------------------------------------------------
// Homogenized quadratic form
// ---------------------------------------------------------------------------

// g_hom(xi) = A xi : xi = sum_i (A grad m_i).(grad m_i), row i of xi being
// the gradient of magnetization component i.
inline double g_hom_density(const Mat3& a_hom, const Mat3& xi) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        Vec3 row{xi(i, 0), xi(i, 1), xi(i, 2)};
        acc += quadratic_form(a_hom, row);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Appendix checks: Dirichlet value on the tiled cube Q_t
// ---------------------------------------------------------------------------

struct DirichletValue {
    double value = 0.0;          // (1/|Q_t|) inf of the Dirichlet energy
    std::array<SolveInfo, 3> info{};
};

namespace detail {

// Masked CG: homogeneous Dirichlet conditions realized by pinning the
// boundary voxel layer of the tiled box to zero. The tiled topology stays
// periodic so the face count per direction matches the volume quadrature.
inline SolveInfo pcg_masked(const cellfd::PeriodicStencil& st, const std::vector<double>& b_in,
                            const std::vector<char>& interior, std::vector<double>& x, double tol,
                            int max_iter) {
    std::size_t count = b_in.size();
    std::vector<double> b = b_in;
    for (std::size_t i = 0; i < count; ++i)
        if (!interior[i]) b[i] = 0.0;
    double b_norm = std::sqrt(cellfd::dot_seq(b, b));
    x.assign(count, 0.0);
    SolveInfo info;
    if (b_norm == 0.0) {
        info.converged = true;
        return info;
    }
    std::vector<double> diag = cellfd::diagonal(st);
    std::vector<double> r = b, z(count), p(count), lp(count);
    for (std::size_t i = 0; i < count; ++i) z[i] = interior[i] ? r[i] / diag[i] : 0.0;
    p = z;
    double rz = cellfd::dot_seq(r, z);
    double res = b_norm;
    int it = 0;
    while (it < max_iter) {
        cellfd::apply(st, p, lp);
        for (std::size_t i = 0; i < count; ++i)
            if (!interior[i]) lp[i] = 0.0;
        double p_lp = cellfd::dot_seq(p, lp);
        if (p_lp <= 0.0) break;
        double alpha = rz / p_lp;
        for (std::size_t i = 0; i < count; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        ++it;
        res = std::sqrt(cellfd::dot_seq(r, r));
        if (res <= tol * b_norm) break;
        for (std::size_t i = 0; i < count; ++i) z[i] = interior[i] ? r[i] / diag[i] : 0.0;
        double rz_next = cellfd::dot_seq(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < count; ++i) p[i] = z[i] + beta * p[i];
    }
    info.iterations = it;
    info.rel_residual = res / b_norm;
    info.converged = res <= tol * b_norm;
    return info;
}

}  // namespace detail

// inf over fields vanishing on the boundary layer of Q_t = [0,t]^3 of
// (1/|Q_t|) int a |xi + grad phi|^2, the unit cell tiled t times per axis.
// Monotone non-increasing along the doubling ladder and bounded below by
// g_hom(xi); both hold at the discrete level.
inline DirichletValue dirichlet_cell_value(const UnitCellMaterial& cell, const Mat3& xi, int t,
                                           double tol) {
    if (t < 1) throw std::invalid_argument("tile count t must be >= 1");
    detail::check_tol(tol);
    require_valid(cell);
    int n = t * cell.resolution;
    if (n > 320)
        throw std::invalid_argument("tiled grid " + std::to_string(n) +
                                    "^3 exceeds the desk-scale cap of 320^3");

    UnitCellMaterial tiled(1, cell.phases);
    tiled.resolution = n;
    tiled.voxel_map.assign(static_cast<std::size_t>(n) * n * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                tiled.voxel_map[tiled.flat(i, j, k)] =
                    cell.phase_at(i % cell.resolution, j % cell.resolution, k % cell.resolution);

    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(tiled);
    st.h = 1.0 / cell.resolution;  // physical spacing: Q_t has side t, t*N voxels

    std::vector<char> interior(tiled.voxel_count(), 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
                    interior[tiled.flat(i, j, k)] = 0;

    DirichletValue out;
    for (int row = 0; row < 3; ++row) {
        Vec3 r{xi(row, 0), xi(row, 1), xi(row, 2)};
        if (r.x == 0.0 && r.y == 0.0 && r.z == 0.0) continue;
        std::vector<double> b = detail::corrector_rhs(st, r);
        std::vector<double> phi;
        out.info[row] = detail::pcg_masked(st, b, interior, phi, tol, 50 * n);
        if (!out.info[row].converged) throw SolverNonConvergence(out.info[row]);
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int d = 0; d < 3; ++d) {
                        double g = r[d] + cellfd::face_gradient(st, phi, i, j, k, d);
                        acc += st.face[d][st.flat(i, j, k)] * g * g;
                    }
        out.value += acc / static_cast<double>(tiled.voxel_count());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tangential homogenization check
// ---------------------------------------------------------------------------

struct TangentialCheck {
    double defect = 0.0;          // ||phi . s||_2 / max(1, ||phi||_2)
    double corrector_norm = 0.0;  // ||phi||_2
    std::array<SolveInfo, 3> info{};
};

// Solves the unconstrained 3-component corrector for xi (component-wise
// scalar problems) and reports the norm of its component along s. For
// xi^T s = 0 the s-component problem has zero forcing, so the defect is a
// numeric witness that the tangentially constrained and unconstrained
// homogenized densities coincide on the sphere.
inline TangentialCheck tangential_corrector_check(const UnitCellMaterial& cell, const Vec3& s,
                                                  const Mat3& xi, double tol) {
    for (int col = 0; col < 3; ++col) {
        double c = xi(0, col) * s.x + xi(1, col) * s.y + xi(2, col) * s.z;
        if (std::abs(c) > 1e-12)
            throw std::invalid_argument("xi^T s must vanish columnwise (got " + std::to_string(c) +
                                        ")");
    }
    detail::check_tol(tol);
    require_valid(cell);
    cellfd::PeriodicStencil st = cellfd::harmonic_face_stencil(cell);

    TangentialCheck out;
    std::array<ScalarCellField, 3> phi;
    for (int row = 0; row < 3; ++row) {
        auto [f, info] = detail::solve_corrector(st, {xi(row, 0), xi(row, 1), xi(row, 2)}, tol);
        phi[row] = std::move(f);
        out.info[row] = info;
    }
    double along_sq = 0.0, total_sq = 0.0;
    std::size_t count = cell.voxel_count();
    for (std::size_t v = 0; v < count; ++v) {
        double along = s.x * phi[0].values[v] + s.y * phi[1].values[v] + s.z * phi[2].values[v];
        along_sq += along * along;
        total_sq += phi[0].values[v] * phi[0].values[v] + phi[1].values[v] * phi[1].values[v] +
                    phi[2].values[v] * phi[2].values[v];
    }
    double along_norm = std::sqrt(along_sq / static_cast<double>(count));
    out.corrector_norm = std::sqrt(total_sq / static_cast<double>(count));
    out.defect = along_norm / std::max(1.0, out.corrector_norm);
    return out;
}

// ---------------------------------------------------------------------------
// Homogenized model
// ---------------------------------------------------------------------------

struct SolverDiagnostics {
    int resolution = 0;
    double tol = 0.0;
    std::array<SolveInfo, 3> exchange{};
    std::array<SolveInfo, 3> demag{};
};

// Cell-averaged uniaxial anisotropy data <kappa>_Q and <kappa u x u>_Q; only
// meaningful when every phase is uniaxial or none.
struct UniaxialAverages {
    bool valid = false;
    double kappa_mean = 0.0;
    Mat3 kappa_uu;
};

struct HomogenizedModel {
    Mat3 A_hom;
    double mean_Ms = 0.0;
    Mat3 B_demag;
    std::vector<Phase> phases;             // retained for exact per-phase averaging
    std::vector<double> volume_fractions;
    UniaxialAverages uniaxial;
    SolverDiagnostics diagnostics;

    // <phi_an(., m)>_Q, exact for piecewise-constant phases.
    double anisotropy_mean(const Vec3& m) const;
    Vec3 anisotropy_mean_gradient(const Vec3& m) const;
};

struct HomogenizationResult {
    HomogenizedModel model;
    CorrectorSet exchange;
    CorrectorSet demag;
};

inline UniaxialAverages uniaxial_averages(const UnitCellMaterial& cell) {
    UniaxialAverages u;
    u.valid = true;
    std::vector<double> frac = cell.volume_fractions();
    for (std::size_t p = 0; p < cell.phases.size(); ++p) {
        const AnisotropySpec& an = cell.phases[p].anisotropy;
        if (an.kind == AnisotropyKind::Cubic) {
            u.valid = false;
            return u;
        }
        if (an.kind == AnisotropyKind::Uniaxial) {
            u.kappa_mean += frac[p] * an.kappa;
            u.kappa_uu = u.kappa_uu + Mat3::outer(an.axes[0], an.axes[0]) * (frac[p] * an.kappa);
        }
    }
    return u;
}

inline HomogenizationResult homogenize(const UnitCellMaterial& cell, double tol = 1e-8) {
    require_valid(cell);
    HomogenizationResult out;
    out.exchange = solve_exchange_correctors(cell, tol);
    out.demag = solve_demag_correctors(cell, tol);

    HomogenizedModel& m = out.model;
    m.A_hom = assemble_A_hom(cell, out.exchange);
    m.B_demag = assemble_B_demag(cell, out.demag);
    m.mean_Ms = cell_averages(cell).mean_Ms;
    m.phases = cell.phases;
    m.volume_fractions = cell.volume_fractions();
    m.uniaxial = uniaxial_averages(cell);
    m.diagnostics.resolution = cell.resolution;
    m.diagnostics.tol = tol;
    m.diagnostics.exchange = out.exchange.info;
    m.diagnostics.demag = out.demag.info;
    return out;
}

}  // namespace magnhom
