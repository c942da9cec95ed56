#pragma once

// Gibbs-Landau free energy on sphere-valued magnetization fields, in the
// fine-scale variant (oscillating coefficients a(x/eps), M_s(x/eps),
// phi_an(x/eps, .)) and the homogenized variant (A_hom, cell-averaged
// anisotropy, <M_s> plus the corrector matrix B), with analytic Euclidean
// gradients of the discrete energies and a projected-gradient minimizer.
//
// Discrete exchange pairs the per-voxel coefficient with forward
// differences per face; the last voxel along an axis takes the backward
// difference (Omega is an open box, no periodic wrap and no boundary
// condition on m). The energy densities extend smoothly off the sphere,
// which is what the finite-difference gradient oracle relies on.

#include "magnhom/cellsolve.hpp"
#include "magnhom/demag.hpp"
#include "magnhom/field.hpp"
#include "magnhom/material.hpp"

namespace magnhom {

// ---------------------------------------------------------------------------
// Anisotropy densities (uniaxial and cubic crystal families)
// ---------------------------------------------------------------------------

inline double anisotropy_density(const AnisotropySpec& spec, const Vec3& m) {
    switch (spec.kind) {
        case AnisotropyKind::None:
            return 0.0;
        case AnisotropyKind::Uniaxial: {
            double c = dot(spec.axes[0], m);
            return spec.kappa * (1.0 - c * c);
        }
        case AnisotropyKind::Cubic: {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) {
                double c = dot(spec.axes[i], m);
                acc += c * c - c * c * c * c;
            }
            return spec.kappa * acc;
        }
    }
    return 0.0;
}

inline Vec3 anisotropy_density_gradient(const AnisotropySpec& spec, const Vec3& m) {
    switch (spec.kind) {
        case AnisotropyKind::None:
            return {};
        case AnisotropyKind::Uniaxial: {
            double c = dot(spec.axes[0], m);
            return spec.axes[0] * (-2.0 * spec.kappa * c);
        }
        case AnisotropyKind::Cubic: {
            Vec3 g;
            for (int i = 0; i < 3; ++i) {
                double c = dot(spec.axes[i], m);
                g += spec.axes[i] * (spec.kappa * (2.0 * c - 4.0 * c * c * c));
            }
            return g;
        }
    }
    return {};
}

inline double HomogenizedModel::anisotropy_mean(const Vec3& m) const {
    double acc = 0.0;
    for (std::size_t p = 0; p < phases.size(); ++p)
        acc += volume_fractions[p] * anisotropy_density(phases[p].anisotropy, m);
    return acc;
}

inline Vec3 HomogenizedModel::anisotropy_mean_gradient(const Vec3& m) const {
    Vec3 g;
    for (std::size_t p = 0; p < phases.size(); ++p)
        g += anisotropy_density_gradient(phases[p].anisotropy, m) * volume_fractions[p];
    return g;
}

// ---------------------------------------------------------------------------
// Magnetization fields
// ---------------------------------------------------------------------------

inline constexpr double kUnitNormTol = 1e-10;

// Sphere-valued field: every voxel satisfies ||m| - 1| <= 1e-10.
struct MagnetizationField {
    VectorDomainField field;

    explicit MagnetizationField(VectorDomainField f) : field(std::move(f)) {
        double dev = field.max_norm_deviation_from_unit();
        if (dev > kUnitNormTol)
            throw std::invalid_argument("magnetization violates the unit-norm constraint (dev " +
                                        std::to_string(dev) + ")");
    }

    static MagnetizationField uniform(const DomainGrid& grid, const Vec3& direction) {
        return MagnetizationField(VectorDomainField(grid, normalized(direction)));
    }
    // Normalize an arbitrary nonvanishing field onto the sphere.
    static MagnetizationField normalized_from(VectorDomainField f) {
        for (Vec3& v : f.values) v = normalized(v);
        return MagnetizationField(std::move(f));
    }

    const DomainGrid& grid() const { return field.grid; }
};

// ---------------------------------------------------------------------------
// Energy breakdown
// ---------------------------------------------------------------------------

enum class Provenance { Fine, Homogenized };

struct EnergyBreakdown {
    double exchange = 0.0;
    double anisotropy = 0.0;
    double magnetostatic = 0.0;
    double zeeman = 0.0;
    double total = 0.0;
    Provenance provenance = Provenance::Fine;
    double epsilon = 0.0;  // meaningful for Provenance::Fine

    void finalize() { total = exchange + anisotropy + magnetostatic + zeeman; }
};

struct EnergyTerms {
    bool exchange = true;
    bool anisotropy = true;
    bool magnetostatic = true;
    bool zeeman = true;
    static EnergyTerms all() { return {}; }
    static EnergyTerms only_exchange() { return {true, false, false, false}; }
};

// ---------------------------------------------------------------------------
// Fine-scale problem context (sampled coefficient fields; reused across
// evaluations of the same (cell, grid, eps) triple)
// ---------------------------------------------------------------------------

struct FineProblem {
    UnitCellMaterial cell;
    DomainGrid grid;
    double epsilon = 1.0;
    SampledCoefficients coeffs;
};

inline FineProblem make_fine_problem(const UnitCellMaterial& cell, const DomainGrid& grid,
                                     double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (grid.resolution.nx < 2 || grid.resolution.ny < 2 || grid.resolution.nz < 2)
        throw std::invalid_argument("domain grids need at least 2 voxels per axis");
    if (cell.phases.size() > 1) {
        Vec3 pitch = grid.pitch();
        for (int d = 0; d < 3; ++d) {
            double per_period = epsilon / pitch[d];
            if (std::abs(per_period - std::round(per_period)) > 1e-9 * per_period)
                throw std::invalid_argument("epsilon is not aligned with the domain grid");
            if (per_period < 4.0 - 1e-9)
                throw std::invalid_argument(
                    "domain grid too coarse: fewer than 4 voxels per period");
        }
    }
    FineProblem p{cell, grid, epsilon, sample_to_domain(cell, grid, epsilon)};
    return p;
}

// ---------------------------------------------------------------------------
// Discrete gradient stencil shared by every exchange-type quadrature:
// forward difference per direction, backward at the top edge.
// ---------------------------------------------------------------------------

namespace detail {

struct StencilPair {
    std::size_t lo, hi;
};

inline StencilPair gradient_pair(const GridSize& n, int i, int j, int k, int d) {
    if (d == 0)
        return i + 1 < n.nx ? StencilPair{n.flat(i, j, k), n.flat(i + 1, j, k)}
                            : StencilPair{n.flat(i - 1, j, k), n.flat(i, j, k)};
    if (d == 1)
        return j + 1 < n.ny ? StencilPair{n.flat(i, j, k), n.flat(i, j + 1, k)}
                            : StencilPair{n.flat(i, j - 1, k), n.flat(i, j, k)};
    return k + 1 < n.nz ? StencilPair{n.flat(i, j, k), n.flat(i, j, k + 1)}
                        : StencilPair{n.flat(i, j, k - 1), n.flat(i, j, k)};
}

}  // namespace detail

// sum_v sum_d |D_d m(v)|^2 * voxel volume (unweighted Dirichlet energy;
// the coercivity sandwich is stated against this quantity).
inline double gradient_norm_sq(const VectorDomainField& m) {
    const GridSize& n = m.grid.resolution;
    Vec3 pitch = m.grid.pitch();
    double vol = m.grid.voxel_volume();
    double acc = 0.0;
    for (int i = 0; i < n.nx; ++i)
        for (int j = 0; j < n.ny; ++j)
            for (int k = 0; k < n.nz; ++k)
                for (int d = 0; d < 3; ++d) {
                    auto [lo, hi] = detail::gradient_pair(n, i, j, k, d);
                    Vec3 diff = (m.values[hi] - m.values[lo]) / pitch[d];
                    acc += norm2(diff) * vol;
                }
    return acc;
}

// ---------------------------------------------------------------------------
// Energy functional (fine or homogenized), with gradients
// ---------------------------------------------------------------------------

class EnergyFunctional {
  public:
    static EnergyFunctional fine(const FineProblem& problem, const Vec3& h_a, double mu0 = 1.0,
                                 EnergyTerms terms = {}) {
        EnergyFunctional f;
        f.fine_ = &problem;
        f.h_a_ = h_a;
        f.mu0_ = mu0;
        f.terms_ = terms;
        return f;
    }
    static EnergyFunctional homogenized(const HomogenizedModel& model, const DomainGrid& grid,
                                        const Vec3& h_a, double mu0 = 1.0, EnergyTerms terms = {}) {
        EnergyFunctional f;
        f.hom_ = &model;
        f.grid_ = grid;
        f.h_a_ = h_a;
        f.mu0_ = mu0;
        f.terms_ = terms;
        return f;
    }

    const DomainGrid& grid() const { return fine_ ? fine_->grid : grid_; }
    Provenance provenance() const { return fine_ ? Provenance::Fine : Provenance::Homogenized; }

    // Densities are evaluated as written, also off the sphere; the unit-norm
    // invariant is the caller's (checked by the public energy ops).
    EnergyBreakdown energy(const VectorDomainField& m) const {
        if (!(m.grid == grid())) throw std::invalid_argument("field grid mismatch");
        EnergyBreakdown out;
        out.provenance = provenance();
        out.epsilon = fine_ ? fine_->epsilon : 0.0;
        const GridSize& n = m.grid.resolution;
        Vec3 pitch = m.grid.pitch();
        double vol = m.grid.voxel_volume();

        if (terms_.exchange) {
            double acc = 0.0;
            if (fine_) {
                for (int i = 0; i < n.nx; ++i)
                    for (int j = 0; j < n.ny; ++j)
                        for (int k = 0; k < n.nz; ++k) {
                            double a = fine_->coeffs.a[n.flat(i, j, k)];
                            for (int d = 0; d < 3; ++d) {
                                auto [lo, hi] = detail::gradient_pair(n, i, j, k, d);
                                Vec3 diff = (m.values[hi] - m.values[lo]) / pitch[d];
                                acc += a * norm2(diff);
                            }
                        }
            } else {
                const Mat3& A = hom_->A_hom;
                for (int i = 0; i < n.nx; ++i)
                    for (int j = 0; j < n.ny; ++j)
                        for (int k = 0; k < n.nz; ++k) {
                            Vec3 diff[3];
                            for (int d = 0; d < 3; ++d) {
                                auto [lo, hi] = detail::gradient_pair(n, i, j, k, d);
                                diff[d] = (m.values[hi] - m.values[lo]) / pitch[d];
                            }
                            for (int d = 0; d < 3; ++d)
                                for (int e = 0; e < 3; ++e)
                                    acc += A(d, e) * dot(diff[d], diff[e]);
                        }
            }
            out.exchange = acc * vol;
        }

        if (terms_.anisotropy) {
            double acc = 0.0;
            if (fine_) {
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    acc += anisotropy_density(
                        fine_->cell.phases[fine_->coeffs.phase[v]].anisotropy, m.values[v]);
            } else {
                for (const Vec3& mv : m.values) acc += hom_->anisotropy_mean(mv);
            }
            out.anisotropy = acc * vol;
        }

        if (terms_.magnetostatic) {
            if (fine_) {
                VectorDomainField moment(m.grid);
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    moment.values[v] = m.values[v] * fine_->coeffs.Ms[v];
                out.magnetostatic = magnetostatic_energy(moment, mu0_);
            } else {
                double mean = hom_->mean_Ms;
                double hterm = 0.0;
                if (mean != 0.0) {
                    VectorDomainField h = stray_field(m);
                    hterm = -mean * mean * dot(h, m) * vol;
                }
                double bterm = 0.0;
                for (const Vec3& mv : m.values) bterm += quadratic_form(hom_->B_demag, mv);
                bterm *= vol;
                out.magnetostatic = 0.5 * mu0_ * (hterm + bterm);
            }
        }

        if (terms_.zeeman) {
            double acc = 0.0;
            if (fine_) {
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    acc += fine_->coeffs.Ms[v] * dot(h_a_, m.values[v]);
            } else {
                for (const Vec3& mv : m.values) acc += dot(h_a_, mv);
                acc *= hom_->mean_Ms;
            }
            out.zeeman = -mu0_ * acc * vol;
        }

        out.finalize();
        return out;
    }

    // Euclidean gradient of the discrete total energy with respect to the
    // voxel values; tangential projection is the minimizer's job.
    VectorDomainField gradient(const VectorDomainField& m) const {
        if (!(m.grid == grid())) throw std::invalid_argument("field grid mismatch");
        const GridSize& n = m.grid.resolution;
        Vec3 pitch = m.grid.pitch();
        double vol = m.grid.voxel_volume();
        VectorDomainField g(m.grid);

        if (terms_.exchange) {
            for (int i = 0; i < n.nx; ++i)
                for (int j = 0; j < n.ny; ++j)
                    for (int k = 0; k < n.nz; ++k) {
                        if (fine_) {
                            double a = fine_->coeffs.a[n.flat(i, j, k)];
                            for (int d = 0; d < 3; ++d) {
                                auto [lo, hi] = detail::gradient_pair(n, i, j, k, d);
                                Vec3 diff = (m.values[hi] - m.values[lo]) / pitch[d];
                                Vec3 push = diff * (2.0 * a * vol / pitch[d]);
                                g.values[hi] += push;
                                g.values[lo] -= push;
                            }
                        } else {
                            const Mat3& A = hom_->A_hom;
                            Vec3 diff[3];
                            detail::StencilPair pairs[3];
                            for (int d = 0; d < 3; ++d) {
                                pairs[d] = detail::gradient_pair(n, i, j, k, d);
                                diff[d] = (m.values[pairs[d].hi] - m.values[pairs[d].lo]) / pitch[d];
                            }
                            for (int d = 0; d < 3; ++d) {
                                Vec3 q;
                                for (int e = 0; e < 3; ++e) q += diff[e] * A(d, e);
                                Vec3 push = q * (2.0 * vol / pitch[d]);
                                g.values[pairs[d].hi] += push;
                                g.values[pairs[d].lo] -= push;
                            }
                        }
                    }
        }

        if (terms_.anisotropy) {
            for (std::size_t v = 0; v < m.values.size(); ++v) {
                Vec3 dg = fine_ ? anisotropy_density_gradient(
                                      fine_->cell.phases[fine_->coeffs.phase[v]].anisotropy,
                                      m.values[v])
                                : hom_->anisotropy_mean_gradient(m.values[v]);
                g.values[v] += dg * vol;
            }
        }

        if (terms_.magnetostatic) {
            if (fine_) {
                VectorDomainField moment(m.grid);
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    moment.values[v] = m.values[v] * fine_->coeffs.Ms[v];
                VectorDomainField h = stray_field(moment);
                // E = -(mu0/2)(K Mm, Mm); K self-adjoint
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    g.values[v] -= h.values[v] * (mu0_ * fine_->coeffs.Ms[v] * vol);
            } else {
                double mean = hom_->mean_Ms;
                if (mean != 0.0) {
                    VectorDomainField h = stray_field(m);
                    for (std::size_t v = 0; v < m.values.size(); ++v)
                        g.values[v] -= h.values[v] * (mu0_ * mean * mean * vol);
                }
                for (std::size_t v = 0; v < m.values.size(); ++v)
                    g.values[v] += (hom_->B_demag * m.values[v]) * (mu0_ * vol);
            }
        }

        if (terms_.zeeman) {
            for (std::size_t v = 0; v < m.values.size(); ++v) {
                double weight = fine_ ? fine_->coeffs.Ms[v] : hom_->mean_Ms;
                g.values[v] -= h_a_ * (mu0_ * weight * vol);
            }
        }
        return g;
    }

  private:
    const FineProblem* fine_ = nullptr;
    const HomogenizedModel* hom_ = nullptr;
    DomainGrid grid_;
    Vec3 h_a_;
    double mu0_ = 1.0;
    EnergyTerms terms_;
};

// ---------------------------------------------------------------------------
// Public energy ops (unit-norm enforced through the MagnetizationField type)
// ---------------------------------------------------------------------------

inline EnergyBreakdown energy_fine(const FineProblem& problem, const MagnetizationField& m,
                                   const Vec3& h_a, double mu0 = 1.0) {
    return EnergyFunctional::fine(problem, h_a, mu0).energy(m.field);
}

inline EnergyBreakdown energy_fine(const UnitCellMaterial& cell, double epsilon,
                                   const MagnetizationField& m, const Vec3& h_a,
                                   double mu0 = 1.0) {
    FineProblem problem = make_fine_problem(cell, m.grid(), epsilon);
    return energy_fine(problem, m, h_a, mu0);
}

inline EnergyBreakdown energy_hom(const HomogenizedModel& model, const MagnetizationField& m,
                                  const Vec3& h_a, double mu0 = 1.0) {
    return EnergyFunctional::homogenized(model, m.grid(), h_a, mu0).energy(m.field);
}

// ---------------------------------------------------------------------------
// Projected gradient descent with renormalization and backtracking
// ---------------------------------------------------------------------------

struct MinimizeResult {
    VectorDomainField m;
    std::vector<double> trace;  // accepted energies, trace[0] = E(m0)
    int iterations = 0;
    int rejected_steps = 0;
    double final_step = 0.0;
    bool converged = false;  // relative energy change below 1e-10
};

inline MinimizeResult minimize(const EnergyFunctional& functional, const MagnetizationField& m0,
                               int steps, double step_size) {
    if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
    if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
    MinimizeResult out;
    out.m = m0.field;
    double energy = functional.energy(out.m).total;
    out.trace.push_back(energy);
    double tau = step_size;
    constexpr double rel_stop = 1e-10;

    for (int it = 0; it < steps; ++it) {
        VectorDomainField grad = functional.gradient(out.m);
        // tangential part: grad - (grad.m) m
        for (std::size_t v = 0; v < grad.values.size(); ++v) {
            const Vec3& mv = out.m.values[v];
            grad.values[v] -= mv * dot(grad.values[v], mv);
        }
        bool accepted = false;
        while (tau > 1e-18) {
            VectorDomainField trial = out.m;
            for (std::size_t v = 0; v < trial.values.size(); ++v)
                trial.values[v] = normalized(trial.values[v] - grad.values[v] * tau);
            double trial_energy = functional.energy(trial).total;
            if (trial_energy <= energy) {
                double change = energy - trial_energy;
                out.m = std::move(trial);
                energy = trial_energy;
                out.trace.push_back(energy);
                out.iterations = it + 1;
                accepted = true;
                if (change <= rel_stop * std::max(1.0, std::abs(energy))) out.converged = true;
                // recover from early backtracking, never beyond the given step
                tau = std::min(tau * 1.3, step_size);
                break;
            }
            tau *= 0.5;
            ++out.rejected_steps;
        }
        if (!accepted || out.converged) break;
    }
    out.final_step = tau;
    return out;
}

}  // namespace magnhom
