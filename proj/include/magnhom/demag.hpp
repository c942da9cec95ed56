#pragma once

// Full-space stray field h_d[m] = grad u, Laplace u = -div(m chi_Omega),
// restricted to the voxelized domain, and the magnetostatic self-energy.
//
// The field is an aperiodic convolution of the moment with the cell-averaged
// demagnetizing tensor: each kernel entry is the exact interaction of two
// uniformly magnetized rectangular cells, evaluated through the closed-form
// antiderivatives f and g of Newell, Williams and Dunlop and the 27-point
// triple second difference. Open boundaries come from zero-padding to the
// next power of two >= 2n-1 per axis before the fast transform. The kernel
// is even under full inversion, so its DFT is real; the convolution operator
// is therefore exactly self-adjoint (reciprocity) and the energy quadratic
// form PSD up to kernel quadrature error.

#include <map>
#include <memory>
#include <tuple>

#include "magnhom/fft.hpp"
#include "magnhom/field.hpp"

namespace magnhom {

namespace newell {

// Antiderivative for the diagonal tensor components. Even in every argument.
inline double f(double x, double y, double z) {
    x = std::abs(x);
    y = std::abs(y);
    z = std::abs(z);
    double xsq = x * x, ysq = y * y, zsq = z * z;
    double rsq = xsq + ysq + zsq;
    if (rsq == 0.0) return 0.0;
    double r = std::sqrt(rsq);
    double acc = (2.0 * xsq - ysq - zsq) * r / 6.0;
    if (xsq + zsq > 0.0) acc += 0.5 * y * (zsq - xsq) * std::asinh(y / std::sqrt(xsq + zsq));
    if (xsq + ysq > 0.0) acc += 0.5 * z * (ysq - xsq) * std::asinh(z / std::sqrt(xsq + ysq));
    if (x * y * z > 0.0) acc -= x * y * z * std::atan2(y * z, x * r);
    return acc;
}

// Antiderivative for the off-diagonal components. Odd in x and y, even in z.
inline double g(double x, double y, double z) {
    double sign = 1.0;
    if (x < 0.0) sign = -sign;
    if (y < 0.0) sign = -sign;
    x = std::abs(x);
    y = std::abs(y);
    z = std::abs(z);
    double xsq = x * x, ysq = y * y, zsq = z * z;
    double rsq = xsq + ysq + zsq;
    if (rsq == 0.0) return 0.0;
    double r = std::sqrt(rsq);
    double acc = -x * y * r / 3.0;
    if (z > 0.0) {
        acc -= (zsq * z / 6.0) * std::atan2(x * y, z * r);
        acc -= 0.5 * z * ysq * std::atan2(x * z, y * r);
        acc -= 0.5 * z * xsq * std::atan2(y * z, x * r);
        if (xsq + ysq > 0.0) acc += x * y * z * std::asinh(z / std::sqrt(xsq + ysq));
    }
    if (ysq + zsq > 0.0) acc += (y / 6.0) * (3.0 * zsq - ysq) * std::asinh(x / std::sqrt(ysq + zsq));
    if (xsq + zsq > 0.0) acc += (x / 6.0) * (3.0 * zsq - xsq) * std::asinh(y / std::sqrt(xsq + zsq));
    return sign * acc;
}

}  // namespace newell

namespace detail {

inline double kahan_sum27(const double* terms) {
    double sum = 0.0, corr = 0.0;
    for (int i = 0; i < 27; ++i) {
        double y = terms[i] - corr;
        double t = sum + y;
        corr = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace detail

inline std::size_t& demag_memory_budget_bytes() {
    static std::size_t budget = std::size_t(4) * 1024 * 1024 * 1024;
    return budget;
}

class StrayFieldSolver {
  public:
    explicit StrayFieldSolver(const DomainGrid& grid)
        : grid_(grid),
          padded_{next_power_of_two(2 * grid.resolution.nx - 1),
                  next_power_of_two(2 * grid.resolution.ny - 1),
                  next_power_of_two(2 * grid.resolution.nz - 1)},
          fft_(padded_) {
        // kernel spectra (6 real arrays) + 3 complex work buffers
        std::size_t bytes = padded_.count() * (6 * sizeof(double) + 6 * sizeof(double));
        if (bytes > demag_memory_budget_bytes())
            throw std::runtime_error("demag grid exceeds the configured memory budget (" +
                                     std::to_string(bytes) + " bytes needed)");
        build_kernel();
    }

    const DomainGrid& grid() const { return grid_; }
    const GridSize& padded_size() const { return padded_; }
    // max |imag| of the kernel spectrum relative to max |re|; a diagnostic of
    // the inversion symmetry the real-spectrum storage relies on.
    double kernel_spectrum_imag_ratio() const { return kernel_imag_ratio_; }

    // h_d on the domain from the moment field M(x) m(x) (magnitude included).
    VectorDomainField stray_field(const VectorDomainField& moment) const {
        if (!(moment.grid == grid_)) throw std::invalid_argument("moment grid mismatch");
        if (!moment.all_finite()) throw std::invalid_argument("moment field has non-finite values");
        const GridSize& n = grid_.resolution;
        std::array<std::vector<fftcore::cplx>, 3> buf;
        for (int c = 0; c < 3; ++c) {
            buf[c].assign(padded_.count(), fftcore::cplx(0.0, 0.0));
            for (int i = 0; i < n.nx; ++i)
                for (int j = 0; j < n.ny; ++j)
                    for (int k = 0; k < n.nz; ++k)
                        buf[c][padded_.flat(i, j, k)] = moment.values[n.flat(i, j, k)][c];
            fft_.forward(buf[c]);
        }
        // pointwise h^ = -N^ m^, N^ real symmetric
        std::size_t count = padded_.count();
        for (std::size_t s = 0; s < count; ++s) {
            fftcore::cplx mx = buf[0][s], my = buf[1][s], mz = buf[2][s];
            buf[0][s] = -(khat_[0][s] * mx + khat_[3][s] * my + khat_[4][s] * mz);
            buf[1][s] = -(khat_[3][s] * mx + khat_[1][s] * my + khat_[5][s] * mz);
            buf[2][s] = -(khat_[4][s] * mx + khat_[5][s] * my + khat_[2][s] * mz);
        }
        VectorDomainField out(grid_);
        for (int c = 0; c < 3; ++c) {
            fft_.inverse(buf[c]);
            for (int i = 0; i < n.nx; ++i)
                for (int j = 0; j < n.ny; ++j)
                    for (int k = 0; k < n.nz; ++k)
                        out.values[n.flat(i, j, k)][c] = buf[c][padded_.flat(i, j, k)].real();
        }
        return out;
    }

    // -(mu0/2) sum h_d . moment * voxel volume; equals (mu0/2)||grad u||^2
    // over R^3, hence nonnegative up to kernel quadrature error.
    double magnetostatic_energy(const VectorDomainField& moment, double mu0 = 1.0) const {
        VectorDomainField h = stray_field(moment);
        double acc = 0.0;
        for (std::size_t v = 0; v < moment.values.size(); ++v)
            acc += dot(h.values[v], moment.values[v]);
        return -0.5 * mu0 * acc * grid_.voxel_volume();
    }

  private:
    // Tensor components in khat_ order: xx, yy, zz, xy, xz, yz.
    void build_kernel() {
        const GridSize& n = grid_.resolution;
        Vec3 pitch = grid_.pitch();
        const double d[3] = {pitch.x, pitch.y, pitch.z};

        // Octant lattices of the antiderivatives: value at integer coords
        // (u0,u1,u2) >= 0 of func(coord[argmap[0]], coord[argmap[1]],
        // coord[argmap[2]]) with coord[a] = u_a * d[a]. Signs for negative
        // coordinates follow the declared parities.
        struct Component {
            double (*func)(double, double, double);
            std::array<int, 3> argmap;
            std::array<bool, 3> odd_axis;  // parity per original axis
        };
        const std::array<Component, 6> comps = {{
            {newell::f, {0, 1, 2}, {false, false, false}},  // xx
            {newell::f, {1, 2, 0}, {false, false, false}},  // yy
            {newell::f, {2, 0, 1}, {false, false, false}},  // zz
            {newell::g, {0, 1, 2}, {true, true, false}},    // xy: odd in x, y
            {newell::g, {0, 2, 1}, {true, false, true}},    // xz: odd in x, z
            {newell::g, {1, 2, 0}, {false, true, true}},    // yz: odd in y, z
        }};

        const int ln[3] = {n.nx + 1, n.ny + 1, n.nz + 1};
        std::vector<double> lattice(static_cast<std::size_t>(ln[0]) * ln[1] * ln[2]);
        auto lat_flat = [&](int a, int b, int c) {
            return (static_cast<std::size_t>(a) * ln[1] + b) * ln[2] + c;
        };

        double scale = 1.0 / (4.0 * 3.14159265358979323846 * d[0] * d[1] * d[2]);
        double max_imag = 0.0, max_real = 0.0;
        std::vector<fftcore::cplx> spectrum(padded_.count());

        for (int comp = 0; comp < 6; ++comp) {
            const Component& c = comps[comp];
            for (int u0 = 0; u0 < ln[0]; ++u0)
                for (int u1 = 0; u1 < ln[1]; ++u1)
                    for (int u2 = 0; u2 < ln[2]; ++u2) {
                        double coord[3] = {u0 * d[0], u1 * d[1], u2 * d[2]};
                        lattice[lat_flat(u0, u1, u2)] =
                            c.func(coord[c.argmap[0]], coord[c.argmap[1]], coord[c.argmap[2]]);
                    }
            auto lat = [&](int w0, int w1, int w2) {
                double sign = 1.0;
                if (c.odd_axis[0] && w0 < 0) sign = -sign;
                if (c.odd_axis[1] && w1 < 0) sign = -sign;
                if (c.odd_axis[2] && w2 < 0) sign = -sign;
                return sign * lattice[lat_flat(std::abs(w0), std::abs(w1), std::abs(w2))];
            };

            std::fill(spectrum.begin(), spectrum.end(), fftcore::cplx(0.0, 0.0));
            double terms[27];
            for (int o0 = -(n.nx - 1); o0 <= n.nx - 1; ++o0)
                for (int o1 = -(n.ny - 1); o1 <= n.ny - 1; ++o1)
                    for (int o2 = -(n.nz - 1); o2 <= n.nz - 1; ++o2) {
                        int t = 0;
                        for (int s0 = -1; s0 <= 1; ++s0)
                            for (int s1 = -1; s1 <= 1; ++s1)
                                for (int s2 = -1; s2 <= 1; ++s2) {
                                    int order = std::abs(s0) + std::abs(s1) + std::abs(s2);
                                    double w = (order & 1 ? -1.0 : 1.0) * double(1 << (3 - order));
                                    terms[t++] = w * lat(o0 + s0, o1 + s1, o2 + s2);
                                }
                        std::size_t idx = padded_.flat(positive_mod(o0, padded_.nx),
                                                       positive_mod(o1, padded_.ny),
                                                       positive_mod(o2, padded_.nz));
                        spectrum[idx] = detail::kahan_sum27(terms) * scale;
                    }
            fft_.forward(spectrum);
            khat_[comp].resize(padded_.count());
            for (std::size_t s = 0; s < spectrum.size(); ++s) {
                khat_[comp][s] = spectrum[s].real();
                max_imag = std::max(max_imag, std::abs(spectrum[s].imag()));
                max_real = std::max(max_real, std::abs(spectrum[s].real()));
            }
        }
        kernel_imag_ratio_ = max_real > 0.0 ? max_imag / max_real : 0.0;
    }

    DomainGrid grid_;
    GridSize padded_;
    fftcore::Fft3 fft_;
    std::array<std::vector<double>, 6> khat_;
    double kernel_imag_ratio_ = 0.0;
};

// Write-once cache keyed by (resolution, pitch); kernel construction
// dominates setup cost and is reused across energy evaluations and sweeps.
inline const StrayFieldSolver& stray_field_solver(const DomainGrid& grid) {
    using Key = std::tuple<int, int, int, double, double, double>;
    static std::map<Key, std::unique_ptr<StrayFieldSolver>> cache;
    Vec3 p = grid.pitch();
    Key key{grid.resolution.nx, grid.resolution.ny, grid.resolution.nz, p.x, p.y, p.z};
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<StrayFieldSolver>(grid)).first;
    return *it->second;
}

inline VectorDomainField stray_field(const VectorDomainField& moment) {
    return stray_field_solver(moment.grid).stray_field(moment);
}

inline double magnetostatic_energy(const VectorDomainField& moment, double mu0 = 1.0) {
    return stray_field_solver(moment.grid).magnetostatic_energy(moment, mu0);
}

}  // namespace magnhom
