#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "magnhom/demag.hpp"
#include "magnhom/fft.hpp"

using namespace magnhom;

namespace {

VectorDomainField random_field(std::mt19937_64& rng, const DomainGrid& grid, double amp = 1.0) {
    VectorDomainField f(grid);
    std::uniform_real_distribution<double> dist(-amp, amp);
    for (Vec3& v : f.values) v = {dist(rng), dist(rng), dist(rng)};
    return f;
}

}  // namespace

TEST_CASE("radix-2 FFT matches the naive DFT") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int n : {1, 2, 8, 16}) {
        std::vector<fftcore::cplx> a(n), ref(n);
        for (auto& c : a) c = {dist(rng), dist(rng)};
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (int k = 0; k < n; ++k) {
            fftcore::cplx acc = 0.0;
            for (int t = 0; t < n; ++t)
                acc += a[t] * std::polar(1.0, -two_pi * k * t / n);
            ref[k] = acc;
        }
        fftcore::Plan1D plan(n);
        std::vector<fftcore::cplx> b = a;
        plan.transform(b.data(), false);
        for (int k = 0; k < n; ++k) CHECK(std::abs(b[k] - ref[k]) < 1e-12 * (1 + std::abs(ref[k])));
        plan.transform(b.data(), true);
        for (auto& c : b) c /= double(n);
        for (int k = 0; k < n; ++k) CHECK(std::abs(b[k] - a[k]) < 1e-13);
    }
}

TEST_CASE("3D FFT round trip") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    GridSize size{4, 8, 2};
    fftcore::Fft3 fft(size);
    std::vector<fftcore::cplx> a(size.count());
    for (auto& c : a) c = {dist(rng), dist(rng)};
    std::vector<fftcore::cplx> b = a;
    fft.forward(b);
    fft.inverse(b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-13);
}

TEST_CASE("zero moment gives zero field") {
    DomainGrid grid = DomainGrid::unit_cube(8);
    VectorDomainField zero(grid);
    VectorDomainField h = stray_field(zero);
    for (const Vec3& v : h.values) CHECK(norm(v) == 0.0);
}

TEST_CASE("uniform moment on a cube: volume-averaged demag factor 1/3") {
    DomainGrid grid = DomainGrid::unit_cube(32);
    VectorDomainField m(grid, {0.0, 0.0, 1.0});
    const StrayFieldSolver& solver = stray_field_solver(grid);
    VectorDomainField h = solver.stray_field(m);
    double avg = 0.0;
    for (const Vec3& v : h.values) avg += v.z;
    avg /= static_cast<double>(h.values.size());
    CHECK(-avg == doctest::Approx(1.0 / 3.0).epsilon(0.05));   // spec tolerance at 32^3
    CHECK(-avg == doctest::Approx(1.0 / 3.0).epsilon(1e-9));   // exact-kernel sharpness
    CHECK(solver.kernel_spectrum_imag_ratio() < 1e-8);

    double energy = solver.magnetostatic_energy(m, 1.0);
    CHECK(energy == doctest::Approx(1.0 / 6.0).epsilon(0.02));
    CHECK(energy == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("uniformly magnetized ball: interior field is -m/3") {
    int n = 32;
    DomainGrid grid = DomainGrid::unit_cube(n);
    VectorDomainField m(grid);
    Vec3 center{0.5, 0.5, 0.5};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (norm(grid.voxel_center(i, j, k) - center) <= 0.5)
                    m.at(i, j, k) = {0.0, 0.0, 1.0};
    VectorDomainField h = stray_field(m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (norm(grid.voxel_center(i, j, k) - center) > 0.375) continue;
                const Vec3& hv = h.at(i, j, k);
                CHECK(std::abs(hv.z + 1.0 / 3.0) < 0.05 / 3.0);
                CHECK(std::abs(hv.x) < 0.05 / 3.0);
                CHECK(std::abs(hv.y) < 0.05 / 3.0);
            }
}

TEST_CASE("magnetometric factors of a rectangular box sum to one") {
    // uniform moment along each axis of a non-cubic box; the volume-averaged
    // demag factors obey the exact trace identity Nx + Ny + Nz = 1
    DomainGrid grid({1.0, 1.5, 0.7}, {12, 18, 8});
    const StrayFieldSolver& solver = stray_field_solver(grid);
    double trace = 0.0;
    double factors[3];
    for (int d = 0; d < 3; ++d) {
        VectorDomainField m(grid, axis_unit(d));
        VectorDomainField h = solver.stray_field(m);
        double avg = 0.0;
        for (const Vec3& v : h.values) avg += v[d];
        factors[d] = -avg / static_cast<double>(h.values.size());
        trace += factors[d];
    }
    CHECK(trace == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(factors[1] < factors[0]);  // longer axis, smaller factor
    CHECK(factors[2] > factors[0]);  // shorter axis, larger factor
}

TEST_CASE("stray field is linear in the moment") {
    std::mt19937_64 rng(3);
    DomainGrid grid({1.1, 0.9, 1.0}, {6, 5, 7});  // non-cubic voxels, non-pow2 sizes
    VectorDomainField u = random_field(rng, grid);
    VectorDomainField v = random_field(rng, grid);
    double alpha = 1.7, beta = -0.6;
    VectorDomainField combo(grid);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = u.values[i] * alpha + v.values[i] * beta;
    VectorDomainField hu = stray_field(u), hv = stray_field(v), hc = stray_field(combo);
    for (std::size_t i = 0; i < combo.values.size(); ++i) {
        Vec3 expect = hu.values[i] * alpha + hv.values[i] * beta;
        CHECK(norm(hc.values[i] - expect) < 1e-12);
    }
}

TEST_CASE("reciprocity: sum h[u].v equals sum h[v].u") {
    std::mt19937_64 rng(4);
    DomainGrid grid = DomainGrid::unit_cube(12);
    for (int trial = 0; trial < 5; ++trial) {
        VectorDomainField u = random_field(rng, grid);
        VectorDomainField v = random_field(rng, grid);
        double uv = dot(stray_field(u), v);
        double vu = dot(stray_field(v), u);
        CHECK(std::abs(uv - vu) <= 1e-10 * std::max({1.0, std::abs(uv), std::abs(vu)}));
    }
}

TEST_CASE("magnetostatic energy is nonnegative on random inputs") {
    std::mt19937_64 rng(5);
    DomainGrid grid = DomainGrid::unit_cube(10);
    for (int trial = 0; trial < 10; ++trial) {
        VectorDomainField u = random_field(rng, grid, 2.0);
        double scale = 0.0;
        for (const Vec3& w : u.values) scale += norm2(w);
        scale *= 0.5 * grid.voxel_volume();
        CHECK(magnetostatic_energy(u, 1.0) >= -1e-10 * scale);
    }
}

TEST_CASE("memory budget guard") {
    std::size_t saved = demag_memory_budget_bytes();
    demag_memory_budget_bytes() = 1024;
    CHECK_THROWS_WITH_AS(StrayFieldSolver(DomainGrid::unit_cube(16)),
                         doctest::Contains("memory budget"), std::runtime_error);
    demag_memory_budget_bytes() = saved;
}

TEST_CASE("rejects non-finite moments and mismatched grids") {
    DomainGrid grid = DomainGrid::unit_cube(4);
    const StrayFieldSolver& solver = stray_field_solver(grid);
    VectorDomainField bad(grid);
    bad.values[3].y = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(solver.stray_field(bad));
    VectorDomainField other(DomainGrid::unit_cube(5));
    CHECK_THROWS(solver.stray_field(other));
}
