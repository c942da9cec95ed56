#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "magnhom/cellspec_io.hpp"
#include "magnhom/material.hpp"

using namespace magnhom;

namespace {

Phase simple_phase(double a, double ms) {
    Phase p;
    p.a_ex = a;
    p.M_s = ms;
    return p;
}

UnitCellMaterial half_laminate(int n, double a0 = 1.0, double a1 = 4.0, double m0 = 1.0,
                               double m1 = 0.0) {
    return make_laminate(0, {0.5, 0.5}, {simple_phase(a0, m0), simple_phase(a1, m1)}, n);
}

UnitCellMaterial random_two_phase(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> a_dist(0.5, 8.0);
    std::uniform_real_distribution<double> m_dist(0.0, 2.0);
    UnitCellMaterial cell(n, {simple_phase(a_dist(rng), m_dist(rng)),
                              simple_phase(a_dist(rng), m_dist(rng))});
    std::bernoulli_distribution coin(0.5);
    for (auto& v : cell.voxel_map) v = coin(rng) ? 1 : 0;
    return cell;
}

}  // namespace

TEST_CASE("laminate generator fills half spaces by voxel center") {
    UnitCellMaterial cell = half_laminate(8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k) CHECK(cell.phase_at(i, j, k) == (i < 4 ? 0 : 1));
}

TEST_CASE("laminate generator rejects bad fractions") {
    CHECK_THROWS(make_laminate(0, {0.6, 0.6}, {simple_phase(1, 0), simple_phase(2, 0)}, 8));
    CHECK_THROWS(make_laminate(0, {1.0}, {simple_phase(1, 0), simple_phase(2, 0)}, 8));
}

TEST_CASE("checkerboard generator matches the tile formula") {
    UnitCellMaterial cell =
        make_checkerboard(2, {simple_phase(1, 0), simple_phase(4, 0)}, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k)
                CHECK(cell.phase_at(i, j, k) == ((i / 4 + j / 4) % 2));
}

TEST_CASE("sphere inclusion volume fraction approaches the analytic volume") {
    double radius = 0.25;
    UnitCellMaterial cell = make_sphere_inclusion(radius, {0.5, 0.5, 0.5},
                                                  {simple_phase(1, 0), simple_phase(2, 1)}, 32);
    double frac = cell.volume_fractions()[1];
    double exact = 4.0 / 3.0 * 3.14159265358979323846 * radius * radius * radius;
    CHECK(std::abs(frac - exact) / exact < 2.0 / 32.0);
    CHECK_THROWS(make_sphere_inclusion(0.7, {0.5, 0.5, 0.5},
                                       {simple_phase(1, 0), simple_phase(2, 1)}, 8));
}

TEST_CASE("cell averages: homogeneous and laminate oracles") {
    UnitCellMaterial homo = make_homogeneous(simple_phase(2.0, 1.0), 4);
    CellAverages avg = cell_averages(homo);
    CHECK(avg.mean_a == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(avg.harm_a == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(avg.mean_Ms == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(avg.mean_Ms_sq == doctest::Approx(1.0).epsilon(1e-14));

    CellAverages lam = cell_averages(half_laminate(8));
    CHECK(lam.mean_a == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(lam.harm_a == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(lam.mean_Ms == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lam.mean_Ms_sq == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("AM-HM and Jensen inequalities hold on random cells") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        UnitCellMaterial cell = random_two_phase(rng, 6);
        CellAverages avg = cell_averages(cell);
        CHECK(avg.harm_a <= avg.mean_a + 1e-12);
        CHECK(avg.mean_Ms * avg.mean_Ms <= avg.mean_Ms_sq + 1e-12);
    }
}

TEST_CASE("validate reports admissibility constants and failures") {
    UnitCellMaterial good = half_laminate(4);
    ValidationReport r = validate(good);
    CHECK(r.pass);
    CHECK(r.c_ex == doctest::Approx(1.0));
    CHECK(r.C_ex == doctest::Approx(4.0));
    CHECK(r.C_s == doctest::Approx(1.0));

    UnitCellMaterial homo = make_homogeneous(simple_phase(2.0, 0.0), 2);
    ValidationReport rh = validate(homo);
    CHECK(rh.pass);
    CHECK(rh.c_ex == doctest::Approx(2.0));
    CHECK(rh.C_ex == doctest::Approx(2.0));

    UnitCellMaterial bad = good;
    bad.phases[0].a_ex = 0.0;
    CHECK_FALSE(validate(bad).pass);

    UnitCellMaterial tilted = good;
    tilted.phases[1].anisotropy = AnisotropySpec::uniaxial(1.0, {0.0, 0.0, 0.9});
    ValidationReport rt = validate(tilted);
    CHECK_FALSE(rt.pass);
    CHECK(rt.frame_defects[1] == doctest::Approx(0.1).epsilon(1e-9));

    UnitCellMaterial orphan = good;
    orphan.voxel_map[5] = 7;
    CHECK_FALSE(validate(orphan).pass);
}

TEST_CASE("cell file round trip is lossless") {
    UnitCellMaterial cell = half_laminate(8);
    cell.phases[0].anisotropy = AnisotropySpec::uniaxial(0.75, {0.0, 0.0, 1.0});
    cell.phases[1].anisotropy = AnisotropySpec::cubic(
        0.25, {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}});
    cell.phases[0].a_ex = 1.0 / 3.0;  // exercise full-precision round trip

    std::stringstream buffer;
    write_cell(cell, buffer);
    UnitCellMaterial back = parse_cell(buffer);

    CHECK(back.resolution == cell.resolution);
    CHECK(back.voxel_map == cell.voxel_map);
    REQUIRE(back.phases.size() == cell.phases.size());
    for (std::size_t p = 0; p < cell.phases.size(); ++p) {
        CHECK(back.phases[p].a_ex == cell.phases[p].a_ex);
        CHECK(back.phases[p].M_s == cell.phases[p].M_s);
        CHECK(back.phases[p].anisotropy.kind == cell.phases[p].anisotropy.kind);
        CHECK(back.phases[p].anisotropy.kappa == cell.phases[p].anisotropy.kappa);
    }
}

TEST_CASE("cell files accept generators and integer voxel maps") {
    std::string gen_doc =
        "resolution = 8\n"
        "[[phases]]\n"
        "a_ex = 1.0\n"
        "M_s = 1.0\n"
        "[[phases]]\n"
        "a_ex = 4.0\n"
        "M_s = 0.0\n"
        "[generator]\n"
        "kind = \"laminate\"\n"
        "axis = 1\n"
        "fractions = [0.5, 0.5]\n";
    std::stringstream gen_in(gen_doc);
    UnitCellMaterial from_gen = parse_cell(gen_in);
    CHECK(from_gen.voxel_map == half_laminate(8).voxel_map);

    std::string arr_doc =
        "resolution = 2\n"
        "voxel_map = [0, 1, 1, 0, 1, 0, 0, 1]\n"
        "[[phases]]\n"
        "a_ex = 1.0\n"
        "[[phases]]\n"
        "a_ex = 2.0\n";
    std::stringstream arr_in(arr_doc);
    UnitCellMaterial from_arr = parse_cell(arr_in);
    CHECK(from_arr.phase_at(0, 0, 0) == 0);
    CHECK(from_arr.phase_at(0, 0, 1) == 1);
    CHECK(from_arr.phase_at(1, 1, 1) == 1);
}

TEST_CASE("cell file errors: H1 violation, parse error, size mismatch") {
    std::string zero_a =
        "resolution = 2\n[[phases]]\na_ex = 0.0\n";
    std::stringstream in1(zero_a);
    CHECK_THROWS_AS(parse_cell(in1), CellSpecValidationError);

    std::string garbage = "resolution = = 2\n";
    std::stringstream in2(garbage);
    CHECK_THROWS_AS(parse_cell(in2), CellSpecParseError);

    std::string short_map =
        "resolution = 2\nvoxel_map = [0, 1]\n[[phases]]\na_ex = 1.0\n[[phases]]\na_ex = 2.0\n";
    std::stringstream in3(short_map);
    CHECK_THROWS_AS(parse_cell(in3), CellSpecValidationError);
}

TEST_CASE("single-phase file without voxel map loads as homogeneous") {
    std::string doc = "resolution = 8\n[[phases]]\na_ex = 1.0\nM_s = 1.0\n";
    std::stringstream in(doc);
    UnitCellMaterial cell = parse_cell(in);
    CHECK(cell.voxel_count() == 512);
    for (auto v : cell.voxel_map) CHECK(v == 0);
}

TEST_CASE("sample_to_domain: identity, constants, and two periods") {
    // eps = 1 on Q at matching resolution reproduces the cell's own fields
    UnitCellMaterial cell = half_laminate(8);
    DomainGrid grid = DomainGrid::unit_cube(8);
    SampledCoefficients fields = sample_to_domain(cell, grid, 1.0);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k)
                CHECK(fields.phase[grid.resolution.flat(i, j, k)] == cell.phase_at(i, j, k));

    // homogeneous cell: constant fields at any eps
    UnitCellMaterial homo = make_homogeneous(simple_phase(3.0, 2.0), 4);
    SampledCoefficients hc = sample_to_domain(homo, DomainGrid::unit_cube(10), 0.3);
    for (double a : hc.a) CHECK(a == 3.0);

    // laminate at eps = 1/2 shows two full periods along e1
    SampledCoefficients two = sample_to_domain(cell, DomainGrid::unit_cube(16), 0.5);
    for (int i = 0; i < 16; ++i) {
        int within = i % 8;
        for (int j = 0; j < 16; ++j)
            for (int k = 0; k < 16; ++k)
                CHECK(two.phase[DomainGrid::unit_cube(16).resolution.flat(i, j, k)] ==
                      (within < 4 ? 0 : 1));
    }

    CHECK_THROWS(sample_to_domain(cell, grid, 0.0));
}

TEST_CASE("halving eps composes with coordinate doubling modulo 1") {
    UnitCellMaterial cell = half_laminate(8);
    double eps = 0.25;
    TwoScaleSampler fine{&cell, eps / 2};
    TwoScaleSampler coarse{&cell, eps};
    DomainGrid grid = DomainGrid::unit_cube(32);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                Vec3 x = grid.voxel_center(i, j, k);
                Vec3 doubled{std::fmod(2 * x.x, 1.0), std::fmod(2 * x.y, 1.0),
                             std::fmod(2 * x.z, 1.0)};
                CHECK(fine.phase_at(x) == coarse.phase_at(doubled));
            }
}

TEST_CASE("axis permutation relabels the voxel map consistently") {
    UnitCellMaterial cell = half_laminate(4);  // varies along axis 0
    UnitCellMaterial perm = permute_axes(cell, {2, 0, 1});
    // new axis d carries old axis perm[d]; old axis 0 content shows on new axis 1
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) CHECK(perm.phase_at(i, j, k) == (j < 2 ? 0 : 1));
}

TEST_CASE("resampling a laminate to an aligned resolution is exact") {
    UnitCellMaterial cell = half_laminate(8);
    UnitCellMaterial fine = cell_at_resolution(cell, 16);
    CHECK(fine.voxel_map == half_laminate(16).voxel_map);
    UnitCellMaterial coarse = cell_at_resolution(cell, 4);
    CHECK(coarse.voxel_map == half_laminate(4).voxel_map);
}
