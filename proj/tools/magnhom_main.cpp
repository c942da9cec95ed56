// Command-line entry point: validate / homogenize / energy / minimize /
// sweep / verify. Batch semantics, plain-file outputs, deterministic for a
// fixed seed (all numerics run sequentially with a fixed reduction order).
//
// Exit codes: 0 success, 1 validation or verdict failure, 2 solver
// non-convergence, 3 I/O or parse error, 64 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "magnhom/cellspec_io.hpp"
#include "magnhom/converge.hpp"
#include "magnhom/energy.hpp"
#include "magnhom/model_io.hpp"

namespace fs = std::filesystem;
using namespace magnhom;

namespace {

constexpr const char* kToolVersion = "0.1.0";

const double kPi = 3.14159265358979323846;

struct ExitCode {
    static constexpr int ok = 0;
    static constexpr int validation = 1;
    static constexpr int nonconvergence = 2;
    static constexpr int io = 3;
    static constexpr int usage = 64;
};

Vec3 to_vec3(const std::vector<double>& v, const std::string& flag) {
    if (v.size() != 3) throw CLI::ValidationError(flag, "expected three comma-separated values");
    return {v[0], v[1], v[2]};
}

void write_json_file(const ojson& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

// Config echo + version + result diagnostics, written alongside the results.
void write_manifest(const fs::path& path, const std::string& command, const ojson& config,
                    const ojson& results) {
    ojson m;
    m["tool"] = "magnhom";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config"] = config;
    m["results"] = results;
    write_json_file(m, path);
}

fs::path manifest_path_for(const fs::path& out) {
    fs::path p = out;
    p += ".manifest.json";
    return p;
}

ojson diagnostics_json(const SolverDiagnostics& d) {
    ojson j;
    j["resolution"] = d.resolution;
    j["tol"] = d.tol;
    for (int i = 0; i < 3; ++i) {
        j["exchange"].push_back(solve_info_to_json(d.exchange[i]));
        j["demag"].push_back(solve_info_to_json(d.demag[i]));
    }
    return j;
}

// Canned smooth sphere-valued field used by the sweep workflows; asymmetric
// along x1 so oscillations of x1-structured cells do not cancel by symmetry.
MagnetizationField canned_smooth_field(const DomainGrid& grid) {
    VectorDomainField f(grid);
    const GridSize& n = grid.resolution;
    for (int i = 0; i < n.nx; ++i)
        for (int j = 0; j < n.ny; ++j)
            for (int k = 0; k < n.nz; ++k) {
                Vec3 x = grid.voxel_center(i, j, k);
                double theta = 0.9 * std::sin(0.5 * kPi * x.x) + 0.2 * x.y;
                double phi = 0.4 * std::cos(kPi * x.z) + 0.3 * x.x;
                f.at(i, j, k) = {std::sin(theta) * std::cos(phi),
                                 std::sin(theta) * std::sin(phi), std::cos(theta)};
            }
    return MagnetizationField(std::move(f));
}

MagnetizationField random_unit_field(std::mt19937_64& rng, const DomainGrid& grid) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorDomainField f(grid);
    for (Vec3& v : f.values) {
        do {
            v = {gauss(rng), gauss(rng), gauss(rng)};
        } while (norm(v) < 1e-3);
    }
    return MagnetizationField::normalized_from(std::move(f));
}

UnitCellMaterial load_cell_at(const std::string& path, int resolution) {
    UnitCellMaterial cell = load_cell(path);
    if (resolution > 0 && resolution != cell.resolution)
        cell = cell_at_resolution(cell, resolution);
    return cell;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string cell_path;
    std::string out_path;
};

int run_validate(const ValidateArgs& args) {
    std::ifstream in(args.cell_path);
    if (!in) {
        std::cerr << "error: cannot open cell file: " << args.cell_path << "\n";
        return ExitCode::io;
    }
    UnitCellMaterial cell;
    ValidationReport report;
    try {
        cell = parse_cell(in);
        report = validate(cell);
    } catch (const CellSpecValidationError& e) {
        // still emit a failing report naming the violation
        report.pass = false;
        report.violations.push_back(e.what());
    }
    ojson j = validation_report_to_json(report);
    if (!args.out_path.empty()) {
        write_json_file(j, args.out_path);
        write_manifest(manifest_path_for(args.out_path), "validate",
                       ojson{{"cell", args.cell_path}, {"out", args.out_path}},
                       ojson{{"pass", report.pass}});
    }
    std::cout << j.dump(2) << '\n';
    return report.pass ? ExitCode::ok : ExitCode::validation;
}

// ---------------------------------------------------------------------------
// homogenize
// ---------------------------------------------------------------------------

struct HomogenizeArgs {
    std::string cell_path;
    std::string out_path;
    int resolution = 0;  // 0: keep the file's resolution
    double tol = 1e-8;
    int threads = 1;
};

int run_homogenize(const HomogenizeArgs& args) {
    UnitCellMaterial cell = load_cell_at(args.cell_path, args.resolution);
    HomogenizationResult result = homogenize(cell, args.tol);
    save_model(result.model, args.out_path);

    ojson config{{"cell", args.cell_path},
                 {"n", cell.resolution},
                 {"tol", args.tol},
                 {"threads", args.threads},
                 {"out", args.out_path}};
    write_manifest(manifest_path_for(args.out_path), "homogenize", config,
                   ojson{{"diagnostics", diagnostics_json(result.model.diagnostics)}});
    std::cout << "homogenized model written to " << args.out_path << "\n";
    return ExitCode::ok;
}

// ---------------------------------------------------------------------------
// energy / minimize
// ---------------------------------------------------------------------------

struct EnergyArgs {
    std::string cell_path;
    std::string model_path;
    std::string field_path;
    std::string out_path;
    std::string mode = "fine";
    double epsilon = 1.0;
    double tol = 1e-8;
    double mu0 = 1.0;
    std::vector<double> h_a{0.0, 0.0, 0.0};
    int threads = 1;
};

HomogenizedModel resolve_model(const EnergyArgs& args) {
    if (!args.model_path.empty()) return load_model(args.model_path);
    if (args.cell_path.empty())
        throw std::invalid_argument("homogenized mode needs --model or --cell");
    return homogenize(load_cell(args.cell_path), args.tol).model;
}

int run_energy(const EnergyArgs& args) {
    MagnetizationField m = MagnetizationField(load_field(args.field_path));
    Vec3 h_a = to_vec3(args.h_a, "--ha");
    EnergyBreakdown breakdown;
    if (args.mode == "fine") {
        UnitCellMaterial cell = load_cell(args.cell_path);
        breakdown = energy_fine(cell, args.epsilon, m, h_a, args.mu0);
    } else {
        HomogenizedModel model = resolve_model(args);
        breakdown = energy_hom(model, m, h_a, args.mu0);
    }
    ojson j = energy_breakdown_to_json(breakdown);
    write_json_file(j, args.out_path);
    ojson config{{"cell", args.cell_path}, {"model", args.model_path},
                 {"field", args.field_path}, {"mode", args.mode},
                 {"eps", args.epsilon},      {"ha", args.h_a},
                 {"mu0", args.mu0},          {"threads", args.threads},
                 {"out", args.out_path}};
    write_manifest(manifest_path_for(args.out_path), "energy", config, j);
    std::cout << j.dump(2) << '\n';
    return ExitCode::ok;
}

struct MinimizeArgs {
    EnergyArgs energy;
    std::string out_field;
    std::string trace_path;
    int grid_n = 0;  // used when no start field is given
    std::vector<double> extent{1.0, 1.0, 1.0};
    std::vector<double> start_uniform;
    std::uint64_t seed = 1;
    int steps = 200;
    double step_size = 0.1;
    bool binary_field = false;
};

int run_minimize(const MinimizeArgs& args) {
    MagnetizationField m0 = [&]() {
        if (!args.energy.field_path.empty())
            return MagnetizationField(load_field(args.energy.field_path));
        if (args.grid_n <= 0)
            throw std::invalid_argument("provide --field or --grid for the starting state");
        DomainGrid grid(to_vec3(args.extent, "--extent"),
                        GridSize{args.grid_n, args.grid_n, args.grid_n});
        if (!args.start_uniform.empty())
            return MagnetizationField::uniform(grid, to_vec3(args.start_uniform, "--start-uniform"));
        std::mt19937_64 rng(args.seed);
        return random_unit_field(rng, grid);
    }();

    Vec3 h_a = to_vec3(args.energy.h_a, "--ha");
    FineProblem fine_problem;
    HomogenizedModel model;
    EnergyFunctional fn = [&]() {
        if (args.energy.mode == "fine") {
            UnitCellMaterial cell = load_cell(args.energy.cell_path);
            fine_problem = make_fine_problem(cell, m0.grid(), args.energy.epsilon);
            return EnergyFunctional::fine(fine_problem, h_a, args.energy.mu0);
        }
        model = resolve_model(args.energy);
        return EnergyFunctional::homogenized(model, m0.grid(), h_a, args.energy.mu0);
    }();

    MinimizeResult result = minimize(fn, m0, args.steps, args.step_size);
    save_field(result.m, args.out_field, args.binary_field);
    if (!args.trace_path.empty()) {
        std::ofstream trace(args.trace_path);
        if (!trace) throw std::runtime_error("cannot open trace file: " + args.trace_path);
        trace << "step,energy\n";
        char buf[40];
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", result.trace[i]);
            trace << i << ',' << buf << '\n';
        }
    }
    ojson config{{"cell", args.energy.cell_path},
                 {"model", args.energy.model_path},
                 {"mode", args.energy.mode},
                 {"eps", args.energy.epsilon},
                 {"ha", args.energy.h_a},
                 {"mu0", args.energy.mu0},
                 {"steps", args.steps},
                 {"step_size", args.step_size},
                 {"seed", args.seed},
                 {"threads", args.energy.threads},
                 {"out_field", args.out_field},
                 {"trace", args.trace_path}};
    ojson results{{"iterations", result.iterations},
                  {"rejected_steps", result.rejected_steps},
                  {"initial_energy", result.trace.front()},
                  {"final_energy", result.trace.back()},
                  {"converged", result.converged}};
    write_manifest(manifest_path_for(args.out_field), "minimize", config, results);
    std::cout << "final energy " << result.trace.back() << " after " << result.iterations
              << " accepted steps\n";
    return ExitCode::ok;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string workflow;
    std::string cell_path;
    std::string out_dir;
    int grid_n = 32;
    std::vector<double> epsilons{0.25, 0.125, 0.0625};
    std::vector<double> h_a{0.0, 0.0, 0.0};
    double mu0 = 1.0;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    int steps = 150;
    double step_size = 0.5;
    int threads = 1;
};

int run_sweep(const SweepArgs& args) {
    UnitCellMaterial cell = load_cell(args.cell_path);
    DomainGrid grid = DomainGrid::unit_cube(args.grid_n);
    Vec3 h_a = to_vec3(args.h_a, "--ha");
    fs::create_directories(args.out_dir);

    SweepReport report;
    if (args.workflow == "rl") {
        report = riemann_lebesgue_check(
            cell, [](const Phase& p) { return p.a_ex; }, grid,
            [](const Vec3& x) { return std::sin(0.5 * kPi * x.x) * (1.0 + 0.2 * x.y); },
            args.epsilons);
    } else if (args.workflow == "terms") {
        HomogenizedModel model = homogenize(cell, args.tol).model;
        report = continuous_convergence_sweep(cell, model, canned_smooth_field(grid), h_a,
                                              args.mu0, args.epsilons);
    } else if (args.workflow == "gamma") {
        CorrectorSet set = solve_exchange_correctors(cell, args.tol);
        GammaCheckOptions opts;
        opts.tol = args.tol;
        report = gamma_exchange_check(cell, set, canned_smooth_field(grid), args.epsilons, opts);
    } else if (args.workflow == "minima") {
        MinimaSweepOptions opts;
        opts.steps = args.steps;
        opts.step_size = args.step_size;
        opts.tol = args.tol;
        opts.seed = args.seed;
        report = minima_convergence(cell, grid, h_a, args.mu0, args.epsilons, opts);
    } else {
        throw std::invalid_argument("unknown sweep workflow: " + args.workflow);
    }

    fs::path csv_path = fs::path(args.out_dir) / (args.workflow + "_sweep.csv");
    {
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
        write_sweep_csv(report, csv);
    }
    fs::path verdict_path = fs::path(args.out_dir) / (args.workflow + "_verdict.json");
    write_json_file(sweep_report_to_json(report), verdict_path);

    ojson config{{"workflow", args.workflow}, {"cell", args.cell_path},
                 {"n", args.grid_n},          {"eps", args.epsilons},
                 {"ha", args.h_a},            {"mu0", args.mu0},
                 {"tol", args.tol},           {"seed", args.seed},
                 {"threads", args.threads},   {"out_dir", args.out_dir}};
    write_manifest(fs::path(args.out_dir) / (args.workflow + ".manifest.json"), "sweep", config,
                   ojson{{"pass", report.pass}, {"note", report.note}});
    std::cout << (report.pass ? "PASS " : "FAIL ") << args.workflow << ": " << report.note
              << "\n";
    return report.pass ? ExitCode::ok : ExitCode::validation;
}

// ---------------------------------------------------------------------------
// verify: appendix + tangential + tensor invariants
// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string cell_path;
    std::string out_dir;
    int resolution = 0;
    int appendix_n = 16;
    std::vector<int> tiles{1, 2, 4};
    int pairs = 5;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    int threads = 1;
};

int run_verify(const VerifyArgs& args) {
    UnitCellMaterial cell = load_cell_at(args.cell_path, args.resolution);
    fs::create_directories(args.out_dir);
    std::mt19937_64 rng(args.seed);
    bool all_pass = true;
    ojson v;

    // tensor invariants
    {
        HomogenizationResult result = homogenize(cell, args.tol);
        const HomogenizedModel& model = result.model;
        CellAverages avg = cell_averages(cell);
        auto eig = sym_eigenvalues(model.A_hom);
        double slack = 10.0 * args.tol * avg.mean_a;

        bool symmetric = max_asymmetry(model.A_hom) <= 1e-10 * frobenius_norm(model.A_hom);
        bool voigt_reuss = eig[0] >= avg.harm_a - slack && eig[2] <= avg.mean_a + slack;

        bool minimal = true;
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int j = 0; j < 3; ++j) {
            ScalarCellField zero(cell.resolution);
            minimal = minimal && model.A_hom(j, j) <=
                                     corrector_trial_energy(cell, axis_unit(j), zero) + slack;
            for (int t = 0; t < 5; ++t) {
                ScalarCellField psi(cell.resolution);
                for (double& x : psi.values) x = dist(rng);
                psi.subtract_mean();
                minimal = minimal && model.A_hom(j, j) <=
                                         corrector_trial_energy(cell, axis_unit(j), psi) + slack;
            }
        }

        auto beig = sym_eigenvalues(model.B_demag);
        double btrace = model.B_demag(0, 0) + model.B_demag(1, 1) + model.B_demag(2, 2);
        bool b_psd = beig[0] >= -1e-10 * std::max(1.0, btrace);
        CellAverages a = cell_averages(cell);
        bool b_zero_ok = true;
        if (a.mean_Ms * a.mean_Ms == a.mean_Ms_sq)  // constant M_s
            b_zero_ok = frobenius_norm(model.B_demag) <= 1e-8;

        v["tensors"] = {{"A_hom", mat3_to_json(model.A_hom)},
                        {"B_demag", mat3_to_json(model.B_demag)},
                        {"eigenvalues_A", {eig[0], eig[1], eig[2]}},
                        {"harm_a", avg.harm_a},
                        {"mean_a", avg.mean_a},
                        {"symmetric", symmetric},
                        {"voigt_reuss", voigt_reuss},
                        {"minimality", minimal},
                        {"B_psd", b_psd},
                        {"B_vanishes_for_constant_Ms", b_zero_ok}};
        all_pass = all_pass && symmetric && voigt_reuss && minimal && b_psd && b_zero_ok;
    }

    // appendix: Dirichlet ladder against the periodic value
    {
        UnitCellMaterial appendix_cell = cell.resolution == args.appendix_n
                                             ? cell
                                             : cell_at_resolution(cell, args.appendix_n);
        Mat3 a_hom =
            assemble_A_hom(appendix_cell, solve_exchange_correctors(appendix_cell, args.tol));
        Mat3 xi;
        xi(0, 0) = 1.0;
        double reference = g_hom_density(a_hom, xi);
        double slack = 10.0 * args.tol;
        std::vector<double> values;
        for (int t : args.tiles)
            values.push_back(dirichlet_cell_value(appendix_cell, xi, t, args.tol).value);
        bool monotone = true;
        for (std::size_t i = 1; i < values.size(); ++i)
            monotone = monotone && values[i] <= values[i - 1] + slack;
        bool bounded = true;
        for (double value : values) bounded = bounded && value >= reference - slack;
        v["appendix"] = {{"tiles", args.tiles},
                         {"dirichlet_values", values},
                         {"periodic_value", reference},
                         {"non_increasing", monotone},
                         {"bounded_below", bounded}};
        all_pass = all_pass && monotone && bounded;
    }

    // tangential homogenization witness
    {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> defects;
        bool ok = true;
        for (int p = 0; p < args.pairs; ++p) {
            Vec3 s;
            do {
                s = {gauss(rng), gauss(rng), gauss(rng)};
            } while (norm(s) < 1e-3);
            s = normalized(s);
            Mat3 xi;
            for (int i = 0; i < 3; ++i) {
                Vec3 col{gauss(rng), gauss(rng), gauss(rng)};
                col -= s * dot(col, s);  // columns orthogonal to s
                for (int r = 0; r < 3; ++r) xi(r, i) = col[r];
            }
            TangentialCheck check = tangential_corrector_check(cell, s, xi, args.tol);
            defects.push_back(check.defect);
            ok = ok && check.defect <= 10.0 * args.tol;
        }
        v["tangential"] = {{"pairs", args.pairs}, {"defects", defects}, {"pass", ok}};
        all_pass = all_pass && ok;
    }

    v["pass"] = all_pass;
    fs::path verdict_path = fs::path(args.out_dir) / "verify_verdict.json";
    write_json_file(v, verdict_path);
    ojson config{{"cell", args.cell_path}, {"n", cell.resolution},
                 {"appendix_n", args.appendix_n}, {"tiles", args.tiles},
                 {"pairs", args.pairs},      {"tol", args.tol},
                 {"seed", args.seed},        {"threads", args.threads},
                 {"out_dir", args.out_dir}};
    write_manifest(fs::path(args.out_dir) / "verify.manifest.json", "verify", config,
                   ojson{{"pass", all_pass}});
    std::cout << (all_pass ? "PASS" : "FAIL") << " verify (details in " << verdict_path.string()
              << ")\n";
    return all_pass ? ExitCode::ok : ExitCode::validation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homogenization of periodic composite ferromagnets: cell-problem solvers, "
                 "effective tensors, Gibbs-Landau energies and convergence sweeps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // Default thread budget from the environment; execution stays sequential
    // with a fixed reduction order, so results are identical at any setting.
    int default_threads = 1;
    if (const char* env = std::getenv("MAGNHOM_THREADS"))
        default_threads = std::max(1, std::atoi(env));

    ValidateArgs validate_args;
    auto* cmd_validate = app.add_subcommand("validate", "check a cell file for admissibility");
    cmd_validate->add_option("--cell", validate_args.cell_path, "cell-spec file")->required();
    cmd_validate->add_option("--out", validate_args.out_path, "write the report as JSON");

    HomogenizeArgs hom_args;
    hom_args.threads = default_threads;
    auto* cmd_hom = app.add_subcommand("homogenize",
                                       "solve the cell problems and write the homogenized model");
    cmd_hom->add_option("--cell", hom_args.cell_path, "cell-spec file")->required();
    cmd_hom->add_option("--n", hom_args.resolution, "resample the cell to N^3 voxels");
    cmd_hom->add_option("--tol", hom_args.tol, "solver tolerance")->check(CLI::PositiveNumber);
    cmd_hom->add_option("--out", hom_args.out_path, "model output path")->required();
    cmd_hom->add_option("--threads", hom_args.threads, "thread budget (runs sequentially)");

    EnergyArgs energy_args;
    energy_args.threads = default_threads;
    auto* cmd_energy = app.add_subcommand("energy", "evaluate G_eps or G_hom on a field file");
    cmd_energy->add_option("--cell", energy_args.cell_path, "cell-spec file");
    cmd_energy->add_option("--model", energy_args.model_path, "homogenized model JSON");
    cmd_energy->add_option("--field", energy_args.field_path, "magnetization field file")
        ->required();
    cmd_energy->add_option("--mode", energy_args.mode, "fine | hom")
        ->check(CLI::IsMember({"fine", "hom"}));
    cmd_energy->add_option("--eps", energy_args.epsilon, "period for fine mode");
    cmd_energy->add_option("--ha", energy_args.h_a, "applied field hx,hy,hz")->delimiter(',');
    cmd_energy->add_option("--mu0", energy_args.mu0, "permeability constant");
    cmd_energy->add_option("--tol", energy_args.tol, "solver tolerance when homogenizing");
    cmd_energy->add_option("--out", energy_args.out_path, "breakdown output path")->required();
    cmd_energy->add_option("--threads", energy_args.threads, "thread budget (runs sequentially)");

    MinimizeArgs min_args;
    min_args.energy.threads = default_threads;
    auto* cmd_min = app.add_subcommand("minimize", "projected gradient descent");
    cmd_min->add_option("--cell", min_args.energy.cell_path, "cell-spec file");
    cmd_min->add_option("--model", min_args.energy.model_path, "homogenized model JSON");
    cmd_min->add_option("--field", min_args.energy.field_path, "starting field file");
    cmd_min->add_option("--mode", min_args.energy.mode, "fine | hom")
        ->check(CLI::IsMember({"fine", "hom"}));
    cmd_min->add_option("--eps", min_args.energy.epsilon, "period for fine mode");
    cmd_min->add_option("--ha", min_args.energy.h_a, "applied field hx,hy,hz")->delimiter(',');
    cmd_min->add_option("--mu0", min_args.energy.mu0, "permeability constant");
    cmd_min->add_option("--tol", min_args.energy.tol, "solver tolerance when homogenizing");
    cmd_min->add_option("--grid", min_args.grid_n, "cube grid size when no start field is given");
    cmd_min->add_option("--extent", min_args.extent, "domain extent ex,ey,ez")->delimiter(',');
    cmd_min->add_option("--start-uniform", min_args.start_uniform,
                        "uniform starting direction x,y,z")
        ->delimiter(',');
    cmd_min->add_option("--seed", min_args.seed, "seed for the random start");
    cmd_min->add_option("--steps", min_args.steps, "iteration budget");
    cmd_min->add_option("--step-size", min_args.step_size, "initial step size");
    cmd_min->add_flag("--binary", min_args.binary_field, "write the field in binary");
    cmd_min->add_option("--out-field", min_args.out_field, "final state output path")->required();
    cmd_min->add_option("--trace", min_args.trace_path, "energy trace CSV path");
    cmd_min->add_option("--threads", min_args.energy.threads,
                        "thread budget (runs sequentially)");

    SweepArgs sweep_args;
    sweep_args.threads = default_threads;
    auto* cmd_sweep = app.add_subcommand("sweep", "epsilon-ladder convergence workflows");
    cmd_sweep->add_option("--workflow", sweep_args.workflow, "rl | terms | gamma | minima")
        ->required()
        ->check(CLI::IsMember({"rl", "terms", "gamma", "minima"}));
    cmd_sweep->add_option("--cell", sweep_args.cell_path, "cell-spec file")->required();
    cmd_sweep->add_option("--n", sweep_args.grid_n, "fine cube grid size");
    cmd_sweep->add_option("--eps", sweep_args.epsilons, "epsilon ladder, decreasing")
        ->delimiter(',');
    cmd_sweep->add_option("--ha", sweep_args.h_a, "applied field hx,hy,hz")->delimiter(',');
    cmd_sweep->add_option("--mu0", sweep_args.mu0, "permeability constant");
    cmd_sweep->add_option("--tol", sweep_args.tol, "solver tolerance");
    cmd_sweep->add_option("--seed", sweep_args.seed, "seed for randomized workflows");
    cmd_sweep->add_option("--steps", sweep_args.steps, "minimizer steps (minima workflow)");
    cmd_sweep->add_option("--step-size", sweep_args.step_size,
                          "minimizer step size (minima workflow)");
    cmd_sweep->add_option("--out-dir", sweep_args.out_dir, "output directory")->required();
    cmd_sweep->add_option("--threads", sweep_args.threads, "thread budget (runs sequentially)");

    VerifyArgs verify_args;
    verify_args.threads = default_threads;
    auto* cmd_verify =
        app.add_subcommand("verify", "appendix, tangential and tensor invariant suites");
    cmd_verify->add_option("--cell", verify_args.cell_path, "cell-spec file")->required();
    cmd_verify->add_option("--n", verify_args.resolution, "resample the cell to N^3 voxels");
    cmd_verify->add_option("--appendix-n", verify_args.appendix_n,
                           "cell resolution for the Dirichlet ladder");
    cmd_verify->add_option("--t", verify_args.tiles, "tile ladder for Q_t")->delimiter(',');
    cmd_verify->add_option("--pairs", verify_args.pairs, "random (s, xi) pairs");
    cmd_verify->add_option("--tol", verify_args.tol, "solver tolerance");
    cmd_verify->add_option("--seed", verify_args.seed, "seed for randomized checks");
    cmd_verify->add_option("--out-dir", verify_args.out_dir, "output directory")->required();
    cmd_verify->add_option("--threads", verify_args.threads, "thread budget (runs sequentially)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the usage message
        return code == 0 ? ExitCode::ok : ExitCode::usage;
    }

    try {
        if (cmd_validate->parsed()) return run_validate(validate_args);
        if (cmd_hom->parsed()) return run_homogenize(hom_args);
        if (cmd_energy->parsed()) return run_energy(energy_args);
        if (cmd_min->parsed()) return run_minimize(min_args);
        if (cmd_sweep->parsed()) return run_sweep(sweep_args);
        if (cmd_verify->parsed()) return run_verify(verify_args);
    } catch (const CellSpecParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return ExitCode::io;
    } catch (const CellSpecValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return ExitCode::validation;
    } catch (const SolverNonConvergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return ExitCode::nonconvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return ExitCode::usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::io;
    }
    return ExitCode::usage;
}
