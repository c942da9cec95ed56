#pragma once

// JSON serialization of the homogenized model, validation reports and sweep
// verdicts. Field order is fixed (ordered_json) so repeated runs with the
// same inputs produce byte-identical documents.

#include <fstream>

#include <json.hpp>

#include "magnhom/cellsolve.hpp"
#include "magnhom/converge.hpp"

namespace magnhom {

using ojson = nlohmann::ordered_json;

inline ojson mat3_to_json(const Mat3& m) {
    ojson rows = ojson::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

inline Mat3 mat3_from_json(const ojson& j) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

inline ojson vec3_to_json(const Vec3& v) { return ojson::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const ojson& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline ojson phase_to_json(const Phase& p) {
    ojson j;
    j["a_ex"] = p.a_ex;
    j["M_s"] = p.M_s;
    j["anisotropy"]["variant"] = to_string(p.anisotropy.kind);
    if (p.anisotropy.kind != AnisotropyKind::None) {
        j["anisotropy"]["kappa"] = p.anisotropy.kappa;
        if (p.anisotropy.kind == AnisotropyKind::Uniaxial)
            j["anisotropy"]["axis"] = vec3_to_json(p.anisotropy.axes[0]);
        else {
            ojson axes = ojson::array();
            for (int i = 0; i < 3; ++i) axes.push_back(vec3_to_json(p.anisotropy.axes[i]));
            j["anisotropy"]["axes"] = axes;
        }
    }
    return j;
}

inline Phase phase_from_json(const ojson& j) {
    Phase p;
    p.a_ex = j.at("a_ex").get<double>();
    p.M_s = j.at("M_s").get<double>();
    std::string variant = j.at("anisotropy").at("variant").get<std::string>();
    if (variant == "uniaxial") {
        p.anisotropy = AnisotropySpec::uniaxial(j["anisotropy"].at("kappa").get<double>(),
                                                vec3_from_json(j["anisotropy"].at("axis")));
    } else if (variant == "cubic") {
        std::array<Vec3, 3> axes;
        for (int i = 0; i < 3; ++i) axes[i] = vec3_from_json(j["anisotropy"].at("axes").at(i));
        p.anisotropy = AnisotropySpec::cubic(j["anisotropy"].at("kappa").get<double>(), axes);
    }
    return p;
}

inline ojson solve_info_to_json(const SolveInfo& s) {
    return ojson{{"iterations", s.iterations},
                 {"rel_residual", s.rel_residual},
                 {"converged", s.converged}};
}

inline ojson model_to_json(const HomogenizedModel& m) {
    ojson j;
    j["format"] = "magnhom-model v1";
    j["A_hom"] = mat3_to_json(m.A_hom);
    j["B_demag"] = mat3_to_json(m.B_demag);
    j["mean_Ms"] = m.mean_Ms;
    ojson phases = ojson::array();
    for (std::size_t p = 0; p < m.phases.size(); ++p) {
        ojson entry = phase_to_json(m.phases[p]);
        entry["volume_fraction"] = m.volume_fractions[p];
        phases.push_back(entry);
    }
    j["phases"] = phases;
    if (m.uniaxial.valid) {
        j["uniaxial_averages"]["kappa_mean"] = m.uniaxial.kappa_mean;
        j["uniaxial_averages"]["kappa_uu"] = mat3_to_json(m.uniaxial.kappa_uu);
    }
    ojson diag;
    diag["resolution"] = m.diagnostics.resolution;
    diag["tol"] = m.diagnostics.tol;
    for (int i = 0; i < 3; ++i) {
        diag["exchange"].push_back(solve_info_to_json(m.diagnostics.exchange[i]));
        diag["demag"].push_back(solve_info_to_json(m.diagnostics.demag[i]));
    }
    j["diagnostics"] = diag;
    return j;
}

inline HomogenizedModel model_from_json(const ojson& j) {
    if (j.value("format", "") != "magnhom-model v1")
        throw std::runtime_error("not a magnhom model document");
    HomogenizedModel m;
    m.A_hom = mat3_from_json(j.at("A_hom"));
    m.B_demag = mat3_from_json(j.at("B_demag"));
    m.mean_Ms = j.at("mean_Ms").get<double>();
    for (const ojson& entry : j.at("phases")) {
        m.phases.push_back(phase_from_json(entry));
        m.volume_fractions.push_back(entry.at("volume_fraction").get<double>());
    }
    if (j.contains("uniaxial_averages")) {
        m.uniaxial.valid = true;
        m.uniaxial.kappa_mean = j["uniaxial_averages"].at("kappa_mean").get<double>();
        m.uniaxial.kappa_uu = mat3_from_json(j["uniaxial_averages"].at("kappa_uu"));
    }
    if (j.contains("diagnostics")) {
        m.diagnostics.resolution = j["diagnostics"].value("resolution", 0);
        m.diagnostics.tol = j["diagnostics"].value("tol", 0.0);
    }
    return m;
}

inline void save_model(const HomogenizedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
    out << model_to_json(m).dump(2) << '\n';
}

inline HomogenizedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    ojson j = ojson::parse(in);
    return model_from_json(j);
}

inline ojson validation_report_to_json(const ValidationReport& r) {
    ojson j;
    j["pass"] = r.pass;
    j["c_ex"] = r.c_ex;
    j["C_ex"] = r.C_ex;
    j["C_s"] = r.C_s;
    j["C_an"] = r.C_an;
    j["frame_defects"] = r.frame_defects;
    j["violations"] = r.violations;
    return j;
}

inline ojson sweep_report_to_json(const SweepReport& r) {
    ojson j;
    j["pass"] = r.pass;
    j["note"] = r.note;
    j["epsilons"] = r.epsilons;
    j["terms"] = r.terms;
    j["errors"] = r.errors;
    ojson refs;
    for (const auto& [key, value] : r.reference) refs[key] = value;
    j["reference"] = refs;
    return j;
}

inline ojson energy_breakdown_to_json(const EnergyBreakdown& e) {
    ojson j;
    j["provenance"] = e.provenance == Provenance::Fine ? "fine" : "homogenized";
    if (e.provenance == Provenance::Fine) j["epsilon"] = e.epsilon;
    j["exchange"] = e.exchange;
    j["anisotropy"] = e.anisotropy;
    j["magnetostatic"] = e.magnetostatic;
    j["zeeman"] = e.zeeman;
    j["total"] = e.total;
    return j;
}

}  // namespace magnhom
