#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonlocal/config.hpp"
#include "nonlocal/nonlocal.hpp"

namespace nonlocal::cli {

using ojson = nlohmann::ordered_json;

enum class Command { Spectrum, Solve, Verify, ProbeGeometry, ExportMatrices };

enum ExitCode : int { kOk = 0, kRefused = 1, kFailure = 2, kIoFailure = 3 };

struct RunOptions {
    int count = 10;               ///< spectrum: eigenvalues to print
    bool vectors = false;         ///< spectrum: also write nodal eigenvectors
    std::optional<std::string> out;  ///< overrides output.dir
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON number, or null when not finite.
inline ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson num_list(const std::vector<double>& v) {
    ojson arr = ojson::array();
    for (double d : v) {
        arr.push_back(num(d));
    }
    return arr;
}

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_)) {
            throw IoError("cannot create output directory " + dir_.string());
        }
    }

    void write(const std::string& name, const std::string& content) const {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
    }

    void write_json(const std::string& name, const ojson& j) const { write(name, j.dump(2) + "\n"); }

private:
    std::filesystem::path dir_;
};

inline std::string matrix_csv(const Matrix& m) {
    std::string s;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        s += (j ? ",c" : "c") + std::to_string(j + 1);
    }
    s += "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) {
                s += ",";
            }
            s += fmt(m(i, j));
        }
        s += "\n";
    }
    return s;
}

/// Nodal values on all mesh nodes, boundary zeros included.
inline std::vector<double> nodal(const Mesh& mesh, const Vector& u) {
    std::vector<double> v(mesh.nodes().size(), 0.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        v[static_cast<std::size_t>(i + 1)] = u(i);
    }
    return v;
}

inline ojson classification_json(const CaseClassification& c) {
    ojson j;
    j["case"] = c.label();
    j["k"] = c.kind == CaseClassification::Kind::Gap ? ojson(c.k) : ojson(nullptr);
    j["reason"] = c.reason.empty() ? ojson(nullptr) : ojson(c.reason);
    j["alpha_inf"] = num(c.alpha_inf);
    j["alpha_sup"] = num(c.alpha_sup);
    return j;
}

inline ojson f2_json(const std::optional<GapCheck>& f2) {
    if (!f2) {
        return nullptr;
    }
    ojson j;
    j["pass"] = f2->passed;
    j["k"] = f2->k;
    j["slope_lo"] = num(f2->slope_lo);
    j["slope_hi"] = num(f2->slope_hi);
    j["lambda_k"] = num(f2->lambda_k);
    j["lambda_k1"] = num(f2->lambda_k1);
    return j;
}

inline ojson uniqueness_json(const UniquenessVerdict& v) {
    ojson j;
    j["verdict"] = v.label();
    if (v.kind == UniquenessVerdict::Kind::NotChecked) {
        return j;
    }
    j["starts"] = v.starts;
    j["converged"] = v.converged;
    j["distinct"] = static_cast<int>(v.representatives.size());
    j["max_distance_z"] = num(v.max_distance);
    j["f2_pass"] = v.f2_passed;
    j["seed"] = v.seed;
    return j;
}

inline ojson geometry_json(const GeometryProbe& g) {
    ojson j;
    j["k"] = g.k;
    j["seed"] = g.seed;
    j["samples"] = g.samples;
    j["radii"] = num_list(g.radii);
    j["head_max_ratio_z"] = num_list(g.head_max_ratio_z);
    j["head_max_ratio_l2"] = num_list(g.head_max_ratio_l2);
    j["head_max_j"] = num_list(g.head_max_j);
    j["tail_min_ratio_z"] = num_list(g.tail_min_ratio_z);
    j["tail_min_ratio_l2"] = num_list(g.tail_min_ratio_l2);
    j["tail_min_j"] = num_list(g.tail_min_j);
    j["tail_floor"] = num(g.tail_floor);
    j["separated"] = g.separated;
    return j;
}

struct Problem {
    Mesh mesh;
    AssembledOperator op;
    Spectrum spectrum;
    Nonlinearity spec;
    std::vector<double> xs;
};

inline AssembledOperator assemble_config(const RunConfig& cfg) {
    AssemblyOptions ao;
    ao.quad_order = cfg.quad_order;
    ao.assembly_tol = cfg.assembly_tol;
    return assemble(Mesh(cfg.a, cfg.b, cfg.n_elements), cfg.kernel(), ao);
}

inline Problem build_problem(const RunConfig& cfg) {
    AssembledOperator op = assemble_config(cfg);
    Spectrum sp = solve_eigenproblem(op);
    auto xs = sample_points(op.mesh(), op.quad_order());
    return Problem{op.mesh(), std::move(op), std::move(sp), cfg.nonlinearity(), std::move(xs)};
}

inline ojson refusal_json(const std::string& command, const CaseClassification& c) {
    ojson j;
    j["command"] = command;
    j["status"] = "refused";
    j["classification"] = classification_json(c);
    return j;
}

inline int run_spectrum(const RunConfig& cfg, const RunOptions& ro, const OutputDir& dir,
                        std::ostream& out) {
    const AssembledOperator op = assemble_config(cfg);
    const int m = static_cast<int>(op.size());
    if (ro.count < 1 || ro.count > m) {
        throw InvalidParameter("--count must lie in 1.." + std::to_string(m));
    }
    const Spectrum sp = solve_eigenproblem(op, ro.count);
    std::string csv = "j,lambda\n";
    for (int j = 1; j <= ro.count; ++j) {
        csv += std::to_string(j) + "," + fmt(sp.lambda(j)) + "\n";
    }
    dir.write("spectrum.csv", csv);
    out << csv;
    if (ro.vectors) {
        std::string v = "x";
        for (int j = 1; j <= ro.count; ++j) {
            v += ",e" + std::to_string(j);
        }
        v += "\n";
        std::vector<std::vector<double>> cols;
        for (int j = 1; j <= ro.count; ++j) {
            cols.push_back(nodal(op.mesh(), sp.vector(j)));
        }
        for (std::size_t i = 0; i < op.mesh().nodes().size(); ++i) {
            v += fmt(op.mesh().nodes()[i]);
            for (const auto& c : cols) {
                v += "," + fmt(c[i]);
            }
            v += "\n";
        }
        dir.write("eigenvectors.csv", v);
    }
    return kOk;
}

inline int run_export(const RunConfig& cfg, const OutputDir& dir) {
    const AssembledOperator op = assemble_config(cfg);
    dir.write("stiffness.csv", matrix_csv(op.stiffness()));
    dir.write("mass.csv", matrix_csv(op.mass()));
    std::string t = "x,kappa\n";
    for (Eigen::Index i = 0; i < op.tail().size(); ++i) {
        t += fmt(op.mesh().dof_coordinate(static_cast<int>(i))) + "," + fmt(op.tail()(i)) + "\n";
    }
    dir.write("tail.csv", t);
    return kOk;
}

inline int run_verify(const RunConfig& cfg, const OutputDir& dir) {
    ojson v;
    v["command"] = "verify";
    const Kernel k = cfg.kernel();
    const KernelAudit ka = audit_kernel(k);
    v["kernel"]["k1"] = {{"pass", ka.k1_holds}, {"integral", num(ka.k1_integral)}};
    v["kernel"]["k2"] = {{"pass", ka.k2_holds},
                         {"worst_ratio", num(ka.k2_worst_ratio)},
                         {"worst_radius", num(ka.k2_worst_radius)}};
    bool ok = ka.k1_holds && ka.k2_holds;
    if (!ok) {
        v["all_pass"] = false;
        dir.write_json("verdict.json", v);
        return kRefused;
    }

    const Problem p = build_problem(cfg);
    GrowthGrid grid;
    grid.xs = p.xs;
    const GrowthAudit ga = audit_growth(p.spec, grid);
    v["growth"] = {{"pass", ga.passed},
                   {"worst_slack", num(ga.worst_slack)},
                   {"worst_x", num(ga.worst_x)},
                   {"worst_t", num(ga.worst_t)}};
    ok = ok && ga.passed;

    const double dev = slope_declaration_deviation(p.spec, p.xs);
    v["slopes"] = {{"pass", dev <= 1e-3}, {"max_deviation", num(dev)}};

    const CaseClassification cls = classify(p.spec, p.spectrum, p.xs);
    v["classification"] = classification_json(cls);
    v["classification"]["pass"] = cls.kind != CaseClassification::Kind::Unsupported;
    ok = ok && cls.kind != CaseClassification::Kind::Unsupported;

    std::optional<GapCheck> f2;
    if (cls.kind == CaseClassification::Kind::Gap) {
        f2 = check_f2_gap(p.spec, p.spectrum, cls.k, p.xs);
    }
    v["f2"] = f2_json(f2);

    const double radius = 2.0 * std::max(std::abs(cfg.a), std::abs(cfg.b));
    const double floor = poincare_lower_bound(cfg.a, cfg.b, cfg.s, cfg.theta, radius);
    v["poincare"] = {{"pass", p.spectrum.lambda(1) >= floor},
                     {"lambda_1", num(p.spectrum.lambda(1))},
                     {"radius", num(radius)},
                     {"floor", num(floor)}};
    v["all_pass"] = ok && (!f2 || f2->passed) && p.spectrum.lambda(1) >= floor;
    dir.write_json("verdict.json", v);
    return ok ? kOk : kRefused;
}

inline GeometryProbe probe_for(const RunConfig& cfg, const Problem& p, const CaseClassification& c) {
    const int k = c.kind == CaseClassification::Kind::Gap ? c.k : 0;
    return geometry_probe(p.op, p.spectrum, p.spec, k, cfg.probe_radii, cfg.probe_samples, cfg.seed);
}

inline int run_probe(const RunConfig& cfg, const OutputDir& dir) {
    const Problem p = build_problem(cfg);
    const CaseClassification cls = classify(p.spec, p.spectrum, p.xs);
    if (cls.kind == CaseClassification::Kind::Unsupported) {
        dir.write_json("verdict.json", refusal_json("probe-geometry", cls));
        return kRefused;
    }
    ojson j;
    j["classification"] = classification_json(cls);
    j["geometry"] = geometry_json(probe_for(cfg, p, cls));
    dir.write_json("geometry.json", j);
    return kOk;
}

inline int run_solve(const RunConfig& cfg, const OutputDir& dir) {
    const Problem p = build_problem(cfg);
    const CaseClassification cls = classify(p.spec, p.spectrum, p.xs);
    const bool mode_mismatch =
        (cfg.mode == SolverMode::CaseA && cls.kind != CaseClassification::Kind::Coercive) ||
        (cfg.mode == SolverMode::CaseB && cls.kind != CaseClassification::Kind::Gap);
    if (cls.kind == CaseClassification::Kind::Unsupported || mode_mismatch) {
        ojson r = refusal_json("solve", cls);
        if (mode_mismatch && cls.kind != CaseClassification::Kind::Unsupported) {
            r["classification"]["reason"] = "solver mode does not match the classified case";
        }
        dir.write_json("verdict.json", r);
        return kRefused;
    }

    SolveOptions so;
    so.tol = cfg.tol;
    so.max_iter = cfg.max_iter;
    so.starts = cfg.starts;
    so.seed = cfg.seed;
    SolveReport rep = cls.kind == CaseClassification::Kind::Coercive
                          ? solve_case_a(p.op, p.spec, so)
                          : solve_case_b(p.op, p.spectrum, p.spec, so);
    if (cls.kind == CaseClassification::Kind::Gap && cfg.starts > 1) {
        rep.uniqueness = uniqueness_probe(p.op, p.spectrum, p.spec, cls.k, cfg.starts, cfg.seed, so);
    }
    if (cfg.probe_in_solve) {
        rep.geometry = probe_for(cfg, p, cls);
    }

    std::string csv = "x,u\n";
    const auto u = nodal(p.mesh, rep.solution);
    for (std::size_t i = 0; i < u.size(); ++i) {
        csv += fmt(p.mesh.nodes()[i]) + "," + fmt(u[i]) + "\n";
    }
    dir.write("solution.csv", csv);

    ojson r;
    r["case"] = cls.label();
    r["k"] = cls.kind == CaseClassification::Kind::Gap ? ojson(cls.k) : ojson(nullptr);
    r["j_value"] = num(rep.j_value);
    r["residual_inf"] = num(rep.residual_inf);
    r["iterations"] = rep.iterations;
    r["converged"] = rep.converged;
    r["newton_mode"] = to_string(rep.mode);
    r["f2"] = f2_json(rep.f2);
    r["uniqueness"] = uniqueness_json(rep.uniqueness);
    r["geometry"] = rep.geometry ? geometry_json(*rep.geometry) : ojson(nullptr);
    r["seed"] = cfg.seed;
    r["tolerances"] = {{"tol", cfg.tol},
                       {"max_iter", cfg.max_iter},
                       {"assembly_tol", cfg.assembly_tol},
                       {"quad_order", cfg.quad_order}};
    dir.write_json("report.json", r);
    return kOk;
}

} // namespace detail

inline const char* command_name(Command c) {
    switch (c) {
    case Command::Spectrum:
        return "spectrum";
    case Command::Solve:
        return "solve";
    case Command::Verify:
        return "verify";
    case Command::ProbeGeometry:
        return "probe-geometry";
    case Command::ExportMatrices:
        return "export-matrices";
    }
    return "unknown";
}

/// Runs one subcommand; maps failures onto the exit-code contract
/// (0 ok, 1 refused by a hypothesis gate, 2 numeric/internal/config, 3 I/O).
inline int run(const RunConfig& cfg, Command cmd, const RunOptions& ro, std::ostream& out,
               std::ostream& err) {
    try {
        const detail::OutputDir dir(ro.out.value_or(cfg.output_dir));
        switch (cmd) {
        case Command::Spectrum:
            return detail::run_spectrum(cfg, ro, dir, out);
        case Command::Solve:
            return detail::run_solve(cfg, dir);
        case Command::Verify:
            return detail::run_verify(cfg, dir);
        case Command::ProbeGeometry:
            return detail::run_probe(cfg, dir);
        case Command::ExportMatrices:
            return detail::run_export(cfg, dir);
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const HypothesisRefused& e) {
        err << "refused: " << e.what() << "\n";
        return kRefused;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

} // namespace nonlocal::cli
