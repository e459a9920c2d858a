#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nonlocal/cli.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<long long> seed;
    int count = 10;
    bool vectors = false;
};

CLI::App* add_command(CLI::App& app, const char* name, const char* help, Flags& f) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", f.out, "Output directory (overrides output.dir)");
    sub->add_option("--seed", f.seed, "Random seed (overrides solver.seed)");
    return sub;
}

} // namespace

int main(int argc, char** argv) {
    using namespace nonlocal::cli;
    CLI::App app{"Galerkin solver for nonlocal Dirichlet problems on an interval"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* spectrum = add_command(app, "spectrum", "Print the lowest eigenvalues as CSV", f);
    spectrum->add_option("--count", f.count, "Number of eigenvalues")->check(CLI::PositiveNumber);
    spectrum->add_flag("--vectors", f.vectors, "Also write nodal eigenvectors");
    CLI::App* solve = add_command(app, "solve", "Classify and solve the problem", f);
    CLI::App* verify = add_command(app, "verify", "Audit every checkable hypothesis", f);
    CLI::App* probe = add_command(app, "probe-geometry", "Sample the saddle geometry of J", f);
    CLI::App* exportm = add_command(app, "export-matrices", "Write A, M and the tail weights", f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 uses exit code 0 for --help and nonzero for usage errors.
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailure;
    }

    Command cmd = Command::Spectrum;
    if (solve->parsed()) {
        cmd = Command::Solve;
    } else if (verify->parsed()) {
        cmd = Command::Verify;
    } else if (probe->parsed()) {
        cmd = Command::ProbeGeometry;
    } else if (exportm->parsed()) {
        cmd = Command::ExportMatrices;
    } else if (!spectrum->parsed()) {
        return kFailure;
    }

    RunConfig cfg;
    try {
        cfg = load_config(f.config);
    } catch (const nonlocal::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const nonlocal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kFailure;
    }
    if (f.seed) {
        if (*f.seed < 0) {
            std::cerr << "config error: --seed must be >= 0\n";
            return kFailure;
        }
        cfg.seed = static_cast<std::uint64_t>(*f.seed);
    }

    RunOptions ro;
    ro.count = f.count;
    ro.vectors = f.vectors;
    if (!f.out.empty()) {
        ro.out = f.out;
    }
    return run(cfg, cmd, ro, std::cout, std::cerr);
}
