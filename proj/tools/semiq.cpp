// semiq: simulation front end for the coupled quantum/classical oscillator
// model. Subcommands select the experiment; configuration comes from a
// key = value file plus --key=value overrides.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "semiq/runner.hpp"

namespace {

constexpr const char* k_usage = R"(usage: semiq <command> [--config <path>] [--key=value ...]

commands:
  simulate    integrate one trajectory and emit the sampled time series
  limit       run a classical-limit schedule (hbar_first or i_first)
  lyapunov    estimate the maximal Lyapunov exponent (Benettin)
  poincare    collect section points on the plane A = 0, dA/dt > 0
  sweep       scan E_r and label the quasiclassical/transitional/classical regimes

options:
  --config <path>   key = value configuration file ('#' comments)
  --key=value       override any config key, e.g. --model.e=0
  --help            show this message

Artifacts: a CSV at the configured output path and a key = value manifest
alongside it (<output>.manifest). Exit codes: 0 success, 1 configuration
error, 2 numerical failure, 3 unreachable regime.
)";

int fail(const std::string& message, int code) {
    std::fprintf(stderr, "semiq: error: %s\n", message.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2 || std::strcmp(argv[1], "--help") == 0 || std::strcmp(argv[1], "-h") == 0) {
        std::fputs(k_usage, argc < 2 ? stderr : stdout);
        return argc < 2 ? 1 : 0;
    }

    const std::string command = argv[1];
    std::string config_path;
    std::vector<std::string> overrides;

    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") {
            if (i + 1 >= argc) return fail("--config requires a path", 1);
            config_path = argv[++i];
        } else if (arg.rfind("--config=", 0) == 0) {
            config_path = arg.substr(9);
        } else if (arg.rfind("--", 0) == 0 && arg.find('=') != std::string::npos) {
            overrides.push_back(arg.substr(2));
        } else {
            return fail("unrecognized argument '" + arg + "' (expected --key=value)", 1);
        }
    }

    try {
        semiq::RunConfig cfg = semiq::parse_config(config_path, overrides);

        // the subcommand is authoritative over any 'experiment' key
        if (command == "simulate") cfg.experiment = semiq::Experiment::simulate;
        else if (command == "limit") cfg.experiment = semiq::Experiment::limit;
        else if (command == "lyapunov") cfg.experiment = semiq::Experiment::lyapunov;
        else if (command == "poincare") cfg.experiment = semiq::Experiment::poincare;
        else if (command == "sweep") cfg.experiment = semiq::Experiment::sweep;
        else return fail("unknown command '" + command + "'", 1);

        const semiq::RunArtifacts artifacts = semiq::run(cfg);
        std::printf("semiq: wrote %s and %s\n", artifacts.csv_path.c_str(),
                    artifacts.manifest_path.c_str());
        return 0;
    } catch (const semiq::Error& e) {
        return fail(e.what(), static_cast<int>(e.category()));
    } catch (const std::exception& e) {
        return fail(e.what(), 2);
    }
}
