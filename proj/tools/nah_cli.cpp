// Command-line front end: synth, reconstruct, eval, trace, sweep.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nah/nah.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kSolver = 4 };

std::vector<double> parse_values(const std::string& s) {
    return nah::detail::parse_list(s, "--values");
}

nah::ExperimentConfig load(const std::string& path, const std::optional<std::size_t>& nv) {
    nah::ExperimentConfig cfg = nah::load_experiment_config(path);
    if (nv) {
        nah::apply_sweep_value(cfg, "n_virtual", static_cast<double>(*nv));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field acoustic holography: C-ESM and PINN-SFD reconstruction"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string in;
    std::string method;
    std::optional<std::size_t> nv;

    auto* synth = app.add_subcommand("synth", "write ground truth, clean and noisy hologram fields");
    synth->add_option("-c,--config", config, "experiment INI file")->required()->check(CLI::ExistingFile);
    synth->add_option("-o,--out", out, "output directory (default: experiment.output_dir)");

    auto* recon = app.add_subcommand("reconstruct", "run one method on synthesized data");
    recon->add_option("-c,--config", config, "experiment INI file")->required()->check(CLI::ExistingFile);
    recon->add_option("-m,--method", method, "cesm | pinnsfd_direct | pinnsfd_network")->required();
    recon->add_option("-i,--in", in, "directory holding synth outputs (default: experiment.output_dir)");
    recon->add_option("-o,--out", out, "report directory (default: input directory)");
    recon->add_option("--nv", nv, "use only the first N virtual planes");

    std::string truth;
    std::string estimate;
    std::optional<std::string> mask;
    auto* eval = app.add_subcommand("eval", "NMSE and NCC between two field files");
    eval->add_option("-t,--truth", truth, "reference field file")->required();
    eval->add_option("-e,--estimate", estimate, "estimated field file")->required();
    eval->add_option("--mask", mask, "mask file restricting the comparison");
    eval->add_option("-o,--out", out, "summary CSV")->required();

    std::string report;
    auto* trace = app.add_subcommand("trace", "per-epoch loss and NMSE CSV from a report");
    trace->add_option("-r,--report", report, "PINN-SFD report JSON")->required();
    trace->add_option("-o,--out", out, "trace CSV")->required();

    std::string key;
    std::string values;
    std::size_t jobs = 2;
    auto* sweep = app.add_subcommand("sweep", "repeat synth + reconstruct over parameter values");
    sweep->add_option("-c,--config", config, "experiment INI file")->required()->check(CLI::ExistingFile);
    sweep->add_option("-k,--key", key, "lambda | snr_db | seed | alpha | n_virtual")->required();
    sweep->add_option("-v,--values", values, "comma-separated values")->required();
    sweep->add_option("-o,--out", out, "sweep directory (default: experiment.output_dir)");
    sweep->add_option("-j,--jobs", jobs, "concurrent runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto cfg = load(config, std::nullopt);
            const auto dir = out.empty() ? cfg.output_dir : out;
            const auto s = nah::cmd_synth(cfg, dir);
            std::cout << "wrote " << dir << " (" << nah::describe(s.scene.source) << ", "
                      << s.scene.omega / (2.0 * nah::kPi) << " Hz, config " << nah::config_hash(cfg) << ")\n";
        } else if (*recon) {
            const auto cfg = load(config, nv);
            const auto in_dir = in.empty() ? cfg.output_dir : in;
            const auto out_dir = out.empty() ? in_dir : out;
            const auto run = nah::cmd_reconstruct(cfg, nah::parse_method(method), in_dir, out_dir);
            std::cout << run.tag << ": hologram NMSE " << nah::fixed2(run.nmse_p_H_db) << " dB";
            if (run.sweep) {
                std::cout << ", lambda " << run.sweep->lambda;
            }
            if (run.report) {
                std::cout << ", " << run.report->epochs << " epochs (" << nah::to_string(run.report->stop_reason)
                          << ")";
            }
            if (run.nmse_v_S_db) {
                std::cout << ", source NMSE " << nah::fixed2(*run.nmse_v_S_db) << " dB, NCC "
                          << nah::fixed2(100.0 * *run.ncc_v_S) << "%";
            }
            std::cout << "\n";
        } else if (*eval) {
            std::optional<nah::fs::path> m;
            if (mask) {
                m = *mask;
            }
            const auto r = nah::cmd_eval(truth, estimate, m, out);
            std::cout << "points " << r.points << ", NMSE " << nah::fixed2(r.nmse_db) << " dB, NCC "
                      << (r.ncc ? nah::fixed2(100.0 * *r.ncc) + "%" : "undefined (zero estimate)") << "\n";
        } else if (*trace) {
            const auto r = nah::cmd_trace(report, out);
            std::cout << r.rows << " epochs written to " << out << "\n";
            std::cout << "rebound: " << (r.rebound ? "yes" : "no") << "\n";
        } else if (*sweep) {
            const auto cfg = load(config, std::nullopt);
            const auto dir = out.empty() ? cfg.output_dir : out;
            const auto rows = nah::cmd_sweep(cfg, key, parse_values(values), dir, jobs);
            std::cout << rows.size() << " runs, summary in " << (nah::fs::path(dir) / "summary.csv").string() << "\n";
        }
    } catch (const nah::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const nah::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const nah::SolverError& e) {
        std::cerr << "solver error (" << (method.empty() ? "run" : method) << "): " << e.what() << "\n";
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOk;
}
