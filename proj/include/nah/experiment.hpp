#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nah/config.hpp"
#include "nah/esm.hpp"
#include "nah/field_io.hpp"
#include "nah/field_synth.hpp"
#include "nah/metrics.hpp"
#include "nah/pinn_sfd.hpp"

namespace nah {

inline constexpr int kReportSchemaVersion = 1;

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Files written by `synth` inside the output directory.
struct SynthPaths {
    static constexpr const char* truth = "truth_vs.csv";
    static constexpr const char* clean = "clean_ph.csv";
    static constexpr const char* noisy = "noisy_ph.csv";
    static constexpr const char* manifest = "manifest.json";
    static constexpr const char* config = "config.ini";
};

struct SynthResult {
    SceneConfig scene; ///< with the resolved frequency
    ComplexField truth_v_S;
    ComplexField clean_p_H;
    ComplexField noisy_p_H;
};

/// Ground truth, clean and noisy hologram for an experiment.
inline SynthResult synthesize(const ExperimentConfig& cfg) {
    cfg.validate();
    SynthResult out;
    out.scene = cfg.scene;
    switch (cfg.source.kind) {
    case SourceKind::plate: {
        PlateModeSpec spec = cfg.source.plate;
        if (cfg.frequency_hz) {
            spec.frequency_hz = cfg.frequency_hz;
        }
        out.truth_v_S = plate_mode_velocity(spec, cfg.scene.source);
        out.scene.omega = out.truth_v_S.omega;
        out.clean_p_H = forward_holography(out.truth_v_S, out.scene);
        break;
    }
    case SourceKind::monopole: {
        out.scene.omega = 2.0 * kPi * *cfg.frequency_hz;
        const auto& m = cfg.source.monopole;
        out.truth_v_S = monopole_field(m.position, m.strength, out.scene.omega, cfg.scene.source, cfg.scene.constants)
                            .velocity;
        out.clean_p_H =
            monopole_field(m.position, m.strength, out.scene.omega, cfg.scene.hologram, cfg.scene.constants).pressure;
        break;
    }
    case SourceKind::file: {
        out.truth_v_S = read_field(cfg.source.path);
        if (out.truth_v_S.kind != FieldKind::velocity || !(out.truth_v_S.grid == cfg.scene.source)) {
            throw ConfigError("source file must hold a velocity field on the configured source grid");
        }
        if (cfg.frequency_hz && std::abs(2.0 * kPi * *cfg.frequency_hz - out.truth_v_S.omega) >
                                    1e-12 * out.truth_v_S.omega) {
            throw ConfigError("scene.frequency_hz disagrees with the source file");
        }
        out.scene.omega = out.truth_v_S.omega;
        out.clean_p_H = forward_holography(out.truth_v_S, out.scene);
        break;
    }
    }
    out.scene.validate();
    out.noisy_p_H = add_noise(out.clean_p_H, cfg.noise);
    return out;
}

namespace detail {

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path.string(), j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline json grid_json(const PlaneGrid& g) {
    return {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}, {"z", g.z},
            {"origin_x", g.origin_x}, {"origin_y", g.origin_y}};
}

} // namespace detail

inline json synth_manifest(const ExperimentConfig& cfg, const SynthResult& s) {
    json vz = json::array();
    for (const auto& v : s.scene.virtual_planes) {
        vz.push_back(v.z);
    }
    return {{"schema_version", kReportSchemaVersion},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.noise.seed},
            {"frequency_hz", s.scene.omega / (2.0 * kPi)},
            {"omega", s.scene.omega},
            {"snr_db", cfg.noise.snr_db},
            {"kernels", to_string(s.scene.kernels)},
            {"z_E", s.scene.equivalent.z},
            {"z_S", s.scene.source.z},
            {"z_H", s.scene.hologram.z},
            {"z_V", vz},
            {"grids",
             {{"equivalent", detail::grid_json(s.scene.equivalent)},
              {"source", detail::grid_json(s.scene.source)},
              {"hologram", detail::grid_json(s.scene.hologram)}}},
            {"files",
             {{"truth_v_S", SynthPaths::truth},
              {"clean_p_H", SynthPaths::clean},
              {"noisy_p_H", SynthPaths::noisy},
              {"config", SynthPaths::config}}}};
}

/// Writes ground truth, clean and noisy hologram fields and a manifest.
inline SynthResult cmd_synth(const ExperimentConfig& cfg, const fs::path& out_dir) {
    SynthResult s = synthesize(cfg);
    const std::string hash = config_hash(cfg);
    detail::ensure_dir(out_dir);
    write_field((out_dir / SynthPaths::truth).string(), s.truth_v_S, {"ground-truth source velocity", hash, cfg.noise.seed});
    write_field((out_dir / SynthPaths::clean).string(), s.clean_p_H, {"noise-free hologram pressure", hash, cfg.noise.seed});
    write_field((out_dir / SynthPaths::noisy).string(), s.noisy_p_H,
                {"hologram pressure with " + format_double(cfg.noise.snr_db) + " dB SNR noise", hash, cfg.noise.seed});
    detail::write_text((out_dir / SynthPaths::config).string(), to_ini(cfg));
    detail::write_json(out_dir / SynthPaths::manifest, synth_manifest(cfg, s));
    return s;
}

/// Outcome of one reconstruction method on one measurement.
struct MethodRun {
    Method method = Method::cesm;
    std::string tag;
    ComplexField v_S_hat;
    ComplexField p_H_hat;
    std::optional<ComplexField> v_E_hat;
    std::optional<LambdaSweep> sweep;
    std::optional<SolverReport> report;
    std::optional<double> nmse_v_S_db;
    std::optional<double> ncc_v_S;
    double nmse_p_H_db = 0.0; ///< against the measured hologram
};

inline std::string method_tag(Method m, const SceneConfig& scene) {
    if (m == Method::cesm) {
        return "cesm";
    }
    return std::string(to_string(m)) + "_nv" + std::to_string(scene.virtual_count());
}

/// Runs one method against a measured hologram.
inline MethodRun run_method(Method method, const SceneConfig& scene, const ComplexField& p_H,
                            const std::optional<ComplexField>& truth, const std::vector<double>& cesm_lambdas) {
    MethodRun run;
    run.method = method;
    run.tag = method_tag(method, scene);
    if (method == Method::cesm) {
        const EsmMatrices mats = build_esm_matrices(scene);
        run.sweep = select_lambda(p_H, mats, cesm_lambdas);
        run.v_S_hat = reconstruct_velocity_esm(run.sweep->best(), mats, scene.constants, scene.omega);
        run.p_H_hat = ComplexField{scene.hologram, scene.omega, FieldKind::pressure, mats.G_H * run.sweep->best().q_hat};
    } else {
        SceneConfig s = scene;
        s.optimizer.mode = method == Method::pinnsfd_direct ? ParamMode::direct : ParamMode::network;
        run.report = optimize(p_H, s, truth);
        run.v_S_hat = run.report->v_S_hat;
        run.p_H_hat = run.report->p_H_hat;
        run.v_E_hat = run.report->v_E_hat;
    }
    run.nmse_p_H_db = nmse(run.p_H_hat.values, p_H.values);
    if (truth) {
        run.nmse_v_S_db = nmse(run.v_S_hat.values, truth->values);
        run.ncc_v_S = ncc(run.v_S_hat.values, truth->values);
    }
    return run;
}

inline json run_report(const MethodRun& run, const SceneConfig& scene, const std::string& hash) {
    json j = {{"schema_version", kReportSchemaVersion},
              {"method", run.tag},
              {"config_hash", hash},
              {"seed", scene.optimizer.seed},
              {"frequency_hz", scene.omega / (2.0 * kPi)},
              {"kernels", to_string(scene.kernels)},
              {"n_virtual", scene.virtual_count()},
              {"ncc_definition", "modulus of the normalized Hermitian inner product"},
              {"metrics", {{"nmse_p_H_db", run.nmse_p_H_db}}}};
    if (run.nmse_v_S_db) {
        j["metrics"]["nmse_v_S_db"] = *run.nmse_v_S_db;
        j["metrics"]["ncc_v_S"] = *run.ncc_v_S;
    }
    if (run.sweep) {
        const auto& sw = *run.sweep;
        j["data_term"] = "sum of squared hologram residuals, not averaged over microphones";
        j["lambda"] = sw.lambda;
        json cands = json::array();
        for (std::size_t i = 0; i < sw.candidates.size(); ++i) {
            std::size_t nnz = 0;
            for (Eigen::Index k = 0; k < sw.solutions[i].q_hat.size(); ++k) {
                nnz += std::abs(sw.solutions[i].q_hat[k]) > 1e-9 ? 1 : 0;
            }
            cands.push_back({{"lambda", sw.candidates[i]},
                             {"hologram_mae", sw.hologram_mae[i]},
                             {"iterations", sw.solutions[i].iterations},
                             {"converged", sw.solutions[i].converged},
                             {"nonzeros", nnz}});
        }
        j["candidates"] = cands;
    }
    if (run.report) {
        const auto& r = *run.report;
        j["lambda"] = scene.lambda;
        j["alpha"] = scene.alpha;
        j["normalization"] = r.normalization;
        j["mode"] = to_string(r.mode);
        j["stop_reason"] = to_string(r.stop_reason);
        j["epochs"] = r.epochs;
        j["best_epoch"] = r.best_epoch;
        j["best_loss"] = r.best_loss;
        j["loss_parts"] = {{"direct_mae", r.final_parts.direct_mae},
                           {"virtual_mae", r.final_parts.virtual_mae},
                           {"reg", r.final_parts.reg}};
        j["wall_time_s"] = r.wall_time_s;
        j["traces"] = {{"loss", r.loss_trace}, {"nmse_v_S_db", r.nmse_trace}, {"lr", r.lr_trace}};
    }
    return j;
}

/// Reads `synth` outputs from `in_dir`, runs `method` and writes
/// <tag>_report.json plus reconstructed fields into `out_dir`. Nothing is
/// written unless every input loads and the solver succeeds.
inline MethodRun cmd_reconstruct(const ExperimentConfig& cfg, Method method, const fs::path& in_dir,
                                 const fs::path& out_dir) {
    cfg.validate();
    const ComplexField p_H = read_field((in_dir / SynthPaths::noisy).string());
    std::optional<ComplexField> truth;
    if (fs::exists(in_dir / SynthPaths::truth)) {
        truth = read_field((in_dir / SynthPaths::truth).string());
    }
    SceneConfig scene = cfg.scene;
    scene.omega = p_H.omega;
    if (cfg.frequency_hz && std::abs(2.0 * kPi * *cfg.frequency_hz - p_H.omega) > 1e-12 * p_H.omega) {
        throw ConfigError("scene.frequency_hz disagrees with the hologram file");
    }
    if (p_H.kind != FieldKind::pressure || !(p_H.grid == scene.hologram)) {
        throw ConfigError("hologram file does not match the configured hologram grid");
    }
    if (truth && (truth->kind != FieldKind::velocity || !(truth->grid == scene.source) || truth->omega != p_H.omega)) {
        throw ConfigError("ground-truth file does not match the configured source grid or frequency");
    }
    scene.validate();
    MethodRun run = run_method(method, scene, p_H, truth, cfg.cesm_lambdas);

    const std::string hash = config_hash(cfg);
    const std::uint64_t seed = scene.optimizer.seed;
    detail::ensure_dir(out_dir);
    write_field((out_dir / (run.tag + "_vs.csv")).string(), run.v_S_hat, {run.tag + " source velocity", hash, seed});
    write_field((out_dir / (run.tag + "_ph.csv")).string(), run.p_H_hat, {run.tag + " hologram prediction", hash, seed});
    if (run.v_E_hat) {
        write_field((out_dir / (run.tag + "_ve.csv")).string(), *run.v_E_hat,
                    {run.tag + " equivalent-source velocity", hash, seed});
    }
    detail::write_json(out_dir / (run.tag + "_report.json"), run_report(run, scene, hash));
    return run;
}

struct EvalResult {
    std::size_t points = 0;
    double nmse_db = 0.0;
    std::optional<double> ncc; ///< undefined when either field is zero on the points
};

inline std::string fixed2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

/// Compares two field files (optionally inside a mask) and writes a CSV line.
inline EvalResult cmd_eval(const fs::path& truth_path, const fs::path& estimate_path,
                           const std::optional<fs::path>& mask_path, const fs::path& out_csv) {
    const ComplexField truth = read_field(truth_path.string());
    const ComplexField est = read_field(estimate_path.string());
    if (!(truth.grid == est.grid)) {
        throw ConfigError("truth and estimate are on different grids");
    }
    std::optional<MaskFile> mask;
    if (mask_path) {
        mask = read_mask(mask_path->string());
        if (!(mask->grid == truth.grid)) {
            throw ConfigError("mask grid differs from the field grid");
        }
    }
    const BinaryMask* m = mask ? &mask->mask : nullptr;
    EvalResult r;
    r.points = m ? m->count() : truth.grid.size();
    r.nmse_db = nmse(est.values, truth.values, m);
    const CVector e = m ? compact(est.values, *m) : est.values;
    if (e.squaredNorm() > 0.0) {
        r.ncc = ncc(est.values, truth.values, m);
    }
    std::string csv = "truth,estimate,points,nmse_db,ncc_percent\n";
    csv += truth_path.filename().string() + "," + estimate_path.filename().string() + "," + std::to_string(r.points) +
           "," + fixed2(r.nmse_db) + "," + (r.ncc ? fixed2(100.0 * *r.ncc) : "") + "\n";
    if (!out_csv.parent_path().empty()) {
        detail::ensure_dir(out_csv.parent_path());
    }
    detail::write_text(out_csv.string(), csv);
    return r;
}

/// True when the trace rises at least `db` above its running minimum and
/// later falls at least `db` below the highest point of that rise.
inline bool detect_rebound(const std::vector<double>& trace, double db = 1.0) {
    double low = std::numeric_limits<double>::infinity();
    bool rising = false;
    double peak = -std::numeric_limits<double>::infinity();
    for (double x : trace) {
        if (!rising) {
            low = std::min(low, x);
            if (x >= low + db) {
                rising = true;
                peak = x;
            }
        } else {
            peak = std::max(peak, x);
            if (x <= peak - db) {
                return true;
            }
        }
    }
    return false;
}

struct TraceResult {
    std::size_t rows = 0;
    bool has_nmse = false;
    bool rebound = false;
};

/// Writes epoch,loss,nmse_db rows from a PINN-SFD report.
inline TraceResult cmd_trace(const fs::path& report_path, const fs::path& out_csv) {
    const json rep = detail::read_json(report_path);
    if (!rep.contains("traces")) {
        throw IoError("'" + report_path.string() + "' has no training traces");
    }
    const auto loss = rep["traces"]["loss"].get<std::vector<double>>();
    const auto nm = rep["traces"]["nmse_v_S_db"].get<std::vector<double>>();
    if (!nm.empty() && nm.size() != loss.size()) {
        throw IoError("'" + report_path.string() + "': trace lengths differ");
    }
    std::string csv = "epoch,loss,nmse_db\n";
    for (std::size_t e = 0; e < loss.size(); ++e) {
        csv += std::to_string(e) + "," + format_double(loss[e]) + "," + (nm.empty() ? "" : format_double(nm[e])) + "\n";
    }
    if (!out_csv.parent_path().empty()) {
        detail::ensure_dir(out_csv.parent_path());
    }
    detail::write_text(out_csv.string(), csv);
    return {loss.size(), !nm.empty(), !nm.empty() && detect_rebound(nm)};
}

/// Experiment parameters a sweep can vary.
inline void apply_sweep_value(ExperimentConfig& cfg, const std::string& key, double value) {
    if (key == "lambda") {
        cfg.scene.lambda = value;
    } else if (key == "snr_db") {
        cfg.noise.snr_db = value;
    } else if (key == "seed") {
        cfg.noise.seed = static_cast<std::uint64_t>(value);
        cfg.scene.optimizer.seed = static_cast<std::uint64_t>(value);
    } else if (key == "alpha") {
        cfg.scene.alpha = value;
    } else if (key == "n_virtual") {
        const auto n = static_cast<std::size_t>(value);
        if (value < 0 || static_cast<double>(n) != value || n > cfg.scene.virtual_planes.size()) {
            throw ConfigError("n_virtual must be an integer in 0.." + std::to_string(cfg.scene.virtual_planes.size()));
        }
        cfg.scene.virtual_planes.resize(n);
    } else {
        throw ConfigError("cannot sweep over '" + key + "' (lambda, snr_db, seed, alpha, n_virtual)");
    }
}

struct SweepRow {
    double value = 0.0;
    std::string dir;
    std::vector<MethodRun> runs;
};

/// One synth + reconstruct per value in its own run directory, `jobs` at a
/// time, followed by summary.csv in `out_dir`.
inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& base, const std::string& key,
                                       const std::vector<double>& values, const fs::path& out_dir,
                                       std::size_t jobs = 2) {
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<ExperimentConfig> cfgs;
    for (double v : values) {
        ExperimentConfig c = base;
        apply_sweep_value(c, key, v);
        c.validate();
        cfgs.push_back(std::move(c));
    }
    std::vector<SweepRow> rows(values.size());
    auto one = [&](std::size_t i) {
        const fs::path dir = out_dir / ("run_" + std::to_string(i));
        cmd_synth(cfgs[i], dir);
        rows[i].value = values[i];
        rows[i].dir = dir.filename().string();
        for (Method m : cfgs[i].methods) {
            rows[i].runs.push_back(cmd_reconstruct(cfgs[i], m, dir, dir));
        }
    };
    jobs = std::max<std::size_t>(1, jobs);
    for (std::size_t start = 0; start < values.size(); start += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(values.size(), start + jobs); ++i) {
            batch.push_back(std::async(std::launch::async, one, i));
        }
        for (auto& f : batch) {
            f.get();
        }
    }
    std::string csv = "run," + key + ",method,nmse_v_S_db,ncc_v_S_percent,nmse_p_H_db\n";
    for (const auto& row : rows) {
        for (const auto& r : row.runs) {
            csv += row.dir + "," + format_double(row.value) + "," + r.tag + "," +
                   (r.nmse_v_S_db ? fixed2(*r.nmse_v_S_db) : "") + "," +
                   (r.ncc_v_S ? fixed2(100.0 * *r.ncc_v_S) : "") + "," + fixed2(r.nmse_p_H_db) + "\n";
        }
    }
    detail::write_text((out_dir / "summary.csv").string(), csv);
    return rows;
}

} // namespace nah
