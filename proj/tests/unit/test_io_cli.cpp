#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nah/experiment.hpp"
#include "oracles.hpp"

using namespace nah;
using nah::testing::random_cvector;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(::testing::TempDir()) / ("nah_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_experiment_config(in);
}

// Coarse plate setup that synthesizes and reconstructs in well under a second.
const char* kSmallPlate = R"(
[source_grid]
nx = 4
ny = 8
dx = 0.05
dy = 0.1
z = 0

[equivalent_grid]
nx = 4
ny = 8
dx = 0.05
dy = 0.1
z = -0.05

[hologram_grid]
nx = 4
ny = 4
dx = 0.05
dy = 0.2
z = 0.0312

[virtual_grid]
nx = 4
ny = 8
dx = 0.05
dy = 0.1
z = 0

[source]
type = plate
m = 1
n = 1

[optimizer]
max_epochs = 100

[experiment]
methods = cesm, pinnsfd_direct
)";

} // namespace

TEST(FieldFile, RoundTripIsBitExact) {
    std::mt19937_64 rng(1);
    const PlaneGrid g = build_plane_grid(3, 5, 0.1 / 3.0, 0.0125, 0.0312, -0.123456789, 1.0 / 7.0);
    ComplexField f{g, 2.0 * kPi * 1684.6577786436501, FieldKind::velocity, random_cvector(15, rng)};
    f.values[0] = Complex(5e-324, -1.7976931348623157e308);
    f.values[1] = Complex(0.1, 1.0 / 3.0);
    const fs::path dir = scratch("roundtrip");
    write_field((dir / "f.csv").string(), f, {"test", "abc", 42});
    const FieldFile back = read_field_file((dir / "f.csv").string());
    EXPECT_EQ(back.kind, FileKind::velocity);
    EXPECT_EQ(back.meta.seed, 42u);
    EXPECT_EQ(back.meta.config_hash, "abc");
    EXPECT_EQ(back.field.omega, f.omega);
    EXPECT_TRUE(back.field.grid == g);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        EXPECT_EQ(back.field.values[i], f.values[i]) << i;
    }
    EXPECT_EQ(serialize_field(back.field, FileKind::velocity, back.meta), slurp(dir / "f.csv"));
}

TEST(FieldFile, RejectsMalformedInput) {
    const PlaneGrid g = build_plane_grid(2, 1, 0.1, 0.1, 0.0, 0.0, 0.0);
    const ComplexField f{g, 100.0, FieldKind::pressure, CVector::Ones(2)};
    const std::string good = serialize_field(f, FileKind::pressure, {});
    auto reject = [](const std::string& text) {
        std::istringstream in(text);
        EXPECT_THROW(parse_field(in, "case"), IoError) << text;
    };
    reject(good.substr(0, good.rfind("1,0")));           // missing row
    reject(good + "1,0,1,1\n");                           // extra row
    {
        std::string s = good;
        s.replace(s.rfind(",1,0"), 4, ",x,0");             // bad number
        reject(s);
    }
    reject(std::string("# format_version: 9\n") + good.substr(good.find('\n') + 1));
}

TEST(MaskFile, RoundTrip) {
    const PlaneGrid g = build_plane_grid(2, 3, 0.1, 0.1, 0.0, 0.0, 0.0);
    BinaryMask m{{1, 0, 0, 1, 1, 0}};
    const fs::path dir = scratch("mask");
    write_mask((dir / "m.csv").string(), g, m);
    const auto back = read_mask((dir / "m.csv").string());
    EXPECT_EQ(back.mask.flags, m.flags);
    EXPECT_THROW(read_field((dir / "m.csv").string()), IoError);
}

TEST(NetworkFile, RoundTrip) {
    const auto net = make_network({6, 5, 3}, 11);
    const fs::path dir = scratch("net");
    write_network((dir / "n.csv").string(), net);
    const auto back = read_network((dir / "n.csv").string());
    const CVector x = CVector::Constant(6, Complex(0.3, -0.1));
    EXPECT_EQ(forward(back, x).output, forward(net, x).output);
}

TEST(Config, DefaultsAreTheReferenceLayout) {
    const auto cfg = parse("");
    EXPECT_EQ(cfg.scene.equivalent.z, -0.05);
    EXPECT_EQ(cfg.scene.hologram.z, 0.0312);
    ASSERT_EQ(cfg.scene.virtual_planes.size(), 3u);
    EXPECT_EQ(cfg.scene.virtual_planes[1].z, -0.001);
    EXPECT_EQ(cfg.scene.lambda, 1e-6);
    EXPECT_EQ(cfg.scene.alpha, 0.01);
    EXPECT_EQ(cfg.scene.optimizer.learning_rate, 0.01);
    EXPECT_EQ(cfg.scene.optimizer.lr_floor, 0.001);
    EXPECT_EQ(cfg.scene.optimizer.lr_patience, 200u);
    EXPECT_EQ(cfg.scene.optimizer.early_stop_patience, 50u);
    EXPECT_EQ(cfg.cesm_lambdas.size(), 5u);
}

TEST(Config, CanonicalTextRoundTrips) {
    auto cfg = parse(kSmallPlate);
    cfg.scene.lambda = 3.3e-7;
    const std::string text = to_ini(cfg);
    EXPECT_EQ(to_ini(parse(text)), text);
    EXPECT_EQ(config_hash(parse(text)), config_hash(cfg));
}

TEST(Config, HashIgnoresOutputDirectoryOnly) {
    auto a = parse(kSmallPlate);
    auto b = a;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.noise.seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Rejections) {
    EXPECT_THROW(parse("[scene]\nlamda = 1\n"), ConfigError);
    EXPECT_THROW(parse("[nonsense]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse("[scene]\nlambda = abc\n"), ConfigError);
    EXPECT_THROW(parse("[scene]\nlambda = -1\n").validate(), ConfigError);
    EXPECT_THROW(parse("[experiment]\nmethods = cesm, magic\n"), ConfigError);
    EXPECT_THROW(parse("[source]\ntype = monopole\n").validate(), ConfigError);
    EXPECT_THROW(load_experiment_config("/nonexistent/x.ini"), IoError);
}

TEST(Synth, DeterministicByteForByte) {
    const auto cfg = parse(kSmallPlate);
    const fs::path a = scratch("synth_a");
    const fs::path b = scratch("synth_b");
    cmd_synth(cfg, a);
    cmd_synth(cfg, b);
    for (const char* f : {SynthPaths::truth, SynthPaths::clean, SynthPaths::noisy, SynthPaths::manifest,
                          SynthPaths::config}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_NE(slurp(a / SynthPaths::truth).find(config_hash(cfg)), std::string::npos);
}

TEST(Synth, HighSnrNoiseIsNegligible) {
    auto cfg = parse(kSmallPlate);
    cfg.noise.snr_db = 300.0;
    const auto s = synthesize(cfg);
    EXPECT_LT((s.noisy_p_H.values - s.clean_p_H.values).cwiseAbs().maxCoeff(),
              1e-12 * s.clean_p_H.values.cwiseAbs().maxCoeff());
}

TEST(Synth, ManifestListsPlaneDepths) {
    const auto cfg = parse(kSmallPlate);
    const fs::path dir = scratch("manifest");
    cmd_synth(cfg, dir);
    const auto m = json::parse(slurp(dir / SynthPaths::manifest));
    EXPECT_EQ(m["z_E"].get<double>(), -0.05);
    EXPECT_EQ(m["z_H"].get<double>(), 0.0312);
    EXPECT_EQ(m["seed"].get<std::uint64_t>(), cfg.noise.seed);
    EXPECT_EQ(m["config_hash"].get<std::string>(), config_hash(cfg));
}

TEST(Reconstruct, MissingInputWritesNothing) {
    const auto cfg = parse(kSmallPlate);
    const fs::path in = scratch("recon_missing_in");
    const fs::path out = in / "out";
    EXPECT_THROW(cmd_reconstruct(cfg, Method::cesm, in, out), IoError);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Reconstruct, GridMismatchWritesNothing) {
    const auto cfg = parse(kSmallPlate);
    const fs::path dir = scratch("recon_mismatch");
    cmd_synth(cfg, dir);
    auto other = cfg;
    other.scene.hologram = centered_plane_grid(5, 5, 0.04, 0.16, 0.0312);
    EXPECT_THROW(cmd_reconstruct(other, Method::cesm, dir, dir / "out"), ConfigError);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Reconstruct, ReportsForBothMethods) {
    const auto cfg = parse(kSmallPlate);
    const fs::path dir = scratch("recon");
    cmd_synth(cfg, dir);
    const auto cesm = cmd_reconstruct(cfg, Method::cesm, dir, dir);
    const auto rep = json::parse(slurp(dir / "cesm_report.json"));
    EXPECT_EQ(rep["candidates"].size(), 5u);
    EXPECT_EQ(rep["lambda"].get<double>(), cesm.sweep->lambda);
    EXPECT_TRUE(rep["metrics"].contains("ncc_v_S"));

    const auto pinn = cmd_reconstruct(cfg, Method::pinnsfd_direct, dir, dir);
    EXPECT_EQ(pinn.tag, "pinnsfd_direct_nv1");
    const auto prep = json::parse(slurp(dir / "pinnsfd_direct_nv1_report.json"));
    EXPECT_EQ(prep["traces"]["loss"].size(), prep["epochs"].get<std::size_t>());
    EXPECT_EQ(prep["traces"]["nmse_v_S_db"].size(), prep["epochs"].get<std::size_t>());
    EXPECT_TRUE(fs::exists(dir / "pinnsfd_direct_nv1_vs.csv"));
    EXPECT_TRUE(fs::exists(dir / "pinnsfd_direct_nv1_ve.csv"));
}

TEST(Eval, IdentityAndZeroEstimate) {
    std::mt19937_64 rng(3);
    const PlaneGrid g = build_plane_grid(4, 3, 0.1, 0.1, 0.0, 0.0, 0.0);
    const ComplexField t{g, 10.0, FieldKind::velocity, random_cvector(12, rng)};
    const fs::path dir = scratch("eval");
    write_field((dir / "t.csv").string(), t);
    write_field((dir / "z.csv").string(), ComplexField{g, 10.0, FieldKind::velocity, CVector::Zero(12)});
    const auto same = cmd_eval(dir / "t.csv", dir / "t.csv", std::nullopt, dir / "same.csv");
    EXPECT_LE(same.nmse_db, -300.0);
    EXPECT_EQ(same.ncc, 1.0);
    EXPECT_NE(slurp(dir / "same.csv").find(",100.00\n"), std::string::npos);
    const auto zero = cmd_eval(dir / "t.csv", dir / "z.csv", std::nullopt, dir / "zero.csv");
    EXPECT_EQ(zero.nmse_db, 0.0);
    EXPECT_FALSE(zero.ncc);
    EXPECT_NE(slurp(dir / "zero.csv").find(",0.00,\n"), std::string::npos);
}

TEST(Eval, MaskedMatchesCompacted) {
    std::mt19937_64 rng(4);
    const PlaneGrid g = build_plane_grid(4, 4, 0.1, 0.1, 0.0, 0.0, 0.0);
    const ComplexField t{g, 10.0, FieldKind::velocity, random_cvector(16, rng)};
    const ComplexField e{g, 10.0, FieldKind::velocity, t.values + 0.5 * random_cvector(16, rng)};
    BinaryMask m{{0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0}};
    const fs::path dir = scratch("eval_mask");
    write_field((dir / "t.csv").string(), t);
    write_field((dir / "e.csv").string(), e);
    write_mask((dir / "m.csv").string(), g, m);
    const auto r = cmd_eval(dir / "t.csv", dir / "e.csv", dir / "m.csv", dir / "out.csv");
    EXPECT_EQ(r.points, m.count());
    EXPECT_EQ(r.nmse_db, nmse(compact(e.values, m), compact(t.values, m)));
    EXPECT_EQ(r.ncc, ncc(compact(e.values, m), compact(t.values, m)));
}

TEST(Trace, RowsAndEmptyNmseColumn) {
    const fs::path dir = scratch("trace");
    json rep;
    std::vector<double> loss(100);
    for (std::size_t i = 0; i < loss.size(); ++i) {
        loss[i] = 1.0 / (1.0 + static_cast<double>(i));
    }
    rep["traces"] = {{"loss", loss}, {"nmse_v_S_db", std::vector<double>{}}};
    std::ofstream(dir / "r.json") << rep.dump();
    const auto r = cmd_trace(dir / "r.json", dir / "t.csv");
    EXPECT_EQ(r.rows, 100u);
    EXPECT_FALSE(r.has_nmse);
    std::istringstream in(slurp(dir / "t.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch,loss,nmse_db");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(line.back(), ',');
        const auto first = line.find(',');
        EXPECT_EQ(parse_double(line.substr(first + 1, line.size() - first - 2), "loss"), loss[rows]);
        ++rows;
    }
    EXPECT_EQ(rows, 100u);
}

TEST(Trace, ReboundDetection) {
    // Dip, rise of 3 dB, fall again.
    std::vector<double> rebound;
    for (int i = 0; i < 30; ++i) {
        rebound.push_back(-10.0 * i / 29.0);
    }
    for (int i = 1; i <= 10; ++i) {
        rebound.push_back(-10.0 + 0.3 * i);
    }
    for (int i = 1; i <= 20; ++i) {
        rebound.push_back(-7.0 - 0.5 * i);
    }
    EXPECT_TRUE(detect_rebound(rebound));

    std::vector<double> monotone;
    for (int i = 0; i < 60; ++i) {
        monotone.push_back(-0.3 * i);
    }
    EXPECT_FALSE(detect_rebound(monotone));

    std::vector<double> wiggle = monotone;
    wiggle[30] += 0.5; // below the 1 dB threshold
    EXPECT_FALSE(detect_rebound(wiggle));

    std::vector<double> rise_only(rebound.begin(), rebound.begin() + 40);
    EXPECT_FALSE(detect_rebound(rise_only));
}

TEST(Sweep, SummaryHasOneRowPerRunAndMethod) {
    auto cfg = parse(kSmallPlate);
    cfg.methods = {Method::cesm};
    const fs::path dir = scratch("sweep");
    const auto rows = cmd_sweep(cfg, "snr_db", {20.0, 40.0}, dir, 2);
    ASSERT_EQ(rows.size(), 2u);
    std::istringstream in(slurp(dir / "summary.csv"));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
    }
    EXPECT_EQ(n, 3u);
    EXPECT_TRUE(fs::exists(dir / "run_1" / "cesm_report.json"));
    EXPECT_THROW(cmd_sweep(cfg, "colour", {1.0}, dir), ConfigError);
}
