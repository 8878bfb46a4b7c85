#include <fstream>
#include <sstream>

#include "aniso/experiment.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace aniso;

namespace {

std::string minimal_cfg(const std::string& kind, const std::string& out, const std::string& extra = "") {
    return "[experiment]\nkind = " + kind + "\nout = " + out +
           "\nmaster_seed = 7\n[model]\nfamily = linear\n[data]\nheight = 6\nwidth = 6\n"
           "n_train = 40\nn_test = 40\n" + extra;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("config round-trips through its canonical form") {
        auto cfg = ExperimentConfig::parse_text(minimal_cfg("nads", "x"));
        auto again = ExperimentConfig::parse_text(cfg.serialize());
        CHECK(cfg.digest() == again.digest());
        CHECK(cfg.serialize() == again.serialize());
    }

    TEST_CASE("unknown keys and malformed values are rejected") {
        CHECK_THROWS_AS(ExperimentConfig::parse_text(minimal_cfg("nads", "x", "[data]\nwibble = 3\n")),
                        ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse_text(minimal_cfg("nads", "x", "[data]\nheight = tall\n")),
                        ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse_text(minimal_cfg("warp-speed", "x")), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse_text("no equals sign here\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse_text(minimal_cfg("nads", "x", "[experiment]\nseeds = 0\n")),
                        ConfigError);
    }

    TEST_CASE("paper scale switches to 32x32 with 10k samples") {
        auto cfg = ExperimentConfig::parse_text(minimal_cfg("nads", "x", "[experiment]\npaper_scale = true\n"));
        CHECK(cfg.height == 32);
        CHECK(cfg.width == 32);
        CHECK(cfg.n_train == 10000);
        CHECK(cfg.n_test == 10000);
    }

    TEST_CASE("training overrides stack on the preset") {
        auto cfg = ExperimentConfig::parse_text(
            minimal_cfg("nads", "x", "[train]\npreset = s3-resnet\nepochs = 3\nlr_max = 0.05\n"));
        auto tc = cfg.train_config(9);
        CHECK(tc.epochs == 3);
        CHECK(tc.lr_max == doctest::Approx(0.05));
        CHECK(tc.weight_decay == doctest::Approx(1e-5));  // inherited from the preset
        CHECK(tc.shuffle_seed == 9);
    }

    TEST_CASE("nads runner writes a manifest covering every output") {
        testutil::TempDir tmp;
        auto cfg = ExperimentConfig::parse_text(
            minimal_cfg("nads", tmp.file("run"), "[nads]\nn_inits = 8\nn_inputs_per_init = 2\n"));
        auto files = run_experiment(cfg);
        REQUIRE_FALSE(files.empty());
        CHECK(files.back().find("manifest.txt") != std::string::npos);
        const std::string manifest = slurp(files.back());
        for (const auto& f : files) {
            if (f.find("manifest.txt") != std::string::npos) continue;
            CHECK(manifest.find(f) != std::string::npos);
        }
        // digests in the manifest match the files on disk
        std::istringstream is(manifest);
        std::string line;
        std::string last_path;
        while (std::getline(is, line)) {
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(0, eq), val = line.substr(eq + 3);
            if (key.find(".path") != std::string::npos) last_path = val;
            if (key.find(".digest") != std::string::npos) {
                std::ostringstream want;
                want << std::hex << std::setw(16) << std::setfill('0') << file_digest(last_path);
                CHECK(val == want.str());
            }
        }
    }

    TEST_CASE("identical configs give identical artifact digests") {
        testutil::TempDir tmp;
        auto run_once = [&](const std::string& out) {
            auto cfg = ExperimentConfig::parse_text(
                minimal_cfg("nads", out, "[nads]\nn_inits = 8\nn_inputs_per_init = 2\n"));
            run_experiment(cfg);
            return file_digest(out + "/basis.anisonad");
        };
        CHECK(run_once(tmp.file("a")) == run_once(tmp.file("b")));
    }

    TEST_CASE("grid runner emits per-seed and mean rows, and basis mismatches fail") {
        testutil::TempDir tmp;
        auto nads_cfg = ExperimentConfig::parse_text(
            minimal_cfg("nads", tmp.file("nads"), "[nads]\nn_inits = 8\nn_inputs_per_init = 2\n"));
        run_experiment(nads_cfg);
        const std::string basis = tmp.file("nads") + "/basis.anisonad";

        auto grid_cfg = ExperimentConfig::parse_text(minimal_cfg(
            "train-linear-linear", tmp.file("grid"),
            "[experiment]\nseeds = 2\n[nads]\nbasis = " + basis +
                "\nidx1 = 1\nidx2 = 2\n[train]\npreset = s3-mlp-lenet\nepochs = 2\n"));
        run_experiment(grid_cfg);
        const std::string csv = slurp(tmp.file("grid") + "/ablation.csv");
        CHECK(csv.find("run_id,nad_idx_1,nad_idx_2,seed,acc_both,acc_b1,acc_b2,status") == 0);
        CHECK(csv.find("i1-j2-s0") != std::string::npos);
        CHECK(csv.find("i1-j2-s1") != std::string::npos);
        CHECK(csv.find("i1-j2-mean") != std::string::npos);

        // a basis estimated for a different model spec is rejected
        auto bad = grid_cfg;
        bad.family = "mlp";
        CHECK_THROWS_AS(run_experiment(bad), ConfigError);
        auto bad2 = grid_cfg;
        bad2.idx1 = {999};
        CHECK_THROWS_AS(run_experiment(bad2), ConfigError);
    }

    TEST_CASE("cross-section runner records tilt and normals") {
        testutil::TempDir tmp;
        auto nads_cfg = ExperimentConfig::parse_text(
            minimal_cfg("nads", tmp.file("nads"), "[nads]\nn_inits = 8\nn_inputs_per_init = 2\n"));
        run_experiment(nads_cfg);
        auto cs_cfg = ExperimentConfig::parse_text(minimal_cfg(
            "cross-section", tmp.file("cs"),
            "[experiment]\nseeds = 1\n[nads]\nbasis = " + tmp.file("nads") +
                "/basis.anisonad\nidx1 = 1\nidx2 = 2\n[train]\npreset = s3-mlp-lenet\nepochs = 2\n"
                "[cross_section]\nresolution = 21\n"));
        run_experiment(cs_cfg);
        const std::string summary = slurp(tmp.file("cs") + "/tilt_summary.csv");
        CHECK(summary.find("run_id,nad_idx_1,nad_idx_2,seed,tilt_deg,n1,n2,n1_gt_n2") == 0);
        CHECK(std::filesystem::exists(tmp.file("cs") + "/i1-j2-s0.sign.pgm"));
    }

    TEST_CASE("report summarizes a finished run") {
        testutil::TempDir tmp;
        auto cfg = ExperimentConfig::parse_text(
            minimal_cfg("nads", tmp.file("run"), "[nads]\nn_inits = 8\nn_inputs_per_init = 2\n"));
        run_experiment(cfg);
        const std::string report = run_report(tmp.file("run"));
        CHECK(report.find("config_digest") != std::string::npos);
        CHECK_THROWS(run_report(tmp.file("nonexistent")));
    }
}
