#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "tumorcast/metrics.hpp"
#include "tumorcast/volume.hpp"

using namespace tumorcast;
namespace fs = std::filesystem;

namespace {

const char* cli = TUMORCAST_CLI_PATH;

int run(const std::string& args) {
    std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "tumorcast_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const char* sub) const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("unknown flags exit with usage code 2") {
    CHECK(run("--definitely-not-a-flag") == 2);
    CHECK(run("synth --definitely-not-a-flag --out x") == 2);
    CHECK(run("no-such-subcommand") == 2);
}

TEST_CASE("missing inputs fail with a nonzero machine-readable error") {
    TempDir tmp;
    CHECK(run("predict --model linear --case " + (tmp / "nope") + " --out " + (tmp / "out")) == 1);
    CHECK(run("loocv --cohort " + (tmp / "empty") + " --out " + (tmp / "out")) == 1);
}

TEST_CASE("cli pipeline: synth, preprocess, flow, train, personalize, predict, evaluate") {
    TempDir tmp;
    // tiny configuration so the learned path stays fast
    nlohmann::json cfg{
        {"arch", {{"conv1", 2}, {"conv2", 3}, {"conv3", 3}, {"conv4", 4}, {"fc", 8}, {"fuse", 4}}},
        {"patch", 9},
        {"sample_halfspan", {6, 6, 4}},
        {"zone_margin", {2, 2, 1}},
        {"invasion_epochs", 2},
        {"other_epochs", 2},
    };
    {
        std::ofstream f(tmp / "cfg.json");
        f << cfg.dump();
    }
    const std::string config = " --config " + (tmp / "cfg.json");

    REQUIRE(run("synth --n 2 --mix 1,1,0 --seed 9 --out " + (tmp / "cohort")) == 0);
    REQUIRE(fs::exists(tmp.path / "cohort/phantom01/case.json"));
    REQUIRE(fs::exists(tmp.path / "cohort/cohort.provenance.json"));

    SUBCASE("synth is reproducible byte for byte") {
        REQUIRE(run("synth --n 2 --mix 1,1,0 --seed 9 --out " + (tmp / "cohort2")) == 0);
        CHECK(slurp(tmp.path / "cohort/phantom01/t1_suv.raw") ==
              slurp(tmp.path / "cohort2/phantom01/t1_suv.raw"));
        CHECK(slurp(tmp.path / "cohort/phantom01/case.json") ==
              slurp(tmp.path / "cohort2/phantom01/case.json"));
    }

    SUBCASE("preprocess emits the three invasion channels") {
        REQUIRE(run("preprocess --case " + (tmp / "cohort/phantom01") + " --tp 2 --out " +
                    (tmp / "prep")) == 0);
        Volume3D suv = load_volume(tmp / "prep/suv_mapped.vol.json");
        Volume3D icvf = load_volume(tmp / "prep/icvf.vol.json");
        Volume3D mask = load_volume(tmp / "prep/mask.vol.json");
        CHECK(suv.same_grid(icvf));
        CHECK(suv.same_grid(mask));
        for (float v : suv.data) CHECK((v >= 0.0f && v <= 255.0f));
        for (float v : icvf.data) CHECK((v >= 0.0f && v <= 100.0f));
    }

    SUBCASE("flow writes one color image per slice plus the growth map") {
        REQUIRE(run("flow --case " + (tmp / "cohort/phantom01") + " --out " + (tmp / "flowout")) ==
                0);
        Volume3D gmap = load_volume(tmp / "flowout/growth_map.vol.json");
        int ppm = 0;
        for (const auto& ent : fs::directory_iterator(tmp.path / "flowout"))
            if (ent.path().extension() == ".ppm") ++ppm;
        CHECK(ppm == gmap.dims[2]);
        for (float v : gmap.data)
            CHECK((v == 0.0f || v == 85.0f || v == 170.0f || v == 255.0f));
    }

    SUBCASE("train, personalize, predict and evaluate chain") {
        REQUIRE(run("train --cohort " + (tmp / "cohort") + " --kind invasion --out " +
                    (tmp / "model") + config) == 0);
        REQUIRE(fs::exists(tmp.path / "model/stream0/epoch_002.ckpt.json"));

        REQUIRE(run("personalize --model " + (tmp / "model") + " --case " +
                    (tmp / "cohort/phantom01") + " --kind invasion --out " + (tmp / "pers") +
                    config) == 0);
        REQUIRE(fs::exists(tmp.path / "pers/personalized.json"));
        nlohmann::json pj;
        std::ifstream(tmp.path / "pers/personalized.json") >> pj;
        CHECK(pj.at("kind") == "invasion");
        double tau = pj.at("tau").get<double>();
        CHECK(tau >= 0.05);
        CHECK(tau <= 0.95);

        REQUIRE(run("predict --model " + (tmp / "pers") + " --case " +
                    (tmp / "cohort/phantom01") + " --out " + (tmp / "pred") + config) == 0);
        REQUIRE(fs::exists(tmp.path / "pred/pred_mask.vol.json"));
        REQUIRE(fs::exists(tmp.path / "pred/probability.vol.json"));
        Volume3D prob = load_volume(tmp / "pred/probability.vol.json");
        for (float v : prob.data) CHECK((v >= 0.0f && v <= 1.0f));

        REQUIRE(run("evaluate --pred " + (tmp / "pred/pred_mask.vol.json") + " --gt " +
                    (tmp / "cohort/phantom01/t3_mask.vol.json") + " --id phantom01" +
                    " --kind invasion --out " + (tmp / "report")) == 0);
        std::string csv = slurp(tmp.path / "report/report.csv");
        CHECK(csv.rfind("patient_id,kind,recall,precision,dice,rvd,tpv_vox,vpred_vox,vgt_vox,"
                        "tau,epochs\n", 0) == 0);
        CHECK(csv.find("phantom01,invasion,") != std::string::npos);
    }

    SUBCASE("linear prediction needs no model directory") {
        REQUIRE(run("predict --model linear --case " + (tmp / "cohort/phantom02") + " --out " +
                    (tmp / "linpred")) == 0);
        TumorMask pred{load_volume(tmp / "linpred/pred_mask.vol.json")};
        TumorMask gt{load_volume(tmp / "cohort/phantom02/t3_mask.vol.json")};
        CHECK(compute_metrics(pred, gt).dice > 0.5);
    }
}
