// End-to-end checks of the command-line surface. The binary path comes from
// the PREDDF_CLI environment variable (set by the ctest registration).
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "preddf/dataset.hpp"
#include "preddf/dof.hpp"
#include "preddf/procedures.hpp"

using namespace preddf;

namespace {

std::string cli_path() {
    const char* env = std::getenv("PREDDF_CLI");
    REQUIRE_MESSAGE(env != nullptr, "PREDDF_CLI must point at the preddf binary");
    return env;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string tmp = "cli_capture.txt";
    const std::string cmd = cli_path() + " " + args + " > " + tmp + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(tmp);
    std::stringstream buf;
    buf << in.rdbuf();
    result.out = buf.str();
    std::remove(tmp.c_str());
    return result;
}

double parse_kv(const std::string& out, const std::string& key) {
    const std::string needle = key + "=";
    const auto pos = out.find(needle);
    REQUIRE_MESSAGE(pos != std::string::npos, ("missing key " + key + " in: " + out).c_str());
    return std::stod(out.substr(pos + needle.size()));
}

}  // namespace

TEST_CASE("dof command matches the library path") {
    const std::string gen = "--gen-n 30 --gen-d 15 --gen-seed 3";
    SUBCASE("ols") {
        const RunResult r = run("dof --proc ols --subset 1..10 " + gen);
        REQUIRE(r.exit_code == 0);
        CHECK(parse_kv(r.out, "df_fixed") == doctest::Approx(10.0));
        GenConfig cfg;
        cfg.n = 30;
        cfg.d = 15;
        cfg.beta_kind = PolyDecay{5.0};
        cfg.beta_norm2 = 10.0;
        cfg.sigma_eps2 = 1.0;
        cfg.seed = 3;
        const Dataset ds = generate_dataset(cfg);
        std::vector<int> subset(10);
        for (int j = 0; j < 10; ++j) subset[j] = j;
        const DofReport rep = df_random(fit(OlsSpec{subset}, ds.X), ds.Sigma);
        CHECK(parse_kv(r.out, "df_random") == doctest::Approx(rep.df_random).epsilon(1e-9));
    }
    SUBCASE("ridge agrees with the library to print precision") {
        const RunResult r = run("dof --proc ridge --lambda 1e-3 " + gen);
        REQUIRE(r.exit_code == 0);
        GenConfig cfg;
        cfg.n = 30;
        cfg.d = 15;
        cfg.beta_kind = PolyDecay{5.0};
        cfg.beta_norm2 = 10.0;
        cfg.sigma_eps2 = 1.0;
        cfg.seed = 3;
        const Dataset ds = generate_dataset(cfg);
        CHECK(parse_kv(r.out, "df_random") ==
              doctest::Approx(df_random_ridge(ds.X, ds.Sigma, 1e-3)).epsilon(1e-9));
    }
    SUBCASE("CSV input with an identity covariance") {
        GenConfig cfg;
        cfg.n = 30;
        cfg.d = 15;
        cfg.beta_kind = PolyDecay{5.0};
        cfg.beta_norm2 = 10.0;
        cfg.sigma_eps2 = 1.0;
        cfg.seed = 3;
        write_dataset_csv("cli_dof_input.csv", generate_dataset(cfg));
        const RunResult r =
            run("dof --proc ols --subset 1..10 --input cli_dof_input.csv --sigma identity");
        REQUIRE(r.exit_code == 0);
        CHECK(parse_kv(r.out, "df_fixed") == doctest::Approx(10.0));
        std::remove("cli_dof_input.csv");
    }
    SUBCASE("p = n exits 2 with a threshold message") {
        const RunResult r = run("dof --proc ols --subset 1..30 --gen-n 30 --gen-d 40 "
                                "--gen-seed 3");
        CHECK(r.exit_code == 2);
        CHECK(r.out.find("interpolation threshold") != std::string::npos);
    }
    SUBCASE("rank deficiency exits 2") {
        // duplicated columns via an explicit covariance file would be long;
        // a subset larger than d is a plain input error
        const RunResult r = run("dof --proc ols --subset 1..20 --gen-n 30 --gen-d 5 "
                                "--gen-seed 1");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("sweep command is deterministic and select stays in range") {
    const std::string gen = "--gen-n 25 --gen-d 40 --gen-beta poly:5 --gen-seed 11";
    const RunResult sel =
        run("sweep " + gen + " --order prescient --select err_hat_plus");
    REQUIRE(sel.exit_code == 0);
    const auto pos = sel.out.find("selected_p=");
    REQUIRE(pos != std::string::npos);
    const int phat = std::stoi(sel.out.substr(pos + 11));
    CHECK(phat >= 0);
    CHECK(phat <= 40);

    const RunResult a = run("sweep " + gen + " --order prescient --out cli_sweep_a.csv");
    const RunResult b = run("sweep " + gen + " --order prescient --out cli_sweep_b.csv");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    std::ifstream fa("cli_sweep_a.csv"), fb("cli_sweep_b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("p,criterion,value,defined") == 0);
    std::remove("cli_sweep_a.csv");
    std::remove("cli_sweep_b.csv");
}

TEST_CASE("experiment command lists and runs scenarios with overrides") {
    const RunResult list = run("experiment --list");
    REQUIRE(list.exit_code == 0);
    CHECK(list.out.find("double_descent_fig1") != std::string::npos);
    CHECK(list.out.find("spline_table2") != std::string::npos);
    CHECK(list.out.find("gd_q_sweep") != std::string::npos);

    const RunResult bad = run("experiment not_a_scenario");
    CHECK(bad.exit_code == 2);
    CHECK(bad.out.find("double_descent_fig1") != std::string::npos);  // valid names listed

    namespace fs = std::filesystem;
    const RunResult r =
        run("experiment gd_sq_norm_by_q --reps 3 --seed 7 --out cli_exp_out --serial");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists("cli_exp_out/gd_sq_norm_by_q/long.csv"));
    CHECK(fs::exists("cli_exp_out/gd_sq_norm_by_q/summary.csv"));
    std::ifstream meta("cli_exp_out/gd_sq_norm_by_q/meta");
    std::stringstream mb;
    mb << meta.rdbuf();
    CHECK(mb.str().find("replicates: 3") != std::string::npos);
    CHECK(mb.str().find("master_seed: 7") != std::string::npos);
    CHECK(mb.str().find("reps_override: 3") != std::string::npos);
    CHECK(mb.str().find("mode: serial") != std::string::npos);
    fs::remove_all("cli_exp_out");
}

TEST_CASE("ingest command writes the split tree") {
    {
        std::ofstream out("cli_ingest.csv");
        out << "grp,a,y\n";
        for (int i = 0; i < 24; ++i)
            out << (i % 2 ? "l" : "r") << "," << 0.1 * i + 0.05 << "," << i << "\n";
    }
    namespace fs = std::filesystem;
    const RunResult r = run("ingest cli_ingest.csv --train-size 6 --test-size 6 --strata grp "
                            "--seed 4 --out cli_ingest_out");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists("cli_ingest_out/train.csv"));
    CHECK(fs::exists("cli_ingest_out/test.csv"));
    CHECK(fs::exists("cli_ingest_out/aux.csv"));
    CHECK(fs::exists("cli_ingest_out/sigma.csv"));
    const Dataset train = read_dataset_csv("cli_ingest_out/train.csv");
    CHECK(train.n() == 6);
    fs::remove_all("cli_ingest_out");
    std::remove("cli_ingest.csv");
}

TEST_CASE("risk command prints the estimator set with truth quantities") {
    const RunResult r = run("risk --proc ols --subset 1..8 --gen-n 40 --gen-d 20 "
                            "--gen-beta poly:5 --gen-seed 9 --draws 2000");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_kv(r.out, "err_train") >= 0.0);
    CHECK(parse_kv(r.out, "loocv") > 0.0);
    CHECK(parse_kv(r.out, "err_hat_plus") >= parse_kv(r.out, "err_train"));
    CHECK(parse_kv(r.out, "err_random_true") > 0.0);
    // err_hat = loocv + sigma^2 xi / n
    CHECK(parse_kv(r.out, "err_hat") ==
          doctest::Approx(parse_kv(r.out, "loocv") + parse_kv(r.out, "xi") / 40.0)
              .epsilon(1e-6));
}

TEST_CASE("gd command reports the interpolant analysis") {
    const RunResult r = run("gd --gen-n 10 --gen-d 25 --gen-seed 5 --subset 1,2 --theta 0.8");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_kv(r.out, "interpolation_residual") < 1e-9);
    CHECK(parse_kv(r.out, "df_random") >= parse_kv(r.out, "df_random_min_norm"));
    CHECK(parse_kv(r.out, "run_vs_limit_gap") < 1e-5);
}

TEST_CASE("config file values are overridden by flags") {
    {
        std::ofstream out("cli_config.toml");
        out << "[dof]\n";
        out << "proc=\"ols\"\n";
        out << "subset=\"1..4\"\n";
        out << "gen-n=30\n";
        out << "gen-d=15\n";
        out << "gen-seed=3\n";
    }
    const RunResult from_file = run("--config cli_config.toml dof");
    REQUIRE(from_file.exit_code == 0);
    CHECK(parse_kv(from_file.out, "df_fixed") == doctest::Approx(4.0));
    const RunResult overridden = run("--config cli_config.toml dof --subset 1..6");
    REQUIRE(overridden.exit_code == 0);
    CHECK(parse_kv(overridden.out, "df_fixed") == doctest::Approx(6.0));
    std::remove("cli_config.toml");
}
