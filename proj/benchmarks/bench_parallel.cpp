// Times the OpenMP kernels against the serial reference implementation and
// confirms the outputs are identical. Run manually: build/benchmarks/preddf_bench
#include <chrono>
#include <cstdio>

#include "preddf/dataset.hpp"
#include "preddf/dof.hpp"
#include "preddf/experiments.hpp"
#include "preddf/procedures.hpp"
#include "preddf/risk.hpp"

using namespace preddf;

namespace {

double seconds(const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void row(const char* name, double serial, double openmp, bool identical) {
    std::printf("%-34s %9.3f s %9.3f s   x%.2f   identical: %s\n", name, serial, openmp,
                serial / openmp, identical ? "yes" : "NO");
}

}  // namespace

int main() {
    std::printf("%-34s %11s %11s %7s\n", "kernel", "serial", "openmp", "speedup");
    if (!par::compiled_with_openmp())
        std::printf("(built without OpenMP; both columns run the serial path)\n");

    {
        // Monte Carlo df_R of a spline interpolant: draw-parallel kernel
        const int n = 21;
        Eigen::MatrixXd x(n, 1);
        for (int i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i) / (n - 1);
        const HatSystem hs = fit(SplineSpec{3}, x);
        const XSampler sampler = uniform1d_sampler(0.0, 1.0);
        DofReport a, b;
        const double ts = seconds(
            [&] { a = df_random_mc(hs, sampler, 400000, 7, par::Mode::serial); });
        const double tp = seconds(
            [&] { b = df_random_mc(hs, sampler, 400000, 7, par::Mode::openmp); });
        row("df_random_mc spline (4e5 draws)", ts, tp, a.df_random == b.df_random);
    }
    {
        // replicate-parallel experiment harness
        RunOptions serial;
        serial.reps = 60;
        serial.mode = par::Mode::serial;
        RunOptions openmp = serial;
        openmp.mode = par::Mode::openmp;
        ExperimentResult a, b;
        const double ts = seconds([&] { a = run_scenario("estimator_comparison", serial); });
        const double tp = seconds([&] { b = run_scenario("estimator_comparison", openmp); });
        bool same = a.summary.size() == b.summary.size();
        for (std::size_t i = 0; same && i < a.summary.size(); ++i)
            same = a.summary[i].mean == b.summary[i].mean && a.summary[i].sd == b.summary[i].sd;
        row("estimator sweep (60 replicates)", ts, tp, same);
    }
    {
        // x*-parallel risk truth estimate
        GenConfig cfg;
        cfg.n = 40;
        cfg.d = 120;
        cfg.beta_kind = PolyDecay{5.0};
        cfg.beta_norm2 = 10.0;
        cfg.sigma_eps2 = 1.0;
        cfg.seed = 5;
        const Dataset ds = generate_dataset(cfg);
        const HatSystem hs = fit(MinNormSpec{all_columns(120)}, ds.X);
        const XSampler sampler = gaussian_sampler(ds.Sigma);
        McValue a, b;
        const double ts = seconds([&] {
            a = err_random_true(hs, ds.y, sampler, ds.mean_fn, 1.0, 200000, 3,
                                par::Mode::serial);
        });
        const double tp = seconds([&] {
            b = err_random_true(hs, ds.y, sampler, ds.mean_fn, 1.0, 200000, 3,
                                par::Mode::openmp);
        });
        row("err_random_true (2e5 draws)", ts, tp, a.value == b.value && a.se == b.se);
    }
    return 0;
}
