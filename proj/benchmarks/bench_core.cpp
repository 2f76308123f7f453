#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "pdmd/dmd.hpp"
#include "pdmd/piecewise.hpp"
#include "pdmd/qb.hpp"
#include "pdmd/rdpde.hpp"
#include "pdmd/rng.hpp"

namespace {

Eigen::MatrixXd oscillator_data(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    pdmd::SplitMix64 rng(seed);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, rows);
    for (Eigen::Index i = 0; i + 1 < rows; i += 2) {
        const double angle = 0.05 + 0.3 * rng.next_unit();
        a(i, i) = 0.998 * std::cos(angle);
        a(i, i + 1) = -0.998 * std::sin(angle);
        a(i + 1, i) = 0.998 * std::sin(angle);
        a(i + 1, i + 1) = 0.998 * std::cos(angle);
    }
    Eigen::MatrixXd data(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        data(i, 0) = rng.next_gaussian();
    }
    for (Eigen::Index k = 1; k < cols; ++k) {
        data.col(k) = a * data.col(k - 1);
    }
    return data;
}

void BM_QbDecompose(benchmark::State& state) {
    const auto rank = static_cast<int>(state.range(0));
    const Eigen::MatrixXd s = oscillator_data(2048, 600, 1);
    pdmd::QbConfig cfg;
    cfg.target_rank = rank;
    cfg.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pdmd::qb_decompose(s, cfg));
    }
}
BENCHMARK(BM_QbDecompose)->Arg(20)->Arg(50)->Arg(100);

void BM_ExactDmd(benchmark::State& state) {
    const Eigen::MatrixXd s = oscillator_data(512, 300, 2);
    const pdmd::TimeGrid grid{0.0, 1.0, 300};
    for (auto _ : state) {
        benchmark::DoNotOptimize(pdmd::exact_dmd(s, grid, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_ExactDmd)->Arg(10)->Arg(40);

void BM_RandomizedDmd(benchmark::State& state) {
    const Eigen::MatrixXd s = oscillator_data(2048, 600, 3);
    const pdmd::TimeGrid grid{0.0, 1.0, 600};
    pdmd::QbConfig cfg;
    cfg.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            pdmd::randomized_dmd(s, grid, static_cast<int>(state.range(0)), cfg, 1e-12));
    }
}
BENCHMARK(BM_RandomizedDmd)->Arg(20)->Arg(60);

void BM_SylvesterSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const pdmd::NeumannEigenBasis ex = pdmd::neumann_eigenbasis(n, 1.0 / (n - 1));
    const pdmd::SylvesterStepper stepper(ex, ex, 1e-3);
    const Eigen::MatrixXd rhs = oscillator_data(n, n, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stepper.solve(rhs));
    }
}
BENCHMARK(BM_SylvesterSolve)->Arg(64)->Arg(100)->Arg(128);

void BM_PdmdPass(benchmark::State& state) {
    const Eigen::MatrixXd data = oscillator_data(512, 1200, 5);
    const pdmd::SnapshotMatrix s(data, pdmd::TimeGrid{0.0, 1e-3, 1200}, pdmd::Layout::coupled,
                                 256);
    pdmd::PdmdConfig cfg;
    cfg.tol_bar = 1.0;
    cfg.tol = 1e-30;
    cfg.qb.seed = 21;
    const auto n_parts = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pdmd::pdmd_pass(s, n_parts, cfg));
    }
}
BENCHMARK(BM_PdmdPass)->Arg(4)->Arg(16)->Arg(60);

} // namespace

BENCHMARK_MAIN();
