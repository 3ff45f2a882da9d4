// Benchmark comparing the serial reference paths against the OpenMP kernels:
// exhaustive static solve, a large single oracle evaluation, and Monte Carlo
// policy estimation. Verifies that both paths agree bit for bit before
// reporting timings.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "mla/model.hpp"
#include "mla/oracle.hpp"
#include "mla/simulate.hpp"
#include "mla/static_opt.hpp"

namespace {

struct Timing {
    double serial_s;
    double parallel_s;
    bool identical;
};

template <typename F>
double timed(F&& f) {
    const double start = omp_get_wtime();
    f();
    return omp_get_wtime() - start;
}

void report(const char* name, const Timing& t) {
    std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   %s\n", name,
                t.serial_s, t.parallel_s, t.serial_s / t.parallel_s,
                t.identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
    std::printf("threads available: %d\n", omp_get_max_threads());

    {
        const auto instance = mla::generate_instance(14, 10, 0.4, 0.2, seed);
        mla::StaticSolveReport serial, parallel;
        Timing t{};
        t.serial_s = timed([&] { serial = mla::exact_solve(instance, mla::Exec::Serial); });
        t.parallel_s = timed([&] { parallel = mla::exact_solve(instance, mla::Exec::Parallel); });
        t.identical = serial.value == parallel.value &&
                      serial.assortment.members == parallel.assortment.members;
        report("exhaustive solve n=14 T=10", t);
    }

    {
        const auto instance = mla::generate_instance(10, 200, 0.5, 0.25, seed);
        const auto S = mla::Assortment::full(instance.n);
        double serial = 0, parallel = 0;
        Timing t{};
        t.serial_s = timed([&] { serial = mla::expected_max_load(instance, S, mla::Exec::Serial); });
        t.parallel_s =
            timed([&] { parallel = mla::expected_max_load(instance, S, mla::Exec::Parallel); });
        t.identical = serial == parallel;
        report("oracle eval k=10 T=200", t);
    }

    {
        const auto instance = mla::generate_instance(8, 12, 0.6, 0.3, seed);
        const auto S = mla::Assortment::full(instance.n);
        mla::ValueEstimate serial, parallel;
        Timing t{};
        t.serial_s = timed(
            [&] { serial = mla::estimate_static_value(instance, S, 1'000'000, seed, mla::Exec::Serial); });
        t.parallel_s = timed([&] {
            parallel = mla::estimate_static_value(instance, S, 1'000'000, seed, mla::Exec::Parallel);
        });
        t.identical = serial.mean == parallel.mean && serial.stderror == parallel.stderror;
        report("monte carlo 1e6 trajectories", t);
    }

    return 0;
}
