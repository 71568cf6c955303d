// Compares the OpenMP kernels against the serial reference path and checks
// that both produce identical output. Wall times are informational; the
// equality column is the point.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "monoloc/arithmetic.hpp"
#include "monoloc/branches.hpp"
#include "monoloc/parallel.hpp"
#include "monoloc/potential.hpp"
#include "monoloc/spectral.hpp"

using namespace monoloc;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Row {
    std::string name;
    double serial_s = 0, parallel_s = 0;
    bool equal = false;
};

template <class Fn>
Row run_case(const std::string& name, Fn&& fn) {
    Row row;
    row.name = name;
    {
        par::SerialGuard guard;
        const double t0 = now_s();
        auto a = fn();
        row.serial_s = now_s() - t0;
        const double t1 = now_s();
        par::set_parallel(true);
        auto b = fn();
        row.parallel_s = now_s() - t1;
        row.equal = (a == b);
    }
    return row;
}

} // namespace

int main() {
    par::init_threads();
    FrequencyModel freq = make_frequency(
        std::vector<std::int64_t>(33, 1), 256); // golden, a_0 overwritten below
    {
        std::vector<std::int64_t> a(33, 1);
        a[0] = 0;
        freq = make_frequency(a, 256);
    }
    MonotonePotential pot = make_sawtooth(20.0, 0.0);
    const std::vector<double> grid = linear_grid(-1.0, 21.0, 2048);

    std::vector<Row> rows;

    rows.push_back(run_case("ids_build n=987 grid=2048", [&] {
        IDSTable t = ids_build(freq, pot, 987, grid);
        return t.values;
    }));

    rows.push_back(run_case("counting_variation q=233", [&] {
        VariationReport v = counting_variation(freq, pot, 233, 10.0, 512);
        return std::vector<double>{double(v.observed_max), double(v.pass)};
    }));

    rows.push_back(run_case("branch_table n=377 grid=2048", [&] {
        BranchTable t = branch_table(freq, pot, 377, 2048);
        std::vector<double> flat;
        for (const auto& s : t.samples)
            for (double v : s) flat.push_back(v);
        return flat;
    }));

    std::printf("%-34s %10s %10s %8s %6s\n", "case", "serial_s", "openmp_s",
                "speedup", "equal");
    bool all_equal = true;
    for (const Row& r : rows) {
        all_equal = all_equal && r.equal;
        std::printf("%-34s %10.3f %10.3f %8.2fx %6s\n", r.name.c_str(), r.serial_s,
                    r.parallel_s, r.serial_s / std::max(r.parallel_s, 1e-9),
                    r.equal ? "yes" : "NO");
    }
    if (!all_equal) {
        std::printf("mismatch between serial and parallel output\n");
        return 1;
    }
    return 0;
}
