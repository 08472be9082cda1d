// Throughput comparison of the OpenMP ensemble kernels against a
// single-thread baseline, plus a byte-equality assertion between the
// parallel and serial trajectory ensembles.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "markup/sde.hpp"

using Clock = std::chrono::steady_clock;
using namespace markup;

namespace {

struct Setup {
    ModelParams p;
    JumpSpec j;
    SimConfig cfg;
};

Setup make_setup(std::int64_t n_paths, std::int64_t n_steps) {
    Setup s;
    s.p.theta_tilde = 1.0;
    s.p.u = 1.0;
    s.p.sigma = 0.2;
    s.j.nu = 1.0;
    s.j.gamma = 0.05;
    s.j.sigma_j = 0.02;
    s.cfg.horizon = 1.0;
    s.cfg.dt = s.cfg.horizon / static_cast<double>(n_steps);
    s.cfg.n_paths = n_paths;
    s.cfg.seed = 42;
    s.cfg.x0 = 1.0;
    return s;
}

template <typename Fn>
double timed(Fn&& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const std::int64_t n_paths = argc > 1 ? std::atoll(argv[1]) : 20000;
    const std::int64_t n_steps = argc > 2 ? std::atoll(argv[2]) : 1000;
    const Setup s = make_setup(n_paths, n_steps);
    const auto policy = sde::zero_policy();
    const int max_threads = omp_get_max_threads();

    std::printf("paths=%lld steps=%lld max_threads=%d\n", static_cast<long long>(n_paths),
                static_cast<long long>(n_steps), max_threads);

    // Correctness: the parallel trajectory ensemble must match the serial
    // reference byte for byte.
    {
        Setup small = make_setup(std::min<std::int64_t>(n_paths, 4000), n_steps);
        const auto serial = sde::simulate_ensemble_serial(small.p, small.j, policy, small.cfg);
        const auto parallel = sde::simulate_ensemble(small.p, small.j, policy, small.cfg);
        bool identical = serial.size() == parallel.size();
        for (std::size_t i = 0; identical && i < serial.size(); ++i)
            identical = serial[i].values == parallel[i].values;
        std::printf("trajectory ensembles (%lld paths): %s\n",
                    static_cast<long long>(small.cfg.n_paths),
                    identical ? "identical" : "DIFFER");
        if (!identical) return 1;
    }

    // Throughput: full trajectories, then the streaming reductions. Each run
    // frees its output before the next starts.
    double traj_serial = 0.0, traj_parallel = 0.0;
    double stats_serial = 0.0, stats_parallel = 0.0;
    double checksum_serial = 0.0, checksum_parallel = 0.0;

    traj_serial = timed([&] {
        const auto out = sde::simulate_ensemble_serial(s.p, s.j, policy, s.cfg);
        checksum_serial = out.back().values.back();
    });
    traj_parallel = timed([&] {
        const auto out = sde::simulate_ensemble(s.p, s.j, policy, s.cfg);
        checksum_parallel = out.back().values.back();
    });
    std::printf("trajectories: serial %.3fs (%.0f paths/s), %d threads %.3fs (%.0f paths/s), "
                "speedup %.2fx, checksums %s\n",
                traj_serial, n_paths / traj_serial, max_threads, traj_parallel,
                n_paths / traj_parallel, traj_serial / traj_parallel,
                checksum_serial == checksum_parallel ? "equal" : "DIFFER");

    omp_set_num_threads(1);
    stats_serial = timed([&] {
        const auto out = sde::simulate_stats(s.p, s.j, policy, s.cfg);
        checksum_serial = out.back().terminal;
    });
    omp_set_num_threads(max_threads);
    stats_parallel = timed([&] {
        const auto out = sde::simulate_stats(s.p, s.j, policy, s.cfg);
        checksum_parallel = out.back().terminal;
    });
    std::printf("streaming:    1 thread %.3fs (%.0f paths/s), %d threads %.3fs (%.0f paths/s), "
                "speedup %.2fx, checksums %s\n",
                stats_serial, n_paths / stats_serial, max_threads, stats_parallel,
                n_paths / stats_parallel, stats_serial / stats_parallel,
                checksum_serial == checksum_parallel ? "equal" : "DIFFER");
    return 0;
}
