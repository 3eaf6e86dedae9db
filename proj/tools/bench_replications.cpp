#include <chrono>
#include <iostream>

#include "svi/harness.hpp"

// Times the replication harness single-threaded against the parallel path
// and checks the coverage counts agree.

int main(int argc, char** argv) {
    svi::ExperimentConfig cfg;
    cfg.model = svi::AffineScenarioModel::example_q2();
    cfg.s = svi::BoxSet::nonnegative_orthant(2);
    cfg.z0 = svi::Vector{0.0, 0.0};
    cfg.sample_sizes = {10, 30};
    cfg.replications = argc > 1 ? std::stoul(argv[1]) : 2000;
    cfg.alphas = {0.1, 0.05, 0.01};
    cfg.master_seed = 20240501;

    const auto t0 = std::chrono::steady_clock::now();
    const svi::RunOutput serial = svi::run_replications(cfg, 1);
    const auto t1 = std::chrono::steady_clock::now();
    const svi::RunOutput parallel = svi::run_replications(cfg, 0);
    const auto t2 = std::chrono::steady_clock::now();

    const double ts = std::chrono::duration<double>(t1 - t0).count();
    const double tp = std::chrono::duration<double>(t2 - t1).count();
    std::cout << "replications=" << cfg.replications << " serial=" << ts
              << "s parallel=" << tp << "s speedup=" << ts / tp << "\n";

    bool agree = true;
    for (const auto& [key, cell] : serial.report.cells) {
        const auto& other = parallel.report.cells.at(key);
        if (cell.sim_count != other.sim_count || cell.region_count != other.region_count ||
            cell.ind_counts != other.ind_counts)
            agree = false;
    }
    std::cout << "counts_agree=" << agree << "\n";
    return agree ? 0 : 1;
}
