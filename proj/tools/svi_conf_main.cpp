#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "svi/harness.hpp"

namespace {

void print_intervals(const std::string& label, const svi::IntervalSet& set) {
    for (std::size_t k = 0; k < set.bounds.size(); ++k)
        std::cout << "z" << (k + 1) << "," << label << "," << std::setprecision(6)
                  << set.bounds[k].first << "," << set.bounds[k].second << "\n";
}

int run_command(const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed, int threads) {
    svi::ExperimentConfig cfg;
    try {
        cfg = svi::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (seed) cfg.master_seed = *seed;

    const svi::RunOutput out = svi::run_replications(cfg, threads);

    std::size_t attempted = 0, failed = 0;
    for (const auto& rec : out.records) {
        ++attempted;
        if (!rec.solver_ok || !rec.derivative_invertible) ++failed;
    }
    try {
        svi::write_outputs(out_dir, cfg, out);
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    }

    for (const auto& [key, cell] : out.report.cells)
        std::cout << "n=" << key.first << " alpha=" << key.second
                  << " simultaneous=" << cell.sim_count << "/" << cell.denominator
                  << " region=" << cell.region_count << "/" << cell.denominator << "\n";
    for (const auto& qq : out.qq)
        std::cout << "n=" << qq.n << " qq_slope=" << std::setprecision(4)
                  << qq.origin_slope() << "\n";
    std::cout << "outputs written to " << out_dir << "\n";

    if (attempted > 0 &&
        static_cast<double>(failed) / static_cast<double>(attempted) > cfg.failure_rate_cap) {
        std::cerr << "numerical failure rate " << failed << "/" << attempted
                  << " exceeds cap\n";
        return 3;
    }
    return 0;
}

int fixture_command(const std::string& fixture_path, const std::string& out_dir,
                    double alpha) {
    svi::Fixture fx;
    try {
        fx = svi::load_fixture(fixture_path);
    } catch (const std::exception& e) {
        std::cerr << "fixture error: " << e.what() << "\n";
        return 2;
    }
    const svi::BoxSet s = svi::BoxSet::nonnegative_orthant(fx.q);
    const svi::SaaMap f{fx.jacobian, fx.offset};
    svi::SolveResult res;
    try {
        res = svi::solve(f, s);
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    }
    const svi::CovarianceEstimate sigma{fx.sigma};
    const svi::NormalMapDerivative d =
        svi::derivative_at(f, s, res, svi::default_classify_tol(res.z));
    if (!d.is_invertible) {
        std::cerr << "derivative not invertible\n";
        return 3;
    }

    std::cout << std::setprecision(6);
    std::cout << "z_n =";
    for (double v : res.z) std::cout << " " << v;
    std::cout << "\nQ =\n";
    const svi::ConfidenceRegion region =
        svi::region_fullrank(d, sigma, fx.n, alpha);
    for (std::size_t i = 0; i < fx.q; ++i) {
        for (std::size_t j = 0; j < fx.q; ++j) std::cout << " " << region.q_shape(i, j);
        std::cout << "\n";
    }
    const svi::IntervalSet sim = svi::simultaneous_intervals(region);
    const svi::IntervalSet ind = svi::individual_intervals(d, sigma, fx.n, alpha);
    print_intervals("sim", sim);
    print_intervals("ind", ind);

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/intervals.csv");
    csv << std::setprecision(6);
    for (std::size_t k = 0; k < fx.q; ++k) {
        csv << "z" << (k + 1) << ",sim," << sim.bounds[k].first << ","
            << sim.bounds[k].second << "\n";
        csv << "z" << (k + 1) << ",ind," << ind.bounds[k].first << ","
            << ind.bounds[k].second << "\n";
    }
    return 0;
}

int limiting_command(const std::string& config_path, int threads) {
    svi::ExperimentConfig cfg;
    try {
        cfg = svi::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    const svi::SaaMap f0 = svi::true_map(cfg.model);
    svi::Vector z0 = cfg.z0 ? *cfg.z0 : svi::solve(f0, cfg.s).z;
    const std::size_t q = cfg.model.q;

    // population covariance of F(x0, xi) for the affine-uniform family
    const svi::Vector x0 = svi::project(cfg.s, z0);
    svi::Matrix sigma0(q, q);
    for (std::size_t i = 0; i < q; ++i) {
        double var = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            const auto& r = cfg.model.lambda_ranges[i * q + j];
            const double w = r.second - r.first;
            var += w * w / 12.0 * x0[j] * x0[j];
        }
        const double wb = cfg.model.b_ranges[i].second - cfg.model.b_ranges[i].first;
        var += wb * wb / 12.0;
        sigma0(i, i) = var;
    }

    svi::LimitingLaw law;
    try {
        law = svi::limiting_law(f0.jacobian, sigma0, cfg.s, z0,
                                svi::default_classify_tol(z0));
    } catch (const std::exception& e) {
        std::cerr << "limiting law failure: " << e.what() << "\n";
        return 3;
    }
    std::cout << "cells k=" << law.cells.size()
              << " coherent_orientation=" << svi::coherent_orientation(law) << "\n";
    const std::string note = svi::coverage_condition_note(law);
    if (!note.empty()) std::cout << note << "\n";

    for (double alpha : cfg.alphas) {
        const double cov = svi::limiting_individual_coverage(
            law, cfg.limiting_coordinate, alpha, cfg.limiting_samples,
            svi::RngStream{cfg.master_seed, 999}, threads);
        std::cout << "alpha=" << alpha << " j=" << (cfg.limiting_coordinate + 1)
                  << " limiting_coverage=" << std::setprecision(5) << cov << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence regions and intervals for SAA solutions of "
                 "box-constrained stochastic variational inequalities"};
    app.require_subcommand(1);

    std::string config_path, fixture_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    double alpha = 0.1;

    auto* run = app.add_subcommand("run", "replicated coverage experiment");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory");
    std::uint64_t seed_opt = 0;
    bool seed_set = false;
    run->add_option("--seed", seed_opt, "override master seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--threads", threads, "worker threads (0 = default)");

    auto* fixture = app.add_subcommand("fixture", "inference on a printed instance");
    fixture->add_option("fixture-file", fixture_path, "fixture (JSON)")->required();
    fixture->add_option("--out", out_dir, "output directory");
    fixture->add_option("--alpha", alpha, "confidence level parameter");

    auto* limiting = app.add_subcommand("limiting", "limiting-law Monte Carlo");
    limiting->add_option("config", config_path, "experiment config (JSON)")->required();
    limiting->add_option("--threads", threads, "worker threads (0 = default)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return run_command(config_path, out_dir,
                           seed_set ? std::optional<std::uint64_t>(seed_opt)
                                    : std::nullopt,
                           threads);
    if (fixture->parsed()) return fixture_command(fixture_path, out_dir, alpha);
    return limiting_command(config_path, threads);
}
