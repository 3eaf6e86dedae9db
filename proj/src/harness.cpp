#include "svi/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svi {

namespace {

using nlohmann::json;

double read_extended(const json& v, double unbounded) {
    if (v.is_null()) return unbounded;
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
        throw ConfigParse("unrecognized extended real: " + s);
    }
    return v.get<double>();
}

}  // namespace

double QqData::origin_slope() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
        num += quantiles[i] * distances[i];
        den += quantiles[i] * quantiles[i];
    }
    return den > 0 ? num / den : 0.0;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigParse(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("model") && j["model"].is_string()) {
        const std::string name = j["model"].get<std::string>();
        if (name == "q2")
            cfg.model = AffineScenarioModel::example_q2();
        else if (name == "q10_example1")
            cfg.model = AffineScenarioModel::example_q10(1);
        else if (name == "q10_example2")
            cfg.model = AffineScenarioModel::example_q10(2);
        else if (name == "q10_example3")
            cfg.model = AffineScenarioModel::example_q10(3);
        else
            throw ConfigParse("unknown builtin model: " + name);
    } else {
        if (!j.contains("q")) throw ConfigParse("missing field: q");
        if (!j.contains("lambda_ranges")) throw ConfigParse("missing field: lambda_ranges");
        if (!j.contains("b_ranges")) throw ConfigParse("missing field: b_ranges");
        cfg.model.q = j["q"].get<std::size_t>();
        for (const auto& r : j["lambda_ranges"])
            cfg.model.lambda_ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
        for (const auto& r : j["b_ranges"])
            cfg.model.b_ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
        if (cfg.model.lambda_ranges.size() != cfg.model.q * cfg.model.q)
            throw ConfigParse("lambda_ranges must have q*q entries");
        if (cfg.model.b_ranges.size() != cfg.model.q)
            throw ConfigParse("b_ranges must have q entries");
    }
    const std::size_t q = cfg.model.q;

    cfg.s = BoxSet::nonnegative_orthant(q);
    if (j.contains("lower"))
        for (std::size_t k = 0; k < q; ++k) cfg.s.lower[k] = read_extended(j["lower"][k], -kInf);
    if (j.contains("upper"))
        for (std::size_t k = 0; k < q; ++k) cfg.s.upper[k] = read_extended(j["upper"][k], kInf);

    if (j.contains("z0")) cfg.z0 = j["z0"].get<Vector>();

    if (!j.contains("sample_sizes")) throw ConfigParse("missing field: sample_sizes");
    cfg.sample_sizes = j["sample_sizes"].get<std::vector<std::size_t>>();
    for (std::size_t n : cfg.sample_sizes)
        if (n < 2) throw ConfigParse("sample_sizes entries must be >= 2");

    if (!j.contains("replications")) throw ConfigParse("missing field: replications");
    cfg.replications = j["replications"].get<std::size_t>();
    if (cfg.replications < 1) throw ConfigParse("replications must be >= 1");

    if (!j.contains("alphas")) throw ConfigParse("missing field: alphas");
    cfg.alphas = j["alphas"].get<std::vector<double>>();
    for (double a : cfg.alphas)
        if (!(a > 0 && a < 1)) throw ConfigParse("alphas must lie in (0,1)");

    if (!j.contains("seed")) throw ConfigParse("missing field: seed");
    cfg.master_seed = j["seed"].get<std::uint64_t>();

    cfg.rho0 = j.value("rho0", 0.0);
    cfg.epsilon = j.value("epsilon", 0.0);
    cfg.coverage = j.value("coverage", true);
    cfg.qq = j.value("qq", true);
    cfg.ellipse = j.value("ellipse", false);
    cfg.limiting = j.value("limiting", false);
    cfg.limiting_samples = j.value("limiting_samples", std::size_t{1000000});
    cfg.limiting_coordinate = j.value("limiting_coordinate", std::size_t{0});
    cfg.failure_rate_cap = j.value("failure_rate_cap", 0.05);
    return cfg;
}

Fixture load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fixture: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigParse(std::string("fixture parse error: ") + e.what());
    }
    for (const char* field : {"q", "jacobian", "offset", "sigma", "n"})
        if (!j.contains(field)) throw ConfigParse(std::string("missing field: ") + field);
    Fixture f;
    f.q = j["q"].get<std::size_t>();
    f.n = j["n"].get<std::size_t>();
    const auto jac = j["jacobian"].get<std::vector<double>>();
    const auto sig = j["sigma"].get<std::vector<double>>();
    if (jac.size() != f.q * f.q) throw ConfigParse("jacobian must have q*q entries");
    if (sig.size() != f.q * f.q) throw ConfigParse("sigma must have q*q entries");
    f.jacobian = Matrix(f.q, f.q);
    f.jacobian.data = jac;
    f.sigma = Matrix(f.q, f.q);
    f.sigma.data = sig;
    f.offset = j["offset"].get<Vector>();
    if (f.offset.size() != f.q) throw ConfigParse("offset must have q entries");
    return f;
}

namespace {

ReplicationRecord run_one(const ExperimentConfig& cfg, const Vector& z0,
                          std::size_t n, std::size_t r, RngStream stream) {
    ReplicationRecord rec;
    rec.n = n;
    rec.replication = r;

    const ScenarioBatch batch = sample_batch(cfg.model, n, stream);
    const SaaMap f = assemble(batch);
    SolveResult res;
    try {
        res = solve(f, cfg.s);
    } catch (const std::exception&) {
        rec.solver_ok = false;
        return rec;
    }
    rec.solver_ok = true;
    rec.z = res.z;

    const CovarianceEstimate sigma = sample_covariance(batch, res.x);
    const NormalMapDerivative d =
        derivative_at(f, cfg.s, res, default_classify_tol(res.z));
    rec.derivative_linear = d.is_linear;
    rec.derivative_invertible = d.is_invertible;
    if (!d.is_invertible) return rec;

    // squared distance n [M(z0-zn)]^T Sigma^-1 [M(z0-zn)]
    Vector dz(z0.size());
    for (std::size_t k = 0; k < z0.size(); ++k) dz[k] = z0[k] - res.z[k];
    const Vector v = mat_vec(d.m, dz);
    try {
        rec.squared_distance = static_cast<double>(n) * dot(v, lu_solve(sigma.sigma, v));
    } catch (const SingularMatrix&) {
        rec.squared_distance = std::numeric_limits<double>::quiet_NaN();
    }

    for (double alpha : cfg.alphas) {
        ConfidenceRegion region;
        try {
            region = region_fullrank(d, sigma, n, alpha, cfg.rho0);
        } catch (const SingularCovariance&) {
            const double rho = cfg.rho0 > 0 ? cfg.rho0 : default_rho0(sigma);
            region = region_degenerate(d, sigma, n, alpha, rho, 0.0);
        }
        const IntervalSet sim = simultaneous_intervals(region);
        const IntervalSet ind = individual_intervals(d, sigma, n, alpha);

        bool joint = true;
        std::vector<bool> per(z0.size());
        for (std::size_t k = 0; k < z0.size(); ++k) {
            if (z0[k] < sim.bounds[k].first || z0[k] > sim.bounds[k].second) joint = false;
            per[k] = z0[k] >= ind.bounds[k].first && z0[k] <= ind.bounds[k].second;
        }
        rec.sim_covers[alpha] = joint;
        rec.region_covers[alpha] = region_contains(region, z0);
        rec.ind_covers[alpha] = std::move(per);
        rec.sim_intervals[alpha] = sim;
        rec.ind_intervals[alpha] = ind;
    }
    return rec;
}

}  // namespace

RunOutput run_replications(const ExperimentConfig& cfg, int threads) {
    RunOutput out;
    const std::size_t q = cfg.model.q;

    Vector z0;
    if (cfg.z0) {
        z0 = *cfg.z0;
    } else {
        const SaaMap f0 = true_map(cfg.model);
        z0 = solve(f0, cfg.s).z;
    }

    for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
        const std::size_t n = cfg.sample_sizes[ni];
        // replication r always draws from stream id r within this sample size
        const RngStream base{cfg.master_seed, ni};
        std::vector<ReplicationRecord> records(cfg.replications);

#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
#endif
        for (long long r = 0; r < static_cast<long long>(cfg.replications); ++r)
            records[r] = run_one(cfg, z0, n, static_cast<std::size_t>(r),
                                 base.substream(static_cast<std::uint64_t>(r)));

        QqData qq;
        qq.n = n;
        for (const ReplicationRecord& rec : records) {
            if (rec.solver_ok && rec.derivative_invertible &&
                std::isfinite(rec.squared_distance))
                qq.distances.push_back(rec.squared_distance);
            if (!rec.solver_ok) ++out.report.solver_failures;
            if (rec.solver_ok && !rec.derivative_linear) ++out.report.nonlinear_patterns;
            if (rec.solver_ok && !rec.derivative_invertible) ++out.report.noninvertible;
        }
        std::sort(qq.distances.begin(), qq.distances.end());
        const std::size_t m = qq.distances.size();
        for (std::size_t jj = 0; jj < m; ++jj)
            qq.quantiles.push_back(chi2_quantile(
                static_cast<int>(q),
                1.0 - (static_cast<double>(jj) + 0.5) / static_cast<double>(m)));
        out.qq.push_back(std::move(qq));

        for (double alpha : cfg.alphas) {
            CoverageCell cell;
            cell.ind_counts.assign(q, 0);
            for (const ReplicationRecord& rec : records) {
                if (!rec.solver_ok || !rec.derivative_invertible) continue;
                ++cell.denominator;
                if (rec.sim_covers.at(alpha)) ++cell.sim_count;
                if (rec.region_covers.at(alpha)) ++cell.region_count;
                const auto& per = rec.ind_covers.at(alpha);
                for (std::size_t k = 0; k < q; ++k)
                    if (per[k]) ++cell.ind_counts[k];
            }
            out.report.cells[{n, alpha}] = std::move(cell);
        }

        for (ReplicationRecord& rec : records) out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<std::pair<double, double>> emit_ellipse_boundary(
    const ConfidenceRegion& region, std::size_t points) {
    if (region.center.size() != 2 || region.kind != RegionKind::FullRank)
        throw DimensionNot2("emit_ellipse_boundary: needs a 2-d full-rank region");
    const EigenDecomposition e = eig_sym(region.q_shape);
    const double n = static_cast<double>(region.n);
    std::vector<std::pair<double, double>> out;
    out.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double theta = 2.0 * 3.14159265358979323846 *
                             static_cast<double>(i) / static_cast<double>(points);
        const double w0 = std::sqrt(region.radius / (n * e.values[0])) * std::cos(theta);
        const double w1 = std::sqrt(region.radius / (n * e.values[1])) * std::sin(theta);
        // z = c + U^T w with rows of U the principal directions
        const double x = region.center[0] + e.vectors_rows(0, 0) * w0 + e.vectors_rows(1, 0) * w1;
        const double y = region.center[1] + e.vectors_rows(0, 1) * w0 + e.vectors_rows(1, 1) * w1;
        out.emplace_back(x, y);
    }
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

}  // namespace

void write_outputs(const std::string& dir, const ExperimentConfig& cfg,
                   const RunOutput& out) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);

    const std::size_t q = cfg.model.q;

    {
        std::ofstream f(dir + "/coverage.csv");
        f << "n,alpha,statistic,count,denominator\n";
        for (const auto& [key, cell] : out.report.cells) {
            f << key.first << "," << key.second << ",simultaneous," << cell.sim_count
              << "," << cell.denominator << "\n";
            f << key.first << "," << key.second << ",region," << cell.region_count << ","
              << cell.denominator << "\n";
            for (std::size_t k = 0; k < q; ++k)
                f << key.first << "," << key.second << ",individual_z" << (k + 1) << ","
                  << cell.ind_counts[k] << "," << cell.denominator << "\n";
        }
        f << "diagnostics,,nonlinear_patterns," << out.report.nonlinear_patterns << ",\n";
        f << "diagnostics,,noninvertible," << out.report.noninvertible << ",\n";
        f << "diagnostics,,solver_failures," << out.report.solver_failures << ",\n";
    }
    {
        std::ofstream f(dir + "/qq.csv");
        f << "n,quantile,squared_distance\n";
        for (const QqData& qq : out.qq)
            for (std::size_t i = 0; i < qq.distances.size(); ++i)
                f << qq.n << "," << fmt(qq.quantiles[i]) << "," << fmt(qq.distances[i])
                  << "\n";
    }
    {
        std::ofstream f(dir + "/replications.csv");
        f << "n,replication,solver_ok,linear,invertible,squared_distance";
        for (std::size_t k = 0; k < q; ++k) f << ",z" << (k + 1);
        f << "\n";
        for (const ReplicationRecord& rec : out.records) {
            f << rec.n << "," << rec.replication << "," << rec.solver_ok << ","
              << rec.derivative_linear << "," << rec.derivative_invertible << ","
              << fmt(rec.squared_distance);
            for (std::size_t k = 0; k < q; ++k)
                f << "," << (rec.z.empty() ? std::string("") : fmt(rec.z[k]));
            f << "\n";
        }
    }
    {
        // averaged interval endpoints per (n, alpha, coordinate, kind)
        std::ofstream f(dir + "/intervals.csv");
        f << "n,alpha,coordinate,kind,lo,hi\n";
        for (std::size_t n : cfg.sample_sizes)
            for (double alpha : cfg.alphas)
                for (std::size_t k = 0; k < q; ++k) {
                    double slo = 0, shi = 0, ilo = 0, ihi = 0;
                    std::size_t cnt = 0;
                    for (const ReplicationRecord& rec : out.records) {
                        if (rec.n != n || !rec.solver_ok || !rec.derivative_invertible)
                            continue;
                        ++cnt;
                        slo += rec.sim_intervals.at(alpha).bounds[k].first;
                        shi += rec.sim_intervals.at(alpha).bounds[k].second;
                        ilo += rec.ind_intervals.at(alpha).bounds[k].first;
                        ihi += rec.ind_intervals.at(alpha).bounds[k].second;
                    }
                    if (cnt == 0) continue;
                    const double c = static_cast<double>(cnt);
                    f << n << "," << alpha << ",z" << (k + 1) << ",sim,"
                      << fmt(slo / c) << "," << fmt(shi / c) << "\n";
                    f << n << "," << alpha << ",z" << (k + 1) << ",ind,"
                      << fmt(ilo / c) << "," << fmt(ihi / c) << "\n";
                }
    }
    {
        std::ofstream f(dir + "/manifest.txt");
        std::ostringstream cfgs;
        cfgs << cfg.model.q << "|" << cfg.replications << "|" << cfg.master_seed;
        for (std::size_t n : cfg.sample_sizes) cfgs << "|" << n;
        for (double a : cfg.alphas) cfgs << "|" << a;
        f << "seed=" << cfg.master_seed << "\n";
        f << "replications=" << cfg.replications << "\n";
        f << "config_hash=" << std::hex << fnv1a(cfgs.str()) << std::dec << "\n";
        f << "version=1\n";
    }
}

}  // namespace svi
