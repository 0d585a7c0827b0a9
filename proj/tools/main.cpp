// Command-line front end: reproducible experiments over the synthetic DVFS
// device. Subcommands: grid-search, tune, fit-perf, simulate, expected-trials.
// Exit codes: 0 success, 2 invalid arguments, 3 infeasible SLO, 4 data error.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edgetune/cbo.hpp"
#include "edgetune/device_sim.hpp"
#include "edgetune/perf_model.hpp"
#include "edgetune/sched_sim.hpp"
#include "edgetune/workload.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace edgetune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitData = 4;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json config_to_json(const HardwareConfig& c) {
    return json{{"cpu", c.cpu_freq},
                {"gpu_min", c.gpu_min_freq},
                {"gpu_max", c.gpu_max_freq},
                {"mem", c.mem_freq},
                {"batch", c.batch_size}};
}

HardwareConfig config_from_json(const json& j) {
    HardwareConfig c;
    c.cpu_freq = j.at("cpu").get<double>();
    c.gpu_min_freq = j.at("gpu_min").get<double>();
    c.gpu_max_freq = j.at("gpu_max").get<double>();
    c.mem_freq = j.at("mem").get<double>();
    c.batch_size = j.at("batch").get<int>();
    return c;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write output file: " + path.string());
    out << body;
}

std::string pareto_csv(const std::vector<ParetoPoint>& pts) {
    std::string s = "latency_ms,energy_mj,cpu,gpu_min,gpu_max,mem,batch\n";
    for (const auto& p : pts) {
        s += fmt(p.latency_ms) + "," + fmt(p.energy_mj) + "," + fmt(p.config.cpu_freq) +
             "," + fmt(p.config.gpu_min_freq) + "," + fmt(p.config.gpu_max_freq) + "," +
             fmt(p.config.mem_freq) + "," + std::to_string(p.config.batch_size) + "\n";
    }
    return s;
}

std::string trace_csv(const TuningReport& r) {
    std::string s = "iter,cpu,gpu_min,gpu_max,mem,batch,latency_ms,energy_mj,feasible\n";
    int i = 1;
    for (const auto& o : r.evaluations) {
        s += std::to_string(i++) + "," + fmt(o.config.cpu_freq) + "," +
             fmt(o.config.gpu_min_freq) + "," + fmt(o.config.gpu_max_freq) + "," +
             fmt(o.config.mem_freq) + "," + std::to_string(o.config.batch_size) + "," +
             fmt(o.latency_ms) + "," + fmt(o.energy_mj) + "," +
             (o.feasible ? "1" : "0") + "\n";
    }
    return s;
}

std::string events_csv(const ScheduleReport& r) {
    std::string s = "time_s,event,request_id,batch,latency_ms,energy_mj,slo_ms,ft_iter\n";
    for (const auto& e : r.events) {
        s += fmt(e.time_s) + "," + e.event + "," + std::to_string(e.request_id) + "," +
             std::to_string(e.batch) + "," + fmt(e.latency_ms) + "," + fmt(e.energy_mj) +
             "," + fmt(e.slo_ms) + "," + std::to_string(e.ft_iter) + "\n";
    }
    return s;
}

json report_to_json(const ScheduleReport& r) {
    json ft = json::array();
    for (const auto& it : r.ft_iterations)
        ft.push_back(json{{"index", it.index}, {"start_s", it.start_s}, {"end_s", it.end_s}});
    return json{{"n_requests", r.n_requests},
                {"n_violations", r.n_violations},
                {"n_dropped", r.n_dropped},
                {"violation_rate", r.violation_rate},
                {"ft_iterations_completed", r.ft_iterations_completed},
                {"ft_makespan_s", r.ft_makespan_s},
                {"energy_total_j", r.energy_total_j},
                {"ft_iterations", ft}};
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (v.size() - 1));
}

DeviceProfile profile_from_args(const std::string& profile_arg,
                                const std::string& workload_arg) {
    DeviceProfile p = resolve_profile(profile_arg);
    if (!workload_arg.empty()) p = with_workload(std::move(p), workload_preset(workload_arg));
    return p;
}

double resolve_slo(const DeviceProfile& p, const std::string& slo_mode, double slo_ms) {
    if (slo_mode.empty()) return slo_ms;
    const double inf = std::numeric_limits<double>::infinity();
    if (slo_mode == "tight") {
        // 1.2x the best achievable latency on the grid.
        double best = inf;
        for (const auto& c : grid_enumerate(p))
            best = std::min(best, noiseless_measure(p, c).latency_ms);
        return 1.2 * best;
    }
    if (slo_mode == "relaxed") {
        // Loose enough to admit the unconstrained energy optimum.
        const GridSearchResult opt = noiseless_grid_optimum(p, inf);
        return 2.0 * opt.best_latency_ms;
    }
    throw DataError("unknown slo mode: " + slo_mode);
}

// ---- grid-search ---------------------------------------------------------

int cmd_grid_search(const std::string& profile_arg, const std::string& workload_arg,
                    double slo_ms, int replicas, bool noiseless, std::uint64_t seed,
                    const std::string& out_dir) {
    const DeviceProfile p = profile_from_args(profile_arg, workload_arg);
    GridSearchResult res;
    if (noiseless) {
        res = noiseless_grid_optimum(p, slo_ms);
    } else {
        RngStream rng = RngStream(seed).substream("grid-search");
        res = grid_search_oracle(p, slo_ms, replicas, rng);
    }

    json oracle{{"profile", p.name},
                {"workload", p.workload.name},
                {"slo_ms", slo_ms},
                {"noiseless", noiseless},
                {"best_config", config_to_json(res.best_config)},
                {"best_energy_mj", res.best_energy_mj},
                {"best_latency_ms", res.best_latency_ms},
                {"evaluations", res.evaluations},
                {"simulated_wall_time_s", res.simulated_wall_time_s}};

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "pareto.csv", pareto_csv(res.pareto));
    write_text(fs::path(out_dir) / "oracle.json", oracle.dump(2) + "\n");
    std::cout << "evaluated " << res.evaluations << " measurements, best energy "
              << fmt(res.best_energy_mj) << " mJ/query, simulated wall time "
              << fmt(res.simulated_wall_time_s) << " s\n";
    return kExitOk;
}

// ---- tune ----------------------------------------------------------------

int cmd_tune(const std::string& profile_arg, const std::string& workload_arg,
             const std::string& slo_mode, double slo_ms, int num_seeds, std::uint64_t seed,
             int max_evals, double xi, int n_initial, const std::string& method,
             int analytic_near, int analytic_grid, const std::string& out_dir) {
    if (analytic_near > 0 && analytic_grid > 0) {
        const auto [mean, sd] = rs_expected_trials(analytic_near, analytic_grid);
        std::cout << "(" << fmt(mean) << ", " << fmt(sd) << ")\n";
        return kExitOk;
    }

    const DeviceProfile p = profile_from_args(profile_arg, workload_arg);
    const double slo = resolve_slo(p, slo_mode, slo_ms);
    const GridSearchResult oracle = noiseless_grid_optimum(p, slo);

    TuningProblem problem;
    problem.profile = p;
    problem.slo_ms = slo;
    problem.max_evals = max_evals;

    const bool run_cbo = method == "both" || method == "cbo";
    const bool run_rs = method == "both" || method == "rs";

    std::vector<double> cbo_evals, rs_evals;
    fs::create_directories(out_dir);
    json per_seed = json::array();
    for (int s = 0; s < num_seeds; ++s) {
        CboSettings settings;
        settings.xi = xi;
        settings.n_initial_random = n_initial;
        settings.rng_seed = seed + static_cast<std::uint64_t>(s);
        json row{{"seed", settings.rng_seed}};
        if (run_cbo) {
            const TuningReport r = tune(problem, settings, &oracle);
            write_text(fs::path(out_dir) /
                           ("trace_cbo_" + std::to_string(settings.rng_seed) + ".csv"),
                       trace_csv(r));
            if (r.evals_to_near_optimal) {
                cbo_evals.push_back(*r.evals_to_near_optimal);
                row["cbo_evals_to_near_optimal"] = *r.evals_to_near_optimal;
            }
        }
        if (run_rs) {
            CboSettings rs_settings = settings;
            const TuningReport r = random_search(problem, rs_settings, &oracle);
            write_text(fs::path(out_dir) /
                           ("trace_rs_" + std::to_string(settings.rng_seed) + ".csv"),
                       trace_csv(r));
            if (r.evals_to_near_optimal) {
                rs_evals.push_back(*r.evals_to_near_optimal);
                row["rs_evals_to_near_optimal"] = *r.evals_to_near_optimal;
            }
        }
        per_seed.push_back(row);
    }

    // Analytic random-search expectation from the oracle's near-optimal count.
    int n_near = 0;
    const auto grid = grid_enumerate(p);
    for (const auto& c : grid)
        if (is_near_optimal(p, c, slo, problem.near_optimal_tolerance, oracle)) ++n_near;
    const auto [rs_mean, rs_sd] =
        n_near > 0 ? rs_expected_trials(n_near, static_cast<int>(grid.size()))
                   : std::pair<double, double>{std::nan(""), std::nan("")};

    json summary{{"profile", p.name},
                 {"workload", p.workload.name},
                 {"slo_ms", slo},
                 {"max_evals", max_evals},
                 {"num_seeds", num_seeds},
                 {"oracle",
                  {{"best_config", config_to_json(oracle.best_config)},
                   {"best_energy_mj", oracle.best_energy_mj},
                   {"best_latency_ms", oracle.best_latency_ms}}},
                 {"rs_analytic",
                  {{"n_near_optimal", n_near},
                   {"n_total", grid.size()},
                   {"expected_trials", rs_mean},
                   {"stddev", rs_sd}}},
                 {"per_seed", per_seed}};
    if (run_cbo) {
        summary["cbo"] = {{"found", cbo_evals.size()},
                          {"median_evals_to_near_optimal", median(cbo_evals)},
                          {"stddev_evals_to_near_optimal", stddev(cbo_evals)}};
    }
    if (run_rs) {
        summary["rs"] = {{"found", rs_evals.size()},
                         {"median_evals_to_near_optimal", median(rs_evals)},
                         {"stddev_evals_to_near_optimal", stddev(rs_evals)}};
    }
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    if (run_cbo)
        std::cout << "cbo median evals-to-near-optimal: " << fmt(median(cbo_evals))
                  << " (stddev " << fmt(stddev(cbo_evals)) << ")\n";
    if (run_rs)
        std::cout << "rs median evals-to-near-optimal: " << fmt(median(rs_evals)) << "\n";
    std::cout << "rs analytic expected trials: " << fmt(rs_mean) << " (stddev "
              << fmt(rs_sd) << ")\n";
    return kExitOk;
}

// ---- fit-perf -------------------------------------------------------------

bool kkt_check(const std::vector<WorkloadFeatures>& rows, const std::vector<double>& y,
               const PerfModelCoeffs& coeffs) {
    const std::size_t n = rows.size();
    std::vector<std::vector<double>> a(n);
    for (std::size_t i = 0; i < n; ++i)
        a[i] = {1.0,
                rows[i].flops_inf_gflop,
                rows[i].ai_inf,
                rows[i].flops_ft_gflop,
                rows[i].ai_ft,
                static_cast<double>(rows[i].batch_size)};
    // gradient of 0.5||A theta - y||^2 is A^T (A theta - y)
    std::vector<double> grad(6, 0.0);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double resid = -y[i];
        for (int j = 0; j < 6; ++j) resid += a[i][static_cast<std::size_t>(j)] * coeffs.theta[static_cast<std::size_t>(j)];
        for (int j = 0; j < 6; ++j) grad[static_cast<std::size_t>(j)] += a[i][static_cast<std::size_t>(j)] * resid;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double aty = 0.0;
        for (int j = 0; j < 6; ++j) aty += a[i][static_cast<std::size_t>(j)] * y[i];
        scale = std::max(scale, std::abs(aty));
    }
    const double tol = 1e-8 * scale;
    for (int j = 0; j < 6; ++j) {
        const double th = coeffs.theta[static_cast<std::size_t>(j)];
        const double g = grad[static_cast<std::size_t>(j)];
        if (th > 0 && std::abs(g) > tol) return false;
        if (th == 0 && g < -tol) return false;
    }
    return true;
}

int cmd_fit_perf(const std::string& profile_arg, const std::string& workload_arg,
                 const std::string& config_json, int n_train, int n_holdout,
                 std::uint64_t seed, const std::string& out_dir) {
    const DeviceProfile p = profile_from_args(profile_arg, workload_arg);
    std::optional<HardwareConfig> base;
    if (!config_json.empty()) {
        std::ifstream in(config_json);
        if (!in) throw DataError("cannot open config file: " + config_json);
        json j;
        in >> j;
        base = config_from_json(j.contains("best_config") ? j["best_config"] : j);
    }
    RngStream rng = RngStream(seed).substream("fit-perf");
    const auto [rows, lats] = collect_training_samples(p, n_train + n_holdout, rng, base);

    std::vector<WorkloadFeatures> train_rows(rows.begin(), rows.begin() + n_train);
    std::vector<double> train_y(lats.begin(), lats.begin() + n_train);
    const PerfModelCoeffs coeffs = nnls_fit(train_rows, train_y);
    const bool kkt_ok = kkt_check(train_rows, train_y, coeffs);

    std::vector<double> rel_errors;
    for (int i = n_train; i < n_train + n_holdout; ++i) {
        const double pred = predict(coeffs, rows[static_cast<std::size_t>(i)]);
        const double actual = lats[static_cast<std::size_t>(i)];
        rel_errors.push_back(std::abs(pred - actual) / actual);
    }

    json holdout{{"profile", p.name},
                 {"workload", p.workload.name},
                 {"n_train", n_train},
                 {"n_holdout", n_holdout},
                 {"kkt_ok", kkt_ok},
                 {"median_relative_error", median(rel_errors)},
                 {"theta", coeffs.theta}};

    fs::create_directories(out_dir);
    save_coeffs(coeffs, (fs::path(out_dir) / "coeffs.json").string());
    write_text(fs::path(out_dir) / "holdout_report.json", holdout.dump(2) + "\n");
    std::cout << "KKT check: " << (kkt_ok ? "pass" : "FAIL") << "\n";
    std::cout << "holdout median relative error: " << fmt(median(rel_errors)) << "\n";
    return kkt_ok ? kExitOk : kExitData;
}

// ---- simulate --------------------------------------------------------------

SloSchedule parse_slo_schedule(const std::string& text) {
    // "0:250,30:700" -> steps at t=0s (250ms) and t=30s (700ms)
    SloSchedule sched;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw DataError("bad --slo-schedule entry (want start:slo_ms): " + item);
        sched.entries.emplace_back(std::stod(item.substr(0, colon)),
                                   std::stod(item.substr(colon + 1)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    sched.validate();
    return sched;
}

int cmd_simulate(const std::string& profile_arg, const std::string& workload_arg,
                 const std::string& config_json, const std::string& arrivals,
                 double rate_per_s, double duration_s, const std::string& trace_file,
                 double burst_window_s, const std::string& policy_name,
                 const std::string& coeffs_path, double slo_ms,
                 const std::string& slo_schedule_text, bool with_ft, int ft_batch,
                 int ft_iters, int ft_output_dim, std::uint64_t seed,
                 const std::string& out_dir) {
    const DeviceProfile p = profile_from_args(profile_arg, workload_arg);

    HardwareConfig config = p.default_max_config();
    if (!config_json.empty()) {
        std::ifstream in(config_json);
        if (!in) throw DataError("cannot open config file: " + config_json);
        json j;
        in >> j;
        config = config_from_json(j.contains("best_config") ? j["best_config"] : j);
    }

    RngStream root(seed);
    ArrivalStream stream;
    if (arrivals == "uniform") {
        stream = uniform_stream(rate_per_s, duration_s);
    } else if (arrivals == "poisson") {
        RngStream arr = root.substream("arrivals");
        stream = poisson_stream(rate_per_s, duration_s, arr);
    } else if (arrivals == "trace") {
        if (trace_file.empty()) throw DataError("--trace-file required for trace arrivals");
        stream = load_trace(trace_file, rate_per_s);
        if (burst_window_s > 0) stream = burstiest_segment(stream, burst_window_s);
    } else {
        throw DataError("unknown arrival kind: " + arrivals);
    }

    std::optional<FinetuneSpec> ft;
    if (with_ft && policy_name != "baseline") {
        ft = (ft_batch > 0 && ft_iters > 0 && ft_output_dim > 0)
                 ? derive_finetune_spec(p, ft_batch, ft_iters, ft_output_dim)
                 : p.default_finetune;
    }

    SchedulerPolicy policy = SchedulerPolicy::greedy();
    if (policy_name == "adaptive") {
        PerfModelCoeffs coeffs;
        if (!coeffs_path.empty()) {
            coeffs = load_coeffs(coeffs_path);
        } else {
            RngStream fit_rng = root.substream("fit-perf");
            const auto [rows, lats] = collect_training_samples(p, 30, fit_rng, config);
            coeffs = nnls_fit(rows, lats);
        }
        policy = SchedulerPolicy::adaptive(coeffs);
    } else if (policy_name != "greedy" && policy_name != "baseline") {
        throw DataError("unknown policy: " + policy_name);
    }

    SloSchedule schedule = slo_schedule_text.empty() ? SloSchedule::constant(slo_ms)
                                                     : parse_slo_schedule(slo_schedule_text);

    RngStream sim_rng = root.substream("simulate");
    const ScheduleReport report =
        slo_step_scenario(p, config, stream, ft, policy, schedule, duration_s, sim_rng);

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "events.csv", events_csv(report));
    write_text(fs::path(out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
    std::cout << "requests=" << report.n_requests << " violations=" << report.n_violations
              << " dropped=" << report.n_dropped
              << " violation_rate=" << fmt(report.violation_rate)
              << " ft_done=" << report.ft_iterations_completed
              << " energy_j=" << fmt(report.energy_total_j) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-aware hardware configuration tuning toolkit"};
    app.require_subcommand(1);

    std::string profile = "synthetic-orin", workload, out_dir = "out";
    std::uint64_t seed = 1;
    app.add_option("--profile", profile, "profile name or JSON path")->capture_default_str();
    app.add_option("--workload", workload, "override workload preset (b0|b4|b7)");
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* gs = app.add_subcommand("grid-search", "exhaustive sweep and Pareto frontier");
    double gs_slo = std::numeric_limits<double>::infinity();
    int gs_replicas = 1;
    bool gs_noiseless = false;
    gs->add_option("--slo", gs_slo, "latency SLO in ms (default: none)");
    gs->add_option("--replicas", gs_replicas, "measurements per config")
        ->check(CLI::PositiveNumber);
    gs->add_flag("--noiseless", gs_noiseless, "use the noiseless law");

    auto* tu = app.add_subcommand("tune", "CBO and random-search benchmark across seeds");
    std::string tu_slo_mode;
    double tu_slo = std::numeric_limits<double>::infinity();
    int tu_seeds = 20, tu_max_evals = 30, tu_n_initial = 5;
    double tu_xi = 0.1;
    std::string tu_method = "both";
    int tu_near = 0, tu_grid = 0;
    tu->add_option("--slo-mode", tu_slo_mode, "tight|relaxed (overrides --slo)");
    tu->add_option("--slo", tu_slo, "latency SLO in ms");
    tu->add_option("--seeds", tu_seeds, "number of seeds")->check(CLI::PositiveNumber);
    tu->add_option("--max-evals", tu_max_evals, "evaluation budget per run");
    tu->add_option("--xi", tu_xi, "EI exploration parameter");
    tu->add_option("--n-initial", tu_n_initial, "initial random samples");
    tu->add_option("--method", tu_method, "cbo|rs|both")->capture_default_str();
    tu->add_option("--near", tu_near, "analytic mode: near-optimal count");
    tu->add_option("--grid", tu_grid, "analytic mode: grid size");

    auto* fp = app.add_subcommand("fit-perf", "fit the interference latency predictor");
    int fp_samples = 30, fp_holdout = 10;
    std::string fp_config;
    fp->add_option("--samples", fp_samples, "training samples")->check(CLI::PositiveNumber);
    fp->add_option("--holdout", fp_holdout, "held-out samples")->check(CLI::PositiveNumber);
    fp->add_option("--config", fp_config, "config JSON (or oracle.json) to sample at");

    auto* si = app.add_subcommand("simulate", "discrete-event SLO replay");
    std::string si_config, si_arrivals = "poisson", si_trace_file, si_policy = "greedy";
    std::string si_coeffs, si_slo_schedule;
    double si_rate = 8.0, si_duration = 30.0, si_burst_window = 0.0, si_slo = 700.0;
    bool si_ft = false;
    int si_ft_batch = 0, si_ft_iters = 0, si_ft_output_dim = 0;
    si->add_option("--config", si_config, "config JSON (or oracle.json) path");
    si->add_option("--arrivals", si_arrivals, "uniform|poisson|trace")->capture_default_str();
    si->add_option("--rate", si_rate, "mean arrival rate per second")->capture_default_str();
    si->add_option("--duration", si_duration, "replay duration in seconds")
        ->capture_default_str();
    si->add_option("--trace-file", si_trace_file, "trace path for --arrivals trace");
    si->add_option("--burst-window", si_burst_window,
                   "pick the burstiest window of this many seconds from the trace");
    si->add_option("--policy", si_policy, "greedy|adaptive|baseline")->capture_default_str();
    si->add_option("--coeffs", si_coeffs, "predictor coefficients JSON for adaptive");
    si->add_option("--slo", si_slo, "latency SLO in ms")->capture_default_str();
    si->add_option("--slo-schedule", si_slo_schedule,
                   "stepwise SLO, e.g. 0:250,30:700 (start_s:slo_ms)");
    si->add_flag("--ft", si_ft, "run the profile's fine-tune job alongside inference");
    si->add_option("--ft-batch", si_ft_batch, "fine-tune batch size");
    si->add_option("--ft-iters", si_ft_iters, "fine-tune iterations");
    si->add_option("--ft-output-dim", si_ft_output_dim, "fine-tune output dimension");

    auto* et = app.add_subcommand("expected-trials", "geometric-trials helper");
    int et_near = 0, et_total = 0;
    et->add_option("--near", et_near, "number of near-optimal configurations")->required();
    et->add_option("--total", et_total, "total grid size")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitArgs;
    }

    try {
        if (gs->parsed())
            return cmd_grid_search(profile, workload, gs_slo, gs_replicas, gs_noiseless,
                                   seed, out_dir);
        if (tu->parsed())
            return cmd_tune(profile, workload, tu_slo_mode, tu_slo, tu_seeds, seed,
                            tu_max_evals, tu_xi, tu_n_initial, tu_method, tu_near, tu_grid,
                            out_dir);
        if (fp->parsed())
            return cmd_fit_perf(profile, workload, fp_config, fp_samples, fp_holdout, seed,
                                out_dir);
        if (si->parsed())
            return cmd_simulate(profile, workload, si_config, si_arrivals, si_rate,
                                si_duration, si_trace_file, si_burst_window, si_policy,
                                si_coeffs, si_slo, si_slo_schedule, si_ft, si_ft_batch,
                                si_ft_iters, si_ft_output_dim, seed, out_dir);
        if (et->parsed()) {
            const auto [mean, sd] = rs_expected_trials(et_near, et_total);
            std::cout << "(" << fmt(mean) << ", " << fmt(sd) << ")\n";
            return kExitOk;
        }
    } catch (const InfeasibleSloError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const InvalidConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitArgs;
}
