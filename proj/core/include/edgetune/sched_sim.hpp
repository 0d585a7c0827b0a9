#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgetune/device_sim.hpp"
#include "edgetune/perf_model.hpp"
#include "edgetune/workload.hpp"

namespace edgetune {

struct InferenceRequest {
    long id = 0;
    double arrival_s = 0.0;
    double deadline_s = 0.0;
    std::optional<double> completion_s;
    bool dropped = false;
};

enum class PolicyKind { Greedy, Adaptive };

// Greedy starts fine-tune iterations the moment any are pending. Adaptive
// gates each iteration on the fitted latency predictor and trades batch size
// for feasibility.
struct SchedulerPolicy {
    PolicyKind kind = PolicyKind::Greedy;
    PerfModelCoeffs coeffs;  // required for Adaptive

    static SchedulerPolicy greedy() { return SchedulerPolicy{PolicyKind::Greedy, {}}; }
    static SchedulerPolicy adaptive(PerfModelCoeffs c) {
        return SchedulerPolicy{PolicyKind::Adaptive, c};
    }
};

struct TraceEvent {
    double time_s = 0.0;
    std::string event;  // arrival|dispatch|complete|drop|ft_start|ft_end|slo_change|reconfig
    long request_id = -1;
    int batch = 0;
    double latency_ms = 0.0;
    double energy_mj = 0.0;
    double slo_ms = 0.0;
    int ft_iter = -1;
};

struct PowerSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    double power_w = 0.0;
};

struct FtIterationRecord {
    int index = 0;  // 1-based
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ScheduleReport {
    std::size_t n_requests = 0;
    std::size_t n_violations = 0;  // completed past deadline
    std::size_t n_dropped = 0;
    double violation_rate = 0.0;  // (violations + dropped) / requests
    int ft_iterations_completed = 0;
    double ft_makespan_s = 0.0;  // first iteration start to last iteration end
    double energy_total_j = 0.0;
    std::vector<TraceEvent> events;
    std::vector<PowerSegment> power_trace;
    std::vector<FtIterationRecord> ft_iterations;
    std::vector<InferenceRequest> requests;
};

// Piecewise latency SLO: (start_s, slo_ms) entries, sorted by start.
struct SloSchedule {
    std::vector<std::pair<double, double>> entries;

    static SloSchedule constant(double slo_ms) { return SloSchedule{{{0.0, slo_ms}}}; }
    double at(double t) const;
    void validate() const;
};

// Replays the arrival stream (truncated at duration_s) against one device
// configuration. Requests batch FIFO up to the active batch cap; a batch
// dispatches when the cap is reached or the head's slack runs out. A pending
// fine-tune job runs one iteration at a time under the policy's admission
// rule; co-located batches take the concurrent service time. Changing the
// batch cap costs one knob write (17 ms); a reconfiguration never exceeds
// 150 ms. Requests already past their deadline at dispatch are dropped.
ScheduleReport simulate(const DeviceProfile& profile, const HardwareConfig& config,
                        const ArrivalStream& workload,
                        const std::optional<FinetuneSpec>& ft, const SchedulerPolicy& policy,
                        double slo_ms, double duration_s, RngStream& rng);

// simulate() with no fine-tune job.
ScheduleReport baseline_simulate(const DeviceProfile& profile, const HardwareConfig& config,
                                 const ArrivalStream& workload, double slo_ms,
                                 double duration_s, RngStream& rng);

// simulate() under a stepwise SLO; the adaptive policy re-evaluates
// admission at every SLO change. The report records when each fine-tune
// iteration ran.
ScheduleReport slo_step_scenario(const DeviceProfile& profile, const HardwareConfig& config,
                                 const ArrivalStream& workload,
                                 const std::optional<FinetuneSpec>& ft,
                                 const SchedulerPolicy& policy, const SloSchedule& schedule,
                                 double duration_s, RngStream& rng);

struct EnergyComparison {
    double energy_tuned_j = 0.0;
    double energy_default_j = 0.0;
    double savings_fraction = 0.0;  // (default - tuned) / default
};

// Runs the same replay twice with identical seeds under two configurations.
EnergyComparison energy_comparison(const DeviceProfile& profile,
                                   const ArrivalStream& workload,
                                   const std::optional<FinetuneSpec>& ft,
                                   const HardwareConfig& tuned_config,
                                   const HardwareConfig& default_config,
                                   const SchedulerPolicy& policy, double slo_ms,
                                   double duration_s, std::uint64_t seed);

// Per-knob configuration-write cost and its ceiling.
constexpr double kReconfigMsPerKnob = 17.0;
constexpr double kReconfigMsCeiling = 150.0;

// Number of knob files that differ between two configurations.
int knob_changes(const HardwareConfig& a, const HardwareConfig& b);

}  // namespace edgetune
