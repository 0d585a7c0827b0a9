#include "edgetune/sched_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

namespace edgetune {

double SloSchedule::at(double t) const {
    double slo = entries.front().second;
    for (const auto& [start, value] : entries) {
        if (t + 1e-12 >= start) slo = value;
    }
    return slo;
}

void SloSchedule::validate() const {
    if (entries.empty()) throw DataError("slo schedule must be non-empty");
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].first <= entries[i - 1].first)
            throw DataError("slo schedule entries must be sorted by start time");
    for (const auto& [start, slo] : entries)
        if (slo <= 0) throw DataError("slo values must be > 0");
}

int knob_changes(const HardwareConfig& a, const HardwareConfig& b) {
    int n = 0;
    n += a.cpu_freq != b.cpu_freq;
    n += a.gpu_min_freq != b.gpu_min_freq;
    n += a.gpu_max_freq != b.gpu_max_freq;
    n += a.mem_freq != b.mem_freq;
    n += a.batch_size != b.batch_size;
    return n;
}

namespace {

constexpr double kEps = 1e-12;

// Safety margin on service estimates: a dispatch is delayed only while the
// head's slack still covers the estimate inflated by the noise tail.
double dispatch_guard(const DeviceProfile& p, int batch) {
    const int bmin = p.grid.batch_sizes.front();
    const int bmax = p.grid.batch_sizes.back();
    double sigma = p.noise_sigma_small_batch;
    if (bmax > bmin) {
        const double f = static_cast<double>(batch - bmin) / (bmax - bmin);
        sigma += f * (p.noise_sigma_base - p.noise_sigma_small_batch);
    }
    return std::exp(4.0 * sigma);
}

struct InFlight {
    double dispatch_s = 0.0;
    double end_s = 0.0;
    std::vector<long> members;
    int exec_batch = 0;
    bool concurrent = false;
    double power_w = 0.0;
    double seg_start_s = 0.0;
    double latency_ms = 0.0;
    double energy_per_query_mj = 0.0;
};

struct Interval {
    double start = 0.0, end = 0.0;
};

class Engine {
  public:
    Engine(const DeviceProfile& profile, const HardwareConfig& config,
           const ArrivalStream& workload, std::optional<FinetuneSpec> ft,
           const SchedulerPolicy& policy, SloSchedule schedule, double duration_s,
           RngStream& rng)
        : p_(profile),
          config_(config),
          policy_(policy),
          schedule_(std::move(schedule)),
          ft_spec_(std::move(ft)),
          duration_s_(duration_s),
          rng_(rng) {
        schedule_.validate();
        if (!p_.config_on_grid(config_))
            throw InvalidConfigError("simulate: configuration not on grid");
        if (policy_.kind == PolicyKind::Adaptive && ft_spec_) {
            bool any = false;
            for (double t : policy_.coeffs.theta) any = any || t != 0.0;
            if (!any)
                throw DataError("adaptive policy requires fitted predictor coefficients");
        }
        long id = 0;
        for (double t : workload.timestamps_s) {
            if (t > duration_s_ + kEps) break;
            InferenceRequest r;
            r.id = id++;
            r.arrival_s = t;
            r.deadline_s = t + schedule_.at(t) / 1000.0;
            requests_.push_back(r);
        }
        // A zero-length replay window has nothing to schedule.
        ft_remaining_ = (ft_spec_ && duration_s_ > 0) ? ft_spec_->n_iterations : 0;
        cap_ = config_.batch_size;
    }

    ScheduleReport run() {
        double t = 0.0;
        // SLO change events only matter after t = 0.
        std::size_t slo_idx = 0;
        while (slo_idx < schedule_.entries.size() &&
               schedule_.entries[slo_idx].first <= 0.0)
            ++slo_idx;

        bool progressed = true;
        for (long guard = 0;; ++guard) {
            if (guard > 20'000'000 || (!progressed && guard > 0))
                throw std::logic_error("schedule simulation failed to advance");
            if (decide(t)) continue;

            double next = std::numeric_limits<double>::infinity();
            if (arrival_idx_ < requests_.size())
                next = std::min(next, requests_[arrival_idx_].arrival_s);
            if (batch_) next = std::min(next, batch_->end_s);
            if (ft_active_) next = std::min(next, ft_end_s_);
            if (reconfig_until_ > t + kEps) next = std::min(next, reconfig_until_);
            if (slo_idx < schedule_.entries.size() &&
                (ft_remaining_ > 0 || ft_active_ || !queue_.empty() ||
                 arrival_idx_ < requests_.size()))
                next = std::min(next, schedule_.entries[slo_idx].first);
            if (!batch_ && !queue_.empty() && reconfig_until_ <= t + kEps)
                next = std::min(next, dispatch_trigger_s());

            if (!std::isfinite(next)) break;
            progressed = next > t;
            t = std::max(t, next);

            if (batch_ && batch_->end_s <= t + kEps) {
                complete_batch(batch_->end_s);
                progressed = true;
            }
            if (ft_active_ && ft_end_s_ <= t + kEps) {
                complete_ft(ft_end_s_);
                progressed = true;
            }
            if (reconfig_until_ > 0 && reconfig_until_ <= t + kEps &&
                pending_cap_ != 0) {
                cap_ = pending_cap_;
                pending_cap_ = 0;
                progressed = true;
            }
            while (slo_idx < schedule_.entries.size() &&
                   schedule_.entries[slo_idx].first <= t + kEps) {
                push_event(schedule_.entries[slo_idx].first, "slo_change", -1, 0, 0.0, 0.0,
                           schedule_.entries[slo_idx].second, -1);
                ++slo_idx;
                progressed = true;
            }
            while (arrival_idx_ < requests_.size() &&
                   requests_[arrival_idx_].arrival_s <= t + kEps) {
                const auto& r = requests_[arrival_idx_];
                push_event(r.arrival_s, "arrival", r.id, 0, 0.0, 0.0,
                           schedule_.at(r.arrival_s), -1);
                queue_.push_back(arrival_idx_);
                ++arrival_idx_;
                progressed = true;
            }
        }
        return finalize(t);
    }

  private:
    // One decision at time t; returns true when an action was taken.
    bool decide(double t) {
        if (reconfig_until_ > t + kEps) return false;

        // Admission of the next fine-tune iteration.
        if (ft_spec_ && ft_remaining_ > 0 && !ft_active_) {
            if (policy_.kind == PolicyKind::Greedy) {
                start_ft(t);
                return true;
            }
            if (!batch_ && queue_.empty()) {
                const int feasible = best_feasible_cap(t);
                if (feasible > 0) {
                    if (feasible != cap_) {
                        begin_reconfig(t, feasible);
                        return true;
                    }
                    start_ft(t);
                    return true;
                }
            }
        }

        // Restore the configured batch cap once fine-tuning is done.
        if (policy_.kind == PolicyKind::Adaptive && ft_spec_ && ft_remaining_ == 0 &&
            !ft_active_ && cap_ != config_.batch_size && pending_cap_ == 0) {
            begin_reconfig(t, config_.batch_size);
            return true;
        }

        if (!batch_ && !queue_.empty()) {
            // Drop requests already past their deadline at dispatch time.
            while (!queue_.empty() &&
                   requests_[queue_.front()].deadline_s < t - kEps) {
                auto& r = requests_[queue_.front()];
                r.dropped = true;
                push_event(t, "drop", r.id, 0, 0.0, 0.0, schedule_.at(t), -1);
                queue_.pop_front();
            }
            if (queue_.empty()) return true;

            const int waiting = static_cast<int>(queue_.size());
            const int take_max = std::min(waiting, cap_);
            if (waiting >= cap_ || ft_drain_mode()) {
                dispatch(t, take_max, exec_batch_size(take_max));
                return true;
            }
            if (t >= dispatch_trigger_s() - 1e-9) {
                // Serve only as many requests as the head's slack can absorb;
                // later arrivals have later deadlines and can wait.
                const double slack_ms =
                    (requests_[queue_.front()].deadline_s - t) * 1000.0;
                int take = 0;
                for (int k = 1; k <= take_max; ++k) {
                    const int eb = exec_batch_size(k);
                    if (service_estimate_ms(eb) * dispatch_guard(p_, eb) <= slack_ms)
                        take = k;
                }
                if (take == 0) take = take_max;  // head is already doomed; drain
                dispatch(t, take, exec_batch_size(take));
                return true;
            }
        }
        return false;
    }

    // Instant at which the head's slack crosses the service estimate.
    double dispatch_trigger_s() const {
        const int waiting = static_cast<int>(queue_.size());
        const int exec_b = exec_batch_size(std::min(waiting, cap_));
        const double est_ms = service_estimate_ms(exec_b) * dispatch_guard(p_, exec_b);
        return requests_[queue_.front()].deadline_s - est_ms / 1000.0;
    }

    // Smallest grid batch size covering n queued requests (padded execution).
    int exec_batch_size(int n) const {
        for (int b : p_.grid.batch_sizes)
            if (b >= n) return b;
        return p_.grid.batch_sizes.back();
    }

    double service_estimate_ms(int exec_b) const {
        HardwareConfig c = config_;
        c.batch_size = exec_b;
        if (ft_active_ && policy_.kind == PolicyKind::Adaptive) {
            WorkloadFeatures f = inference_features(p_.workload, exec_b);
            f.flops_ft_gflop = ft_spec_->flops_per_iter_gflop;
            f.ai_ft = ft_spec_->ai_flop_per_byte;
            return predict(policy_.coeffs, f);
        }
        return noiseless_measure(p_, c).latency_ms;
    }

    // Largest batch cap whose predicted co-located latency fits the SLO with
    // the same noise margin the dispatcher uses.
    int best_feasible_cap(double t) const {
        const double slo = schedule_.at(t);
        for (auto it = p_.grid.batch_sizes.rbegin(); it != p_.grid.batch_sizes.rend();
             ++it) {
            if (*it > config_.batch_size) continue;
            WorkloadFeatures f = inference_features(p_.workload, *it);
            f.flops_ft_gflop = ft_spec_->flops_per_iter_gflop;
            f.ai_ft = ft_spec_->ai_flop_per_byte;
            // 5% reserve beyond the dispatch guard keeps admissions off the
            // regime boundary.
            if (predict(policy_.coeffs, f) * dispatch_guard(p_, *it) * 1.05 <= slo)
                return *it;
        }
        return 0;
    }

    // Admission waits for an empty queue; while an iteration is pending the
    // dispatcher drains eagerly so that moment arrives. Requests admitted
    // after the iteration starts carry full slack and batch affordably.
    bool ft_drain_mode() const {
        return policy_.kind == PolicyKind::Adaptive && ft_spec_ && ft_remaining_ > 0 &&
               !ft_active_;
    }

    void begin_reconfig(double t, int new_cap) {
        const double cost_ms = std::min(kReconfigMsPerKnob, kReconfigMsCeiling);
        reconfig_until_ = t + cost_ms / 1000.0;
        pending_cap_ = new_cap;
        reconfig_intervals_.push_back(Interval{t, reconfig_until_});
        push_event(t, "reconfig", -1, new_cap, cost_ms, 0.0, schedule_.at(t), -1);
    }

    void start_ft(double t) {
        ft_active_ = true;
        const int iter_index = ft_spec_->n_iterations - ft_remaining_ + 1;
        ft_iter_index_ = iter_index;
        ft_start_s_ = t;
        ft_end_s_ = t + ft_spec_->iter_duration_ms_standalone / 1000.0;
        push_event(t, "ft_start", -1, 0, ft_spec_->iter_duration_ms_standalone, 0.0,
                   schedule_.at(t), iter_index);

        // A batch already in flight is re-priced with interference from here on.
        if (batch_ && !batch_->concurrent) {
            HardwareConfig c = config_;
            c.batch_size = batch_->exec_batch;
            const Measurement alone = noiseless_measure(p_, c);
            const Measurement conc = noiseless_measure_concurrent(p_, c, *ft_spec_);
            const double ratio = conc.latency_ms / alone.latency_ms;
            close_batch_segment(t);
            batch_->end_s = t + (batch_->end_s - t) * ratio;
            batch_->concurrent = true;
            batch_->power_w =
                conc.energy_per_query_mj * batch_->exec_batch / conc.latency_ms;
            batch_->seg_start_s = t;
            batch_->latency_ms = (batch_->end_s - batch_->dispatch_s) * 1000.0;
        }
    }

    void complete_ft(double t) {
        ft_active_ = false;
        --ft_remaining_;
        ft_records_.push_back(FtIterationRecord{ft_iter_index_, ft_start_s_, t});
        ft_intervals_.push_back(Interval{ft_start_s_, t});
        push_event(t, "ft_end", -1, 0, (t - ft_start_s_) * 1000.0, 0.0, schedule_.at(t),
                   ft_iter_index_);
    }

    void dispatch(double t, int take, int exec_b) {
        HardwareConfig c = config_;
        c.batch_size = exec_b;
        const Measurement m = ft_active_
                                  ? measure_concurrent(p_, c, *ft_spec_, rng_)
                                  : measure(p_, c, rng_);
        InFlight b;
        b.dispatch_s = t;
        b.end_s = t + m.latency_ms / 1000.0;
        b.exec_batch = exec_b;
        b.concurrent = ft_active_;
        b.power_w = m.energy_per_query_mj * exec_b / m.latency_ms;
        b.seg_start_s = t;
        b.latency_ms = m.latency_ms;
        b.energy_per_query_mj = m.energy_per_query_mj;
        for (int i = 0; i < take; ++i) {
            b.members.push_back(requests_[queue_.front()].id);
            queue_.pop_front();
        }
        push_event(t, "dispatch", b.members.front(), static_cast<int>(b.members.size()),
                   m.latency_ms, m.energy_per_query_mj, schedule_.at(t),
                   ft_active_ ? ft_iter_index_ : -1);
        batch_ = b;
    }

    void close_batch_segment(double t) {
        if (t > batch_->seg_start_s + kEps)
            busy_segments_.push_back(PowerSegment{batch_->seg_start_s, t, batch_->power_w});
    }

    void complete_batch(double t) {
        close_batch_segment(t);
        for (long id : batch_->members) {
            auto& r = requests_[static_cast<std::size_t>(id)];
            r.completion_s = t;
            push_event(t, "complete", id, static_cast<int>(batch_->members.size()),
                       batch_->latency_ms, batch_->energy_per_query_mj,
                       schedule_.at(r.arrival_s), -1);
        }
        batch_.reset();
    }

    void push_event(double t, std::string name, long req, int batch, double latency_ms,
                    double energy_mj, double slo_ms, int ft_iter) {
        // Same-instant events can differ by rounding; the trace clock must
        // never run backwards.
        if (!events_.empty()) t = std::max(t, events_.back().time_s);
        events_.push_back(
            TraceEvent{t, std::move(name), req, batch, latency_ms, energy_mj, slo_ms, ft_iter});
    }

    ScheduleReport finalize(double t_end) {
        ScheduleReport rep;
        rep.n_requests = requests_.size();
        for (const auto& r : requests_) {
            if (r.dropped)
                ++rep.n_dropped;
            else if (r.completion_s && *r.completion_s > r.deadline_s + kEps)
                ++rep.n_violations;
        }
        rep.violation_rate =
            rep.n_requests
                ? static_cast<double>(rep.n_violations + rep.n_dropped) / rep.n_requests
                : 0.0;
        rep.ft_iterations_completed =
            ft_spec_ ? ft_spec_->n_iterations - ft_remaining_ : 0;
        rep.ft_iterations = ft_records_;
        if (!ft_records_.empty())
            rep.ft_makespan_s = ft_records_.back().end_s - ft_records_.front().start_s;
        rep.events = events_;
        rep.requests = requests_;

        // Piecewise-constant power trace over the whole horizon.
        const double horizon = std::max(duration_s_, t_end);
        std::vector<double> cuts{0.0, horizon};
        for (const auto& s : busy_segments_) {
            cuts.push_back(s.start_s);
            cuts.push_back(s.end_s);
        }
        for (const auto& i : ft_intervals_) {
            cuts.push_back(i.start);
            cuts.push_back(i.end);
        }
        for (const auto& i : reconfig_intervals_) {
            cuts.push_back(i.start);
            cuts.push_back(i.end);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end(),
                               [](double a, double b) { return std::abs(a - b) < kEps; }),
                   cuts.end());
        const double p_idle = idle_power_w(p_, config_);
        const double p_ft = finetune_solo_power_w(p_, config_);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1];
            if (b > horizon + kEps) break;
            const double mid = 0.5 * (a + b);
            double power = p_idle;
            bool in_batch = false;
            for (const auto& s : busy_segments_) {
                if (mid >= s.start_s && mid < s.end_s) {
                    power = s.power_w;
                    in_batch = true;
                    break;
                }
            }
            if (!in_batch) {
                for (const auto& iv : ft_intervals_) {
                    if (mid >= iv.start && mid < iv.end) {
                        power = p_ft;
                        break;
                    }
                }
            }
            if (!rep.power_trace.empty() &&
                std::abs(rep.power_trace.back().power_w - power) < 1e-12 &&
                std::abs(rep.power_trace.back().end_s - a) < kEps) {
                rep.power_trace.back().end_s = b;
            } else {
                rep.power_trace.push_back(PowerSegment{a, b, power});
            }
        }
        double energy_j = 0.0;
        for (const auto& s : rep.power_trace) energy_j += s.power_w * (s.end_s - s.start_s);
        rep.energy_total_j = energy_j;
        return rep;
    }

    const DeviceProfile& p_;
    HardwareConfig config_;
    SchedulerPolicy policy_;
    SloSchedule schedule_;
    std::optional<FinetuneSpec> ft_spec_;
    double duration_s_;
    RngStream& rng_;

    std::vector<InferenceRequest> requests_;
    std::size_t arrival_idx_ = 0;
    std::deque<std::size_t> queue_;  // indices into requests_
    std::optional<InFlight> batch_;

    int cap_ = 1;
    int pending_cap_ = 0;
    double reconfig_until_ = -1.0;

    bool ft_active_ = false;
    int ft_remaining_ = 0;
    int ft_iter_index_ = 0;
    double ft_start_s_ = 0.0, ft_end_s_ = 0.0;

    std::vector<TraceEvent> events_;
    std::vector<PowerSegment> busy_segments_;
    std::vector<Interval> ft_intervals_;
    std::vector<Interval> reconfig_intervals_;
    std::vector<FtIterationRecord> ft_records_;
};

}  // namespace

ScheduleReport simulate(const DeviceProfile& profile, const HardwareConfig& config,
                        const ArrivalStream& workload,
                        const std::optional<FinetuneSpec>& ft, const SchedulerPolicy& policy,
                        double slo_ms, double duration_s, RngStream& rng) {
    if (duration_s < 0) throw DataError("simulate: duration must be >= 0");
    Engine e(profile, config, workload, ft, policy, SloSchedule::constant(slo_ms),
             duration_s, rng);
    return e.run();
}

ScheduleReport baseline_simulate(const DeviceProfile& profile, const HardwareConfig& config,
                                 const ArrivalStream& workload, double slo_ms,
                                 double duration_s, RngStream& rng) {
    return simulate(profile, config, workload, std::nullopt, SchedulerPolicy::greedy(),
                    slo_ms, duration_s, rng);
}

ScheduleReport slo_step_scenario(const DeviceProfile& profile, const HardwareConfig& config,
                                 const ArrivalStream& workload,
                                 const std::optional<FinetuneSpec>& ft,
                                 const SchedulerPolicy& policy, const SloSchedule& schedule,
                                 double duration_s, RngStream& rng) {
    Engine e(profile, config, workload, ft, policy, schedule, duration_s, rng);
    return e.run();
}

EnergyComparison energy_comparison(const DeviceProfile& profile,
                                   const ArrivalStream& workload,
                                   const std::optional<FinetuneSpec>& ft,
                                   const HardwareConfig& tuned_config,
                                   const HardwareConfig& default_config,
                                   const SchedulerPolicy& policy, double slo_ms,
                                   double duration_s, std::uint64_t seed) {
    RngStream r1(seed), r2(seed);
    const ScheduleReport tuned =
        simulate(profile, tuned_config, workload, ft, policy, slo_ms, duration_s, r1);
    const ScheduleReport fallback =
        simulate(profile, default_config, workload, ft, policy, slo_ms, duration_s, r2);
    EnergyComparison cmp;
    cmp.energy_tuned_j = tuned.energy_total_j;
    cmp.energy_default_j = fallback.energy_total_j;
    cmp.savings_fraction =
        fallback.energy_total_j != 0.0
            ? (fallback.energy_total_j - tuned.energy_total_j) / fallback.energy_total_j
            : 0.0;
    return cmp;
}

}  // namespace edgetune
