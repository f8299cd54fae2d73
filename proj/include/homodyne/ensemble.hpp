#pragma once

// Monte-Carlo ensembles over trajectories.
//
// Trajectories are grouped into fixed blocks; each block is reduced in
// trajectory order and blocks are merged in block order, so every statistic is
// bit-identical whatever the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "homodyne/protocols.hpp"
#include "homodyne/sde.hpp"

namespace homodyne {

/// Welford accumulator with Chan's pairwise merge.
struct RunningStats
{
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v)
    {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }

    void merge(const RunningStats& o)
    {
        if (o.n == 0)
            return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(o.n);
        const double d = o.mean - mean;
        const double total = na + nb;
        mean += d * nb / total;
        m2 += o.m2 + d * d * na * nb / total;
        n += o.n;
    }

    [[nodiscard]] double variance() const
    {
        return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    }

    [[nodiscard]] double standard_error() const
    {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

/// Number of worker threads: explicit value, else HOMODYNE_THREADS, else the
/// machine's parallelism.
inline unsigned resolve_threads(std::optional<unsigned> requested = std::nullopt)
{
    if (requested && *requested > 0)
        return *requested;
    if (const char* env = std::getenv("HOMODYNE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct TrajectoryFault
{
    std::uint64_t trajectory_id;
    std::uint64_t step;
};

class EnsembleFault : public std::runtime_error
{
  public:
    explicit EnsembleFault(std::vector<TrajectoryFault> faults)
        : std::runtime_error(describe(faults)), faults_(std::move(faults))
    {
    }

    [[nodiscard]] const std::vector<TrajectoryFault>& faults() const { return faults_; }

  private:
    static std::string describe(const std::vector<TrajectoryFault>& faults)
    {
        std::string s = std::to_string(faults.size()) + " trajectories hit integration faults:";
        for (std::size_t i = 0; i < std::min<std::size_t>(faults.size(), 10); ++i)
            s += " " + std::to_string(faults[i].trajectory_id) + "@" +
                 std::to_string(faults[i].step);
        return s;
    }

    std::vector<TrajectoryFault> faults_;
};

inline constexpr std::uint64_t trajectory_block_size = 64;

/// Calls `fn(block, first_traj, last_traj)` for every block on a worker pool.
template <class Fn>
void for_each_block(std::uint64_t n_traj, unsigned threads, Fn&& fn)
{
    const std::uint64_t n_blocks = (n_traj + trajectory_block_size - 1) / trajectory_block_size;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= n_blocks)
                return;
            try {
                fn(b, b * trajectory_block_size,
                   std::min(n_traj, (b + 1) * trajectory_block_size));
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), n_blocks));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (unsigned i = 0; i < n_workers; ++i)
            pool.emplace_back(worker);
    }
    if (error)
        std::rethrow_exception(error);
}

struct EnsembleStats
{
    std::vector<double> time_grid;
    std::vector<double> mean_L;
    std::vector<double> stderr_L;
    std::uint64_t n_traj = 0;
};

/// Pointwise mean and standard error of L on the recording grid.
inline EnsembleStats ensemble_mean_entropy(const ModelParams& params, const Protocol& protocol,
                                           const SimConfig& cfg, unsigned threads = 1)
{
    params.validate();
    (void)cfg.validate(params.gamma);
    const std::uint64_t n_points = cfg.n_steps() / cfg.record_stride + 1;
    const std::uint64_t n_blocks =
        (cfg.n_traj + trajectory_block_size - 1) / trajectory_block_size;
    std::vector<std::vector<RunningStats>> blocks(n_blocks);
    std::vector<std::vector<TrajectoryFault>> block_faults(n_blocks);

    for_each_block(cfg.n_traj, threads, [&](std::uint64_t b, std::uint64_t first,
                                            std::uint64_t last) {
        std::vector<RunningStats> acc(n_points);
        for (std::uint64_t id = first; id < last; ++id) {
            std::vector<double> values;
            values.reserve(n_points);
            try {
                with_system(params, protocol, [&](auto sys) {
                    run_trajectory(
                        sys, cfg, id, [&](const auto&, double L0) { values.push_back(L0); },
                        [&](const StepEvent& ev, const auto&) {
                            if (ev.step % cfg.record_stride == 0)
                                values.push_back(ev.entropy);
                            return true;
                        });
                });
            } catch (const IntegrationFault& f) {
                block_faults[b].push_back({f.trajectory_id(), f.step()});
                continue;
            }
            for (std::size_t i = 0; i < values.size(); ++i)
                acc[i].add(values[i]);
        }
        blocks[b] = std::move(acc);
    });

    std::vector<TrajectoryFault> faults;
    for (auto& bf : block_faults)
        faults.insert(faults.end(), bf.begin(), bf.end());
    if (!faults.empty())
        throw EnsembleFault(std::move(faults));

    std::vector<RunningStats> total(n_points);
    for (const auto& blk : blocks)
        for (std::size_t i = 0; i < n_points; ++i)
            total[i].merge(blk[i]);

    EnsembleStats out;
    out.n_traj = cfg.n_traj;
    out.time_grid.resize(n_points);
    out.mean_L.resize(n_points);
    out.stderr_L.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        out.time_grid[i] = static_cast<double>(i * cfg.record_stride) * cfg.dt;
        out.mean_L[i] = total[i].mean;
        out.stderr_L[i] = total[i].standard_error();
    }
    return out;
}

struct PassageStats
{
    double target_L = 0.0;
    std::optional<double> mean_T;  // nullopt when every sample is censored
    double stderr_T = 0.0;
    std::uint64_t censored = 0;
    std::uint64_t n_traj = 0;

    [[nodiscard]] bool all_censored() const { return !mean_T.has_value(); }
};

/// Mean and standard error of the first-passage time to each target over the
/// non-censored trajectories, plus the censored count.
inline std::vector<PassageStats> mean_first_passage(const ModelParams& params,
                                                    const Protocol& protocol,
                                                    const std::vector<double>& targets,
                                                    const SimConfig& cfg, unsigned threads = 1,
                                                    bool bridge_correction = true)
{
    params.validate();
    (void)cfg.validate(params.gamma);
    for (double t : targets)
        if (!(t > 0.0 && t < 0.5))
            throw std::invalid_argument("first-passage targets must lie in (0, 1/2)");
    const std::size_t n_targets = targets.size();
    const std::uint64_t n_blocks =
        (cfg.n_traj + trajectory_block_size - 1) / trajectory_block_size;
    struct BlockResult
    {
        std::vector<RunningStats> stats;
        std::vector<std::uint64_t> censored;
        std::vector<TrajectoryFault> faults;
    };
    std::vector<BlockResult> blocks(n_blocks);

    for_each_block(cfg.n_traj, threads, [&](std::uint64_t b, std::uint64_t first,
                                            std::uint64_t last) {
        BlockResult r{std::vector<RunningStats>(n_targets),
                      std::vector<std::uint64_t>(n_targets, 0), {}};
        for (std::uint64_t id = first; id < last; ++id) {
            std::vector<FirstPassage> fps;
            try {
                fps = with_system(params, protocol, [&](auto sys) {
                    return first_passage_times(std::move(sys), cfg, id, targets,
                                               bridge_correction);
                });
            } catch (const IntegrationFault& f) {
                r.faults.push_back({f.trajectory_id(), f.step()});
                continue;
            }
            for (std::size_t j = 0; j < n_targets; ++j) {
                if (fps[j].censored())
                    ++r.censored[j];
                else
                    r.stats[j].add(*fps[j].time);
            }
        }
        blocks[b] = std::move(r);
    });

    std::vector<TrajectoryFault> faults;
    for (auto& blk : blocks)
        faults.insert(faults.end(), blk.faults.begin(), blk.faults.end());
    if (!faults.empty())
        throw EnsembleFault(std::move(faults));

    std::vector<PassageStats> out(n_targets);
    for (std::size_t j = 0; j < n_targets; ++j) {
        RunningStats total;
        std::uint64_t censored = 0;
        for (const auto& blk : blocks) {
            total.merge(blk.stats[j]);
            censored += blk.censored[j];
        }
        out[j].target_L = targets[j];
        out[j].n_traj = cfg.n_traj;
        out[j].censored = censored;
        if (total.n > 0) {
            out[j].mean_T = total.mean;
            out[j].stderr_T = total.standard_error();
        }
    }
    return out;
}

} // namespace homodyne
