#pragma once

// Counter-based noise for reproducible parallel Monte Carlo.
//
// Every draw is a pure function of (seed, trajectory id, step index, stream),
// so trajectories can be simulated in any order on any number of threads and
// still see exactly the same noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace homodyne {

/// Philox4x32-10 block cipher (Salmon et al., SC'11).
class Philox4x32
{
  public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    [[nodiscard]] constexpr counter_type operator()(counter_type ctr) const
    {
        key_type key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr counter_type single_round(const counter_type& c, const key_type& k)
    {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    key_type key_;
};

/// Independent noise channels drawn at the same (trajectory, step).
enum class NoiseChannel : std::uint32_t
{
    wiener = 0,
    bridge = 1,
};

/// Noise source for one trajectory.
///
/// `wiener_increment` and `uniform` advance an internal step counter; the
/// keyed accessors `gaussian_at`/`uniform_at` give random access.
class NoiseStream
{
  public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory_id)
        : cipher_(seed), trajectory_(static_cast<std::uint32_t>(trajectory_id))
    {
        if (trajectory_id > 0xFFFFFFFFull)
            throw std::out_of_range("trajectory id exceeds 32 bits");
    }

    /// Uniform in the open interval (0, 1) with 53 bits of resolution.
    [[nodiscard]] double uniform_at(std::uint64_t step, NoiseChannel ch = NoiseChannel::bridge) const
    {
        const auto out = block(step, ch);
        return to_unit(out[0], out[1]);
    }

    /// Standard normal via the Box-Muller cosine branch.
    [[nodiscard]] double gaussian_at(std::uint64_t step, NoiseChannel ch = NoiseChannel::wiener) const
    {
        const auto out = block(step, ch);
        const double u1 = to_unit(out[0], out[1]);
        const double u2 = to_unit(out[2], out[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Next N(0, dt) draw. Requires dt > 0.
    double wiener_increment(double dt)
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("dt must be > 0");
        return std::sqrt(dt) * gaussian_at(step_++);
    }

    double uniform() { return uniform_at(step_++); }

    [[nodiscard]] std::uint64_t position() const { return step_; }
    void seek(std::uint64_t step) { step_ = step; }

  private:
    [[nodiscard]] Philox4x32::counter_type block(std::uint64_t step, NoiseChannel ch) const
    {
        return cipher_({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                        trajectory_, static_cast<std::uint32_t>(ch)});
    }

    static double to_unit(std::uint32_t hi, std::uint32_t lo)
    {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    Philox4x32 cipher_;
    std::uint32_t trajectory_;
    std::uint64_t step_ = 0;
};

} // namespace homodyne
