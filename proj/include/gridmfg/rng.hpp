#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace gridmfg {

// Philox4x32-10 counter-based generator. Distinct (stream, path, step, salt)
// tuples index disjoint 128-bit counters, so draws are reproducible and
// order-independent regardless of how work is split across threads.
struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::array<std::uint32_t, 4> ctr) {
        auto k0 = static_cast<std::uint32_t>(key);
        auto k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            std::array<std::uint32_t, 4> next{
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
                static_cast<std::uint32_t>(p0)};
            ctr = next;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }
};

// Stream roles. Mean-field representative of region g uses kStreamRegion0 + g;
// N-player node i uses kStreamNode0 + i.
inline constexpr std::uint32_t kStreamCommon = 0;
inline constexpr std::uint32_t kStreamRegion0 = 1;
inline constexpr std::uint32_t kStreamNode0 = 0x10000u;

// Step slots outside the time grid, reserved for initial-condition draws.
inline constexpr std::uint32_t kStepInitQ = 0xFFFF0000u;
inline constexpr std::uint32_t kStepInitS = 0xFFFF0001u;

class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed) : seed_(seed) {}

    // Two independent standard normals for the given counter tuple.
    std::pair<double, double> pair(std::uint32_t stream, std::uint32_t path,
                                   std::uint32_t step, std::uint32_t salt = 0) const {
        auto words = Philox4x32::block(seed_, {step, path, stream, salt});
        std::uint64_t a = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
        std::uint64_t b = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
        // u1 in (0,1], u2 in [0,1): Box-Muller stays finite.
        double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    double one(std::uint32_t stream, std::uint32_t path, std::uint32_t step,
               std::uint32_t salt = 0) const {
        return pair(stream, path, step, salt).first;
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

} // namespace gridmfg
