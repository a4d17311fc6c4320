#pragma once

#include <cstdint>
#include <random>

namespace ipgobs {

/**
 * Seedable generator with a platform-independent output stream.
 *
 * std::mt19937_64 is fully specified by the standard; the uniform mapping is
 * done here rather than through std::uniform_real_distribution, whose output
 * differs between standard library implementations.
 */
class PortableRng {
   public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) built from the top 53 bits of one draw.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

   private:
    std::mt19937_64 engine_;
};

}  // namespace ipgobs
