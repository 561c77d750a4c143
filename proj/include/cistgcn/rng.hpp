#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace cistgcn {

// xoroshiro128++ with a splitmix64-expanded seed. The 16-byte state matches
// the checkpoint rng field, and all distributions are derived from raw u64
// draws so streams are identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        s0_ = splitmix64(seed);
        s1_ = splitmix64(s0_ ^ 0x9e3779b97f4a7c15ULL);
        if (s0_ == 0 && s1_ == 0) s1_ = 1;
    }

    Rng(uint64_t s0, uint64_t s1) : s0_(s0), s1_(s1) {
        if (s0_ == 0 && s1_ == 0) s1_ = 1;
    }

    uint64_t next_u64() {
        uint64_t a = s0_, b = s1_;
        uint64_t r = rotl(a + b, 17) + a;
        b ^= a;
        s0_ = rotl(a, 49) ^ b ^ (b << 21);
        s1_ = rotl(b, 28);
        return r;
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int64_t uniform_int(int64_t n) {
        return n <= 1 ? 0 : static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
    }

    // Box-Muller, no cached spare so the 16-byte state captures everything.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    template <typename V>
    void shuffle(V& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = uniform_int(i + 1);
            std::swap(v[i], v[j]);
        }
    }

    uint64_t state0() const { return s0_; }
    uint64_t state1() const { return s1_; }
    void set_state(uint64_t s0, uint64_t s1) {
        s0_ = s0;
        s1_ = s1;
        if (s0_ == 0 && s1_ == 0) s1_ = 1;
    }

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Deterministic seed derivation, e.g. derive(seed, epoch, sample_index).
    static uint64_t derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
        uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ a);
        h = splitmix64(h ^ b);
        h = splitmix64(h ^ c);
        return h;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s0_, s1_;
};

}  // namespace cistgcn
