#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace aniso {

// Self-contained counter-free generator (splitmix64 core, Box-Muller normals).
// Distribution code is hand-rolled so streams are bit-identical across
// standard libraries and thread counts.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Derive an independent stream from a master seed, a purpose tag, and
    // indices. Adding indices never perturbs streams derived with other tags.
    static uint64_t derive(uint64_t seed, std::string_view tag, std::initializer_list<uint64_t> idx = {}) {
        uint64_t h = 0xcbf29ce484222325ULL ^ seed;
        auto mix = [&h](uint64_t v) {
            h ^= v;
            h *= 0x100000001b3ULL;
            h ^= h >> 29;
        };
        for (char c : tag) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
        mix(0x9e3779b97f4a7c15ULL);
        for (uint64_t v : idx) mix(v);
        // final avalanche
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return h;
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace aniso
