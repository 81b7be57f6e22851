#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sentipipe {

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Dense row-major real matrix. The only tensor shape in this codebase;
// sequences are handled as one Mat per timestep.
template <class T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {
        check(r >= 0 && c >= 0, "Mat: negative dimension");
    }

    static Mat full(int r, int c, T v) {
        Mat m(r, c);
        std::fill(m.data.begin(), m.data.end(), v);
        return m;
    }

    T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    T* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return data.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

template <class T>
bool all_finite(const Mat<T>& m) {
    for (T v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// Seeded deterministic generator (splitmix64). Identical seed and call
// sequence give bit-identical streams on every platform.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform in [0, n)
    uint64_t below(uint64_t n) {
        check(n > 0, "Rng::below: n must be positive");
        return next() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <class It>
    void shuffle(It first, It last) {
        auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }
};

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 14695981039346656037ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Stage-seed derivation: every stage of a run draws from derive(root, name),
// so stages are independently reproducible.
inline Rng derive_rng(uint64_t root_seed, std::string_view stage) {
    Rng r(root_seed ^ fnv1a64(stage));
    r.next();  // decorrelate nearby roots
    return r;
}

}  // namespace sentipipe
