#pragma once

#include <cstdint>
#include <vector>

#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/rng.hpp"

namespace kcsm {

/// Packed occupation variables, one bit per vertex (1 = occupied).
/// Value type: cheap to copy, safe to send between threads.
class SpinConfig {
  public:
    SpinConfig() = default;
    explicit SpinConfig(int n, bool fill = false)
        : n_(n), words_((n + 63) / 64, fill ? ~uint64_t{0} : 0) {
        trim();
    }

    int size() const { return n_; }
    bool get(int i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    void set(int i, bool v) {
        const uint64_t m = uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= m;
        else
            words_[i >> 6] &= ~m;
    }
    void flip(int i) { words_[i >> 6] ^= uint64_t{1} << (i & 63); }

    int count_occupied() const {
        int c = 0;
        for (uint64_t w : words_) c += __builtin_popcountll(w);
        return c;
    }

    bool operator==(const SpinConfig&) const = default;

    /// Sitewise partial order: *this <= other.
    bool dominated_by(const SpinConfig& other) const {
        for (size_t w = 0; w < words_.size(); ++w)
            if (words_[w] & ~other.words_[w]) return false;
        return true;
    }

    const std::vector<uint64_t>& words() const { return words_; }

    /// Pack into one machine word (state-space enumeration; requires n <= 32).
    uint32_t state_index() const { return static_cast<uint32_t>(words_.empty() ? 0 : words_[0]); }
    static SpinConfig from_state_index(int n, uint32_t s) {
        SpinConfig c(n);
        if (!c.words_.empty()) c.words_[0] = s;
        return c;
    }

  private:
    void trim() {
        if (n_ & 63 && !words_.empty()) words_.back() &= (uint64_t{1} << (n_ & 63)) - 1;
    }
    int n_ = 0;
    std::vector<uint64_t> words_;
};

/// Bernoulli(p) product sample, reproducible from the rng state.
inline SpinConfig sample_config(const ModelSpec& spec, const SiteGraph& g, Rng& rng) {
    SpinConfig c(g.num_vertices());
    for (int i = 0; i < g.num_vertices(); ++i)
        if (rng.bernoulli(spec.p)) c.set(i, true);
    return c;
}

} // namespace kcsm
