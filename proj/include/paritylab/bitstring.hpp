#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace paritylab {

// Exhaustive enumeration works on 2^n inputs; above this ceiling we refuse
// instead of silently thrashing.
inline constexpr int kMaxEnumerationBits = 24;

// n-bit string with positions 1..n. The integer encoding is documented and
// fixed: bit (j-1) of word() is x_j, so counter order is the enumeration
// order of the whole input space.
class BitString {
public:
    BitString(std::uint32_t word, int n) : word_(word), n_(n) {
        if (n < 1 || n > kMaxEnumerationBits) {
            throw std::invalid_argument("BitString: n must be in 1.." +
                                        std::to_string(kMaxEnumerationBits));
        }
        if ((word >> n) != 0) {
            throw std::invalid_argument("BitString: word has bits above position n");
        }
    }

    int size() const { return n_; }
    std::uint32_t word() const { return word_; }

    int bit(int pos) const {
        check_pos(pos);
        return static_cast<int>((word_ >> (pos - 1)) & 1u);
    }

    int ones() const { return std::popcount(word_); }

    friend bool operator==(const BitString& a, const BitString& b) {
        return a.n_ == b.n_ && a.word_ == b.word_;
    }

private:
    friend BitString flip_bit(const BitString&, int);
    friend BitString complement(const BitString&);

    void check_pos(int pos) const {
        if (pos < 1 || pos > n_) throw std::invalid_argument("BitString: position out of range");
    }

    std::uint32_t word_;
    int n_;
};

inline BitString flip_bit(const BitString& x, int pos) {
    x.check_pos(pos);
    return BitString(x.word_ ^ (1u << (pos - 1)), x.n_);
}

inline BitString complement(const BitString& x) {
    const std::uint32_t all = (x.n_ == 32) ? ~0u : ((1u << x.n_) - 1u);
    return BitString(x.word_ ^ all, x.n_);
}

// Parity problem instance: input length n and the hidden set B of k positions.
struct ParitySpec {
    int n = 0;
    std::vector<int> bits;  // sorted ascending, 1-based, no duplicates

    int k() const { return static_cast<int>(bits.size()); }

    std::uint32_t mask() const {
        std::uint32_t m = 0;
        for (int b : bits) m |= 1u << (b - 1);
        return m;
    }

    // Validates and normalizes (sorts, rejects duplicates / out-of-range / k == 0).
    static ParitySpec make(int n, std::vector<int> bits);

    // Uniform draw from all size-k subsets of [n], pinned to the seed.
    static ParitySpec random(int n, int k, std::uint64_t seed);
};

// f_B(x): +1 iff an even number of the bits indexed by B are 1.
inline int parity_label(const BitString& x, const ParitySpec& spec) {
    if (x.size() != spec.n) throw std::invalid_argument("parity_label: length mismatch");
    return (std::popcount(x.word() & spec.mask()) & 1) ? -1 : +1;
}

// (max{0, 1 - y*yhat})^2
inline double squared_hinge(int y, double yhat) {
    const double margin = 1.0 - static_cast<double>(y) * yhat;
    return margin > 0.0 ? margin * margin : 0.0;
}

inline std::uint64_t input_count(int n) {
    if (n < 1 || n > kMaxEnumerationBits) {
        throw std::length_error("input_count: n above enumeration ceiling");
    }
    return std::uint64_t{1} << n;
}

// Streams all 2^n inputs exactly once in counter order.
template <class F>
void for_each_input(int n, F&& f) {
    const std::uint64_t total = input_count(n);
    for (std::uint64_t w = 0; w < total; ++w) {
        f(BitString(static_cast<std::uint32_t>(w), n));
    }
}

}  // namespace paritylab
