// SPDX-License-Identifier: Apache-2.0
//
// Delta threshold encoding and the NZIL/NZVL compressed sparse format.
//
// A coordinate is activated at a timestep iff |current - retained| > theta
// (strict inequality; ties stay inactive). Activated coordinates propagate
// their change and refresh the retained value; inactive ones keep it.

#pragma once

#include <bit>
#include <cstdint>
#include <utility>

#include "deltanet/tensor.hpp"

namespace deltanet {

// Packed bit mask, n bits per timestep.
class Mask {
public:
    Mask() = default;
    explicit Mask(std::size_t len) : len_(len), bits_((len + 63) / 64, 0) {}

    std::size_t size() const { return len_; }

    bool test(std::size_t i) const { return (bits_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { bits_[i >> 6] |= std::uint64_t(1) << (i & 63); }

    std::size_t popcount() const {
        std::size_t n = 0;
        for (std::uint64_t w : bits_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    double occupancy() const {
        require(len_ > 0, "Mask::occupancy: empty mask");
        return static_cast<double>(popcount()) / static_cast<double>(len_);
    }

    // Visits set bits in ascending index order.
    template <class F>
    void for_each_set(F&& f) const {
        for (std::size_t w = 0; w < bits_.size(); ++w) {
            std::uint64_t word = bits_[w];
            while (word) {
                const unsigned b = static_cast<unsigned>(std::countr_zero(word));
                f(w * 64 + b);
                word &= word - 1;
            }
        }
    }

    bool operator==(const Mask&) const = default;

private:
    std::size_t len_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Compressed sparse delta vector: ascending non-zero index list plus the
// matching value list.
template <class T>
struct DeltaVec {
    std::size_t len = 0;
    std::vector<std::uint32_t> nzil;
    std::vector<T> nzvl;

    DeltaVec() = default;
    explicit DeltaVec(std::size_t n) : len(n) {}

    std::size_t nnz() const { return nzil.size(); }

    double occupancy() const {
        require(len > 0, "DeltaVec::occupancy: empty vector");
        return static_cast<double>(nzil.size()) / static_cast<double>(len);
    }
};

using DeltaVector = DeltaVec<double>;

template <class T>
struct EncodeResult {
    DeltaVec<T> delta;
    Mask mask;
};

// Threshold update rule. `retained` is updated in place at activated
// coordinates and left untouched elsewhere.
template <class T>
EncodeResult<T> delta_encode(const Vec<T>& current, Vec<T>& retained, T theta) {
    require(current.size() == retained.size(), "delta_encode: length mismatch");
    require(theta >= T(0) && std::isfinite(static_cast<double>(theta)),
            "delta_encode: theta must be finite and non-negative");
    EncodeResult<T> out;
    out.delta = DeltaVec<T>(current.size());
    out.mask = Mask(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) {
        const T diff = current[i] - retained[i];
        if (std::abs(diff) > theta) {
            out.mask.set(i);
            out.delta.nzil.push_back(static_cast<std::uint32_t>(i));
            out.delta.nzvl.push_back(diff);
            retained[i] = current[i];
        }
    }
    return out;
}

// Dense vector with nzvl scattered at nzil, zeros elsewhere.
template <class T>
Vec<T> decode(const DeltaVec<T>& d) {
    Vec<T> out(d.len);
    for (std::size_t k = 0; k < d.nzil.size(); ++k) out[d.nzil[k]] = d.nzvl[k];
    return out;
}

template <class T>
double occupancy(const DeltaVec<T>& d) {
    return d.occupancy();
}

inline double occupancy(const Mask& m) {
    return m.occupancy();
}

// 0/1 vector view of a mask, for the dense masked backward path.
template <class T>
Vec<T> mask_to_vec(const Mask& m) {
    Vec<T> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m.test(i) ? T(1) : T(0);
    return out;
}

}  // namespace deltanet
