// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense linear-algebra substrate: vectors, row-major matrices,
// activations and their derivatives, a seeded deterministic RNG and a
// central-difference gradient utility.
//
// Accumulation order is fixed (ascending index) in every routine so that
// dense and sparse code paths can be compared without reassociation noise.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltanet {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

template <class T>
struct Vec {
    std::vector<T> data;

    Vec() = default;
    explicit Vec(std::size_t n, T fill = T(0)) : data(n, fill) {}
    Vec(std::initializer_list<T> xs) : data(xs) {}

    std::size_t size() const { return data.size(); }
    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    auto begin() { return data.begin(); }
    auto end() { return data.end(); }
    auto begin() const { return data.begin(); }
    auto end() const { return data.end(); }

    std::span<T> span() { return {data.data(), data.size()}; }
    std::span<const T> span() const { return {data.data(), data.size()}; }

    bool operator==(const Vec&) const = default;
};

// Row-major dense matrix.
template <class T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    T* row(std::size_t r) { return data.data() + r * cols; }
    const T* row(std::size_t r) const { return data.data() + r * cols; }

    std::span<T> span() { return {data.data(), data.size()}; }
    std::span<const T> span() const { return {data.data(), data.size()}; }

    bool operator==(const Mat&) const = default;
};

using Vector = Vec<double>;
using Matrix = Mat<double>;

template <class T>
bool all_finite(std::span<const T> xs) {
    for (T x : xs)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

template <class T>
bool all_finite(const Vec<T>& v) {
    return all_finite(v.span());
}

// w * v, accumulated in ascending column order.
template <class T>
Vec<T> matvec(const Mat<T>& w, const Vec<T>& v) {
    require(w.cols == v.size(), "matvec: dimension mismatch");
    Vec<T> out(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const T* wr = w.row(r);
        T acc = T(0);
        for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * v[c];
        out[r] = acc;
    }
    return out;
}

// w^T * v, accumulated in ascending row order of w.
template <class T>
Vec<T> matvec_transposed(const Mat<T>& w, const Vec<T>& v) {
    require(w.rows == v.size(), "matvec_transposed: dimension mismatch");
    Vec<T> out(w.cols);
    for (std::size_t c = 0; c < w.cols; ++c) {
        T acc = T(0);
        for (std::size_t r = 0; r < w.rows; ++r) acc += w(r, c) * v[r];
        out[c] = acc;
    }
    return out;
}

// grads += u * v^T
template <class T>
void outer_accum(Mat<T>& grads, const Vec<T>& u, const Vec<T>& v) {
    require(grads.rows == u.size() && grads.cols == v.size(), "outer_accum: dimension mismatch");
    for (std::size_t r = 0; r < grads.rows; ++r) {
        T* gr = grads.row(r);
        const T ur = u[r];
        for (std::size_t c = 0; c < grads.cols; ++c) gr[c] += ur * v[c];
    }
}

template <class T>
Vec<T> add(const Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "add: length mismatch");
    Vec<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <class T>
Vec<T> sub(const Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "sub: length mismatch");
    Vec<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

template <class T>
Vec<T> hadamard(const Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "hadamard: length mismatch");
    Vec<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

template <class T>
void add_inplace(Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "add_inplace: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "dot: length mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
double linf_norm(const Vec<T>& a) {
    double m = 0;
    for (T x : a.data) m = std::max(m, std::abs(static_cast<double>(x)));
    return m;
}

template <class T>
double linf_norm(const Mat<T>& a) {
    double m = 0;
    for (T x : a.data) m = std::max(m, std::abs(static_cast<double>(x)));
    return m;
}

template <class T>
double linf_dist(const Vec<T>& a, const Vec<T>& b) {
    require(a.size() == b.size(), "linf_dist: length mismatch");
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

template <class T>
double linf_dist(const Mat<T>& a, const Mat<T>& b) {
    require(a.rows == b.rows && a.cols == b.cols, "linf_dist: shape mismatch");
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

enum class Activation { Tanh, Sigmoid };

template <class T>
T sigmoid_scalar(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <class T>
Vec<T> activation(Activation kind, const Vec<T>& v) {
    Vec<T> out(v.size());
    if (kind == Activation::Tanh) {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
    }
    return out;
}

// Derivative evaluated at the pre-activation: tanh'(m) = 1 - tanh(m)^2,
// sigma'(m) = sigma(m) (1 - sigma(m)).
template <class T>
Vec<T> activation_deriv(Activation kind, const Vec<T>& pre) {
    Vec<T> out(pre.size());
    if (kind == Activation::Tanh) {
        for (std::size_t i = 0; i < pre.size(); ++i) {
            const T th = std::tanh(pre[i]);
            out[i] = T(1) - th * th;
        }
    } else {
        for (std::size_t i = 0; i < pre.size(); ++i) {
            const T s = sigmoid_scalar(pre[i]);
            out[i] = s * (T(1) - s);
        }
    }
    return out;
}

// Deterministic RNG. std::mt19937_64 has a standard-specified bit stream and
// the uniform/normal transforms below avoid the implementation-defined
// std::*_distribution adapters, so equal seeds give bit-identical streams
// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        // Box-Muller; first uniform nudged away from 0
        double u1 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    std::uint64_t index(std::uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
    bool has_cache_ = false;
    double cache_ = 0;
};

template <class T>
Mat<T> uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
    Mat<T> m(rows, cols);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = static_cast<T>(rng.uniform(-bound, bound));
    return m;
}

// bound = 1/sqrt(fan-in), fan-in being the column count
template <class T>
Mat<T> uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
    return uniform_init<T>(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

template <class T>
Vec<T> uniform_init_vec(std::size_t len, double bound, Rng& rng) {
    Vec<T> v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<T>(rng.uniform(-bound, bound));
    return v;
}

// Central difference (f(x+eps e_i) - f(x-eps e_i)) / 2eps per coordinate.
template <class T, class F>
Vec<T> finite_difference_grad(F&& f, Vec<T> x, T eps) {
    require(eps > T(0), "finite_difference_grad: eps must be positive");
    Vec<T> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T saved = x[i];
        x[i] = saved + eps;
        const T fp = f(static_cast<const Vec<T>&>(x));
        x[i] = saved - eps;
        const T fm = f(static_cast<const Vec<T>&>(x));
        x[i] = saved;
        if (!std::isfinite(static_cast<double>(fp)) || !std::isfinite(static_cast<double>(fm)))
            throw std::runtime_error("finite_difference_grad: non-finite objective value");
        grad[i] = (fp - fm) / (T(2) * eps);
    }
    return grad;
}

}  // namespace deltanet
