// 64-bit ring arithmetic and fixed-point encoding.
//
// Secrets live in Z/2^64 (native unsigned wraparound). Reals are encoded as
// x_enc = round(x * 2^lbits) with round-half-to-even, interpreted in two's
// complement: values with the top bit set decode as negatives.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpcbandit {

using u64 = std::uint64_t;
using i64 = std::int64_t;

inline u64 ring_add(u64 a, u64 b) { return a + b; }
inline u64 ring_sub(u64 a, u64 b) { return a - b; }
inline u64 ring_mul(u64 a, u64 b) { return a * b; }
inline u64 ring_neg(u64 a) { return 0 - a; }

struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed-point parameters. Precision must satisfy 0 < lbits < 32 so that a
// product of two encodings still fits the ring with headroom for sums.
struct FixedPoint {
    int lbits = 20;

    FixedPoint() = default;
    explicit FixedPoint(int l) : lbits(l) {
        if (l <= 0 || l >= 32)
            throw EncodingError("precision bits out of range (0, 32): " + std::to_string(l));
    }

    u64 scale() const { return u64(1) << lbits; }

    u64 encode(double x) const {
        double s = std::ldexp(x, lbits);
        // |encoded| must stay below 2^63 or the sign interpretation breaks.
        if (!(std::fabs(s) < std::ldexp(1.0, 63)))
            throw EncodingError("value out of encodable range: " + std::to_string(x));
        return static_cast<u64>(static_cast<i64>(std::llrint(s)));
    }

    double decode(u64 v) const {
        return std::ldexp(static_cast<double>(static_cast<i64>(v)), -lbits);
    }
};

// Dense row-major tensor of ring elements. rows==1 or cols==1 model vectors,
// 1x1 models a scalar; protocols treat the element order as the lane order.
struct RingTensor {
    std::size_t rows = 0, cols = 0;
    std::vector<u64> v;

    RingTensor() = default;
    RingTensor(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0) {}

    static RingTensor zeros(std::size_t r, std::size_t c) { return RingTensor(r, c); }
    static RingTensor scalar(u64 x) {
        RingTensor t(1, 1);
        t.v[0] = x;
        return t;
    }

    std::size_t size() const { return v.size(); }
    u64& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    u64 at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    bool same_shape(const RingTensor& o) const { return rows == o.rows && cols == o.cols; }
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_same_shape(const RingTensor& a, const RingTensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch");
}

inline RingTensor rt_add(const RingTensor& a, const RingTensor& b) {
    require_same_shape(a, b, "rt_add");
    RingTensor r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
    return r;
}

inline RingTensor rt_sub(const RingTensor& a, const RingTensor& b) {
    require_same_shape(a, b, "rt_sub");
    RingTensor r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
    return r;
}

inline RingTensor rt_neg(const RingTensor& a) {
    RingTensor r = a;
    for (auto& x : r.v) x = 0 - x;
    return r;
}

inline RingTensor rt_scale(const RingTensor& a, u64 k) {
    RingTensor r = a;
    for (auto& x : r.v) x *= k;
    return r;
}

inline RingTensor rt_mul_elem(const RingTensor& a, const RingTensor& b) {
    require_same_shape(a, b, "rt_mul_elem");
    RingTensor r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] *= b.v[i];
    return r;
}

inline RingTensor rt_matmul(const RingTensor& a, const RingTensor& b) {
    if (a.cols != b.rows) throw ShapeError("rt_matmul: inner dimension mismatch");
    RingTensor r(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            u64 aik = a.at(i, k);
            if (aik == 0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) r.at(i, j) += aik * b.at(k, j);
        }
    return r;
}

inline RingTensor rt_transpose(const RingTensor& a) {
    RingTensor r(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) r.at(j, i) = a.at(i, j);
    return r;
}

inline RingTensor encode_tensor(const FixedPoint& fx, const std::vector<double>& xs,
                                std::size_t rows, std::size_t cols) {
    if (xs.size() != rows * cols) throw ShapeError("encode_tensor: size mismatch");
    RingTensor t(rows, cols);
    for (std::size_t i = 0; i < xs.size(); ++i) t.v[i] = fx.encode(xs[i]);
    return t;
}

inline std::vector<double> decode_tensor(const FixedPoint& fx, const RingTensor& t) {
    std::vector<double> out(t.v.size());
    for (std::size_t i = 0; i < t.v.size(); ++i) out[i] = fx.decode(t.v[i]);
    return out;
}

} // namespace mpcbandit
