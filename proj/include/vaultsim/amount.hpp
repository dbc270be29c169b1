// Fixed-point quantity arithmetic: 128-bit unsigned amounts with 18 fractional
// decimal digits (wei-scale). All reserve, fee and price math lives on these
// types so conservation invariants are exactly assertable.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vaultsim {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline constexpr u128 QUANTA = u128(1'000'000'000'000'000'000ULL); // 1e18 per whole unit

namespace detail {

// 256-bit value as four 64-bit limbs, little-endian. Only what muldiv needs.
struct U256 {
    u64 w[4]{0, 0, 0, 0};

    bool operator==(const U256&) const = default;

    int bit_length() const {
        for (int i = 3; i >= 0; --i) {
            if (w[i]) {
                int b = 64;
                u64 v = w[i];
                while (!(v & (u64(1) << 63))) { v <<= 1; --b; }
                return i * 64 + b;
            }
        }
        return 0;
    }
    bool bit(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    void set_bit(int i) { w[i >> 6] |= u64(1) << (i & 63); }

    void shl1() {
        w[3] = (w[3] << 1) | (w[2] >> 63);
        w[2] = (w[2] << 1) | (w[1] >> 63);
        w[1] = (w[1] << 1) | (w[0] >> 63);
        w[0] <<= 1;
    }
};

inline U256 mul_u128(u128 a, u128 b) {
    auto lo64 = [](u128 x) { return static_cast<u64>(x); };
    auto hi64 = [](u128 x) { return static_cast<u64>(x >> 64); };
    u64 a0 = lo64(a), a1 = hi64(a), b0 = lo64(b), b1 = hi64(b);

    u128 p00 = u128(a0) * b0;
    u128 p01 = u128(a0) * b1;
    u128 p10 = u128(a1) * b0;
    u128 p11 = u128(a1) * b1;

    U256 r;
    u128 mid = (p00 >> 64) + lo64(p01) + lo64(p10);
    r.w[0] = lo64(p00);
    r.w[1] = lo64(mid);
    u128 hi = p11 + hi64(p01) + hi64(p10) + (mid >> 64);
    r.w[2] = lo64(hi);
    r.w[3] = hi64(hi);
    return r;
}

inline u128 as_u128(const U256& v) { return (u128(v.w[1]) << 64) | v.w[0]; }
inline bool fits_u128(const U256& v) { return v.w[2] == 0 && v.w[3] == 0; }

// Binary long division of a 256-bit numerator by a 128-bit divisor.
// Returns floor quotient; remainder via out-param.
inline u128 div_u256(const U256& num, u128 den, u128& rem) {
    if (den == 0) throw std::domain_error("division by zero");
    if (fits_u128(num)) {
        u128 n = as_u128(num);
        rem = n % den;
        return n / den;
    }
    u128 q = 0, r = 0;
    for (int i = num.bit_length() - 1; i >= 0; --i) {
        // r < den at loop entry; r<<1 may carry past 128 bits, in which case
        // the wrapped subtraction r - den still yields the true remainder.
        bool carry = (r >> 127) != 0;
        r = (r << 1) | (num.bit(i) ? 1 : 0);
        q <<= 1;
        if (carry || r >= den) {
            r -= den;
            q |= 1;
        }
    }
    rem = r;
    return q;
}

} // namespace detail

// floor(a * b / den); throws std::overflow_error if the quotient exceeds 128 bits.
inline u128 muldiv(u128 a, u128 b, u128 den) {
    if (den == 0) throw std::domain_error("muldiv: zero divisor");
    if (a == 0 || b == 0) return 0;
    detail::U256 prod = detail::mul_u128(a, b);
    if (detail::fits_u128(prod)) return detail::as_u128(prod) / den;
    // Quotient fits iff prod >> 128 < den.
    u128 hi = (u128(prod.w[3]) << 64) | prod.w[2];
    if (hi >= den) throw std::overflow_error("muldiv: quotient exceeds 128 bits");
    u128 rem;
    return detail::div_u256(prod, den, rem);
}

inline u128 muldiv_ceil(u128 a, u128 b, u128 den) {
    if (den == 0) throw std::domain_error("muldiv: zero divisor");
    if (a == 0 || b == 0) return 0;
    detail::U256 prod = detail::mul_u128(a, b);
    if (detail::fits_u128(prod)) {
        u128 p = detail::as_u128(prod);
        return p / den + (p % den != 0 ? 1 : 0);
    }
    u128 hi = (u128(prod.w[3]) << 64) | prod.w[2];
    if (hi >= den) throw std::overflow_error("muldiv: quotient exceeds 128 bits");
    u128 rem;
    u128 q = detail::div_u256(prod, den, rem);
    return rem != 0 ? q + 1 : q;
}

// Compare a*b <=> c*d exactly at 256-bit width.
inline int cmp_products(u128 a, u128 b, u128 c, u128 d) {
    detail::U256 x = detail::mul_u128(a, b);
    detail::U256 y = detail::mul_u128(c, d);
    for (int i = 3; i >= 0; --i) {
        if (x.w[i] != y.w[i]) return x.w[i] < y.w[i] ? -1 : 1;
    }
    return 0;
}

inline std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    char buf[40];
    int n = 0;
    while (v) {
        buf[n++] = char('0' + int(v % 10));
        v /= 10;
    }
    std::string s;
    s.reserve(n);
    while (n) s.push_back(buf[--n]);
    return s;
}

inline u128 u128_from_string(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty integer string");
    u128 v = 0;
    constexpr u128 MAX = ~u128(0);
    for (char c : s) {
        if (c < '0' || c > '9') throw std::invalid_argument("bad digit in integer string");
        unsigned d = unsigned(c - '0');
        if (v > (MAX - d) / 10) throw std::overflow_error("integer string exceeds 128 bits");
        v = v * 10 + d;
    }
    return v;
}

// Strongly typed quantity; Tag distinguishes ETH from token units.
template <class Tag>
struct Qty {
    u128 raw = 0;

    constexpr Qty() = default;
    constexpr explicit Qty(u128 v) : raw(v) {}

    static Qty from_whole(u64 whole) { return Qty(u128(whole) * QUANTA); }

    // Parses "12", "12.5", "0.000000000000000001". More than 18 fractional
    // digits is an error rather than silent truncation.
    static Qty parse(std::string_view s) {
        auto dot = s.find('.');
        std::string_view ip = dot == std::string_view::npos ? s : s.substr(0, dot);
        std::string_view fp = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
        if (ip.empty() && fp.empty()) throw std::invalid_argument("empty amount");
        if (fp.size() > 18) throw std::invalid_argument("more than 18 fractional digits");
        u128 whole = ip.empty() ? 0 : u128_from_string(ip);
        std::string frac(fp);
        frac.append(18 - frac.size(), '0');
        u128 fracv = frac.empty() ? 0 : u128_from_string(frac);
        constexpr u128 MAX = ~u128(0);
        if (whole > (MAX - fracv) / QUANTA) throw std::overflow_error("amount exceeds 128 bits");
        return Qty(whole * QUANTA + fracv);
    }

    // Canonical decimal: no trailing fractional zeros, no bare trailing dot.
    std::string to_decimal_string() const {
        u128 whole = raw / QUANTA;
        u128 frac = raw % QUANTA;
        std::string s = u128_to_string(whole);
        if (frac != 0) {
            std::string f = u128_to_string(frac);
            f.insert(f.begin(), 18 - f.size(), '0');
            while (!f.empty() && f.back() == '0') f.pop_back();
            s.push_back('.');
            s += f;
        }
        return s;
    }

    double to_double() const { return double(u64(raw / QUANTA)) + double(u64(raw % QUANTA)) / 1e18; }

    bool is_zero() const { return raw == 0; }

    friend Qty operator+(Qty a, Qty b) { return Qty(a.raw + b.raw); }
    friend Qty operator-(Qty a, Qty b) {
        if (a.raw < b.raw) throw std::underflow_error("quantity underflow");
        return Qty(a.raw - b.raw);
    }
    Qty& operator+=(Qty o) { raw += o.raw; return *this; }
    Qty& operator-=(Qty o) { *this = *this - o; return *this; }
    friend bool operator==(Qty a, Qty b) { return a.raw == b.raw; }
    friend bool operator!=(Qty a, Qty b) { return a.raw != b.raw; }
    friend bool operator<(Qty a, Qty b) { return a.raw < b.raw; }
    friend bool operator<=(Qty a, Qty b) { return a.raw <= b.raw; }
    friend bool operator>(Qty a, Qty b) { return a.raw > b.raw; }
    friend bool operator>=(Qty a, Qty b) { return a.raw >= b.raw; }
};

using Eth = Qty<struct EthTag>;
using TokenUnits = Qty<struct TokenTag>;

// Basis points of a quantity, floor-rounded.
template <class Tag>
inline Qty<Tag> bps_of(Qty<Tag> q, u64 bps) {
    return Qty<Tag>(muldiv(q.raw, bps, 10'000));
}

// Parts-per-million fraction of a quantity, floor-rounded. Tool-call fractions
// are carried as ppm so wire decimals stay exact.
template <class Tag>
inline Qty<Tag> ppm_of(Qty<Tag> q, u64 ppm) {
    return Qty<Tag>(muldiv(q.raw, ppm, 1'000'000));
}

} // namespace vaultsim
