// Constant-product AMM pools with basis-point fees taken on the ETH leg
// (input for buys, output for sells). All math is floor-rounded 128-bit
// fixed point; the pool never loses ETH to rounding, so global conservation
// is exact.
#pragma once

#include <optional>
#include <string>

#include "vaultsim/amount.hpp"
#include "vaultsim/expected.hpp"

namespace vaultsim {

using TokenId = std::string;
using Tick = i64;

inline constexpr u64 DEFAULT_PROTOCOL_FEE_BPS = 200;
inline constexpr u64 DEFAULT_LP_FEE_BPS = 30;

inline const TokenUnits FIXED_TOTAL_SUPPLY = TokenUnits::from_whole(1'000'000'000);

struct TokenMeta {
    TokenId token_id;
    std::string symbol;
    TokenUnits total_supply = FIXED_TOTAL_SUPPLY;
    Tick launched_at = 0;
    bool delisted = false;
};

struct Pool {
    TokenId token_id;
    Eth eth_reserve;
    TokenUnits token_reserve;
    u64 lp_fee_bps = DEFAULT_LP_FEE_BPS;
    u64 protocol_fee_bps = DEFAULT_PROTOCOL_FEE_BPS;
    Eth protocol_fee_accrued;
    bool delisted = false;
    u64 version = 0; // bumped on every settle; quotes carry it for staleness checks

    u64 total_fee_bps() const { return lp_fee_bps + protocol_fee_bps; }

    // Spot price in wei per whole token, floor-quantized to 1e-18.
    u128 spot_price_e18() const {
        if (token_reserve.is_zero()) return 0;
        return muldiv(eth_reserve.raw, QUANTA, token_reserve.raw);
    }
};

enum class Side { Buy, Sell };

inline const char* side_name(Side s) { return s == Side::Buy ? "buy" : "sell"; }

struct SwapQuote {
    Side side = Side::Buy;
    TokenId token_id;
    Eth eth_in;          // buys: ETH paid by the vault
    TokenUnits token_in; // sells: tokens paid by the vault
    TokenUnits token_out; // buys
    Eth eth_out;          // sells, net of fees
    Eth protocol_fee;
    Eth lp_fee;
    u64 price_impact_bps = 0; // fee-inclusive, user-experienced
    u64 pool_version = 0;

    Eth fee_total() const { return protocol_fee + lp_fee; }

    // Settlement-time floor for the receive leg.
    TokenUnits min_token_out_at(u64 slippage_bps) const {
        return TokenUnits(muldiv(token_out.raw, 10'000 - slippage_bps, 10'000));
    }
    Eth min_eth_out_at(u64 slippage_bps) const {
        return Eth(muldiv(eth_out.raw, 10'000 - slippage_bps, 10'000));
    }
};

enum class QuoteError { ZeroAmount, DelistedToken, EmptyPool };

inline const char* quote_error_name(QuoteError e) {
    switch (e) {
        case QuoteError::ZeroAmount: return "ZeroAmount";
        case QuoteError::DelistedToken: return "DelistedToken";
        case QuoteError::EmptyPool: return "EmptyPool";
    }
    return "?";
}

namespace detail {

// Fee-inclusive impact from e18-quantized prices. Quantization error is
// bounded by one ulp at 1e-18 relative; the guard, the rendered constraints
// and the cap solver all share this exact function.
inline u64 impact_bps_buy(u128 exec_e18, u128 spot_e18) {
    if (exec_e18 <= spot_e18) return 0;
    return u64(muldiv(exec_e18 - spot_e18, 10'000, spot_e18));
}

inline u64 impact_bps_sell(u128 exec_e18, u128 spot_e18) {
    if (exec_e18 >= spot_e18) return 0;
    return u64(muldiv(spot_e18 - exec_e18, 10'000, spot_e18));
}

} // namespace detail

inline Expected<SwapQuote, QuoteError> quote_buy_with_fees(const Pool& pool, Eth eth_in,
                                                           u64 protocol_bps, u64 lp_bps) {
    if (pool.delisted) return QuoteError::DelistedToken;
    if (pool.eth_reserve.is_zero() || pool.token_reserve.is_zero()) return QuoteError::EmptyPool;
    if (eth_in.is_zero()) return QuoteError::ZeroAmount;

    Eth protocol_fee = bps_of(eth_in, protocol_bps);
    Eth lp_fee = bps_of(eth_in, lp_bps);
    Eth effective = eth_in - protocol_fee - lp_fee;
    if (effective.is_zero()) return QuoteError::ZeroAmount;

    TokenUnits out(muldiv(pool.token_reserve.raw, effective.raw,
                          pool.eth_reserve.raw + effective.raw));
    if (out.is_zero()) return QuoteError::ZeroAmount;

    u128 spot = pool.spot_price_e18();
    if (spot == 0) return QuoteError::ZeroAmount;
    u128 exec = muldiv(eth_in.raw, QUANTA, out.raw);

    SwapQuote q;
    q.side = Side::Buy;
    q.token_id = pool.token_id;
    q.eth_in = eth_in;
    q.token_out = out;
    q.protocol_fee = protocol_fee;
    q.lp_fee = lp_fee;
    q.price_impact_bps = detail::impact_bps_buy(exec, spot);
    q.pool_version = pool.version;
    return q;
}

inline Expected<SwapQuote, QuoteError> quote_buy(const Pool& pool, Eth eth_in) {
    return quote_buy_with_fees(pool, eth_in, pool.protocol_fee_bps, pool.lp_fee_bps);
}

inline Expected<SwapQuote, QuoteError> quote_sell_with_fees(const Pool& pool, TokenUnits token_in,
                                                            u64 protocol_bps, u64 lp_bps) {
    if (pool.delisted) return QuoteError::DelistedToken;
    if (pool.eth_reserve.is_zero() || pool.token_reserve.is_zero()) return QuoteError::EmptyPool;
    if (token_in.is_zero()) return QuoteError::ZeroAmount;

    Eth gross(muldiv(pool.eth_reserve.raw, token_in.raw,
                     pool.token_reserve.raw + token_in.raw));
    if (gross.is_zero()) return QuoteError::ZeroAmount;
    Eth protocol_fee = bps_of(gross, protocol_bps);
    Eth lp_fee = bps_of(gross, lp_bps);
    Eth out = gross - protocol_fee - lp_fee;
    if (out.is_zero()) return QuoteError::ZeroAmount;

    u128 spot = pool.spot_price_e18();
    if (spot == 0) return QuoteError::ZeroAmount;
    u128 exec = muldiv(out.raw, QUANTA, token_in.raw);

    SwapQuote q;
    q.side = Side::Sell;
    q.token_id = pool.token_id;
    q.token_in = token_in;
    q.eth_out = out;
    q.protocol_fee = protocol_fee;
    q.lp_fee = lp_fee;
    q.price_impact_bps = detail::impact_bps_sell(exec, spot);
    q.pool_version = pool.version;
    return q;
}

inline Expected<SwapQuote, QuoteError> quote_sell(const Pool& pool, TokenUnits token_in) {
    return quote_sell_with_fees(pool, token_in, pool.protocol_fee_bps, pool.lp_fee_bps);
}

enum class SwapError { StaleQuote, EmptyPool };

inline const char* swap_error_name(SwapError e) {
    return e == SwapError::StaleQuote ? "StaleQuote" : "EmptyPool";
}

struct SwapResult {
    SwapQuote quote;
    Eth eth_reserve_after;
    TokenUnits token_reserve_after;
};

// Settles a quote against the pool. The quote must have been derived from the
// current pool version; buys keep the LP fee inside the reserves, the
// protocol fee moves to protocol_fee_accrued.
inline Expected<SwapResult, SwapError> execute_swap(Pool& pool, const SwapQuote& quote) {
    if (pool.eth_reserve.is_zero() || pool.token_reserve.is_zero()) return SwapError::EmptyPool;
    if (quote.pool_version != pool.version) return SwapError::StaleQuote;

    if (quote.side == Side::Buy) {
        pool.eth_reserve += quote.eth_in - quote.protocol_fee;
        pool.token_reserve -= quote.token_out;
    } else {
        pool.token_reserve += quote.token_in;
        pool.eth_reserve -= quote.eth_out + quote.protocol_fee;
    }
    pool.protocol_fee_accrued += quote.protocol_fee;
    pool.version += 1;

    SwapResult r;
    r.quote = quote;
    r.eth_reserve_after = pool.eth_reserve;
    r.token_reserve_after = pool.token_reserve;
    return r;
}

// New-coin buy cap: 0.01 ETH at launch, +0.01 ETH every 5 minutes, uncapped
// once age reaches 50 minutes (inclusive boundary). One tick is 5 minutes.
struct CapResult {
    bool uncapped = false;
    Eth cap; // meaningful only when capped
};

inline CapResult new_coin_buy_cap(Tick launched_at, Tick now) {
    if (now < launched_at) throw std::invalid_argument("new_coin_buy_cap: now precedes launch");
    i64 age_ticks = now - launched_at;
    i64 age_min = 5 * age_ticks;
    if (age_min >= 50) return {true, Eth(0)};
    u128 hundredth = QUANTA / 100;
    return {false, Eth(hundredth * u128(1 + age_min / 5))};
}

// Largest buy (ETH in) whose fee-inclusive impact stays within max_impact_bps.
// Closed form from the constant-product relation, then nudged down against the
// actual quantized quote so the displayed cap always passes the guard check.
inline Eth max_buy_for_impact(const Pool& pool, u64 max_impact_bps) {
    u64 f = pool.total_fee_bps();
    if (f >= 10'000) return Eth(0);
    u128 num_a = u128(max_impact_bps) * (10'000 - f);
    u128 num_b = u128(f) * 10'000;
    if (num_a <= num_b) return Eth(0);
    u128 x = muldiv(pool.eth_reserve.raw, num_a - num_b, u128(10'000) * (10'000 - f));
    for (int tries = 0; x > 0 && tries < 64; ++tries) {
        auto q = quote_buy(pool, Eth(x));
        if (q.ok() && q->price_impact_bps <= max_impact_bps) return Eth(x);
        x -= x / 4096 + 1;
    }
    return Eth(0);
}

// Largest sell (token units in) within max_impact_bps; nullopt when any sell
// size passes (impact approaches but never reaches 100%).
inline std::optional<TokenUnits> max_sell_for_impact(const Pool& pool, u64 max_impact_bps) {
    u64 f = pool.total_fee_bps();
    if (max_impact_bps >= 10'000) return std::nullopt;
    if (max_impact_bps <= f) return TokenUnits(0);
    u128 y = muldiv(pool.token_reserve.raw, max_impact_bps - f, 10'000 - max_impact_bps);
    for (int tries = 0; y > 0 && tries < 64; ++tries) {
        auto q = quote_sell(pool, TokenUnits(y));
        if (q.ok() && q->price_impact_bps <= max_impact_bps) return TokenUnits(y);
        y -= y / 4096 + 1;
    }
    return TokenUnits(0);
}

} // namespace vaultsim
