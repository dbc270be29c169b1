// Hard-constraint validation pipeline. Every parsed tool call passes through
// eight checks in a fixed order before settlement; the first failing check
// names the rejection. Prompt-level guidance (cooldowns, pacing) is
// deliberately NOT enforced here: the guard covers only backend/execution
// constraints.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "vaultsim/amount.hpp"
#include "vaultsim/pool.hpp"
#include "vaultsim/toolcall.hpp"
#include "vaultsim/vault.hpp"

namespace vaultsim {

struct GuardConfig {
    u64 max_trade_bps = 5'000;        // of available ETH, [500, 10000]
    u64 slippage_bps = 100;           // min-output tolerance, [10, 5000]
    u64 max_price_impact_bps = 1'000; // fee-inclusive
    std::optional<u64> max_positions; // optional hard check, default off

    bool valid() const {
        return max_trade_bps >= 500 && max_trade_bps <= 10'000 && slippage_bps >= 10 &&
               slippage_bps <= 5'000;
    }
};

enum class RejectCode {
    VaultPaused,
    UnknownToken,
    ZeroAmount,
    ExceedsMaxTrade,
    InsufficientBalance,
    ExceedsPositionLimit,
    ExceedsNewCoinCap,
    ExceedsPriceImpact,
};

inline const char* reject_code_name(RejectCode c) {
    switch (c) {
        case RejectCode::VaultPaused: return "VaultPaused";
        case RejectCode::UnknownToken: return "UnknownToken";
        case RejectCode::ZeroAmount: return "ZeroAmount";
        case RejectCode::ExceedsMaxTrade: return "ExceedsMaxTrade";
        case RejectCode::InsufficientBalance: return "InsufficientBalance";
        case RejectCode::ExceedsPositionLimit: return "ExceedsPositionLimit";
        case RejectCode::ExceedsNewCoinCap: return "ExceedsNewCoinCap";
        case RejectCode::ExceedsPriceImpact: return "ExceedsPriceImpact";
    }
    return "?";
}

inline std::optional<RejectCode> reject_code_from_name(std::string_view n) {
    for (RejectCode c : {RejectCode::VaultPaused, RejectCode::UnknownToken, RejectCode::ZeroAmount,
                         RejectCode::ExceedsMaxTrade, RejectCode::InsufficientBalance,
                         RejectCode::ExceedsPositionLimit, RejectCode::ExceedsNewCoinCap,
                         RejectCode::ExceedsPriceImpact})
        if (n == reject_code_name(c)) return c;
    return std::nullopt;
}

struct Accepted {
    bool is_swap = false; // false for Observe
    SwapQuote quote;      // meaningful when is_swap
    TokenUnits min_token_out; // buys: settlement-time floor
    Eth min_eth_out;          // sells
};

struct Rejected {
    RejectCode code;
    std::string detail; // names the violated bound and the values involved
};

using Verdict = std::variant<Accepted, Rejected>;

inline bool accepted(const Verdict& v) { return std::holds_alternative<Accepted>(v); }

// Check order (fixed so rejection codes are deterministic):
//   1 vault not paused/closed          -> VaultPaused
//   2 token on the live allowlist      -> UnknownToken   (Observe skips 2-8)
//   3 fraction in (0,1], amount > 0    -> ZeroAmount
//   4 buy: spend <= max-trade cap      -> ExceedsMaxTrade
//     buy: spend <= balance, sell: amount <= position -> InsufficientBalance
//   5 optional position-count limit    -> ExceedsPositionLimit (new buys only)
//   6 new-coin buy cap (buys)          -> ExceedsNewCoinCap
//   7 quote impact <= max impact       -> ExceedsPriceImpact
//   8 accept, recording min output at the configured slippage
inline Verdict validate(const ToolCall& call, const Vault& vault,
                        const std::map<TokenId, TokenMeta>& tokens,
                        const std::map<TokenId, Pool>& pools, const GuardConfig& cfg, Tick now) {
    if (vault.paused || vault.closed)
        return Rejected{RejectCode::VaultPaused, vault.closed ? "vault closed" : "vault paused"};
    if (call.action == ToolCall::Action::Observe) return Accepted{};

    auto tit = tokens.find(call.token_id);
    auto pit = pools.find(call.token_id);
    if (tit == tokens.end() || tit->second.delisted || pit == pools.end())
        return Rejected{RejectCode::UnknownToken, "token not on the live allowlist: " +
                                                      call.token_id};
    const Pool& pool = pit->second;

    if (call.fraction_ppm == 0 || call.fraction_ppm > 1'000'000)
        return Rejected{RejectCode::ZeroAmount, "fraction outside (0, 1]"};

    if (call.action == ToolCall::Action::Buy) {
        Eth spend = ppm_of(vault.eth_balance, call.fraction_ppm);
        if (spend.is_zero()) return Rejected{RejectCode::ZeroAmount, "buy amount is zero"};
        Eth cap = bps_of(vault.eth_balance, cfg.max_trade_bps);
        if (spend > cap)
            return Rejected{RejectCode::ExceedsMaxTrade,
                            "spend " + spend.to_decimal_string() + " ETH exceeds max-trade cap " +
                                cap.to_decimal_string() + " ETH (" +
                                std::to_string(cfg.max_trade_bps) + " bps)"};
        if (spend > vault.eth_balance)
            return Rejected{RejectCode::InsufficientBalance, "spend exceeds ETH balance"};
        if (cfg.max_positions && !vault.positions.count(call.token_id) &&
            vault.positions.size() + 1 > *cfg.max_positions)
            return Rejected{RejectCode::ExceedsPositionLimit,
                            "position count limit " + std::to_string(*cfg.max_positions)};
        CapResult nc = new_coin_buy_cap(tit->second.launched_at, now);
        if (!nc.uncapped && spend > nc.cap)
            return Rejected{RejectCode::ExceedsNewCoinCap,
                            "spend " + spend.to_decimal_string() + " ETH exceeds new-coin cap " +
                                nc.cap.to_decimal_string() + " ETH"};
        auto q = quote_buy(pool, spend);
        if (!q.ok()) return Rejected{RejectCode::ZeroAmount, quote_error_name(q.error())};
        if (q->price_impact_bps > cfg.max_price_impact_bps)
            return Rejected{RejectCode::ExceedsPriceImpact,
                            "impact " + std::to_string(q->price_impact_bps) + " bps exceeds " +
                                std::to_string(cfg.max_price_impact_bps) + " bps"};
        Accepted a;
        a.is_swap = true;
        a.quote = *q;
        a.min_token_out = q->min_token_out_at(cfg.slippage_bps);
        return a;
    }

    // Sell
    auto pos = vault.positions.find(call.token_id);
    TokenUnits held = pos == vault.positions.end() ? TokenUnits(0) : pos->second.balance;
    TokenUnits amount = ppm_of(held, call.fraction_ppm);
    if (amount.is_zero()) return Rejected{RejectCode::ZeroAmount, "sell amount is zero"};
    if (amount > held)
        return Rejected{RejectCode::InsufficientBalance, "sell amount exceeds position"};
    auto q = quote_sell(pool, amount);
    if (!q.ok()) return Rejected{RejectCode::ZeroAmount, quote_error_name(q.error())};
    if (q->price_impact_bps > cfg.max_price_impact_bps)
        return Rejected{RejectCode::ExceedsPriceImpact,
                        "impact " + std::to_string(q->price_impact_bps) + " bps exceeds " +
                            std::to_string(cfg.max_price_impact_bps) + " bps"};
    Accepted a;
    a.is_swap = true;
    a.quote = *q;
    a.min_eth_out = q->min_eth_out_at(cfg.slippage_bps);
    return a;
}

struct SlippageAbort {
    std::string detail;
};

// Settlement-time min-output check. Re-quotes against the pool state at
// settlement and aborts iff the realized output would undercut the recorded
// floor. Immediate same-tick settlement never moves the pool between quote
// and settle, so this only fires in delayed-settlement mode.
inline Expected<SwapQuote, SlippageAbort> settlement_check(const Accepted& verdict,
                                                           const Pool& pool_at_settlement) {
    if (!verdict.is_swap) throw std::logic_error("settlement_check: not a swap verdict");
    if (verdict.quote.side == Side::Buy) {
        auto q = quote_buy(pool_at_settlement, verdict.quote.eth_in);
        if (!q.ok()) return SlippageAbort{std::string("re-quote failed: ") +
                                          quote_error_name(q.error())};
        if (q->token_out < verdict.min_token_out)
            return SlippageAbort{"realized output " + q->token_out.to_decimal_string() +
                                 " below min output " + verdict.min_token_out.to_decimal_string()};
        return *q;
    }
    auto q = quote_sell(pool_at_settlement, verdict.quote.token_in);
    if (!q.ok()) return SlippageAbort{std::string("re-quote failed: ") +
                                      quote_error_name(q.error())};
    if (q->eth_out < verdict.min_eth_out)
        return SlippageAbort{"realized output " + q->eth_out.to_decimal_string() +
                             " ETH below min output " + verdict.min_eth_out.to_decimal_string() +
                             " ETH"};
    return *q;
}

} // namespace vaultsim
