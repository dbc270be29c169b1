// Per-user capital containers. Owners fund, withdraw unallocated ETH, pause
// and liquidate; the agent-side operator can only submit swaps (enforced at
// the call sites, tested as a least-privilege property). Positions carry an
// exact cost basis so the per-vault accounting identity holds in integer
// arithmetic.
#pragma once

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "vaultsim/amount.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/market.hpp"
#include "vaultsim/pool.hpp"

namespace vaultsim {

struct Position {
    TokenUnits balance;
    Eth cost_basis; // total ETH spent acquiring the current balance, fee-inclusive
    Tick first_acquired_at = 0;
    Tick last_trade_at = 0;

    u128 avg_entry_price_e18() const {
        if (balance.is_zero()) return 0;
        return muldiv(cost_basis.raw, QUANTA, balance.raw);
    }
};

struct Vault {
    VaultId vault_id = 0;
    std::string owner_id;
    Eth eth_balance;
    std::map<TokenId, Position> positions;
    bool paused = false;
    bool closed = false;
    Tick activated_at = 0;

    i128 net_funded_wei = 0;  // funded minus withdrawn
    i128 realized_pnl_wei = 0;
    Eth fees_paid;

    bool has_capital() const { return !eth_balance.is_zero() || !positions.empty(); }
};

// Owner actions. update_sliders / update_strategies route through the mandate
// log; they appear here so the permission check covers every owner verb.
struct FundAction { Eth amount; };
struct WithdrawAction { Eth amount; };
struct UpdateSlidersAction {};
struct UpdateStrategiesAction {};
struct PauseAction {};
struct UnpauseAction {};
struct CloseAction {};
struct EmergencyLiquidateAction {};

using OwnerAction = std::variant<FundAction, WithdrawAction, UpdateSlidersAction,
                                 UpdateStrategiesAction, PauseAction, UnpauseAction,
                                 CloseAction, EmergencyLiquidateAction>;

enum class OwnerActionError { NotOwner, VaultClosed, InsufficientUnallocated };

inline const char* owner_action_error_name(OwnerActionError e) {
    switch (e) {
        case OwnerActionError::NotOwner: return "NotOwner";
        case OwnerActionError::VaultClosed: return "VaultClosed";
        case OwnerActionError::InsufficientUnallocated: return "InsufficientUnallocated";
    }
    return "?";
}

struct OwnerActionReport {
    std::vector<SwapResult> liquidations; // emergency_liquidate fills this
    bool config_update = false;           // sliders/strategies handled by the mandate log
};

inline i128 apply_sell_settlement(Vault& vault, const SwapQuote& q, Tick now);

// Applies an owner action. `pools` is only touched by emergency liquidation.
// Unsaleable dust positions (sell quote floors to zero) are left in place;
// the vault still pauses.
inline Expected<OwnerActionReport, OwnerActionError> apply_owner_action(
    Vault& vault, const std::string& issuer, const OwnerAction& action,
    std::map<TokenId, Pool>& pools, Tick now) {
    if (issuer != vault.owner_id) return OwnerActionError::NotOwner;
    bool is_close = std::holds_alternative<CloseAction>(action);
    if (vault.closed && !is_close) return OwnerActionError::VaultClosed;

    OwnerActionReport report;
    if (auto* f = std::get_if<FundAction>(&action)) {
        vault.eth_balance += f->amount;
        vault.net_funded_wei += i128(f->amount.raw);
    } else if (auto* w = std::get_if<WithdrawAction>(&action)) {
        if (w->amount > vault.eth_balance) return OwnerActionError::InsufficientUnallocated;
        vault.eth_balance -= w->amount;
        vault.net_funded_wei -= i128(w->amount.raw);
    } else if (std::holds_alternative<PauseAction>(action)) {
        vault.paused = true;
    } else if (std::holds_alternative<UnpauseAction>(action)) {
        vault.paused = false;
    } else if (std::holds_alternative<CloseAction>(action)) {
        vault.closed = true;
        vault.paused = true; // closed implies paused
    } else if (std::holds_alternative<UpdateSlidersAction>(action) ||
               std::holds_alternative<UpdateStrategiesAction>(action)) {
        report.config_update = true;
    } else if (std::holds_alternative<EmergencyLiquidateAction>(action)) {
        std::vector<TokenId> held;
        for (const auto& [id, pos] : vault.positions) held.push_back(id);
        for (const auto& id : held) {
            auto pit = pools.find(id);
            if (pit == pools.end()) continue;
            auto q = quote_sell(pit->second, vault.positions.at(id).balance);
            if (!q.ok()) continue;
            auto r = execute_swap(pit->second, *q);
            if (!r.ok()) continue;
            apply_sell_settlement(vault, *q, now);
            report.liquidations.push_back(*r);
        }
        vault.paused = true;
    }
    return report;
}

// Settlement bookkeeping. Preconditions (enough ETH on buys, enough tokens on
// sells) are guaranteed upstream by the guard; violations are internal errors.
inline void apply_buy_settlement(Vault& vault, const SwapQuote& q, Tick now) {
    if (q.side != Side::Buy) throw std::logic_error("apply_buy_settlement: not a buy");
    if (q.eth_in > vault.eth_balance)
        throw std::logic_error("apply_buy_settlement: spend exceeds balance");
    vault.eth_balance -= q.eth_in;
    auto [it, fresh] = vault.positions.try_emplace(q.token_id);
    Position& pos = it->second;
    if (fresh) pos.first_acquired_at = now;
    pos.balance += q.token_out;
    pos.cost_basis += q.eth_in;
    pos.last_trade_at = now;
    vault.fees_paid += q.fee_total();
}

// Returns the realized PnL (signed wei) of the sold lot.
inline i128 apply_sell_settlement(Vault& vault, const SwapQuote& q, Tick now) {
    if (q.side != Side::Sell) throw std::logic_error("apply_sell_settlement: not a sell");
    auto it = vault.positions.find(q.token_id);
    if (it == vault.positions.end() || q.token_in > it->second.balance)
        throw std::logic_error("apply_sell_settlement: amount exceeds position");
    Position& pos = it->second;
    Eth basis_sold(muldiv(pos.cost_basis.raw, q.token_in.raw, pos.balance.raw));
    pos.balance -= q.token_in;
    pos.cost_basis -= basis_sold;
    pos.last_trade_at = now;
    vault.eth_balance += q.eth_out;
    vault.fees_paid += q.fee_total();
    i128 realized = i128(q.eth_out.raw) - i128(basis_sold.raw);
    vault.realized_pnl_wei += realized;
    if (pos.balance.is_zero()) vault.positions.erase(it);
    return realized;
}

inline i128 apply_settlement(Vault& vault, const SwapQuote& q, Tick now) {
    if (q.side == Side::Buy) {
        apply_buy_settlement(vault, q, now);
        return 0;
    }
    return apply_sell_settlement(vault, q, now);
}

struct PositionView {
    TokenId token_id;
    std::string symbol;
    TokenUnits balance;
    u128 avg_entry_e18 = 0;
    u128 spot_e18 = 0;
    Eth value_at_spot;
    std::optional<i64> unrealized_pnl_bps;
    Tick time_held = 0;
    Tick since_last_trade = 0;

    bool operator==(const PositionView&) const = default;
};

struct PortfolioContext {
    Eth eth_balance;
    std::vector<PositionView> positions; // token-id order
    Eth token_value;
    Eth total_value;
    u64 deployment_bps = 0; // token value / total value
    i128 realized_pnl_wei = 0;
    Eth fees_paid;

    bool operator==(const PortfolioContext&) const = default;
};

inline PortfolioContext portfolio_view(const Vault& vault, const MarketSnapshot& snapshot,
                                       Tick now) {
    PortfolioContext ctx;
    ctx.eth_balance = vault.eth_balance;
    ctx.realized_pnl_wei = vault.realized_pnl_wei;
    ctx.fees_paid = vault.fees_paid;
    for (const auto& [id, pos] : vault.positions) {
        PositionView v;
        v.token_id = id;
        v.balance = pos.balance;
        v.avg_entry_e18 = pos.avg_entry_price_e18();
        if (const TokenStats* row = snapshot.find(id)) {
            v.symbol = row->symbol;
            v.spot_e18 = row->price_e18;
        }
        v.value_at_spot = Eth(muldiv(pos.balance.raw, v.spot_e18, QUANTA));
        if (v.avg_entry_e18 > 0) {
            if (v.spot_e18 >= v.avg_entry_e18)
                v.unrealized_pnl_bps = i64(muldiv(v.spot_e18 - v.avg_entry_e18, 10'000,
                                                  v.avg_entry_e18));
            else
                v.unrealized_pnl_bps = -i64(muldiv(v.avg_entry_e18 - v.spot_e18, 10'000,
                                                   v.avg_entry_e18));
        }
        v.time_held = now - pos.first_acquired_at;
        v.since_last_trade = now - pos.last_trade_at;
        ctx.token_value += v.value_at_spot;
        ctx.positions.push_back(std::move(v));
    }
    ctx.total_value = ctx.eth_balance + ctx.token_value;
    if (!ctx.total_value.is_zero())
        ctx.deployment_bps = u64(muldiv(ctx.token_value.raw, 10'000, ctx.total_value.raw));
    return ctx;
}

// Accounting identity, exact in integer arithmetic because mark-to-market
// terms cancel: eth + sum(cost basis) == net funded + realized PnL.
inline bool accounting_identity_holds(const Vault& vault) {
    i128 lhs = i128(vault.eth_balance.raw);
    for (const auto& [id, pos] : vault.positions) lhs += i128(pos.cost_basis.raw);
    return lhs == vault.net_funded_wei + vault.realized_pnl_wei;
}

inline std::map<TokenId, u64> count_holders(const std::map<VaultId, Vault>& vaults) {
    std::map<TokenId, u64> counts;
    for (const auto& [vid, v] : vaults)
        for (const auto& [tid, pos] : v.positions)
            if (!pos.balance.is_zero()) ++counts[tid];
    return counts;
}

} // namespace vaultsim
