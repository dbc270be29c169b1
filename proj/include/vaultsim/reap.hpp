// Periodic elimination mechanic: the lowest-market-cap token is removed, its
// pool's ETH buys the leader (protocol fee waived, LP fee kept), and holders
// of the eliminated token are compensated pro-rata in leader tokens.
// Floor-rounded with an explicit dust account so conservation is exact.
#pragma once

#include <map>
#include <vector>

#include "vaultsim/amount.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/market.hpp"
#include "vaultsim/pool.hpp"
#include "vaultsim/vault.hpp"

namespace vaultsim {

struct ReapSchedule {
    Tick period = 288; // one simulated day
    Tick next_at = 288;
};

struct Compensation {
    VaultId vault_id = 0;
    TokenUnits amount; // leader token units

    bool operator==(const Compensation&) const = default;
};

struct ReapEvent {
    Tick tick = 0;
    TokenId eliminated_token;
    TokenId leader_token;
    Eth eth_moved;
    TokenUnits leader_acquired;
    std::vector<Compensation> compensation; // ascending vault_id
    TokenUnits dust;
};

enum class ReapError { InsufficientTokens };

struct ReapPair {
    TokenId source; // lowest market cap, eliminated
    TokenId target; // highest market cap, leader
};

// Market cap = spot price x total supply. Ties break to the earlier
// launched_at, then lexicographic token id. Fewer than two live tokens means
// the tournament has graduated.
inline Expected<ReapPair, ReapError> select_reap_pair(
    const MarketSnapshot& snapshot, const std::map<TokenId, TokenMeta>& tokens) {
    struct Cand {
        const TokenStats* row;
        const TokenMeta* meta;
    };
    std::vector<Cand> live;
    for (const auto& r : snapshot.rows) {
        auto it = tokens.find(r.token_id);
        if (it == tokens.end() || it->second.delisted) continue;
        live.push_back({&r, &it->second});
    }
    if (live.size() < 2) return ReapError::InsufficientTokens;

    auto cap_less = [](const Cand& a, const Cand& b) {
        int c = cmp_products(a.row->price_e18, a.meta->total_supply.raw, b.row->price_e18,
                             b.meta->total_supply.raw);
        if (c != 0) return c < 0;
        if (a.meta->launched_at != b.meta->launched_at)
            return a.meta->launched_at < b.meta->launched_at;
        return a.meta->token_id < b.meta->token_id;
    };
    const Cand* lo = &live[0];
    const Cand* hi = &live[0];
    for (const auto& c : live) {
        if (cap_less(c, *lo)) lo = &c;
        if (cap_less(*hi, c)) hi = &c;
    }
    return ReapPair{lo->meta->token_id, hi->meta->token_id};
}

// Executes a reap in place. Order of effects:
//   1 the source pool's entire ETH reserve buys the leader through the
//     leader's pool, paying the LP fee only;
//   2 acquired leader tokens are distributed to source holders pro-rata by
//     vault balance, floor-rounded, remainder recorded as dust;
//   3 source balances are zeroed, the source token delists, its pool is
//     removed (pool-held inventory is destroyed with it).
// Compensated positions inherit the written-off cost basis of the source
// position, so the per-vault accounting identity keeps holding; holders too
// small to receive a unit realize the basis as a loss instead.
inline ReapEvent execute_reap(std::map<TokenId, TokenMeta>& tokens,
                              std::map<TokenId, Pool>& pools,
                              std::map<VaultId, Vault>& vaults,
                              std::map<TokenId, TokenUnits>& protocol_dust,
                              Eth& protocol_eth_collected, const ReapPair& pair, Tick tick) {
    auto sit = pools.find(pair.source);
    auto dit = pools.find(pair.target);
    if (sit == pools.end() || dit == pools.end())
        throw std::invalid_argument("execute_reap: unknown source or target pool");
    if (pair.source == pair.target)
        throw std::invalid_argument("execute_reap: source equals target");

    ReapEvent ev;
    ev.tick = tick;
    ev.eliminated_token = pair.source;
    ev.leader_token = pair.target;
    ev.eth_moved = sit->second.eth_reserve;

    Pool& leader_pool = dit->second;
    if (!ev.eth_moved.is_zero()) {
        auto q = quote_buy_with_fees(leader_pool, ev.eth_moved, 0, leader_pool.lp_fee_bps);
        if (q.ok()) {
            if (!execute_swap(leader_pool, *q).ok())
                throw std::logic_error("execute_reap: leader swap failed");
            ev.leader_acquired = q->token_out;
        } else {
            // Dust-sized reserve that cannot buy a single unit: donate the ETH
            // to the leader pool so conservation still holds.
            leader_pool.eth_reserve += ev.eth_moved;
            leader_pool.version += 1;
        }
    }
    sit->second.eth_reserve = Eth(0);
    // Accrued protocol fees are not part of the reserve; collect them before
    // the pool object disappears.
    protocol_eth_collected += sit->second.protocol_fee_accrued;
    sit->second.protocol_fee_accrued = Eth(0);

    u128 total_held = 0;
    for (const auto& [vid, v] : vaults) {
        auto p = v.positions.find(pair.source);
        if (p != v.positions.end()) total_held += p->second.balance.raw;
    }

    TokenUnits distributed(0);
    for (auto& [vid, v] : vaults) {
        auto p = v.positions.find(pair.source);
        if (p == v.positions.end()) continue;
        TokenUnits comp(total_held == 0 ? 0
                                        : muldiv(ev.leader_acquired.raw, p->second.balance.raw,
                                                 total_held));
        Eth basis = p->second.cost_basis;
        v.positions.erase(p);
        if (!comp.is_zero()) {
            auto [lp, fresh] = v.positions.try_emplace(pair.target);
            if (fresh) {
                lp->second.first_acquired_at = tick;
                lp->second.last_trade_at = tick;
            }
            lp->second.balance += comp;
            lp->second.cost_basis += basis;
            ev.compensation.push_back({vid, comp});
            distributed += comp;
        } else {
            v.realized_pnl_wei -= i128(basis.raw); // written off
        }
    }
    ev.dust = ev.leader_acquired - distributed;
    if (!ev.dust.is_zero()) protocol_dust[pair.target] += ev.dust;

    tokens.at(pair.source).delisted = true;
    pools.erase(sit);
    return ev;
}

} // namespace vaultsim
