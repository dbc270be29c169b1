// Trade/price history and the market-snapshot indexer that feeds the brief
// compiler. Windowed aggregates use half-open tick intervals [now-w, now);
// windows with no history are absent rather than zero-filled.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "vaultsim/amount.hpp"
#include "vaultsim/pool.hpp"

namespace vaultsim {

using VaultId = u64;

inline constexpr i64 MS_PER_TICK = 300'000; // 5 minutes
inline constexpr Tick TICKS_5M = 1;
inline constexpr Tick TICKS_1H = 12;
inline constexpr Tick TICKS_6H = 72;
inline constexpr Tick TICKS_24H = 288;

struct TradeLogEntry {
    Tick tick = 0;
    i64 time_ms = 0;
    VaultId vault_id = 0;
    TokenId token_id;
    Side side = Side::Buy;
    Eth eth_amount; // ETH leg of the swap as experienced by the vault
};

struct PricePoint {
    Tick tick = 0;
    u128 price_e18 = 0;
};

struct MarketHistory {
    std::vector<TradeLogEntry> trades; // ordered by tick
    std::map<TokenId, std::vector<PricePoint>> prices;
    std::map<TokenId, u128> genesis_price_e18;

    void append_trade(TradeLogEntry t) {
        if (!trades.empty() && t.tick < trades.back().tick)
            throw std::logic_error("trade log must be appended in tick order");
        trades.push_back(std::move(t));
    }

    void record_price(const TokenId& id, Tick tick, u128 price_e18) {
        auto& v = prices[id];
        if (!v.empty() && v.back().tick == tick) {
            v.back().price_e18 = price_e18;
        } else {
            v.push_back({tick, price_e18});
        }
    }

    void record_genesis(const TokenId& id, Tick tick, u128 price_e18) {
        genesis_price_e18[id] = price_e18;
        record_price(id, tick, price_e18);
    }

    // Latest recorded price at or before `tick`; nullopt if none.
    std::optional<u128> price_at_or_before(const TokenId& id, Tick tick) const {
        auto it = prices.find(id);
        if (it == prices.end() || it->second.empty()) return std::nullopt;
        const auto& v = it->second;
        auto pos = std::upper_bound(v.begin(), v.end(), tick,
                                    [](Tick t, const PricePoint& p) { return t < p.tick; });
        if (pos == v.begin()) return std::nullopt;
        return std::prev(pos)->price_e18;
    }
};

// One row of the market snapshot.
struct TokenStats {
    TokenId token_id;
    std::string symbol;
    u128 price_e18 = 0;
    Tick age = 0;

    std::optional<i64> pct_change_5m_bps;
    std::optional<i64> pct_change_1h_bps;
    std::optional<i64> pct_change_6h_bps;
    std::optional<i64> pct_change_24h_bps;
    std::optional<i64> pct_change_all_bps;

    std::optional<Eth> volume_5m;
    std::optional<Eth> volume_1h;
    std::optional<Eth> net_flow_5m_abs; // |flow|, sign carried separately
    bool net_flow_5m_negative = false;
    std::optional<Eth> net_flow_1h_abs;
    bool net_flow_1h_negative = false;

    u64 holders = 0;
    u64 unique_traders_5m = 0;

    bool operator==(const TokenStats&) const = default;
};

struct MarketSnapshot {
    Tick now = 0;
    std::string eth_usd_display; // pass-through scenario value, display only
    std::vector<TokenStats> rows;

    const TokenStats* find(const TokenId& id) const {
        for (const auto& r : rows)
            if (r.token_id == id) return &r;
        return nullptr;
    }

    bool operator==(const MarketSnapshot&) const = default;
};

namespace detail {

inline std::optional<i64> pct_change_bps(u128 cur, std::optional<u128> then) {
    if (!then || *then == 0) return std::nullopt;
    if (cur >= *then) return i64(muldiv(cur - *then, 10'000, *then));
    return -i64(muldiv(*then - cur, 10'000, *then));
}

} // namespace detail

inline MarketSnapshot build_snapshot(const MarketHistory& history,
                                     const std::map<TokenId, TokenMeta>& tokens,
                                     const std::map<TokenId, Pool>& pools,
                                     const std::map<TokenId, u64>& holder_counts,
                                     Tick now, std::string eth_usd_display = {}) {
    MarketSnapshot snap;
    snap.now = now;
    snap.eth_usd_display = std::move(eth_usd_display);

    struct WindowAgg {
        u128 vol_5m = 0, vol_1h = 0;
        i128 flow_5m = 0, flow_1h = 0;
        bool any_5m = false, any_1h = false;
        std::vector<VaultId> traders_5m;
    };
    std::map<TokenId, WindowAgg> agg;

    auto from = std::lower_bound(history.trades.begin(), history.trades.end(), now - TICKS_1H,
                                 [](const TradeLogEntry& t, Tick k) { return t.tick < k; });
    for (auto it = from; it != history.trades.end() && it->tick < now; ++it) {
        auto& a = agg[it->token_id];
        i128 signed_eth = it->side == Side::Buy ? i128(it->eth_amount.raw)
                                                : -i128(it->eth_amount.raw);
        a.vol_1h += it->eth_amount.raw;
        a.flow_1h += signed_eth;
        a.any_1h = true;
        if (it->tick >= now - TICKS_5M) {
            a.vol_5m += it->eth_amount.raw;
            a.flow_5m += signed_eth;
            a.any_5m = true;
            a.traders_5m.push_back(it->vault_id);
        }
    }

    // Rows in genesis order; delisted tokens emit no row.
    std::vector<const TokenMeta*> order;
    for (const auto& [id, meta] : tokens)
        if (!meta.delisted) order.push_back(&meta);
    std::sort(order.begin(), order.end(), [](const TokenMeta* a, const TokenMeta* b) {
        if (a->launched_at != b->launched_at) return a->launched_at < b->launched_at;
        return a->token_id < b->token_id;
    });

    for (const TokenMeta* meta : order) {
        auto pit = pools.find(meta->token_id);
        if (pit == pools.end()) continue;

        TokenStats row;
        row.token_id = meta->token_id;
        row.symbol = meta->symbol;
        row.price_e18 = pit->second.spot_price_e18();
        row.age = now - meta->launched_at;

        auto change = [&](Tick w) -> std::optional<i64> {
            if (now - w < meta->launched_at) return std::nullopt;
            return detail::pct_change_bps(row.price_e18,
                                          history.price_at_or_before(meta->token_id, now - w));
        };
        row.pct_change_5m_bps = change(TICKS_5M);
        row.pct_change_1h_bps = change(TICKS_1H);
        row.pct_change_6h_bps = change(TICKS_6H);
        row.pct_change_24h_bps = change(TICKS_24H);
        auto git = history.genesis_price_e18.find(meta->token_id);
        if (git != history.genesis_price_e18.end() && git->second != 0)
            row.pct_change_all_bps = detail::pct_change_bps(row.price_e18, git->second);

        auto ait = agg.find(meta->token_id);
        if (ait != agg.end()) {
            const auto& a = ait->second;
            if (a.any_5m) {
                row.volume_5m = Eth(a.vol_5m);
                row.net_flow_5m_abs = Eth(u128(a.flow_5m < 0 ? -a.flow_5m : a.flow_5m));
                row.net_flow_5m_negative = a.flow_5m < 0;
                auto traders = a.traders_5m;
                std::sort(traders.begin(), traders.end());
                traders.erase(std::unique(traders.begin(), traders.end()), traders.end());
                row.unique_traders_5m = traders.size();
            }
            if (a.any_1h) {
                row.volume_1h = Eth(a.vol_1h);
                row.net_flow_1h_abs = Eth(u128(a.flow_1h < 0 ? -a.flow_1h : a.flow_1h));
                row.net_flow_1h_negative = a.flow_1h < 0;
            }
        }

        auto hit = holder_counts.find(meta->token_id);
        row.holders = hit == holder_counts.end() ? 0 : hit->second;

        snap.rows.push_back(std::move(row));
    }
    return snap;
}

} // namespace vaultsim
