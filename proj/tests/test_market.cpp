#include <catch2/catch_amalgamated.hpp>

#include "vaultsim/market.hpp"
#include "vaultsim/rng.hpp"

using namespace vaultsim;

namespace {

struct Fixture {
    std::map<TokenId, TokenMeta> tokens;
    std::map<TokenId, Pool> pools;
    std::map<TokenId, u64> holders;
    MarketHistory history;

    void add_token(const TokenId& id, u64 eth_whole, u64 tok_whole, Tick launch = 0) {
        TokenMeta m;
        m.token_id = id;
        m.symbol = id;
        m.launched_at = launch;
        tokens[id] = m;
        Pool p;
        p.token_id = id;
        p.eth_reserve = Eth::from_whole(eth_whole);
        p.token_reserve = TokenUnits::from_whole(tok_whole);
        pools[id] = p;
        history.record_genesis(id, launch, p.spot_price_e18());
    }

    void trade(Tick tick, VaultId v, const TokenId& id, Side side, const char* eth) {
        history.append_trade({tick, tick * MS_PER_TICK, v, id, side, Eth::parse(eth)});
    }
};

} // namespace

TEST_CASE("empty window yields absent aggregates", "[market]") {
    Fixture f;
    f.add_token("ALPHA", 100, 1'000'000);
    auto snap = build_snapshot(f.history, f.tokens, f.pools, f.holders, 10);
    REQUIRE(snap.rows.size() == 1);
    const auto& r = snap.rows[0];
    REQUIRE(!r.volume_5m.has_value());
    REQUIRE(!r.net_flow_5m_abs.has_value());
    REQUIRE(!r.volume_1h.has_value());
    REQUIRE(r.unique_traders_5m == 0);
    REQUIRE(r.price_e18 == f.pools["ALPHA"].spot_price_e18());
}

TEST_CASE("windowed volume and net flow match a brute-force sum", "[market]") {
    Fixture f;
    f.add_token("ALPHA", 100, 1'000'000);
    // one buy of 1 ETH and one sell of 0.4 ETH in the 5m window [9, 10)
    f.trade(9, 1, "ALPHA", Side::Buy, "1");
    f.trade(9, 2, "ALPHA", Side::Sell, "0.4");
    auto snap = build_snapshot(f.history, f.tokens, f.pools, f.holders, 10);
    const auto& r = snap.rows[0];
    REQUIRE(r.volume_5m.has_value());
    REQUIRE(r.volume_5m->to_decimal_string() == "1.4");
    REQUIRE(r.net_flow_5m_abs->to_decimal_string() == "0.6");
    REQUIRE(!r.net_flow_5m_negative);
    REQUIRE(r.unique_traders_5m == 2);
}

TEST_CASE("delisted tokens emit no row", "[market]") {
    Fixture f;
    f.add_token("ALPHA", 100, 1'000'000);
    f.add_token("BRAVO", 50, 1'000'000);
    f.tokens["BRAVO"].delisted = true;
    auto snap = build_snapshot(f.history, f.tokens, f.pools, f.holders, 5);
    REQUIRE(snap.rows.size() == 1);
    REQUIRE(snap.rows[0].token_id == "ALPHA");
}

TEST_CASE("pct changes use window-start prices and genesis baseline", "[market]") {
    Fixture f;
    f.add_token("ALPHA", 100, 1'000'000); // genesis price 1e14
    u128 genesis = f.pools["ALPHA"].spot_price_e18();
    // price doubles at end of tick 3
    f.history.record_price("ALPHA", 3, genesis * 2);
    f.pools["ALPHA"].eth_reserve = Eth::from_whole(200);

    auto snap = build_snapshot(f.history, f.tokens, f.pools, f.holders, 4);
    const auto& r = snap.rows[0];
    // 5m window start = tick 3 -> price already doubled -> 0%
    REQUIRE(r.pct_change_5m_bps.has_value());
    REQUIRE(*r.pct_change_5m_bps == 0);
    // all-time change vs genesis = +100%
    REQUIRE(*r.pct_change_all_bps == 10'000);
    // 1h window starts before launch -> absent
    REQUIRE(!r.pct_change_1h_bps.has_value());
}

TEST_CASE("price_at_or_before agrees with a linear scan", "[market]") {
    MarketHistory h;
    RngStream rng = RngStream::derive(21, "price-scan");
    std::vector<PricePoint> pts;
    Tick t = 0;
    for (int i = 0; i < 200; ++i) {
        t += 1 + Tick(rng.next_below(5));
        u128 price = 1 + rng.next_below(1'000'000);
        h.record_price("X", t, price);
        pts.push_back({t, price});
    }
    for (Tick q = -2; q < t + 3; ++q) {
        std::optional<u128> expect;
        for (const auto& p : pts)
            if (p.tick <= q) expect = p.price_e18;
        REQUIRE(h.price_at_or_before("X", q) == expect);
    }
}

TEST_CASE("trade log rejects out-of-order appends", "[market]") {
    MarketHistory h;
    h.append_trade({5, 5 * MS_PER_TICK, 1, "ALPHA", Side::Buy, Eth::from_whole(1)});
    REQUIRE_THROWS_AS(
        h.append_trade({4, 4 * MS_PER_TICK, 1, "ALPHA", Side::Buy, Eth::from_whole(1)}),
        std::logic_error);
}
