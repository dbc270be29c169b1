#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "vaultsim/analytics.hpp"
#include "vaultsim/rng.hpp"
#include "world_fixtures.hpp"

using namespace vaultsim;

namespace {

TradeEvent sell_at(i64 ms, VaultId v, const TokenId& t = "X") {
    return {ms, v, t, Side::Sell, Eth::parse("0.1")};
}
TradeEvent buy_at(i64 ms, VaultId v, const TokenId& t = "X") {
    return {ms, v, t, Side::Buy, Eth::parse("0.1")};
}

// O(n * window) brute-force oracle for cascade detection, written directly
// from the definition: qualifying anchored windows, merged when overlapping.
std::vector<CascadeEvent> cascade_oracle(std::vector<TradeEvent> trades, u64 k, i64 w) {
    std::vector<CascadeEvent> out;
    std::set<TokenId> tokens;
    for (const auto& t : trades)
        if (t.side == Side::Sell) tokens.insert(t.token_id);
    for (const TokenId& token : tokens) {
        std::vector<TradeEvent> sells;
        for (const auto& t : trades)
            if (t.side == Side::Sell && t.token_id == token) sells.push_back(t);
        std::sort(sells.begin(), sells.end(),
                  [](const TradeEvent& a, const TradeEvent& b) { return a.time_ms < b.time_ms; });
        std::vector<std::pair<i64, i64>> windows;
        for (const auto& s : sells) {
            std::set<VaultId> vaults;
            for (const auto& t : sells)
                if (t.time_ms >= s.time_ms && t.time_ms < s.time_ms + w) vaults.insert(t.vault_id);
            if (vaults.size() >= k) windows.push_back({s.time_ms, s.time_ms + w});
        }
        std::vector<std::pair<i64, i64>> merged;
        for (const auto& q : windows) {
            if (!merged.empty() && q.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, q.second);
            else merged.push_back(q);
        }
        for (const auto& m : merged) {
            CascadeEvent ev;
            ev.token_id = token;
            std::set<VaultId> vaults;
            std::vector<TradeEvent> in;
            for (const auto& t : sells)
                if (t.time_ms >= m.first && t.time_ms < m.second) {
                    in.push_back(t);
                    vaults.insert(t.vault_id);
                }
            ev.start_ms = in.front().time_ms;
            ev.end_ms = in.back().time_ms;
            ev.vault_count = vaults.size();
            ev.sell_count = in.size();
            std::vector<i64> gaps;
            for (std::size_t i = 1; i < in.size(); ++i)
                if (in[i].vault_id != in[i - 1].vault_id)
                    gaps.push_back(in[i].time_ms - in[i - 1].time_ms);
            if (!gaps.empty()) {
                std::sort(gaps.begin(), gaps.end());
                std::size_t mid = gaps.size() / 2;
                ev.median_gap_ms = gaps.size() % 2
                                       ? double(gaps[mid])
                                       : (double(gaps[mid - 1]) + double(gaps[mid])) / 2;
            }
            out.push_back(ev);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CascadeEvent& a, const CascadeEvent& b) {
        return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.token_id < b.token_id;
    });
    return out;
}

bool same_events(const std::vector<CascadeEvent>& a, const std::vector<CascadeEvent>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].token_id != b[i].token_id || a[i].start_ms != b[i].start_ms ||
            a[i].end_ms != b[i].end_ms || a[i].vault_count != b[i].vault_count ||
            a[i].sell_count != b[i].sell_count || a[i].median_gap_ms != b[i].median_gap_ms)
            return false;
    }
    return true;
}

// Enumeration oracle for tiled two-sided windows.
double two_sided_oracle(const std::vector<TradeEvent>& trades, i64 w) {
    if (trades.empty()) return 0.0;
    u64 inside = 0;
    for (const auto& t : trades) {
        bool buy = false, sell = false;
        for (const auto& o : trades) {
            if (o.token_id != t.token_id) continue;
            if (o.time_ms / w != t.time_ms / w) continue;
            (o.side == Side::Buy ? buy : sell) = true;
        }
        if (buy && sell) ++inside;
    }
    return double(inside) / double(trades.size());
}

} // namespace

TEST_CASE("cascade fixtures from the production definitions", "[analytics]") {
    SECTION("12 distinct vaults within 5 minutes form one event") {
        std::vector<TradeEvent> trades;
        for (u64 v = 1; v <= 12; ++v) trades.push_back(sell_at(i64(v) * 20'000, v));
        auto events = detect_sell_cascades(trades, 10, CASCADE_WINDOW_MS);
        REQUIRE(events.size() == 1);
        REQUIRE(events[0].vault_count == 12);
    }
    SECTION("9 distinct vaults within 10 minutes are below threshold") {
        std::vector<TradeEvent> trades;
        for (u64 v = 1; v <= 9; ++v) trades.push_back(sell_at(i64(v) * 60'000, v));
        REQUIRE(detect_sell_cascades(trades, 10, CASCADE_WINDOW_MS).empty());
    }
    SECTION("438 sells at uniform 9.5 s gaps merge into one event with median 9.5 s") {
        std::vector<TradeEvent> trades;
        for (u64 v = 1; v <= 438; ++v) trades.push_back(sell_at(i64(v - 1) * 9'500, v));
        auto events = detect_sell_cascades(trades, 10, CASCADE_WINDOW_MS);
        REQUIRE(events.size() == 1);
        REQUIRE(events[0].sell_count == 438);
        REQUIRE(events[0].vault_count == 438);
        REQUIRE(events[0].median_gap_ms == 9'500.0);
    }
}

TEST_CASE("cascade detection matches the brute-force oracle", "[analytics]") {
    RngStream rng = RngStream::derive(101, "cascade-fuzz");
    for (int iter = 0; iter < 120; ++iter) {
        std::vector<TradeEvent> trades;
        u64 n = 50 + rng.next_below(1500);
        i64 horizon = i64(n) * 8'000; // keeps window occupancy bounded
        for (u64 i = 0; i < n; ++i) {
            TradeEvent t;
            t.time_ms = i64(rng.next_below(u64(horizon)));
            t.vault_id = 1 + rng.next_below(40);
            t.token_id = rng.next_below(3) == 0 ? "Y" : "X";
            t.side = rng.next_below(5) == 0 ? Side::Buy : Side::Sell;
            trades.push_back(t);
        }
        std::sort(trades.begin(), trades.end(),
                  [](const TradeEvent& a, const TradeEvent& b) { return a.time_ms < b.time_ms; });
        u64 k = 3 + rng.next_below(10);
        auto got = detect_sell_cascades(trades, k, CASCADE_WINDOW_MS);
        auto want = cascade_oracle(trades, k, CASCADE_WINDOW_MS);
        REQUIRE(same_events(got, want));
    }
}

TEST_CASE("two-sided fraction boundary fixtures", "[analytics]") {
    SECTION("buys only is zero") {
        std::vector<TradeEvent> trades;
        for (u64 v = 1; v <= 20; ++v) trades.push_back(buy_at(i64(v) * 30'000, v));
        REQUIRE(two_sided_fraction(trades) == 0.0);
    }
    SECTION("every window mixed is one") {
        std::vector<TradeEvent> trades;
        for (i64 wdw = 0; wdw < 10; ++wdw) {
            trades.push_back(buy_at(wdw * TWO_SIDED_WINDOW_MS + 1'000, 1));
            trades.push_back(sell_at(wdw * TWO_SIDED_WINDOW_MS + 2'000, 2));
        }
        REQUIRE(two_sided_fraction(trades) == 1.0);
    }
    SECTION("constructed 80% fixture") {
        std::vector<TradeEvent> trades;
        // two-sided windows holding 8 trades
        for (i64 wdw = 0; wdw < 2; ++wdw) {
            for (int i = 0; i < 2; ++i) {
                trades.push_back(buy_at(wdw * TWO_SIDED_WINDOW_MS + i * 1'000 + 500, 1));
                trades.push_back(sell_at(wdw * TWO_SIDED_WINDOW_MS + i * 1'000 + 700, 2));
            }
        }
        // one-sided windows holding the remaining 2 trades
        trades.push_back(buy_at(10 * TWO_SIDED_WINDOW_MS + 500, 3));
        trades.push_back(buy_at(11 * TWO_SIDED_WINDOW_MS + 500, 3));
        REQUIRE(two_sided_fraction(trades) == 0.8);
    }
}

TEST_CASE("two-sided fraction matches the enumeration oracle", "[analytics]") {
    RngStream rng = RngStream::derive(102, "two-sided-fuzz");
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<TradeEvent> trades;
        u64 n = 1 + rng.next_below(800);
        for (u64 i = 0; i < n; ++i) {
            TradeEvent t;
            t.time_ms = i64(rng.next_below(n * 60'000));
            t.vault_id = 1 + rng.next_below(20);
            t.token_id = rng.next_below(2) ? "X" : "Y";
            t.side = rng.next_below(2) ? Side::Buy : Side::Sell;
            trades.push_back(t);
        }
        REQUIRE(two_sided_fraction(trades) ==
                Catch::Approx(two_sided_oracle(trades, TWO_SIDED_WINDOW_MS)).epsilon(1e-12));
    }
}

namespace {

TraceStore cohort_store(const std::vector<std::tuple<VaultId, Tick, ToolCall::Action, bool>>& rows,
                        int ta_level = 3) {
    TraceStore s;
    u64 id = 1;
    for (const auto& [vault, tick, action, settles] : rows) {
        TraceRecord r;
        r.invocation_id = id++;
        r.tick = tick;
        r.vault_id = vault;
        r.config_version = 1;
        r.brief_hash = "h";
        r.structured_digest = "d";
        r.template_variant_id = "default";
        r.sliders.trading_activity = ta_level;
        ToolCall c;
        c.action = action;
        if (action != ToolCall::Action::Observe) {
            c.token_id = "ALPHA";
            c.fraction_ppm = 250'000;
        }
        c.reason_tags = {action == ToolCall::Action::Observe ? ReasonTag::FeeCost
                                                             : ReasonTag::Momentum};
        r.parsed = c;
        r.reason_tags = c.reason_tags;
        Accepted a;
        a.is_swap = c.is_swap();
        r.verdict = a;
        if (c.is_swap() && settles) {
            r.settlement.kind = Settlement::Kind::Settled;
            r.settlement.side = action == ToolCall::Action::Buy ? Side::Buy : Side::Sell;
            r.settlement.eth_amount = Eth::parse("0.1");
        }
        s.archive_brief("h", "");
        if (!s.append(std::move(r)).ok()) throw std::runtime_error("append");
    }
    return s;
}

} // namespace

TEST_CASE("cold start ratio over the first thirty invocations", "[analytics]") {
    std::vector<std::tuple<VaultId, Tick, ToolCall::Action, bool>> rows;
    for (Tick t = 0; t < 40; ++t) {
        auto action = ToolCall::Action::Observe;
        if (t == 1 || t == 5 || t == 9) action = ToolCall::Action::Buy;
        if (t == 20) action = ToolCall::Action::Sell;
        if (t >= 31 && t <= 35) action = ToolCall::Action::Buy; // beyond the window
        rows.push_back({1, t, action, true});
    }
    TraceStore s = cohort_store(rows);
    ColdStartReport rep = cold_start_buy_sell(s, 1);
    REQUIRE(rep.buys == 3);
    REQUIRE(rep.sells == 1);
    REQUIRE(rep.ratio == 3.0);

    SECTION("all observes report the undefined sentinel") {
        std::vector<std::tuple<VaultId, Tick, ToolCall::Action, bool>> idle;
        for (Tick t = 0; t < 30; ++t) idle.push_back({2, t, ToolCall::Action::Observe, false});
        TraceStore s2 = cohort_store(idle);
        ColdStartReport r2 = cold_start_buy_sell(s2, 2);
        REQUIRE(r2.buys == 0);
        REQUIRE(r2.sells == 0);
        REQUIRE(!r2.ratio.has_value());
    }
}

TEST_CASE("gradient verdicts detect monotone and inverted shapes", "[analytics]") {
    // build one store with three TA cohorts shaped like the documented
    // inversion: TA3 10.7%, TA4 12.9%, TA5 8.3%
    TraceStore s;
    u64 id = 1;
    auto add_cohort = [&](int level, VaultId vault, int per_mille) {
        for (Tick t = 0; t < 1000; ++t) {
            TraceRecord r;
            r.invocation_id = id++;
            r.tick = t;
            r.vault_id = vault;
            r.config_version = 1;
            r.brief_hash = "h";
            r.structured_digest = "d";
            r.template_variant_id = "hardened";
            r.sliders.trading_activity = level;
            ToolCall c;
            bool trades = (t * per_mille) % 1000 < per_mille;
            c.action = trades ? ToolCall::Action::Buy : ToolCall::Action::Observe;
            if (trades) {
                c.token_id = "ALPHA";
                c.fraction_ppm = 100'000;
            }
            r.parsed = c;
            Accepted a;
            a.is_swap = trades;
            r.verdict = a;
            if (trades) {
                r.settlement.kind = Settlement::Kind::Settled;
                r.settlement.side = Side::Buy;
                r.settlement.eth_amount = Eth::parse("0.1");
            }
            s.archive_brief("h", "");
            if (!s.append(std::move(r)).ok()) throw std::runtime_error("append");
        }
    };
    add_cohort(3, 1, 107);
    add_cohort(4, 2, 129);
    add_cohort(5, 3, 83);

    Json scenario{{"tokens", Json::array({Json{{"symbol", "ALPHA"}, {"launch_tick", 0}}})}};
    auto rep = slider_gradient_report(s, scenario, SliderName::TA);
    REQUIRE(rep.ok());
    REQUIRE(rep->verdict == GradientVerdict::Inverted);
    REQUIRE(rep->levels.at(3).trade_rate() == Catch::Approx(0.107));
    REQUIRE(rep->levels.at(5).trade_rate() == Catch::Approx(0.083));

    SECTION("single-level traces are insufficient") {
        TraceStore s2;
        s2.archive_brief("h", "");
        TraceRecord r;
        r.invocation_id = 1;
        r.brief_hash = "h";
        r.sliders.trading_activity = 3;
        ToolCall c;
        r.parsed = c;
        Accepted a;
        r.verdict = a;
        REQUIRE(s2.append(std::move(r)).ok());
        auto bad = slider_gradient_report(s2, scenario, SliderName::TA);
        REQUIRE(!bad.ok());
        REQUIRE(bad.error() == AnalyticsError::InsufficientCohorts);
    }
}

TEST_CASE("deployment fraction from recorded snapshots", "[analytics]") {
    TraceStore s;
    s.archive_brief("h", "");
    auto rec = [&](u64 id, Tick tick, Eth eth, std::vector<PortfolioSnapshot::Entry> pos) {
        TraceRecord r;
        r.invocation_id = id;
        r.tick = tick;
        r.vault_id = 1;
        r.brief_hash = "h";
        ToolCall c;
        r.parsed = c;
        Accepted a;
        r.verdict = a;
        r.portfolio_after.eth_balance = eth;
        r.portfolio_after.positions = std::move(pos);
        REQUIRE(s.append(std::move(r)).ok());
    };
    rec(1, 0, Eth::from_whole(2), {}); // all ETH
    rec(2, 1, Eth::from_whole(1),
        {{"ALPHA", TokenUnits::from_whole(100), Eth::parse("0.01").raw, Eth::parse("0.01").raw}});
    rec(3, 2, Eth(0), {}); // post-liquidation

    REQUIRE(*deployment_fraction(s, 1, 0) == 0.0);
    REQUIRE(*deployment_fraction(s, 1, 1) == Catch::Approx(0.5)); // 1 ETH tokens vs 1 ETH cash
    REQUIRE(*deployment_fraction(s, 1, 2) == 0.0);
    REQUIRE(!deployment_fraction(s, 1, 9).ok());
}

TEST_CASE("fee salience counts fee-led observations", "[analytics]") {
    std::vector<std::tuple<VaultId, Tick, ToolCall::Action, bool>> rows;
    for (Tick t = 0; t < 10; ++t) rows.push_back({1, t, ToolCall::Action::Observe, false});
    TraceStore s = cohort_store(rows); // all observes carry fee_cost in this fixture
    REQUIRE(*fee_salience_rate(s) == 1.0);

    TraceStore empty;
    REQUIRE(!fee_salience_rate(empty).has_value());
}

TEST_CASE("fee-paralyzed cohort salience is exactly one via the engine", "[analytics]") {
    fixtures::ScenarioBuilder sb;
    sb.default_market().duration(12);
    sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 17);
    run(w, 12);
    REQUIRE(*fee_salience_rate(w.trace) == 1.0);
}

TEST_CASE("cooldown scan flags the 8/4/4 table and honors the HIGH exception", "[analytics]") {
    TraceStore s;
    s.archive_brief("h", "");
    u64 id = 1;
    auto settled = [&](Tick t, ToolCall::Action a, const char* label = "") {
        TraceRecord r;
        r.invocation_id = id++;
        r.tick = t;
        r.vault_id = 1;
        r.brief_hash = "h";
        ToolCall c;
        c.action = a;
        c.token_id = "ALPHA";
        c.fraction_ppm = 100'000;
        c.strategy_label = label;
        r.parsed = c;
        Accepted acc;
        acc.is_swap = true;
        r.verdict = acc;
        r.settlement.kind = Settlement::Kind::Settled;
        r.settlement.side = a == ToolCall::Action::Buy ? Side::Buy : Side::Sell;
        REQUIRE(s.append(std::move(r)).ok());
    };
    settled(0, ToolCall::Action::Buy);
    settled(2, ToolCall::Action::Buy);                // buy->buy at 2 < 4: violation
    settled(10, ToolCall::Action::Sell);
    settled(12, ToolCall::Action::Sell);              // sell->sell at 2 < 4: violation
    settled(15, ToolCall::Action::Buy);               // sell->rebuy at 3 < 8: violation
    settled(30, ToolCall::Action::Sell);
    settled(32, ToolCall::Action::Buy, "strategy1");  // HIGH exception: exempt

    auto violations = scan_cooldown_violations(s);
    REQUIRE(violations.size() == 3);
    REQUIRE(violations[0].kind == "buy->buy");
    REQUIRE(violations[1].kind == "sell->sell");
    REQUIRE(violations[2].kind == "sell->rebuy");
}

TEST_CASE("reference policy runs produce zero cooldown violations", "[analytics]") {
    fixtures::ScenarioBuilder sb;
    sb.default_market().duration(120).reap_every(60);
    for (VaultId v = 1; v <= 6; ++v) {
        auto& vj = sb.vault(v, "3");
        vj["sliders"]["ta"] = int(v % 5) + 1;
    }
    Json scenario = sb.build();
    World w = build_world(scenario, 23);
    run(w, 120);
    REQUIRE(failure_taxonomy(w.trace).settled > 0);
    REQUIRE(scan_cooldown_violations(w.trace).empty());
}
