#include <catch2/catch_amalgamated.hpp>

#include "vaultsim/analytics.hpp"
#include "world_fixtures.hpp"

using namespace vaultsim;
using fixtures::ScenarioBuilder;

TEST_CASE("observing vaults leave pools untouched", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(1);
    sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    sb.vault(2, "1", Json{{"kind", "fee_paralyzed"}});
    Json scenario = sb.build();

    World w = build_world(scenario, 1);
    Eth alpha_before = w.pools["ALPHA"].eth_reserve;
    run(w, 1);

    REQUIRE(w.trace.record_count() == 2);
    REQUIRE(w.pools["ALPHA"].eth_reserve == alpha_before);
    FailureTaxonomy t = failure_taxonomy(w.trace);
    REQUIRE(t.observes == 2);
}

TEST_CASE("same seed and scenario reproduce byte-identical exports", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(40).reap_every(15);
    sb.vault(1, "5");
    sb.vault(2, "5", Json{{"kind", "cadence_trader"}, {"period", 3}});
    sb.vault(3, "5", Json{{"kind", "rule_fabricator"}});
    sb.vault(4, "5", Json{{"kind", "overspender"}});
    sb.vault(5, "5", Json{{"kind", "schema_breaker"}});
    sb.j["vaults"][0]["sliders"]["ta"] = 5;
    Json scenario = sb.build();

    std::string a = fixtures::run_world_and_export(scenario, 99);
    std::string b = fixtures::run_world_and_export(scenario, 99);
    REQUIRE(a == b);
    std::string c = fixtures::run_world_and_export(scenario, 100);
    REQUIRE(a != c);
}

TEST_CASE("each invoked vault yields exactly one record per tick", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(10);
    sb.vault(1, "2");
    Json scenario = sb.build();
    World w = build_world(scenario, 7);
    run(w, 10);
    auto records = w.trace.records_for_vault(1);
    REQUIRE(records.size() == 10);
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(records[i]->tick == Tick(i));
        REQUIRE((records[i]->parsed.has_value() || records[i]->parse_error.has_value()));
    }
}

TEST_CASE("conservation holds across mixed probe trading with reaps", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(35).reap_every(12).engine_opts(
        Json{{"debug_checks", true}});
    sb.vault(1, "10");
    sb.vault(2, "10", Json{{"kind", "cadence_trader"}, {"period", 2}});
    sb.vault(3, "10", Json{{"kind", "cadence_trader"}, {"period", 3}});
    sb.vault(4, "10", Json{{"kind", "rule_fabricator"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 11);
    run(w, 35); // debug_checks throws on any conservation violation
    REQUIRE(w.reap_count == 2);
    REQUIRE(check_conservation(w).ok);
    FailureTaxonomy t = failure_taxonomy(w.trace);
    REQUIRE(t.settled > 0);
}

TEST_CASE("failed settlements leave vault and pool bit-identical", "[engine]") {
    ScenarioBuilder sb;
    // funding small enough that 10% buys clear the genesis new-coin cap
    sb.default_market().duration(6).engine_opts(Json{{"settlement_failure_rate", 1.0}});
    sb.vault(1, "0.08", Json{{"kind", "cadence_trader"}, {"period", 1}});
    Json scenario = sb.build();
    World w = build_world(scenario, 3);
    Eth vault_before = Eth::parse("0.08");
    Eth pool_before = w.pools["ALPHA"].eth_reserve;
    run(w, 6);

    FailureTaxonomy t = failure_taxonomy(w.trace);
    REQUIRE(t.settlement_failures > 0);
    REQUIRE(t.settled == 0);
    REQUIRE(w.vaults.at(1).eth_balance == vault_before);
    REQUIRE(w.vaults.at(1).positions.empty());
    for (const auto& [id, p] : w.pools) REQUIRE(p.version == 0);
    REQUIRE(w.pools["ALPHA"].eth_reserve == pool_before);
}

TEST_CASE("delayed settlement aborts on adverse moves beyond tolerance", "[engine]") {
    ScenarioBuilder sb;
    sb.token("ALPHA", "10", "1000000").duration(14);
    sb.j["guard"] = Json{{"max_trade_bps", 10'000},
                         {"slippage_bps", 10},
                         {"max_price_impact_bps", 9'999}};
    sb.engine_opts(Json{{"settlement_mode", "delayed"}});
    sb.duration(14); // the genesis new-coin cap lifts at tick 10
    // both vaults buy huge into the same pool at the same tick
    sb.vault(1, "4", Json{{"kind", "overspender"}});
    sb.vault(2, "4", Json{{"kind", "overspender"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 5);
    run(w, 14);

    FailureTaxonomy t = failure_taxonomy(w.trace);
    REQUIRE(t.settled > 0);
    REQUIRE(t.settlement_failures > 0);
    bool saw_slippage = false;
    for (const TraceRecord* r : w.trace.records()) {
        if (r->settlement.kind == Settlement::Kind::Failed)
            saw_slippage |= r->settlement.failure_reason.find("SlippageExceeded") !=
                            std::string::npos;
    }
    REQUIRE(saw_slippage);
    REQUIRE(check_conservation(w).ok);
}

TEST_CASE("jitter adds zero to three extra invocations per hour", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(48).engine_opts(Json{{"invocation_jitter", true}});
    sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 21);
    run(w, 48); // 4 hours
    auto records = w.trace.records_for_vault(1);
    REQUIRE(records.size() >= 48);
    REQUIRE(records.size() <= 48 + 4 * 3);
    // per-hour bounds
    for (Tick hour = 0; hour < 4; ++hour) {
        u64 n = 0;
        for (const TraceRecord* r : records)
            if (r->tick / 12 == hour) ++n;
        REQUIRE(n >= 12);
        REQUIRE(n <= 15);
    }
    // deterministic under the same seed
    World w2 = build_world(scenario, 21);
    run(w2, 48);
    REQUIRE(w2.trace.record_count() == w.trace.record_count());
}

TEST_CASE("paused vaults are skipped entirely", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(8);
    auto& v = sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    v["owner_actions"] = Json::array(
        {Json{{"at_tick", 3}, {"action", "pause"}}, Json{{"at_tick", 6}, {"action", "unpause"}}});
    Json scenario = sb.build();
    World w = build_world(scenario, 1);
    run(w, 8);
    auto records = w.trace.records_for_vault(1);
    std::vector<Tick> ticks;
    for (auto* r : records) ticks.push_back(r->tick);
    REQUIRE(ticks == std::vector<Tick>{0, 1, 2, 6, 7}); // no OBSERVE records while paused
}

TEST_CASE("scheduled commits become visible the same tick", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(8);
    auto& v = sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    v["commits"] = Json::array({Json{
        {"at_tick", 4},
        {"sliders", Json{{"ta", 5}, {"arp", 5}, {"ts", 5}, {"hs", 5}, {"div", 5}}}}});
    Json scenario = sb.build();
    World w = build_world(scenario, 1);
    run(w, 8);
    for (const TraceRecord* r : w.trace.records_for_vault(1)) {
        REQUIRE(r->config_version == (r->tick < 4 ? 1u : 2u));
        REQUIRE(r->sliders.trading_activity == (r->tick < 4 ? 3 : 5));
    }
}

TEST_CASE("emergency liquidation empties positions and conserves ETH", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(10);
    auto& v = sb.vault(1, "5", Json{{"kind", "cadence_trader"}, {"period", 1}});
    v["owner_actions"] =
        Json::array({Json{{"at_tick", 6}, {"action", "emergency_liquidate"}}});
    Json scenario = sb.build();
    World w = build_world(scenario, 9);
    run(w, 10);
    REQUIRE(w.vaults.at(1).positions.empty());
    REQUIRE(w.vaults.at(1).paused);
    REQUIRE(check_conservation(w).ok);
    // no invocation records after the liquidation pause
    for (const TraceRecord* r : w.trace.records_for_vault(1)) REQUIRE(r->tick < 6);
}

TEST_CASE("scheduled launches join the market and respect new-coin caps", "[engine]") {
    ScenarioBuilder sb;
    sb.token("ALPHA", "100", "1000000").token("NOVA", "10", "1000000", 3).duration(8);
    sb.vault(1, "1", Json{{"kind", "fee_paralyzed"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 2);
    run(w, 8);
    REQUIRE(w.tokens.count("NOVA") == 1);
    REQUIRE(w.tokens["NOVA"].launched_at == 3);
    // snapshot at tick 4 includes NOVA with age 1
    MarketSnapshot snap = build_snapshot(w.history, w.tokens, w.pools, {}, 4);
    const TokenStats* nova = snap.find("NOVA");
    REQUIRE(nova != nullptr);
    REQUIRE(nova->age == 1);
    REQUIRE(check_conservation(w).ok);
}

TEST_CASE("reaping continues until the last token graduates", "[engine]") {
    ScenarioBuilder sb;
    sb.token("AAA", "10", "1000000")
        .token("BBB", "20", "1000000")
        .token("CCC", "30", "1000000")
        .duration(20)
        .reap_every(5);
    sb.vault(1, "2", Json{{"kind", "fee_paralyzed"}});
    Json scenario = sb.build();
    World w = build_world(scenario, 4);
    run(w, 20);
    REQUIRE(w.reap_count == 2); // third reap impossible: one token left
    REQUIRE(w.graduated);
    u64 live = 0;
    for (const auto& [id, m] : w.tokens)
        if (!m.delisted) ++live;
    REQUIRE(live == 1);
    u64 reap_events = 0;
    for (const auto& e : w.trace.events())
        if (std::holds_alternative<ReapEvent>(e)) ++reap_events;
    REQUIRE(reap_events == 2);
    REQUIRE(check_conservation(w).ok);
}

TEST_CASE("run for zero ticks changes nothing", "[engine]") {
    ScenarioBuilder sb;
    sb.default_market().duration(5);
    sb.vault(1, "1");
    Json scenario = sb.build();
    World w = build_world(scenario, 1);
    run(w, 0);
    REQUIRE(w.trace.record_count() == 0);
    REQUIRE(w.clock.tick == 0);
}
