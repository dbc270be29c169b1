#include <catch2/catch_amalgamated.hpp>

#include "vaultsim/policy.hpp"
#include "vaultsim/rng.hpp"

using namespace vaultsim;

namespace {

// Compact StructuredBrief builder; policies consume the typed brief directly.
struct BriefBuilder {
    StructuredBrief b;

    BriefBuilder() {
        b.clock = {100, 1'767'225'600 + 100 * 300};
        b.constraints.protocol_fee_bps = 200;
        b.constraints.lp_fee_bps = 30;
        b.portfolio.eth_balance = Eth::from_whole(1);
        b.portfolio.total_value = b.portfolio.eth_balance;
    }

    BriefBuilder& sliders(int ta, int arp, int ts, int hs, int dv) {
        b.sliders = {ta, arp, ts, hs, dv};
        return *this;
    }

    BriefBuilder& token(const TokenId& id, const char* price, Tick age,
                        std::optional<i64> pct_1h = std::nullopt) {
        TokenStats r;
        r.token_id = id;
        r.symbol = id;
        r.price_e18 = Eth::parse(price).raw;
        r.age = age;
        r.pct_change_1h_bps = pct_1h;
        b.market.push_back(r);
        return *this;
    }

    BriefBuilder& position(const TokenId& id, u64 whole, const char* entry, const char* spot,
                           Tick held = 50) {
        PositionView p;
        p.token_id = id;
        p.symbol = id;
        p.balance = TokenUnits::from_whole(whole);
        p.avg_entry_e18 = Eth::parse(entry).raw;
        p.spot_e18 = Eth::parse(spot).raw;
        p.value_at_spot = Eth(muldiv(p.balance.raw, p.spot_e18, QUANTA));
        i128 diff = i128(p.spot_e18) - i128(p.avg_entry_e18);
        p.unrealized_pnl_bps =
            i64(diff * 10'000 / i128(p.avg_entry_e18));
        p.time_held = held;
        p.since_last_trade = held;
        b.portfolio.positions.push_back(p);
        b.portfolio.token_value += p.value_at_spot;
        b.portfolio.total_value = b.portfolio.eth_balance + b.portfolio.token_value;
        return *this;
    }

    BriefBuilder& strategy(const char* label, const char* text, Priority pri,
                           StrategyStatus status) {
        StrategyView v;
        v.label = label;
        v.text = text;
        v.priority = pri;
        v.directive = classify_directive(text);
        v.status = status;
        b.strategies.push_back(v);
        return *this;
    }

    BriefBuilder& memory_entry(Tick tick, const char* tool, const TokenId& id,
                               const char* outcome) {
        b.memory.push_back({tick, tool, id, 100'000, outcome, ""});
        return *this;
    }

    BriefBuilder& reap_source(const std::string& sym, Tick at) {
        b.reap = {true, at, {sym}, {}};
        return *this;
    }
};

ToolCall decide(const StructuredBrief& b, u64 salt = 0, const PolicyParams& p = {}) {
    RngStream rng = RngStream::derive(42, "policy-test", salt);
    return reference_policy_decide(b, rng, p);
}

PolicyParams always_trade() {
    PolicyParams p;
    for (double& v : p.trade_prob) v = 1.1; // gate always passes
    return p;
}

} // namespace

TEST_CASE("pending HIGH immediate action executes with its label", "[policy]") {
    auto brief = BriefBuilder()
                     .token("ALPHA", "0.0001", 300)
                     .position("ALPHA", 9000, "0.0001", "0.0001")
                     .strategy("strategy1", "sell 50% of ALPHA now", Priority::High,
                               StrategyStatus::Pending)
                     .b;
    for (u64 salt = 0; salt < 50; ++salt) {
        ToolCall c = decide(brief, salt);
        REQUIRE(c.action == ToolCall::Action::Sell);
        REQUIRE(c.token_id == "ALPHA");
        REQUIRE(c.fraction_ppm == 500'000);
        REQUIRE(c.strategy_label == "strategy1");
    }
}

TEST_CASE("liquidate sells the full largest position", "[policy]") {
    auto brief = BriefBuilder()
                     .token("ALPHA", "0.0001", 300)
                     .token("BRAVO", "0.001", 300)
                     .position("ALPHA", 1000, "0.0001", "0.0001")
                     .position("BRAVO", 5000, "0.001", "0.001")
                     .strategy("strategy1", "liquidate", Priority::High, StrategyStatus::Pending)
                     .b;
    ToolCall c = decide(brief);
    REQUIRE(c.action == ToolCall::Action::Sell);
    REQUIRE(c.token_id == "BRAVO"); // 5 ETH of value vs 0.1
    REQUIRE(c.fraction_ppm == 1'000'000);
}

TEST_CASE("completed immediate actions do not re-fire", "[policy]") {
    auto brief = BriefBuilder()
                     .token("ALPHA", "0.0001", 300)
                     .position("ALPHA", 9000, "0.0001", "0.0001")
                     .strategy("strategy1", "sell 50% of ALPHA now", Priority::High,
                               StrategyStatus::Completed)
                     .b;
    ToolCall c = decide(brief);
    REQUIRE((c.action == ToolCall::Action::Observe || c.strategy_label.empty()));
}

TEST_CASE("triggered actions fire only when the engine marked them", "[policy]") {
    auto armed = BriefBuilder()
                     .token("ALPHA", "0.00012", 300)
                     .position("ALPHA", 9000, "0.0001", "0.00012")
                     .strategy("strategy2", "if PnL reaches 20% sell ALPHA", Priority::High,
                               StrategyStatus::Pending)
                     .b;
    // condition not marked triggered: no strategy sell
    ToolCall idle = decide(armed);
    REQUIRE(idle.strategy_label.empty());

    auto fired = armed;
    fired.strategies[0].status = StrategyStatus::Triggered;
    ToolCall c = decide(fired);
    REQUIRE(c.action == ToolCall::Action::Sell);
    REQUIRE(c.strategy_label == "strategy2");
}

TEST_CASE("restrictions and hold rules pin the vault to observation", "[policy]") {
    auto restricted = BriefBuilder()
                          .token("ALPHA", "0.0001", 300, 5000)
                          .strategy("s1", "avoid genesis tokens", Priority::High,
                                    StrategyStatus::ActiveCompliant)
                          .b;
    ToolCall c = decide(restricted, 1, always_trade());
    REQUIRE(c.action == ToolCall::Action::Observe);
    REQUIRE(c.dominant_tag() == ReasonTag::RestrictionCompliant);

    auto holding = BriefBuilder()
                       .token("ALPHA", "0.0001", 300, 5000)
                       .position("ALPHA", 1000, "0.0001", "0.0001")
                       .strategy("s1", "hold ALPHA forever", Priority::High,
                                 StrategyStatus::ActiveCompliant)
                       .b;
    ToolCall h = decide(holding, 1, always_trade());
    REQUIRE(h.action == ToolCall::Action::Observe);
    REQUIRE(h.dominant_tag() == ReasonTag::HoldRule);
}

TEST_CASE("same-token cooldown yields a cooldown observation", "[policy]") {
    // one-token market; the only candidate was bought 2 ticks ago
    auto brief = BriefBuilder()
                     .sliders(3, 3, 3, 3, 3)
                     .token("ALPHA", "0.0001", 300, 5000)
                     .memory_entry(98, "buy_token", "ALPHA", "settled")
                     .b;
    ToolCall c = decide(brief, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Observe);
    REQUIRE(c.dominant_tag() == ReasonTag::Cooldown);
}

TEST_CASE("sell-to-rebuy needs eight ticks", "[policy]") {
    auto brief = BriefBuilder()
                     .sliders(3, 3, 3, 3, 3)
                     .token("ALPHA", "0.0001", 300, 5000)
                     .memory_entry(94, "sell_token", "ALPHA", "settled") // 6 ticks ago
                     .b;
    ToolCall c = decide(brief, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Observe);
    REQUIRE(c.dominant_tag() == ReasonTag::Cooldown);

    auto later = brief;
    later.memory[0].tick = 92; // 8 ticks ago: allowed again
    ToolCall ok = decide(later, 0, always_trade());
    REQUIRE(ok.action == ToolCall::Action::Buy);
}

TEST_CASE("trade size five spends ninety-five percent", "[policy]") {
    auto brief = BriefBuilder()
                     .sliders(3, 3, 5, 3, 3)
                     .token("ALPHA", "0.0001", 300, 5000)
                     .b;
    ToolCall c = decide(brief, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Buy);
    REQUIRE(c.fraction_ppm == 950'000);
}

TEST_CASE("stop-loss and profit-target bands drive voluntary sells", "[policy]") {
    SECTION("stop loss exits the full position") {
        auto brief = BriefBuilder()
                         .sliders(3, 3, 3, 3, 3)
                         .token("ALPHA", "0.00008", 300)
                         .position("ALPHA", 9000, "0.0001", "0.00008") // -20%
                         .b;
        ToolCall c = decide(brief, 0, always_trade());
        REQUIRE(c.action == ToolCall::Action::Sell);
        REQUIRE(c.fraction_ppm == 1'000'000);
        REQUIRE(c.dominant_tag() == ReasonTag::StopLoss);
    }
    SECTION("profit target trims half after the minimum hold") {
        auto brief = BriefBuilder()
                         .sliders(3, 3, 3, 3, 3)
                         .token("ALPHA", "0.00014", 300)
                         .position("ALPHA", 9000, "0.0001", "0.00014", 50) // +40%, held 50
                         .b;
        ToolCall c = decide(brief, 0, always_trade());
        REQUIRE(c.action == ToolCall::Action::Sell);
        REQUIRE(c.fraction_ppm == 500'000);
        REQUIRE(c.dominant_tag() == ReasonTag::ProfitTarget);
    }
    SECTION("fresh winners wait out the minimum hold") {
        auto brief = BriefBuilder()
                         .sliders(3, 3, 3, 5, 3) // HS=5: min hold 96 ticks
                         .token("ALPHA", "0.00014", 300)
                         .position("ALPHA", 9000, "0.0001", "0.00014", 50)
                         .b;
        ToolCall c = decide(brief, 0, always_trade());
        REQUIRE(c.action != ToolCall::Action::Sell);
    }
}

TEST_CASE("reap sources are held, not sold into the crash", "[policy]") {
    auto brief = BriefBuilder()
                     .sliders(3, 3, 3, 3, 3)
                     .token("ALPHA", "0.00005", 300) // crashed 50%: stop territory
                     .position("ALPHA", 9000, "0.0001", "0.00005")
                     .reap_source("ALPHA", 110)
                     .b;
    ToolCall c = decide(brief, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Observe);
    REQUIRE(c.dominant_tag() == ReasonTag::ReapHold);
}

TEST_CASE("risk preference gates young tokens", "[policy]") {
    auto low_risk = BriefBuilder()
                        .sliders(3, 1, 3, 3, 3)
                        .token("NOVA", "0.0001", 10, 5000) // 10 ticks old
                        .b;
    ToolCall c = decide(low_risk, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Observe);

    auto high_risk = BriefBuilder()
                         .sliders(3, 5, 3, 3, 3)
                         .token("NOVA", "0.0001", 10, 5000)
                         .b;
    ToolCall b = decide(high_risk, 0, always_trade());
    REQUIRE(b.action == ToolCall::Action::Buy);
}

TEST_CASE("pacing observations cite fees when the tape is quiet", "[policy]") {
    PolicyParams never;
    for (double& v : never.trade_prob) v = 0.0; // the pacing gate never passes
    auto quiet = BriefBuilder()
                     .sliders(3, 3, 3, 3, 3)
                     .token("ALPHA", "0.0001", 300, 20) // 0.2% move, below the fee note
                     .position("ALPHA", 100, "0.0001", "0.0001")
                     .memory_entry(80, "buy_token", "ALPHA", "settled")
                     .b;
    ToolCall c = decide(quiet, 0, never);
    REQUIRE(c.action == ToolCall::Action::Observe);
    REQUIRE(c.dominant_tag() == ReasonTag::FeeCost);

    auto moving = quiet;
    moving.market[0].pct_change_1h_bps = 900; // 9%: momentum, not fees
    ToolCall m = decide(moving, 0, never);
    REQUIRE(m.action == ToolCall::Action::Observe);
    REQUIRE(m.dominant_tag() == ReasonTag::Momentum);
}

TEST_CASE("cold-start vaults engage promptly despite a flat tape", "[policy]") {
    auto brief = BriefBuilder()
                     .sliders(3, 3, 3, 3, 3)
                     .token("ALPHA", "0.0001", 300, 0) // flat, but nothing deployed yet
                     .b;
    ToolCall c = decide(brief, 0, always_trade());
    REQUIRE(c.action == ToolCall::Action::Buy);
}

TEST_CASE("immediate dominance holds under randomized sliders", "[policy]") {
    RngStream rng = RngStream::derive(81, "dominance");
    for (int i = 0; i < 500; ++i) {
        BriefBuilder bb;
        bb.sliders(1 + int(rng.next_below(5)), 1 + int(rng.next_below(5)),
                   1 + int(rng.next_below(5)), 1 + int(rng.next_below(5)),
                   1 + int(rng.next_below(5)))
            .token("ALPHA", "0.0001", 300, i64(rng.next_below(10'000)) - 5000)
            .position("ALPHA", 1 + rng.next_below(10'000), "0.0001", "0.0001")
            .strategy("strategy1", "sell 25% of ALPHA now", Priority::High,
                      StrategyStatus::Pending);
        ToolCall c = decide(bb.b, rng.next_u64(), always_trade());
        REQUIRE(c.strategy_label == "strategy1");
        REQUIRE(c.action == ToolCall::Action::Sell);
    }
}

TEST_CASE("probe policies behave as advertised", "[policy]") {
    auto brief = BriefBuilder()
                     .token("ALPHA", "0.0001", 300, 5000)
                     .token("BRAVO", "0.001", 300)
                     .b;
    RngStream rng = RngStream::derive(1, "probe");

    SECTION("cadence trader trades exactly on its period") {
        PolicySpec spec;
        spec.kind = PolicySpec::Kind::CadenceTrader;
        spec.cadence_period = 6;
        int trades = 0;
        for (Tick t = 0; t < 18; ++t) {
            auto b2 = brief;
            b2.clock.tick = t;
            auto parsed = parse_tool_call(probe_policy_decide(spec, b2, rng));
            REQUIRE(parsed.ok());
            REQUIRE(parsed->dominant_tag() == ReasonTag::Cadence);
            if (parsed->is_swap()) {
                ++trades;
                REQUIRE(t % 6 == 0);
            }
        }
        REQUIRE(trades == 3);
    }
    SECTION("overspender requests the full balance") {
        PolicySpec spec;
        spec.kind = PolicySpec::Kind::Overspender;
        auto parsed = parse_tool_call(probe_policy_decide(spec, brief, rng));
        REQUIRE(parsed->action == ToolCall::Action::Buy);
        REQUIRE(parsed->fraction_ppm == 1'000'000);
    }
    SECTION("schema breaker emits unparsable output") {
        PolicySpec spec;
        spec.kind = PolicySpec::Kind::SchemaBreaker;
        REQUIRE(!parse_tool_call(probe_policy_decide(spec, brief, rng)).ok());
    }
    SECTION("fee-paralyzed always observes fees") {
        PolicySpec spec;
        spec.kind = PolicySpec::Kind::FeeParalyzed;
        auto parsed = parse_tool_call(probe_policy_decide(spec, brief, rng));
        REQUIRE(parsed->action == ToolCall::Action::Observe);
        REQUIRE(parsed->dominant_tag() == ReasonTag::FeeCost);
    }
    SECTION("rule fabricator cites fabricated rules") {
        PolicySpec spec;
        spec.kind = PolicySpec::Kind::RuleFabricator;
        auto parsed = parse_tool_call(probe_policy_decide(spec, brief, rng));
        REQUIRE(parsed->dominant_tag() == ReasonTag::FabricatedRule);
    }
}

TEST_CASE("decisions are deterministic given brief and stream", "[policy]") {
    auto brief = BriefBuilder()
                     .sliders(4, 3, 2, 3, 3)
                     .token("ALPHA", "0.0001", 300, 900)
                     .token("BRAVO", "0.001", 300, -200)
                     .position("BRAVO", 100, "0.001", "0.001")
                     .b;
    for (u64 salt = 0; salt < 20; ++salt) {
        RngStream r1 = RngStream::derive(7, "det", salt);
        RngStream r2 = RngStream::derive(7, "det", salt);
        REQUIRE(format_tool_call(reference_policy_decide(brief, r1)) ==
                format_tool_call(reference_policy_decide(brief, r2)));
    }
}
