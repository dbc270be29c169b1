#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "vaultsim/brief.hpp"
#include "vaultsim/serde.hpp"
#include "vaultsim/template_format.hpp"

using namespace vaultsim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BriefTemplate default_template() {
    auto t = load_template_file(std::string(VAULTSIM_SOURCE_DIR) + "/templates/default.tmpl");
    REQUIRE(t.ok());
    return *t;
}

// A small, fully pinned compile fixture: two tokens, one position, three
// strategies, reap and launch scheduled, two memory entries.
struct Fixture {
    ConfigCommit commit;
    MarketSnapshot snapshot;
    PortfolioContext portfolio;
    BriefInputs inputs;

    explicit Fixture(SliderConfig sliders = {}) {
        commit.version = 3;
        commit.committed_at = 90;
        commit.sliders = sliders;
        commit.strategies = {
            {"strategy1", "sell 50% of ALPHA now", Priority::High, std::nullopt, 80},
            {"strategy2", "if PnL reaches 20% sell ALPHA", Priority::High, Tick(500), 80},
            {"strategy3", "avoid genesis tokens", Priority::Medium, std::nullopt, 80},
        };

        snapshot.now = 100;
        snapshot.eth_usd_display = "3150.00";
        TokenStats a;
        a.token_id = "ALPHA";
        a.symbol = "ALPHA";
        a.price_e18 = Eth::parse("0.0001").raw;
        a.age = 100;
        a.pct_change_5m_bps = 120;
        a.pct_change_1h_bps = -250;
        a.pct_change_all_bps = 1000;
        a.volume_5m = Eth::parse("1.4");
        a.net_flow_5m_abs = Eth::parse("0.6");
        a.holders = 12;
        a.unique_traders_5m = 3;
        TokenStats n;
        n.token_id = "NOVA";
        n.symbol = "NOVA";
        n.price_e18 = Eth::parse("0.00002").raw;
        n.age = 5;
        n.pct_change_all_bps = 0;
        n.holders = 1;
        snapshot.rows = {a, n};

        PositionView pos;
        pos.token_id = "ALPHA";
        pos.symbol = "ALPHA";
        pos.balance = TokenUnits::from_whole(9000);
        pos.avg_entry_e18 = Eth::parse("0.000103").raw;
        pos.spot_e18 = a.price_e18;
        pos.value_at_spot = Eth(muldiv(pos.balance.raw, pos.spot_e18, QUANTA));
        pos.unrealized_pnl_bps = -291;
        pos.time_held = 40;
        pos.since_last_trade = 12;
        portfolio.eth_balance = Eth::parse("0.55");
        portfolio.positions = {pos};
        portfolio.token_value = pos.value_at_spot;
        portfolio.total_value = portfolio.eth_balance + portfolio.token_value;
        portfolio.deployment_bps =
            u64(muldiv(portfolio.token_value.raw, 10'000, portfolio.total_value.raw));

        inputs.commit = &commit;
        for (const auto& s : commit.strategies) {
            StrategyView v;
            v.label = s.label;
            v.text = s.text;
            v.priority = s.priority;
            v.expiry = s.expiry;
            v.directive = classify_directive(s.text);
            v.status = StrategyStatus::Pending;
            inputs.strategies.push_back(v);
        }
        inputs.snapshot = &snapshot;
        inputs.portfolio = &portfolio;
        inputs.constraints.max_trade_bps = 5000;
        inputs.constraints.slippage_bps = 100;
        inputs.constraints.max_price_impact_bps = 1000;
        TokenCapsInfo ca;
        ca.token_id = "ALPHA";
        ca.symbol = "ALPHA";
        ca.buy_cap_impact = Eth::parse("0.7646");
        ca.sell_uncapped = false;
        ca.sell_cap_impact = TokenUnits::from_whole(85000);
        ca.has_position = true;
        TokenCapsInfo cn;
        cn.token_id = "NOVA";
        cn.symbol = "NOVA";
        cn.buy_cap_impact = Eth::parse("0.0153");
        cn.newcoin_capped = true;
        cn.newcoin_cap = Eth::parse("0.06");
        inputs.constraints.per_token = {ca, cn};
        inputs.reap = ReapContextInfo{true, 120, {"NOVA", "ALPHA"}, {"ALPHA", "NOVA"}};
        inputs.launch = LaunchContextInfo{true, 110, "ZETA"};
        inputs.memory = {
            {88, "buy_token", "ALPHA", 250'000, "settled", "momentum"},
            {95, "record_observation", "", 0, "observed", "fee_cost"},
        };
        inputs.clock = {100, 1'767'225'600 + 100 * 300};
    }
};

} // namespace

TEST_CASE("default template parses with all twelve sections", "[brief]") {
    BriefTemplate t = default_template();
    REQUIRE(t.variant_id == "default");
    REQUIRE(t.section_order.size() == 12);
    REQUIRE(t.section_order.front() == SectionId::SystemRules);
    REQUIRE(t.conditional_rules.size() == 5);
}

TEST_CASE("compile is deterministic and honors ARP conditionals", "[brief]") {
    BriefTemplate t = default_template();

    SliderConfig arp5;
    arp5.asset_risk_preference = 5;
    Fixture hi(arp5);
    auto b1 = compile_brief(t, hi.inputs);
    REQUIRE(b1.ok());
    REQUIRE(b1->rendered.text.find("New launches are valid buying candidates") !=
            std::string::npos);

    auto b2 = compile_brief(t, hi.inputs);
    REQUIRE(b2->rendered.brief_hash == b1->rendered.brief_hash);
    REQUIRE(b2->rendered.text == b1->rendered.text);

    SliderConfig arp3; // neither ARP conditional fires in the 3 gap
    Fixture mid(arp3);
    auto b3 = compile_brief(t, mid.inputs);
    REQUIRE(b3->rendered.text.find("New launches are valid buying candidates") ==
            std::string::npos);
    REQUIRE(b3->rendered.text.find("track record") == std::string::npos);
}

TEST_CASE("conditional insertions render iff their predicate holds", "[brief]") {
    BriefTemplate t = default_template();
    // Full 5^5 slider grid.
    for (int ta = 1; ta <= 5; ++ta)
        for (int arp = 1; arp <= 5; ++arp)
            for (int ts = 1; ts <= 5; ++ts)
                for (int hs = 1; hs <= 5; ++hs)
                    for (int dv = 1; dv <= 5; ++dv) {
                        SliderConfig s{ta, arp, ts, hs, dv};
                        Fixture f(s);
                        auto b = compile_brief(t, f.inputs);
                        REQUIRE(b.ok());
                        for (const auto& rule : t.conditional_rules) {
                            bool expect = rule.predicate.eval(s);
                            bool found = b->rendered.text.find(rule.text) != std::string::npos;
                            if (found != expect) {
                                CAPTURE(ta, arp, ts, hs, dv, rule.text);
                                REQUIRE(found == expect);
                            }
                        }
                    }
}

TEST_CASE("permuting sections changes the hash, not the structure", "[brief]") {
    BriefTemplate t = default_template();
    Fixture f;
    auto base = compile_brief(t, f.inputs);
    REQUIRE(base.ok());

    // move OperatingRules (the fee sentence) to position 1
    std::vector<SectionId> order = t.section_order;
    auto it = std::find(order.begin(), order.end(), SectionId::OperatingRules);
    order.erase(it);
    order.insert(order.begin(), SectionId::OperatingRules);
    auto moved = permute_sections(t, order);
    REQUIRE(moved.ok());
    REQUIRE(moved->variant_id != t.variant_id);

    auto alt = compile_brief(*moved, f.inputs);
    REQUIRE(alt.ok());
    REQUIRE(alt->rendered.brief_hash != base->rendered.brief_hash);
    REQUIRE(alt->structured == base->structured);
    REQUIRE(structured_brief_digest(alt->structured) ==
            structured_brief_digest(base->structured));

    // identity permutation renders identical text
    auto same = permute_sections(t, t.section_order);
    REQUIRE(same.ok());
    auto again = compile_brief(*same, f.inputs);
    REQUIRE(again->rendered.text == base->rendered.text);

    // duplicated section is invalid
    std::vector<SectionId> dup = t.section_order;
    dup[1] = dup[0];
    REQUIRE(!permute_sections(t, dup).ok());
}

TEST_CASE("brief_diff flags structural equality", "[brief]") {
    BriefTemplate t = default_template();
    Fixture f;
    auto base = compile_brief(t, f.inputs);

    SECTION("order-only change: equal structure, non-empty diff") {
        std::vector<SectionId> order = t.section_order;
        std::swap(order[0], order[1]);
        auto alt = compile_brief(*permute_sections(t, order), f.inputs);
        auto d = brief_diff(*base, *alt);
        REQUIRE(d.structurally_equal);
        bool has_change = false;
        for (const auto& l : d.lines) has_change |= (l[0] == '-' || l[0] == '+');
        REQUIRE(has_change);
    }
    SECTION("different slider values: unequal structure") {
        SliderConfig s;
        s.trade_size = 5;
        Fixture g(s);
        auto alt = compile_brief(t, g.inputs);
        REQUIRE(!brief_diff(*base, *alt).structurally_equal);
    }
    SECTION("prose-only template change: equal structure") {
        BriefTemplate edited = t;
        edited.variant_id = "edited";
        edited.static_texts[SectionId::SystemRules] += "\nOne extra prose sentence.";
        auto alt = compile_brief(edited, f.inputs);
        auto d = brief_diff(*base, *alt);
        REQUIRE(d.structurally_equal);
        bool saw = false;
        for (const auto& l : d.lines) saw |= l == "+ One extra prose sentence.";
        REQUIRE(saw);
    }
}

TEST_CASE("enabled sections demand their payload", "[brief]") {
    BriefTemplate t = default_template();
    Fixture f;
    f.inputs.reap = std::nullopt;
    auto r = compile_brief(t, f.inputs);
    REQUIRE(!r.ok());
    REQUIRE(r.error() == CompileError::MissingSectionPayload);
}

TEST_CASE("predicate mini-language", "[brief]") {
    auto p = SliderPredicate::parse("TA>=4 && HS>=4");
    REQUIRE(p.ok());
    SliderConfig s;
    s.trading_activity = 4;
    s.holding_style = 4;
    REQUIRE(p->eval(s));
    s.holding_style = 3;
    REQUIRE(!p->eval(s));
    REQUIRE(p->to_string() == "TA>=4 && HS>=4");

    REQUIRE(!SliderPredicate::parse("TA>4").ok());
    REQUIRE(!SliderPredicate::parse("XX>=4").ok());
    REQUIRE(!SliderPredicate::parse("TA>=9").ok());
    REQUIRE(!SliderPredicate::parse("TA>=4 || HS>=4").ok());
}

TEST_CASE("template serialization round trips", "[brief]") {
    BriefTemplate t = default_template();
    std::string s1 = serialize_template(t);
    auto re = parse_template(s1);
    REQUIRE(re.ok());
    REQUIRE(serialize_template(*re) == s1);
}

TEST_CASE("rendered brief matches the stored golden", "[brief]") {
    BriefTemplate t = default_template();
    Fixture f;
    auto b = compile_brief(t, f.inputs);
    REQUIRE(b.ok());
    std::string golden_path = std::string(VAULTSIM_SOURCE_DIR) + "/tests/goldens/default_brief.txt";
    std::string expect = read_file(golden_path);
    if (b->rendered.text != expect) {
        std::ofstream out(golden_path + ".actual", std::ios::binary);
        out << b->rendered.text;
    }
    REQUIRE(b->rendered.text == expect);
}
