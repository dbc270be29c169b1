#include <catch2/catch_amalgamated.hpp>

#include "vaultsim/rng.hpp"
#include "vaultsim/toolcall.hpp"

using namespace vaultsim;

TEST_CASE("wire-form happy path", "[toolcall]") {
    auto r = parse_tool_call(R"({"action":"buy","token":"FEET","fraction":0.25})");
    REQUIRE(r.ok());
    REQUIRE(r->action == ToolCall::Action::Buy);
    REQUIRE(r->token_id == "FEET");
    REQUIRE(r->fraction_ppm == 250'000);

    auto o = parse_tool_call(R"({"action":"observe","reason":["fee_cost"],"note":"waiting"})");
    REQUIRE(o.ok());
    REQUIRE(o->action == ToolCall::Action::Observe);
    REQUIRE(o->dominant_tag() == ReasonTag::FeeCost);
}

TEST_CASE("missing fields are parse errors", "[toolcall]") {
    auto r = parse_tool_call(R"({"action":"buy"})");
    REQUIRE(!r.ok());
    REQUIRE(r.error().cause == "missing field: token");

    auto f = parse_tool_call(R"({"action":"sell","token":"FEET"})");
    REQUIRE(!f.ok());
    REQUIRE(f.error().cause == "missing field: fraction");

    auto a = parse_tool_call(R"({"token":"FEET"})");
    REQUIRE(!a.ok());
    REQUIRE(a.error().cause == "missing field: action");
}

TEST_CASE("exactly one tool call per line", "[toolcall]") {
    auto two = parse_tool_call(
        R"({"action":"observe"} {"action":"buy","token":"FEET","fraction":0.5})");
    REQUIRE(!two.ok());
    REQUIRE(two.error().cause.find("multiple actions") != std::string::npos);

    auto lines = parse_tool_call("{\"action\":\"observe\"}\n{\"action\":\"observe\"}");
    REQUIRE(!lines.ok());
    REQUIRE(lines.error().cause == "multiple lines");
}

TEST_CASE("malformed and out-of-range inputs", "[toolcall]") {
    REQUIRE(!parse_tool_call("buy lots of FEET!!!").ok());
    REQUIRE(!parse_tool_call("").ok());
    REQUIRE(!parse_tool_call(R"({"action":"buy","token":"X","fraction":0})").ok());
    REQUIRE(!parse_tool_call(R"({"action":"buy","token":"X","fraction":1.2})").ok());
    REQUIRE(!parse_tool_call(R"({"action":"buy","token":"X","fraction":-0.5})").ok());
    REQUIRE(!parse_tool_call(R"({"action":"hodl"})").ok());
    REQUIRE(!parse_tool_call(R"({"action":"observe","reason":["vibes"]})").ok());
    REQUIRE(!parse_tool_call(R"({"action":"observe")").ok());
    REQUIRE(!parse_tool_call(R"([1,2,3])").ok());
}

TEST_CASE("format then parse round trips", "[toolcall]") {
    RngStream rng = RngStream::derive(61, "toolcall-fuzz");
    for (int i = 0; i < 2000; ++i) {
        ToolCall c;
        switch (rng.next_below(3)) {
            case 0: c.action = ToolCall::Action::Buy; break;
            case 1: c.action = ToolCall::Action::Sell; break;
            default: c.action = ToolCall::Action::Observe; break;
        }
        if (c.is_swap()) {
            c.token_id = "TOK" + std::to_string(rng.next_below(20));
            c.fraction_ppm = 1 + rng.next_below(1'000'000);
        }
        if (rng.next_below(2)) c.strategy_label = "strategy" + std::to_string(rng.next_below(9));
        std::size_t ntags = rng.next_below(3);
        for (std::size_t t = 0; t < ntags; ++t)
            c.reason_tags.push_back(ALL_REASON_TAGS[rng.next_below(std::size(ALL_REASON_TAGS))]);
        if (rng.next_below(2)) c.note = "note \"quoted\" with \\ specials";

        auto r = parse_tool_call(format_tool_call(c));
        REQUIRE(r.ok());
        REQUIRE(*r == c);
    }
}
