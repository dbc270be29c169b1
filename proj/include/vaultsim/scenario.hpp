// Scenario files: a versioned JSON schema describing token genesis, the vault
// roster (funding, policy, mandate, scripted actions), guard and engine
// configuration, the reap schedule and the brief template. The loader
// resolves the template file into the scenario ("template_text"), so the
// canonical scenario embedded in a trace manifest is closed under replay.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaultsim/engine.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/sha256.hpp"
#include "vaultsim/template_format.hpp"

namespace vaultsim {

inline constexpr const char* SCENARIO_FORMAT_ID = "vaultsim-scenario-v1";

struct ScenarioError {
    std::string where; // json pointer-ish location
    std::string message;

    Json to_json() const { return Json{{"error", "invalid_scenario"}, {"where", where},
                                       {"message", message}}; }
};

namespace scenario_detail {

inline Expected<Priority, std::string> priority_from(const std::string& s) {
    if (s == "HIGH") return Priority::High;
    if (s == "MEDIUM") return Priority::Medium;
    if (s == "LOW") return Priority::Low;
    return std::string("unknown priority: " + s);
}

inline Expected<std::vector<Strategy>, ScenarioError> parse_strategies(const Json& arr,
                                                                       const std::string& where,
                                                                       Tick created_at) {
    std::vector<Strategy> out;
    if (!arr.is_array()) return ScenarioError{where, "strategies must be an array"};
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const Json& j = arr[i];
        Strategy s;
        if (!j.contains("label") || !j.contains("text") || !j.contains("priority"))
            return ScenarioError{where + "[" + std::to_string(i) + "]",
                                 "strategy needs label, text, priority"};
        s.label = j["label"].get<std::string>();
        s.text = j["text"].get<std::string>();
        auto p = priority_from(j["priority"].get<std::string>());
        if (!p.ok()) return ScenarioError{where + "[" + std::to_string(i) + "]", p.error()};
        s.priority = *p;
        if (j.contains("expiry_tick") && !j["expiry_tick"].is_null())
            s.expiry = j["expiry_tick"].get<Tick>();
        s.created_at = created_at;
        out.push_back(std::move(s));
    }
    return out;
}

inline Expected<SliderConfig, ScenarioError> parse_sliders(const Json& j,
                                                           const std::string& where) {
    if (!j.is_object()) return ScenarioError{where, "sliders must be an object"};
    SliderConfig s;
    try {
        s = slider_config_from_json(j);
    } catch (const std::exception& e) {
        return ScenarioError{where, std::string("sliders: ") + e.what()};
    }
    if (!s.valid()) return ScenarioError{where, "slider values must be integers in [1,5]"};
    return s;
}

} // namespace scenario_detail

// Parses + validates scenario text; returns the canonical scenario (template
// resolved into template_text). `base_dir` anchors relative template paths.
inline Expected<Json, ScenarioError> load_scenario_text(const std::string& text,
                                                        const std::string& base_dir) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        return ScenarioError{"/", "scenario is not a JSON object"};
    if (j.value("format", "") != SCENARIO_FORMAT_ID)
        return ScenarioError{"/format", std::string("expected ") + SCENARIO_FORMAT_ID};
    if (!j.contains("duration_ticks") || !j["duration_ticks"].is_number_integer() ||
        j["duration_ticks"].get<i64>() <= 0)
        return ScenarioError{"/duration_ticks", "duration_ticks must be a positive integer"};

    // template: file reference resolved to embedded text
    if (!j.contains("template_text")) {
        if (!j.contains("template_file"))
            return ScenarioError{"/template_file", "template_file or template_text required"};
        std::string path = j["template_file"].get<std::string>();
        if (!path.empty() && path[0] != '/' && !base_dir.empty())
            path = base_dir + "/" + path;
        std::ifstream f(path, std::ios::binary);
        if (!f) return ScenarioError{"/template_file", "cannot open template: " + path};
        std::stringstream ss;
        ss << f.rdbuf();
        j["template_text"] = ss.str();
        j.erase("template_file");
    }
    auto tmpl = parse_template(j["template_text"].get<std::string>());
    if (!tmpl.ok())
        return ScenarioError{"/template_text", "template line " +
                                                   std::to_string(tmpl.error().line) + ": " +
                                                   tmpl.error().message};

    if (j.contains("guard")) {
        GuardConfig g;
        const Json& gj = j["guard"];
        g.max_trade_bps = gj.value("max_trade_bps", u64(5000));
        g.slippage_bps = gj.value("slippage_bps", u64(100));
        if (!g.valid())
            return ScenarioError{"/guard", "max_trade_bps in [500,10000], slippage_bps in "
                                           "[10,5000]"};
    }

    if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty())
        return ScenarioError{"/tokens", "at least one token required"};
    std::vector<std::string> symbols;
    for (std::size_t i = 0; i < j["tokens"].size(); ++i) {
        const Json& t = j["tokens"][i];
        std::string where = "/tokens[" + std::to_string(i) + "]";
        if (!t.contains("symbol") || !t.contains("eth_reserve") || !t.contains("token_reserve"))
            return ScenarioError{where, "token needs symbol, eth_reserve, token_reserve"};
        std::string sym = t["symbol"].get<std::string>();
        if (std::find(symbols.begin(), symbols.end(), sym) != symbols.end())
            return ScenarioError{where, "duplicate token symbol: " + sym};
        symbols.push_back(sym);
        try {
            Eth e = Eth::parse(t["eth_reserve"].get<std::string>());
            TokenUnits tr = TokenUnits::parse(t["token_reserve"].get<std::string>());
            if (e.is_zero() || tr.is_zero())
                return ScenarioError{where, "pool seeds must be positive"};
            if (tr > FIXED_TOTAL_SUPPLY)
                return ScenarioError{where, "token_reserve exceeds the fixed total supply"};
        } catch (const std::exception& e) {
            return ScenarioError{where, std::string("bad amount: ") + e.what()};
        }
        if (t.value("launch_tick", Tick(0)) < 0)
            return ScenarioError{where, "launch_tick must be >= 0"};
    }

    if (!j.contains("vaults") || !j["vaults"].is_array() || j["vaults"].empty())
        return ScenarioError{"/vaults", "at least one vault required"};
    std::vector<VaultId> ids;
    for (std::size_t i = 0; i < j["vaults"].size(); ++i) {
        const Json& v = j["vaults"][i];
        std::string where = "/vaults[" + std::to_string(i) + "]";
        if (!v.contains("vault_id") || !v.contains("owner") || !v.contains("funding_eth"))
            return ScenarioError{where, "vault needs vault_id, owner, funding_eth"};
        VaultId id = v["vault_id"].get<VaultId>();
        if (std::find(ids.begin(), ids.end(), id) != ids.end())
            return ScenarioError{where, "duplicate vault_id"};
        ids.push_back(id);
        try {
            Eth::parse(v["funding_eth"].get<std::string>());
        } catch (const std::exception& e) {
            return ScenarioError{where + "/funding_eth", e.what()};
        }
        const Json& pj = v.contains("policy") ? v["policy"] : Json{{"kind", "reference"}};
        auto kind = policy_kind_from_name(pj.value("kind", "reference"));
        if (!kind) return ScenarioError{where + "/policy", "unknown policy kind"};
        if (*kind == PolicySpec::Kind::External && !pj.contains("command") &&
            !pj.contains("port"))
            return ScenarioError{where + "/policy", "external policy needs command or host/port"};
        auto sliders = scenario_detail::parse_sliders(
            v.contains("sliders") ? v["sliders"] : Json{{"ta", 3}, {"arp", 3}, {"ts", 3},
                                                        {"hs", 3}, {"div", 3}},
            where + "/sliders");
        if (!sliders.ok()) return sliders.error();
        // dry-run the initial commit so bounds fail at load time
        MandateLog scratch;
        auto strategies = scenario_detail::parse_strategies(
            v.contains("strategies") ? v["strategies"] : Json::array(), where + "/strategies", 0);
        if (!strategies.ok()) return strategies.error();
        auto commit = scratch.commit_config(*sliders, *strategies, 0);
        if (!commit.ok())
            return ScenarioError{where, std::string("initial mandate invalid: ") +
                                            mandate_error_name(commit.error())};
        if (v.contains("commits")) {
            for (std::size_t k = 0; k < v["commits"].size(); ++k) {
                const Json& c = v["commits"][k];
                std::string cwhere = where + "/commits[" + std::to_string(k) + "]";
                if (!c.contains("at_tick") || !c["at_tick"].is_number_integer())
                    return ScenarioError{cwhere, "at_tick required"};
                SliderConfig cs = *sliders;
                if (c.contains("sliders")) {
                    auto parsed = scenario_detail::parse_sliders(c["sliders"], cwhere + "/sliders");
                    if (!parsed.ok()) return parsed.error();
                    cs = *parsed;
                }
                std::vector<Strategy> cstrat = *strategies;
                if (c.contains("strategies")) {
                    auto parsed = scenario_detail::parse_strategies(c["strategies"],
                                                                    cwhere + "/strategies", 0);
                    if (!parsed.ok()) return parsed.error();
                    cstrat = *parsed;
                }
                MandateLog scratch2;
                auto cc = scratch2.commit_config(cs, cstrat, 0);
                if (!cc.ok())
                    return ScenarioError{cwhere, std::string("scheduled mandate invalid: ") +
                                                     mandate_error_name(cc.error())};
            }
        }
    }
    return j;
}

inline Expected<Json, ScenarioError> load_scenario_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return ScenarioError{"/", "cannot open scenario file: " + path};
    std::stringstream ss;
    ss << f.rdbuf();
    std::string base_dir = ".";
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) base_dir = path.substr(0, slash);
    return load_scenario_text(ss.str(), base_dir);
}

// Builds a runnable world from a canonical scenario. Assumes the scenario has
// passed load_scenario_text validation.
inline World build_world(const Json& scenario, u64 seed, AdapterManager* adapters = nullptr) {
    World w;
    w.engine_cfg.seed = seed;
    w.adapters = adapters;

    if (scenario.contains("engine")) {
        const Json& e = scenario["engine"];
        w.engine_cfg.settlement_failure_rate = e.value("settlement_failure_rate", 0.0);
        w.engine_cfg.settlement_mode = e.value("settlement_mode", std::string("immediate")) ==
                                               "delayed"
                                           ? EngineConfig::SettlementMode::Delayed
                                           : EngineConfig::SettlementMode::Immediate;
        w.engine_cfg.invocation_jitter = e.value("invocation_jitter", false);
        w.engine_cfg.decision_shuffle = e.value("decision_shuffle", false);
        w.engine_cfg.debug_checks = e.value("debug_checks", false);
    }
    if (scenario.contains("guard")) {
        const Json& g = scenario["guard"];
        w.guard_cfg.max_trade_bps = g.value("max_trade_bps", u64(5000));
        w.guard_cfg.slippage_bps = g.value("slippage_bps", u64(100));
        w.guard_cfg.max_price_impact_bps = g.value("max_price_impact_bps", u64(1000));
        if (g.contains("max_positions") && !g["max_positions"].is_null())
            w.guard_cfg.max_positions = g["max_positions"].get<u64>();
    }
    if (scenario.contains("fees")) {
        w.protocol_fee_bps = scenario["fees"].value("protocol_bps", DEFAULT_PROTOCOL_FEE_BPS);
        w.lp_fee_bps = scenario["fees"].value("lp_bps", DEFAULT_LP_FEE_BPS);
    }
    w.eth_usd_display = scenario.value("eth_usd", std::string{});
    w.memory_window = scenario.value("memory_window", std::size_t(20));
    if (scenario.value("brief_archive", std::string("full")) == "hashes")
        w.trace = TraceStore(TraceStore::ArchiveMode::HashesOnly);

    auto tmpl = parse_template(scenario.at("template_text").get<std::string>());
    if (!tmpl.ok()) throw std::invalid_argument("build_world: template failed to parse");
    w.tmpl = *tmpl;

    if (scenario.contains("reap")) {
        ReapSchedule rs;
        rs.period = scenario["reap"].value("period_ticks", Tick(288));
        rs.next_at = scenario["reap"].value("first_at", rs.period);
        w.reap = rs;
    }

    for (const auto& t : scenario.at("tokens")) {
        std::string sym = t.at("symbol").get<std::string>();
        Eth eth_seed = Eth::parse(t.at("eth_reserve").get<std::string>());
        TokenUnits tok_seed = TokenUnits::parse(t.at("token_reserve").get<std::string>());
        Tick launch = t.value("launch_tick", Tick(0));
        if (launch == 0) {
            TokenMeta m;
            m.token_id = sym;
            m.symbol = sym;
            m.launched_at = 0;
            w.tokens[sym] = m;
            Pool p;
            p.token_id = sym;
            p.eth_reserve = eth_seed;
            p.token_reserve = tok_seed;
            p.lp_fee_bps = w.lp_fee_bps;
            p.protocol_fee_bps = w.protocol_fee_bps;
            w.pools[sym] = p;
            w.treasury[sym] = m.total_supply - tok_seed;
            w.external_eth_wei += i128(eth_seed.raw);
            w.history.record_genesis(sym, 0, p.spot_price_e18());
        } else {
            w.launches.push_back({sym, sym, launch, eth_seed, tok_seed});
        }
    }
    std::sort(w.launches.begin(), w.launches.end(),
              [](const LaunchSpec& a, const LaunchSpec& b) { return a.at < b.at; });

    for (const auto& vj : scenario.at("vaults")) {
        Vault v;
        v.vault_id = vj.at("vault_id").get<VaultId>();
        v.owner_id = vj.at("owner").get<std::string>();
        v.eth_balance = Eth::parse(vj.at("funding_eth").get<std::string>());
        v.net_funded_wei = i128(v.eth_balance.raw);
        v.activated_at = vj.value("activation_tick", Tick(0));
        w.external_eth_wei += i128(v.eth_balance.raw);

        PolicySpec spec;
        if (vj.contains("policy")) {
            const Json& pj = vj["policy"];
            spec.kind = *policy_kind_from_name(pj.value("kind", "reference"));
            spec.cadence_period = pj.value("period", u64(6));
            if (pj.contains("command"))
                for (const auto& c : pj["command"]) spec.command.push_back(c.get<std::string>());
            spec.connect_host = pj.value("host", std::string("127.0.0.1"));
            spec.connect_port = pj.value("port", 0);
            spec.timeout_ms = pj.value("timeout_ms", i64(2000));
            if (spec.kind == PolicySpec::Kind::External && adapters)
                adapters->configure(v.vault_id, {spec.command, spec.connect_host,
                                                 spec.connect_port, spec.timeout_ms});
        }
        w.policies[v.vault_id] = spec;
        w.mandates.emplace(v.vault_id, MandateLog{});

        SliderConfig sliders;
        if (vj.contains("sliders")) sliders = slider_config_from_json(vj["sliders"]);
        std::vector<Strategy> strategies;
        if (vj.contains("strategies")) {
            auto parsed = scenario_detail::parse_strategies(vj["strategies"], "", v.activated_at);
            strategies = *parsed;
        }
        w.scheduled_commits.push_back({v.activated_at, v.vault_id, sliders, strategies});

        if (vj.contains("commits")) {
            for (const auto& cj : vj["commits"]) {
                ScheduledCommit c;
                c.at = cj.at("at_tick").get<Tick>();
                c.vault_id = v.vault_id;
                c.sliders = cj.contains("sliders") ? slider_config_from_json(cj["sliders"])
                                                   : sliders;
                if (cj.contains("strategies")) {
                    auto parsed =
                        scenario_detail::parse_strategies(cj["strategies"], "", c.at);
                    c.strategies = *parsed;
                }
                w.scheduled_commits.push_back(std::move(c));
            }
        }
        if (vj.contains("owner_actions")) {
            for (const auto& aj : vj["owner_actions"]) {
                ScheduledOwnerAction a;
                a.at = aj.at("at_tick").get<Tick>();
                a.vault_id = v.vault_id;
                a.issuer = aj.value("issuer", v.owner_id);
                std::string kind = aj.at("action").get<std::string>();
                if (kind == "fund") a.action = FundAction{Eth::parse(aj.at("amount_eth").get<std::string>())};
                else if (kind == "withdraw")
                    a.action = WithdrawAction{Eth::parse(aj.at("amount_eth").get<std::string>())};
                else if (kind == "pause") a.action = PauseAction{};
                else if (kind == "unpause") a.action = UnpauseAction{};
                else if (kind == "close") a.action = CloseAction{};
                else if (kind == "emergency_liquidate") a.action = EmergencyLiquidateAction{};
                else throw std::invalid_argument("unknown owner action: " + kind);
                w.scheduled_owner_actions.push_back(std::move(a));
            }
        }
        w.vaults.emplace(v.vault_id, std::move(v));
    }

    std::stable_sort(w.scheduled_commits.begin(), w.scheduled_commits.end(),
                     [](const ScheduledCommit& a, const ScheduledCommit& b) {
                         return a.at != b.at ? a.at < b.at : a.vault_id < b.vault_id;
                     });
    std::stable_sort(w.scheduled_owner_actions.begin(), w.scheduled_owner_actions.end(),
                     [](const ScheduledOwnerAction& a, const ScheduledOwnerAction& b) {
                         return a.at != b.at ? a.at < b.at : a.vault_id < b.vault_id;
                     });
    return w;
}

inline TraceManifest make_manifest(const Json& scenario, u64 seed, const World& w) {
    TraceManifest m;
    m.seed = seed;
    m.scenario = scenario;
    m.scenario_sha256 = sha256_hex(scenario.dump());
    m.template_variant = w.tmpl.variant_id;
    return m;
}

inline Tick scenario_duration(const Json& scenario) {
    return scenario.at("duration_ticks").get<Tick>();
}

} // namespace vaultsim
