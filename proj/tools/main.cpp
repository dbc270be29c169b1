// vaultsim CLI: scenario-driven runs, slider sweeps, trace replay/verify and
// metric reports. Exit codes: 0 success, 1 runtime failure, 2 invalid input;
// invalid input also emits a machine-readable JSON error object on stderr.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "vaultsim/analytics.hpp"
#include "vaultsim/engine.hpp"
#include "vaultsim/scenario.hpp"
#include "vaultsim/svg_plot.hpp"
#include "vaultsim/trace.hpp"

namespace fs = std::filesystem;
using namespace vaultsim;

namespace {

int fail_input(const Json& err) {
    std::cerr << err.dump() << "\n";
    return 2;
}

int fail_runtime(const std::string& message) {
    std::cerr << Json{{"error", "runtime_failure"}, {"message", message}}.dump() << "\n";
    return 1;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

Json run_summary(const World& w) {
    FailureTaxonomy t = failure_taxonomy(w.trace);
    Json rejections = Json::object();
    for (const auto& [code, n] : t.guard_rejections) rejections[code] = n;
    return Json{{"ticks", w.clock.tick},
                {"records", w.trace.record_count()},
                {"settled", t.settled},
                {"settlement_failures", t.settlement_failures},
                {"parse_errors", t.parse_errors},
                {"guard_rejections", rejections},
                {"observes", t.observes},
                {"settlement_success_rate", t.settlement_success_rate()},
                {"reaps", w.reap_count}};
}

struct RunOutputs {
    Json scenario;
    World world;
};

// Shared by run/replay: execute a scenario to completion.
RunOutputs execute(const Json& scenario, u64 seed, std::optional<Tick> ticks,
                   AdapterManager* adapters) {
    RunOutputs out{scenario, build_world(scenario, seed, adapters)};
    run(out.world, ticks.value_or(scenario_duration(scenario)));
    return out;
}

std::set<VaultId> swept_vaults(const Json& scenario) {
    std::set<VaultId> ids;
    for (const auto& v : scenario.at("vaults"))
        if (v.value("sweep", false)) ids.insert(v.at("vault_id").get<VaultId>());
    if (ids.empty()) // default cohort: every vault
        for (const auto& v : scenario.at("vaults")) ids.insert(v.at("vault_id").get<VaultId>());
    return ids;
}

int cmd_run(const std::string& scenario_path, u64 seed, const std::string& out_dir,
            std::optional<Tick> ticks) {
    auto scenario = load_scenario_file(scenario_path);
    if (!scenario.ok()) return fail_input(scenario.error().to_json());
    try {
        AdapterManager adapters;
        RunOutputs r = execute(*scenario, seed, ticks, &adapters);
        fs::create_directories(out_dir);
        TraceManifest manifest = make_manifest(*scenario, seed, r.world);
        export_trace(r.world.trace, manifest, out_dir + "/trace.jsonl");
        write_file(out_dir + "/briefs.jsonl", export_briefs_to_string(r.world.trace));
        write_file(out_dir + "/summary.json", run_summary(r.world).dump(2) + "\n");
        std::cout << run_summary(r.world).dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }
}

int cmd_sweep(const std::string& scenario_path, u64 seed, const std::string& slider_name,
              int level_lo, int level_hi, u64 samples, const std::string& out_dir,
              unsigned threads) {
    auto scenario = load_scenario_file(scenario_path);
    if (!scenario.ok()) return fail_input(scenario.error().to_json());
    auto slider = slider_from_name(slider_name);
    if (!slider)
        return fail_input(Json{{"error", "unknown_slider"},
                               {"valid", Json::array({"TA", "ARP", "TS", "HS", "DIV"})}});
    if (level_lo < 1 || level_hi > 5 || level_lo >= level_hi)
        return fail_input(Json{{"error", "invalid_levels"},
                               {"message", "levels must satisfy 1 <= lo < hi <= 5"}});

    const char* slider_key = nullptr;
    switch (*slider) {
        case SliderName::TA: slider_key = "ta"; break;
        case SliderName::ARP: slider_key = "arp"; break;
        case SliderName::TS: slider_key = "ts"; break;
        case SliderName::HS: slider_key = "hs"; break;
        case SliderName::DIV: slider_key = "div"; break;
    }

    struct Job {
        int level;
        u64 sample;
    };
    std::vector<Job> jobs;
    for (int level = level_lo; level <= level_hi; ++level)
        for (u64 s = 0; s < samples; ++s) jobs.push_back({level, s});

    std::set<VaultId> cohort = swept_vaults(*scenario);
    std::vector<std::map<int, LevelAccum>> partials(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::string first_error;

    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            try {
                Json variant = *scenario;
                for (auto& v : variant["vaults"])
                    if (cohort.count(v.at("vault_id").get<VaultId>()))
                        v["sliders"][slider_key] = job.level;
                std::string seed_material = u128_to_string(seed) + ":" + slider_name + ":" +
                                            std::to_string(job.level) + ":" +
                                            std::to_string(job.sample);
                u64 run_seed = sha256_prefix64(seed_material);
                World w = build_world(variant, run_seed);
                run(w, scenario_duration(variant));
                partials[i] = accumulate_gradient(
                    w.trace, TokenTimeline::from(variant, w.trace), *slider, cohort);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    unsigned n_threads = std::max(1u, threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (!first_error.empty()) return fail_runtime(first_error);

    // deterministic merge in (level, sample) order
    GradientReport report;
    report.slider = *slider;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        for (const auto& [lvl, acc] : partials[i]) report.levels[lvl].merge(acc);
    if (report.levels.size() < 2)
        return fail_input(Json{{"error", "InsufficientCohorts"},
                               {"message", "sweep produced fewer than two slider levels"}});
    report.verdict = gradient_verdict(report.levels, primary_metric_for(*slider));

    std::string table = csv::gradient(report);
    fs::create_directories(out_dir);
    write_file(out_dir + "/gradient_" + slider_name + ".csv", table);
    std::cout << table;
    return 0;
}

int cmd_replay(const std::string& trace_path, bool verify, const std::string& template_override,
               const std::string& out_dir) {
    auto imported = import_trace(trace_path);
    if (!imported.ok())
        return fail_input(Json{{"error", "CorruptLine"},
                               {"line", imported.error().line},
                               {"cause", imported.error().cause}});
    const TraceManifest& manifest = imported->manifest;

    try {
        if (verify) {
            RunOutputs r = execute(manifest.scenario, manifest.seed, std::nullopt, nullptr);
            std::string replayed =
                export_trace_to_string(r.world.trace, make_manifest(manifest.scenario,
                                                                    manifest.seed, r.world));
            std::ifstream f(trace_path, std::ios::binary);
            std::string original((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
            auto div = first_divergence(original, replayed);
            if (div) {
                Json err{{"error", "VerificationMismatch"}, {"line", div->line}};
                if (div->invocation_id) err["invocation_id"] = *div->invocation_id;
                std::cerr << err.dump() << "\n";
                return 1;
            }
            std::cout << Json{{"verified", true},
                              {"records", imported->store.record_count()}}.dump()
                      << "\n";
            return 0;
        }

        if (!template_override.empty()) {
            auto tmpl_text = std::make_shared<std::string>();
            {
                std::ifstream f(template_override, std::ios::binary);
                if (!f)
                    return fail_input(Json{{"error", "invalid_template"},
                                           {"message", "cannot open " + template_override}});
                std::stringstream ss;
                ss << f.rdbuf();
                *tmpl_text = ss.str();
            }
            auto parsed_tmpl = parse_template(*tmpl_text);
            if (!parsed_tmpl.ok())
                return fail_input(Json{{"error", "invalid_template"},
                                       {"line", parsed_tmpl.error().line},
                                       {"message", parsed_tmpl.error().message}});

            Json variant_scenario = manifest.scenario;
            variant_scenario["template_text"] = *tmpl_text;
            RunOutputs alt = execute(variant_scenario, manifest.seed, std::nullopt, nullptr);

            // per-invocation comparison against the original export
            auto original_records = imported->store.records();
            auto variant_records = alt.world.trace.records();
            u64 n = std::min(original_records.size(), variant_records.size());
            u64 hash_diverged = 0, structured_equal = 0;
            for (u64 i = 0; i < n; ++i) {
                if (original_records[i]->brief_hash != variant_records[i]->brief_hash)
                    ++hash_diverged;
                if (original_records[i]->structured_digest ==
                    variant_records[i]->structured_digest)
                    ++structured_equal;
            }
            FailureTaxonomy base_tax = failure_taxonomy(imported->store);
            FailureTaxonomy alt_tax = failure_taxonomy(alt.world.trace);
            Json deltas{{"records_compared", n},
                        {"brief_hash_divergence_rate", n ? double(hash_diverged) / double(n) : 0.0},
                        {"structured_equality_rate", n ? double(structured_equal) / double(n) : 0.0},
                        {"template_variant", alt.world.tmpl.variant_id},
                        {"settled_delta",
                         i64(alt_tax.settled) - i64(base_tax.settled)},
                        {"rejections_delta",
                         i64(alt_tax.rejections_total()) - i64(base_tax.rejections_total())}};
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                export_trace(alt.world.trace,
                             make_manifest(variant_scenario, manifest.seed, alt.world),
                             out_dir + "/trace.jsonl");
                write_file(out_dir + "/deltas.json", deltas.dump(2) + "\n");
            }
            std::cout << deltas.dump() << "\n";
            return 0;
        }

        // plain replay: re-run and summarize
        RunOutputs r = execute(manifest.scenario, manifest.seed, std::nullopt, nullptr);
        std::cout << run_summary(r.world).dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }
}

int cmd_report(const std::string& trace_path, const std::vector<std::string>& metrics,
               const std::string& plots_dir, const std::string& out_dir) {
    auto imported = import_trace(trace_path);
    if (!imported.ok())
        return fail_input(Json{{"error", "CorruptLine"},
                               {"line", imported.error().line},
                               {"cause", imported.error().cause}});
    const TraceStore& store = imported->store;
    const Json& scenario = imported->manifest.scenario;

    static const std::vector<std::string> valid = {
        "taxonomy", "two_sided", "cascades", "cold_start", "fee_salience",
        "gradient:TA", "gradient:ARP", "gradient:TS", "gradient:HS", "gradient:DIV"};

    std::string combined;
    for (const std::string& m : metrics) {
        if (std::find(valid.begin(), valid.end(), m) == valid.end())
            return fail_input(Json{{"error", "UnknownMetric"}, {"metric", m}, {"valid", valid}});
        std::string table;
        if (m == "taxonomy") {
            table = csv::taxonomy(failure_taxonomy(store));
        } else if (m == "two_sided") {
            double f = two_sided_fraction(trades_from_trace(store));
            table = "metric,value\ntwo_sided_fraction," + csv::fixed6(f) + "\n";
        } else if (m == "cascades") {
            auto events = detect_sell_cascades(trades_from_trace(store));
            table = csv::cascades(events);
            if (!plots_dir.empty()) {
                fs::create_directories(plots_dir);
                write_file(plots_dir + "/cascades.svg",
                           svg::cascade_timeline("sell cascades", events));
            }
        } else if (m == "cold_start") {
            table = "vault,buys,sells,ratio\n";
            for (VaultId v : store.vault_ids()) {
                ColdStartReport r = cold_start_buy_sell(store, v);
                table += std::to_string(v) + ',' + std::to_string(r.buys) + ',' +
                         std::to_string(r.sells) + ',' +
                         (r.ratio ? csv::fixed6(*r.ratio) : "undefined") + "\n";
            }
        } else if (m == "fee_salience") {
            auto r = fee_salience_rate(store);
            table = "metric,value\nfee_salience_rate," + (r ? csv::fixed6(*r) : "undefined") +
                    "\n";
        } else { // gradient:<slider>
            std::string name = m.substr(9);
            auto rep = slider_gradient_report(store, scenario, *slider_from_name(name));
            if (!rep.ok())
                return fail_input(Json{{"error", analytics_error_name(rep.error())},
                                       {"metric", m}});
            table = csv::gradient(*rep);
            if (!plots_dir.empty()) {
                fs::create_directories(plots_dir);
                std::vector<std::pair<std::string, double>> bars;
                for (const auto& [lvl, acc] : rep->levels)
                    bars.emplace_back(name + "=" + std::to_string(lvl),
                                      acc.metric(primary_metric_for(rep->slider)));
                write_file(plots_dir + "/gradient_" + name + ".svg",
                           svg::bar_chart("gradient " + name, bars, "%"));
            }
        }
        combined += "# metric: " + m + "\n" + table + "\n";
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::string fname = m;
            std::replace(fname.begin(), fname.end(), ':', '_');
            write_file(out_dir + "/" + fname + ".csv", table);
        }
    }
    std::cout << combined;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vaultsim: deterministic agent-market simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, trace_path, slider, template_override, plots_dir;
    u64 seed = 0, samples = 60;
    std::optional<Tick> ticks;
    Tick ticks_raw = -1;
    int level_lo = 1, level_hi = 5;
    unsigned threads = std::thread::hardware_concurrency();
    bool verify = false;
    std::vector<std::string> metrics;

    auto* run_cmd = app.add_subcommand("run", "run a scenario and export its trace");
    run_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    run_cmd->add_option("--seed", seed, "simulation seed")->default_val(0);
    run_cmd->add_option("--out", out_dir, "output directory")->required();
    run_cmd->add_option("--ticks", ticks_raw, "override duration_ticks");

    auto* sweep_cmd = app.add_subcommand("sweep", "run per-level slider samples");
    sweep_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    sweep_cmd->add_option("--seed", seed, "sweep seed")->default_val(0);
    sweep_cmd->add_option("--slider", slider, "TA|ARP|TS|HS|DIV")->required();
    sweep_cmd->add_option("--levels", level_hi, "sweep levels 1..N")->default_val(5);
    sweep_cmd->add_option("--samples", samples, "samples per level")->default_val(60);
    sweep_cmd->add_option("--out", out_dir, "output directory")->required();
    sweep_cmd->add_option("--threads", threads, "worker threads");

    auto* replay_cmd = app.add_subcommand("replay", "re-run a trace from its manifest");
    replay_cmd->add_option("--trace", trace_path, "trace export")->required();
    replay_cmd->add_flag("--verify", verify, "assert byte-identical reproduction");
    replay_cmd->add_option("--template", template_override,
                           "re-run under a different template variant");
    replay_cmd->add_option("--out", out_dir, "output directory for the variant trace");

    auto* report_cmd = app.add_subcommand("report", "compute metric tables from a trace");
    report_cmd->add_option("--trace", trace_path, "trace export")->required();
    report_cmd->add_option("--metrics", metrics, "metric list")->required()->delimiter(',');
    report_cmd->add_option("--plots", plots_dir, "write SVG charts to this directory");
    report_cmd->add_option("--out", out_dir, "write CSV tables to this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (app.exit(e) != 0) {
            std::cerr << Json{{"error", "invalid_arguments"}, {"message", e.what()}}.dump()
                      << "\n";
            return 2;
        }
        return 0;
    }

    if (run_cmd->parsed()) {
        if (ticks_raw >= 0) ticks = ticks_raw;
        return cmd_run(scenario_path, seed, out_dir, ticks);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(scenario_path, seed, slider, level_lo, level_hi,
                                              samples, out_dir, threads);
    if (replay_cmd->parsed()) return cmd_replay(trace_path, verify, template_override, out_dir);
    if (report_cmd->parsed()) return cmd_report(trace_path, metrics, plots_dir, out_dir);
    return 2;
}
