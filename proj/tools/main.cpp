#include <iostream>

#include <CLI11.hpp>

#include "surface/pipeline.hpp"

namespace {

using namespace surface;

Mode mode_flag(bool strict, bool permissive) {
    if (permissive && !strict) return Mode::permissive;
    return Mode::strict;
}

int cmd_cg_js(const std::string& manifest, const std::string& registry,
              const std::string& trace, const std::string& out) {
    std::optional<std::filesystem::path> trace_path;
    if (!trace.empty()) trace_path = trace;
    pipeline::JsStage stage = pipeline::run_js_stage(manifest, registry, trace_path);
    save_json_file(out, jscg::call_graph_to_json(stage.cg));
    std::cout << "wrote " << out << " (" << stage.cg.nodes.size() << " nodes, "
              << stage.cg.edges.size() << " edges)\n";
    return 0;
}

int cmd_cg_native(const std::string& nir_path, bool no_refine, const std::string& out_base,
                  const std::string& out_refined, const std::string& out_clones) {
    pipeline::NativeStage stage = pipeline::run_native_stage(nir_path, !no_refine);
    save_json_file(out_base, ncg::native_cg_to_json(stage.base));
    save_json_file(out_refined, ncg::native_cg_to_json(stage.refined));
    save_json_file(out_clones, ncg::clone_report_to_json(stage.report));
    std::cout << "baseline: " << stage.base.edges.size() << " edges; refined: "
              << stage.refined.edges.size() << " edges; clones: "
              << stage.report.clones.size() << "\n";
    return 0;
}

int cmd_map(const std::string& builtin_cg_path, const std::string& nir_path, bool no_refine,
            const std::string& table_path, Mode mode, const std::string& out,
            const std::string& witness_spec) {
    jscg::CallGraph builtin_cg = jscg::call_graph_from_json(load_json_file(builtin_cg_path));
    pipeline::NativeStage native = pipeline::run_native_stage(nir_path, !no_refine);
    policy::SyscallTable table = policy::load_syscall_table(table_path);
    ncg::SyscallResolution resolution =
        ncg::resolve_syscalls(native.program, native.refined, table, mode);
    mapping::LayerMappings mappings = mapping::build_layer_mappings(
        builtin_cg, native.program, native.refined, resolution, mode);
    mapping::ComposedMapping composed = mapping::compose(mappings, table.all_names());
    save_json_file(out, mapping::mappings_to_json(mappings, composed));
    std::cout << "wrote " << out << " (" << composed.entries.size() << " composed methods)\n";
    if (!witness_spec.empty()) {
        // MODULE.METHOD=SYSCALL
        auto eq = witness_spec.find('=');
        auto dot = witness_spec.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw InputError("--witness expects MODULE.METHOD=SYSCALL");
        }
        mapping::MethodKey key{witness_spec.substr(0, dot),
                               witness_spec.substr(dot + 1, eq - dot - 1)};
        std::string syscall = witness_spec.substr(eq + 1);
        auto witness =
            mapping::find_witness(mappings, native.refined, resolution, key, syscall);
        if (!witness) {
            throw AnalysisError("no witness chain for " + key.first + "." + key.second +
                                " -> " + syscall);
        }
        std::cout << witness->str() << "\n";
    }
    return 0;
}

int cmd_whitelist(const std::string& app_cg_path, const std::string& mappings_path,
                  const std::string& baseline_path, const std::string& profile_path,
                  const std::string& table_path, const std::string& entry_module, Mode mode,
                  const std::string& out) {
    jscg::CallGraph app_cg = jscg::call_graph_from_json(load_json_file(app_cg_path));
    auto [mappings, composed] = mapping::mappings_from_json(load_json_file(mappings_path));
    policy::SyscallTable table = policy::load_syscall_table(table_path);
    policy::EngineBaseline baseline = policy::load_engine_baseline(baseline_path, table);
    policy::CommandProfile profile;
    if (!profile_path.empty()) {
        profile = policy::load_command_profile(profile_path, table);
    }
    std::set<mapping::MethodKey> reachable =
        jscg::reachable_builtins(app_cg, jscg::FunctionId{entry_module, "<top>"});
    policy::Whitelist wl = policy::generate_whitelist(reachable, composed, baseline,
                                                      app_cg.commands, profile, table, mode);
    save_json_file(out, policy::whitelist_to_json(wl));
    std::cout << "wrote " << out << " (main " << wl.main.size() << ", pool " << wl.pool.size()
              << ", mode " << (wl.pool_required ? "pool_required" : "pool_free") << ")\n";
    return 0;
}

int cmd_metrics(const std::string& whitelist_path, const std::string& table_path,
                const std::string& out) {
    policy::Whitelist wl = policy::whitelist_from_json(load_json_file(whitelist_path));
    policy::SyscallTable table = policy::load_syscall_table(table_path);
    policy::SurfaceMetrics m = policy::compute_metrics(wl, table);
    if (!out.empty()) save_json_file(out, policy::metrics_to_json(m));
    std::cout << "S_base " << m.s_base << "\nS_app " << m.s_app << "\nSR "
              << policy::format_sr(m.sr) << "\ncritical " << m.critical_allowed << "\ntrivial "
              << m.trivial_allowed << "\n";
    return 0;
}

int cmd_emit(const std::string& whitelist_path, const std::string& out_policy,
             const std::string& out_rules, const std::string& fs_root, bool fs_read_only) {
    policy::Whitelist wl = policy::whitelist_from_json(load_json_file(whitelist_path));
    std::optional<policy::FsAdvisory> advisory;
    if (!fs_root.empty()) advisory = policy::FsAdvisory{fs_root, fs_read_only};
    policy::Policy pol = policy::emit_policy(wl, advisory);
    save_json_file(out_policy, policy::policy_to_json(pol));
    if (!out_rules.empty()) write_text_file(out_rules, policy::policy_to_rules(pol));
    std::cout << "wrote " << out_policy << " (mode " << pol.mode << ")\n";
    return 0;
}

int cmd_simulate(const std::string& policy_path, const std::string& events_path,
                 const std::string& out) {
    policy::Policy pol = policy::load_policy(policy_path);
    sim::EventTrace trace = sim::load_event_trace(events_path);
    std::vector<sim::Verdict> verdicts = sim::simulate(pol, trace);
    json report = sim::verdicts_to_json(verdicts);
    if (!out.empty()) save_json_file(out, report);
    for (const auto& v : verdicts) {
        std::cout << "thread " << v.thread << " " << v.name << " -> "
                  << (v.allowed ? "allowed" : "killed") << "\n";
    }
    std::cout << "killed " << report["killed"] << " of " << verdicts.size() << "\n";
    return 0;
}

int cmd_payloads(const std::string& policy_path, const std::string& payloads_path,
                 const std::string& table_path, int thread, const std::string& out) {
    policy::Policy pol = policy::load_policy(policy_path);
    policy::SyscallTable table = policy::load_syscall_table(table_path);
    std::vector<sim::Payload> payloads = sim::load_payloads(payloads_path, table);
    std::vector<sim::PayloadOutcome> outcomes = sim::evaluate_payloads(pol, payloads, thread);
    if (!out.empty()) save_json_file(out, sim::payload_matrix_to_json(outcomes));
    std::cout << sim::payload_matrix_table(outcomes);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-language syscall attack-surface analysis toolchain"};
    app.require_subcommand(1);

    bool strict = false;
    bool permissive = false;
    app.add_flag("--strict", strict, "stop on soundness gaps (default)");
    app.add_flag("--permissive", permissive, "degrade soundness gaps to warnings");

    // cg-js
    auto* cg_js = app.add_subcommand("cg-js", "build a JavaScript call graph");
    std::string manifest, registry, trace, out;
    cg_js->add_option("--manifest", manifest, "corpus manifest")->required();
    cg_js->add_option("--registry", registry, "builtin-method registry")->required();
    cg_js->add_option("--trace", trace, "dynamic trace file");
    cg_js->add_option("--out", out, "output call-graph JSON")->required();

    // cg-native
    auto* cg_native = app.add_subcommand("cg-native", "build native call graphs");
    std::string nir_path, out_base, out_refined, out_clones;
    bool no_refine = false;
    cg_native->add_option("--nir", nir_path, "NIR program")->required();
    cg_native->add_flag("--no-refine", no_refine, "skip context-sensitive refinement");
    cg_native->add_option("--out-base", out_base, "baseline graph JSON")->required();
    cg_native->add_option("--out-refined", out_refined, "refined graph JSON")->required();
    cg_native->add_option("--out-clones", out_clones, "clone report JSON")->required();

    // map
    auto* map_cmd = app.add_subcommand("map", "build the layer mapping database");
    std::string builtin_cg_path, table_path, witness_spec;
    map_cmd->add_option("--builtin-cg", builtin_cg_path, "builtin-layer call graph JSON")
        ->required();
    map_cmd->add_option("--nir", nir_path, "NIR program")->required();
    map_cmd->add_flag("--no-refine", no_refine, "skip refinement");
    map_cmd->add_option("--table", table_path, "syscall table TSV")->required();
    map_cmd->add_option("--out", out, "mapping database JSON")->required();
    map_cmd->add_option("--witness", witness_spec, "print a chain: MODULE.METHOD=SYSCALL");

    // whitelist
    auto* wl_cmd = app.add_subcommand("whitelist", "generate per-thread whitelists");
    std::string app_cg_path, mappings_path, baseline_path, profile_path, entry_module;
    wl_cmd->add_option("--app-cg", app_cg_path, "application call graph JSON")->required();
    wl_cmd->add_option("--mappings", mappings_path, "mapping database JSON")->required();
    wl_cmd->add_option("--baseline", baseline_path, "engine baseline JSON")->required();
    wl_cmd->add_option("--profile", profile_path, "command profile JSON");
    wl_cmd->add_option("--table", table_path, "syscall table TSV")->required();
    wl_cmd->add_option("--entry", entry_module, "entry module id")->required();
    wl_cmd->add_option("--out", out, "whitelist JSON")->required();

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "compute attack-surface metrics");
    std::string whitelist_path;
    metrics_cmd->add_option("--whitelist", whitelist_path, "whitelist JSON")->required();
    metrics_cmd->add_option("--table", table_path, "syscall table TSV")->required();
    metrics_cmd->add_option("--out", out, "metrics JSON");

    // emit
    auto* emit_cmd = app.add_subcommand("emit", "emit the policy document");
    std::string out_policy, out_rules, fs_root;
    bool fs_read_only = false;
    emit_cmd->add_option("--whitelist", whitelist_path, "whitelist JSON")->required();
    emit_cmd->add_option("--out-policy", out_policy, "policy JSON")->required();
    emit_cmd->add_option("--out-rules", out_rules, "textual rules export");
    emit_cmd->add_option("--fs-root", fs_root, "advisory chroot directory");
    emit_cmd->add_flag("--fs-read-only", fs_read_only, "advisory read-only flag");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "replay an event trace against a policy");
    std::string policy_path, events_path;
    sim_cmd->add_option("--policy", policy_path, "policy JSON")->required();
    sim_cmd->add_option("--events", events_path, "event trace file")->required();
    sim_cmd->add_option("--out", out, "verdict report JSON");

    // payloads
    auto* payloads_cmd = app.add_subcommand("payloads", "evaluate payload categories");
    std::string payloads_path;
    int thread = 0;
    payloads_cmd->add_option("--policy", policy_path, "policy JSON")->required();
    payloads_cmd->add_option("--payloads", payloads_path, "payload set JSON")->required();
    payloads_cmd->add_option("--table", table_path, "syscall table TSV")->required();
    payloads_cmd->add_option("--thread", thread, "injection thread id (default 0)");
    payloads_cmd->add_option("--out", out, "matrix JSON");

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "run all stages from a config file");
    std::string config_path, out_dir, trace_override;
    bool refine_flag = false;
    bool no_refine_flag = false;
    pipe_cmd->add_option("--config", config_path, "pipeline config JSON")->required();
    pipe_cmd->add_option("--out", out_dir, "output directory (overrides config)");
    pipe_cmd->add_option("--trace", trace_override, "dynamic trace (overrides config)");
    pipe_cmd->add_flag("--refine", refine_flag, "force refinement on");
    pipe_cmd->add_flag("--no-refine", no_refine_flag, "force refinement off");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    const surface::Mode mode = mode_flag(strict, permissive);
    try {
        if (cg_js->parsed()) return cmd_cg_js(manifest, registry, trace, out);
        if (cg_native->parsed()) {
            return cmd_cg_native(nir_path, no_refine, out_base, out_refined, out_clones);
        }
        if (map_cmd->parsed()) {
            return cmd_map(builtin_cg_path, nir_path, no_refine, table_path, mode, out,
                           witness_spec);
        }
        if (wl_cmd->parsed()) {
            return cmd_whitelist(app_cg_path, mappings_path, baseline_path, profile_path,
                                 table_path, entry_module, mode, out);
        }
        if (metrics_cmd->parsed()) return cmd_metrics(whitelist_path, table_path, out);
        if (emit_cmd->parsed()) {
            return cmd_emit(whitelist_path, out_policy, out_rules, fs_root, fs_read_only);
        }
        if (sim_cmd->parsed()) return cmd_simulate(policy_path, events_path, out);
        if (payloads_cmd->parsed()) {
            return cmd_payloads(policy_path, payloads_path, table_path, thread, out);
        }
        if (pipe_cmd->parsed()) {
            surface::pipeline::PipelineConfig config =
                surface::pipeline::load_pipeline_config(config_path);
            if (!out_dir.empty()) config.output_dir = out_dir;
            if (!trace_override.empty()) config.dynamic_trace = trace_override;
            if (strict) config.mode = surface::Mode::strict;
            if (permissive && !strict) config.mode = surface::Mode::permissive;
            if (refine_flag) config.refinement = true;
            if (no_refine_flag) config.refinement = false;
            surface::pipeline::run_pipeline(config, std::cout);
            return 0;
        }
    } catch (const surface::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const surface::AnalysisError& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
