#include "surface/pipeline.hpp"

namespace surface::pipeline {

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) { return base / p; };
    PipelineConfig config;
    auto require_path = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            throw InputError("pipeline config: missing path '" + std::string(key) + "'");
        }
        return resolve(doc[key].get<std::string>());
    };
    config.app_manifest = require_path("app_manifest");
    config.builtin_manifest = require_path("builtin_manifest");
    config.registry = require_path("registry");
    config.nir = require_path("nir");
    config.syscall_table = require_path("syscall_table");
    config.engine_baseline = require_path("engine_baseline");
    if (doc.contains("dynamic_trace") && doc["dynamic_trace"].is_string()) {
        config.dynamic_trace = resolve(doc["dynamic_trace"].get<std::string>());
    }
    if (doc.contains("command_profile") && doc["command_profile"].is_string()) {
        config.command_profile = resolve(doc["command_profile"].get<std::string>());
    }
    if (doc.contains("payloads") && doc["payloads"].is_string()) {
        config.payloads = resolve(doc["payloads"].get<std::string>());
    }
    const std::string mode = doc.value("mode", "strict");
    if (mode == "strict") {
        config.mode = Mode::strict;
    } else if (mode == "permissive") {
        config.mode = Mode::permissive;
    } else {
        throw InputError("pipeline config: mode must be strict or permissive");
    }
    config.refinement = doc.value("refinement", true);
    config.output_dir = doc.contains("output_dir") && doc["output_dir"].is_string()
                            ? resolve(doc["output_dir"].get<std::string>())
                            : std::filesystem::path("out");
    if (doc.contains("fs_advisory") && doc["fs_advisory"].is_object()) {
        policy::FsAdvisory advisory;
        advisory.root_dir = doc["fs_advisory"].value("root_dir", "");
        advisory.read_only = doc["fs_advisory"].value("read_only", false);
        config.fs_advisory = advisory;
    }
    return config;
}

JsStage run_js_stage(const std::filesystem::path& manifest,
                     const std::filesystem::path& registry_path,
                     const std::optional<std::filesystem::path>& trace_path) {
    JsStage stage;
    stage.graph = corpus::load_corpus(manifest);
    corpus::BuiltinRegistry registry = corpus::load_registry(registry_path);
    stage.cg = jscg::build_static_cg(stage.graph, registry);
    jscg::DynamicTrace trace;
    if (trace_path) {
        trace = jscg::load_trace(*trace_path, stage.graph);
        stage.cg = jscg::merge_dynamic(stage.cg, trace);
    }
    jscg::extract_commands(stage.graph, stage.cg, trace);
    // Corpus-level warnings ride along in the graph artifact.
    for (const auto& w : stage.graph.warnings) stage.cg.warnings.push_back(w);
    return stage;
}

NativeStage run_native_stage(const std::filesystem::path& nir_path, bool refine) {
    NativeStage stage;
    nir::NirProgram program = nir::parse_nir(nir_path);
    stage.base = ncg::build_base_cg(program);
    if (!refine) {
        stage.program = std::move(program);
        stage.refined = stage.base;
        return stage;
    }
    ncg::SpecializeResult sw = ncg::specialize_switch(program);
    ncg::SpecializeResult fp = ncg::specialize_fnptr(sw.program);
    stage.program = std::move(fp.program);
    stage.refined = ncg::build_base_cg(stage.program);
    stage.report.clones = std::move(sw.report.clones);
    stage.report.clones.insert(stage.report.clones.end(), fp.report.clones.begin(),
                               fp.report.clones.end());
    std::sort(stage.report.clones.begin(), stage.report.clones.end());
    stage.report.indeterminate_sites =
        sw.report.indeterminate_sites + fp.report.indeterminate_sites;
    return stage;
}

namespace {

struct StageGuard {
    const char* name;
    template <typename F>
    auto run(F&& fn) {
        try {
            return fn();
        } catch (const InputError& e) {
            throw InputError(std::string(name) + ": " + e.what());
        } catch (const AnalysisError& e) {
            throw AnalysisError(std::string(name) + ": " + e.what());
        }
    }
};

}  // namespace

void run_pipeline(const PipelineConfig& config, std::ostream& summary) {
    std::filesystem::create_directories(config.output_dir);
    const auto out = [&](const char* file) { return config.output_dir / file; };

    // App and builtin-layer call graphs.
    JsStage app = StageGuard{"cg-js(app)"}.run([&] {
        return run_js_stage(config.app_manifest, config.registry, config.dynamic_trace);
    });
    save_json_file(out("app_cg.json"), jscg::call_graph_to_json(app.cg));

    JsStage builtin = StageGuard{"cg-js(builtin)"}.run([&] {
        return run_js_stage(config.builtin_manifest, config.registry, std::nullopt);
    });
    save_json_file(out("builtin_cg.json"), jscg::call_graph_to_json(builtin.cg));

    // Native graphs, baseline and refined.
    NativeStage native = StageGuard{"cg-native"}.run(
        [&] { return run_native_stage(config.nir, config.refinement); });
    save_json_file(out("native_cg_base.json"), ncg::native_cg_to_json(native.base));
    save_json_file(out("native_cg_refined.json"), ncg::native_cg_to_json(native.refined));
    save_json_file(out("clone_report.json"), ncg::clone_report_to_json(native.report));

    // Mapping database.
    policy::SyscallTable table = StageGuard{"map"}.run(
        [&] { return policy::load_syscall_table(config.syscall_table); });
    ncg::SyscallResolution resolution = StageGuard{"map"}.run([&] {
        return ncg::resolve_syscalls(native.program, native.refined, table, config.mode);
    });
    mapping::LayerMappings mappings = StageGuard{"map"}.run([&] {
        return mapping::build_layer_mappings(builtin.cg, native.program, native.refined,
                                             resolution, config.mode);
    });
    mapping::ComposedMapping composed = mapping::compose(mappings, table.all_names());
    save_json_file(out("mappings.json"), mapping::mappings_to_json(mappings, composed));

    // Whitelist.
    policy::EngineBaseline baseline = StageGuard{"whitelist"}.run(
        [&] { return policy::load_engine_baseline(config.engine_baseline, table); });
    policy::CommandProfile profile;
    if (config.command_profile) {
        profile = StageGuard{"whitelist"}.run(
            [&] { return policy::load_command_profile(*config.command_profile, table); });
    }
    std::set<mapping::MethodKey> reachable = StageGuard{"whitelist"}.run([&] {
        return jscg::reachable_builtins(app.cg,
                                        jscg::FunctionId{app.graph.entry, "<top>"});
    });
    policy::Whitelist wl = StageGuard{"whitelist"}.run([&] {
        return policy::generate_whitelist(reachable, composed, baseline, app.cg.commands,
                                          profile, table, config.mode);
    });
    save_json_file(out("whitelist.json"), policy::whitelist_to_json(wl));

    // Metrics and policy.
    policy::SurfaceMetrics metrics =
        StageGuard{"metrics"}.run([&] { return policy::compute_metrics(wl, table); });
    save_json_file(out("metrics.json"), policy::metrics_to_json(metrics));

    policy::Policy pol = policy::emit_policy(wl, config.fs_advisory);
    save_json_file(out("policy.json"), policy::policy_to_json(pol));
    write_text_file(out("policy.rules"), policy::policy_to_rules(pol));

    const std::size_t warning_total = app.cg.warnings.size() + builtin.cg.warnings.size() +
                                      mappings.warnings.size() + wl.warnings.size() +
                                      composed.dangling.size();
    summary << "mode              " << pol.mode << "\n"
            << "main_allow        " << pol.main_allow.size() << "\n"
            << "pool_allow        " << pol.pool_allow.size() << "\n"
            << "S_base            " << metrics.s_base << "\n"
            << "S_app             " << metrics.s_app << "\n"
            << "SR                " << policy::format_sr(metrics.sr) << "\n"
            << "critical allowed  " << metrics.critical_allowed << "\n"
            << "trivial allowed   " << metrics.trivial_allowed << "\n"
            << "clones            " << native.report.clones.size() << "\n"
            << "warnings          " << warning_total << "\n";
}

}  // namespace surface::pipeline
