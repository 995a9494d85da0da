#pragma once

#include <ostream>

#include "surface/sim.hpp"

namespace surface::pipeline {

struct PipelineConfig {
    std::filesystem::path app_manifest;
    std::filesystem::path builtin_manifest;
    std::filesystem::path registry;
    std::filesystem::path nir;
    std::filesystem::path syscall_table;
    std::filesystem::path engine_baseline;
    std::optional<std::filesystem::path> dynamic_trace;
    std::optional<std::filesystem::path> command_profile;
    std::optional<std::filesystem::path> payloads;
    Mode mode = Mode::strict;
    bool refinement = true;
    std::filesystem::path output_dir = "out";
    std::optional<policy::FsAdvisory> fs_advisory;
};

/// Reads the JSON config; relative paths resolve against the config
/// file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// JS analysis stage shared by `cg-js` and the pipeline: corpus load,
/// static graph, optional dynamic merge, command extraction.
struct JsStage {
    corpus::ModuleGraph graph;
    jscg::CallGraph cg;
};
JsStage run_js_stage(const std::filesystem::path& manifest,
                     const std::filesystem::path& registry_path,
                     const std::optional<std::filesystem::path>& trace_path);

/// Native stage shared by `cg-native` and the pipeline.
struct NativeStage {
    nir::NirProgram program;           // refined program when refinement is on
    ncg::NativeCallGraph base;
    ncg::NativeCallGraph refined;      // equals base when refinement is off
    ncg::CloneReport report;
};
NativeStage run_native_stage(const std::filesystem::path& nir_path, bool refine);

/// Runs the four-step pipeline, writing artifacts into
/// config.output_dir in stage order. Throws on stage errors with the
/// stage name in the message; completed artifacts remain on disk.
void run_pipeline(const PipelineConfig& config, std::ostream& summary);

}  // namespace surface::pipeline
