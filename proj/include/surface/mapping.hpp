#pragma once

#include "surface/js_callgraph.hpp"
#include "surface/native_callgraph.hpp"

namespace surface::mapping {

using MethodKey = std::pair<std::string, std::string>;  // (module, method)

struct LayerMappings {
    // builtin (module, method) -> binding (module, method) pairs
    std::map<MethodKey, std::set<MethodKey>> m_builtin;
    // binding (module, method) -> native function
    std::map<MethodKey, std::string> m_binding;
    // native function (binding targets and pool tasks) -> syscall names
    std::map<std::string, std::set<std::string>> m_depend;
    std::set<MethodKey> pool_builtins;
    std::map<MethodKey, std::set<std::string>> pool_tasks;
    // methods whose pool task could not be resolved (permissive mode)
    std::set<MethodKey> unresolved_pool;
    std::vector<std::string> warnings;
};

struct ComposedEntry {
    std::set<std::string> main_syscalls;
    std::set<std::string> pool_syscalls;
    bool uses_pool = false;

    auto operator<=>(const ComposedEntry&) const = default;
};

struct ComposedMapping {
    std::map<MethodKey, ComposedEntry> entries;
    std::vector<std::string> dangling;  // composition breaks, with the layer named
};

/// Builtin module name for a builtin-js source module id
/// ("lib/child_process.js" -> "child_process").
std::string builtin_name_of(const std::string& module_id);

/// Algorithm: from each exported method of each builtin-js module,
/// traverse the builtin-layer call graph and record the binding
/// (module, method) pairs invoked through internalBinding results.
std::map<MethodKey, std::set<MethodKey>> map_builtin(const jscg::CallGraph& builtin_cg);

/// The declarative bindings list as an association; conflicting
/// duplicates are input errors.
std::map<MethodKey, std::string> map_binding(const nir::NirProgram& program);

/// Native function -> resolved syscall set for every binding target.
std::map<std::string, std::set<std::string>> map_depend(
    const nir::NirProgram& program, const ncg::NativeCallGraph& cg,
    const ncg::SyscallResolution& resolution, const std::map<MethodKey, std::string>& m_binding);

struct PoolInfo {
    std::set<MethodKey> pool_builtins;
    std::map<MethodKey, std::set<std::string>> pool_tasks;
    std::set<MethodKey> unresolved;
    std::vector<std::string> warnings;
};

/// A builtin method uses the thread pool iff its native function reaches
/// a submit_pool statement; tasks are that statement's resolved targets.
PoolInfo identify_pool(const nir::NirProgram& program, const ncg::NativeCallGraph& cg,
                       const std::map<MethodKey, std::set<MethodKey>>& m_builtin,
                       const std::map<MethodKey, std::string>& m_binding, Mode mode);

/// Assembles all layers in one pass.
LayerMappings build_layer_mappings(const jscg::CallGraph& builtin_cg,
                                   const nir::NirProgram& program,
                                   const ncg::NativeCallGraph& cg,
                                   const ncg::SyscallResolution& resolution, Mode mode);

/// Relational composition of the three layers. `all_syscalls` feeds the
/// permissive over-approximation for unresolved pool tasks.
ComposedMapping compose(const LayerMappings& mappings,
                        const std::set<std::string>& all_syscalls);

/// Witness chain for one (method, syscall) pair.
struct Witness {
    MethodKey builtin;
    MethodKey binding;
    std::string native;
    bool via_pool = false;
    std::vector<std::string> path;  // native/task function to the syscall site
    std::string syscall;

    std::string str() const;
};

/// Finds a witness for (module, method) -> syscall, or nullopt when the
/// pair is not in the composed mapping.
std::optional<Witness> find_witness(const LayerMappings& mappings,
                                    const ncg::NativeCallGraph& cg,
                                    const ncg::SyscallResolution& resolution,
                                    const MethodKey& method, const std::string& syscall);

/// Mapping database persistence (schema_version 1).
json mappings_to_json(const LayerMappings& mappings, const ComposedMapping& composed);
std::pair<LayerMappings, ComposedMapping> mappings_from_json(const json& doc);

}  // namespace surface::mapping
