#pragma once

#include "surface/errors.hpp"
#include "surface/nir.hpp"
#include "surface/syscall_table.hpp"

namespace surface::ncg {

struct NcgEdge {
    std::string caller;
    int site = 0;  // pre-order call statement index within caller
    std::string callee;

    auto operator<=>(const NcgEdge&) const = default;
};

struct NativeCallGraph {
    std::set<std::string> nodes;
    std::set<NcgEdge> edges;

    std::map<std::string, std::set<std::string>> successors() const;
    bool has_edge(const std::string& caller, const std::string& callee) const;
    /// Transitive callee closure of `from`, excluding `from` itself
    /// unless reachable through a cycle (there are none).
    std::set<std::string> reachable_from(const std::string& from) const;
};

json native_cg_to_json(const NativeCallGraph& cg);
NativeCallGraph native_cg_from_json(const json& doc);

enum class CloneReason { switch_, fnptr };

struct CloneRecord {
    std::string original;
    std::string clone;
    CloneReason reason = CloneReason::switch_;
    std::string context;  // case constant (decimal) or resolved function name
    int depth = 1;        // clone chain length, 1 for direct

    auto operator<=>(const CloneRecord&) const = default;
};

struct CloneReport {
    std::vector<CloneRecord> clones;  // sorted by clone name
    int indeterminate_sites = 0;      // sites kept context-insensitive
};

json clone_report_to_json(const CloneReport& report);

/// Context-insensitive baseline: direct calls, all switch branches, and
/// call_indirect resolved to every fnref flowing into the parameter
/// from any call site (flow-insensitive closure).
NativeCallGraph build_base_cg(const nir::NirProgram& program);

struct SwitchCandidate {
    std::string switch_fn;
    std::string caller;
    int callsite = 0;  // pre-order call index within caller

    auto operator<=>(const SwitchCandidate&) const = default;
};

/// Functions containing a switch over a parameter-derived selector whose
/// branches call different functions, paired with call sites where the
/// caller pins the selector to a constant.
std::vector<SwitchCandidate> find_switch_candidates(const nir::NirProgram& program);

struct SpecializeResult {
    nir::NirProgram program;
    CloneReport report;
};

/// Redirects call sites with a determinable selector constant to a
/// clone containing only the matching branch.
SpecializeResult specialize_switch(const nir::NirProgram& program);

/// Clones forwarding chains so each concrete function pointer flows to
/// its own copy, resolving the final indirect call to a direct one.
SpecializeResult specialize_fnptr(const nir::NirProgram& program);

struct SyscallResolution {
    // Function name -> resolved syscall names, transitively over the
    // call graph. Functions marked over_approximated carry the full
    // table (permissive mode with an unresolved number).
    std::map<std::string, std::set<std::string>> by_function;
    // Names resolved from syscall statements in the function itself.
    std::map<std::string, std::set<std::string>> direct_by_function;
    std::set<std::string> over_approximated;
    std::vector<std::pair<std::string, int>> unresolved_sites;  // (function, stmt index)
};

SyscallResolution resolve_syscalls(const nir::NirProgram& program, const NativeCallGraph& cg,
                                   const policy::SyscallTable& table, Mode mode);

json syscall_resolution_to_json(const SyscallResolution& res);

}  // namespace surface::ncg
