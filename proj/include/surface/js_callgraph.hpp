#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "surface/corpus.hpp"

namespace surface::jscg {

/// Identifies a function by module and lexical path. The module top
/// level is "<top>"; nested functions append "/<name>" or
/// "/anon@line:col" for anonymous ones.
struct FunctionId {
    std::string module;
    std::string path;

    auto operator<=>(const FunctionId&) const = default;
    std::string str() const { return module + "#" + path; }
};

struct CallSite {
    std::string module;
    int line = 0;
    int col = 0;

    auto operator<=>(const CallSite&) const = default;
    std::string str() const {
        return module + ":" + std::to_string(line) + ":" + std::to_string(col);
    }
};

enum class EdgeKind { static_, builtin_pattern, dynamic };

std::string to_string(EdgeKind k);
EdgeKind edge_kind_from_string(const std::string& s);

struct CallEdge {
    CallSite site;
    FunctionId caller;
    FunctionId callee;
    EdgeKind kind = EdgeKind::static_;

    auto operator<=>(const CallEdge&) const = default;
};

/// Abstract description of one call argument, kept so builtin-pattern
/// edges and command extraction can run over a serialized graph.
struct ArgInfo {
    enum class Kind { none, function, literal };
    Kind kind = Kind::none;
    FunctionId function;  // when kind == function
    std::string literal;  // when kind == literal

    auto operator<=>(const ArgInfo&) const = default;
};

/// A call on a method of a require()'d builtin module (fs.readFile,
/// child_process.exec, ...).
struct BuiltinCall {
    CallSite site;
    FunctionId caller;
    std::string owner;
    std::string method;
    std::vector<ArgInfo> args;

    auto operator<=>(const BuiltinCall&) const = default;
};

/// A method call whose receiver did not resolve to a module value, or a
/// `new X(...)` expression. These are matched against registry entries
/// for global objects (Array.map, Promise.then, new Promise, ...).
struct PatternCall {
    CallSite site;
    FunctionId caller;
    std::string owner_hint;  // constructor name for "new", else ""
    std::string method;      // property name, or "new"
    std::vector<ArgInfo> args;

    auto operator<=>(const PatternCall&) const = default;
};

struct ExportEntry {
    std::string module;
    std::string method;
    FunctionId function;

    auto operator<=>(const ExportEntry&) const = default;
};

struct CallGraph {
    std::set<FunctionId> nodes;
    std::set<CallEdge> edges;
    std::set<BuiltinCall> builtin_calls;
    std::set<BuiltinCall> binding_calls;  // internalBinding(...) receivers
    std::set<PatternCall> pattern_calls;
    std::set<ExportEntry> exports;          // module.exports.name = fn
    std::set<ExportEntry> default_exports;  // module.exports = fn (method "<default>")
    std::vector<std::string> commands;      // resolved command binaries, sorted
    int unresolved_calls = 0;
    int unresolved_callbacks = 0;
    std::vector<std::string> warnings;

    bool has_edge(const FunctionId& caller, const FunctionId& callee) const;
};

json call_graph_to_json(const CallGraph& cg);
CallGraph call_graph_from_json(const json& doc);

struct TraceCall {
    CallSite site;
    FunctionId caller;
    FunctionId callee;
};

struct TraceCommand {
    CallSite site;
    std::string command;
};

struct DynamicTrace {
    std::vector<TraceCall> call_records;
    std::vector<TraceCommand> command_records;
};

/// Parses the line-oriented trace format:
///   CALL <caller_module>#<caller_path> @<module>:<line>:<col> -> <callee_module>#<callee_path>
///   CMD @<module>:<line>:<col> <command string>
/// Records naming modules absent from `graph` are input errors.
DynamicTrace load_trace(const std::filesystem::path& path, const corpus::ModuleGraph& graph);

/// Builds the static call graph by field-based flow analysis over the
/// corpus, including registry-driven builtin-pattern edges.
CallGraph build_static_cg(const corpus::ModuleGraph& graph,
                          const corpus::BuiltinRegistry& registry);

/// Adds builtin-pattern edges for registry matches found in
/// builtin_calls / pattern_calls records. Never removes anything.
CallGraph annotate_builtin_edges(const CallGraph& cg, const corpus::BuiltinRegistry& registry,
                                 const std::vector<std::string>& builtin_module_names);

/// Unions dynamic trace records into the graph (kind dynamic). An edge
/// whose (site, caller, callee) already exists is not duplicated.
CallGraph merge_dynamic(const CallGraph& cg, const DynamicTrace& trace);

/// Extracts the first-token binary names of commands passed to
/// child_process exec/spawn family calls, from literal arguments or
/// trace CMD records. Deduplicated and sorted.
std::vector<std::string> extract_commands(const corpus::ModuleGraph& graph, CallGraph& cg,
                                          const DynamicTrace& trace);

/// (owner, method) pairs of builtin calls whose caller is reachable
/// from `entry` over edges of any kind.
std::set<std::pair<std::string, std::string>> reachable_builtins(const CallGraph& cg,
                                                                 const FunctionId& entry);

}  // namespace surface::jscg
