#pragma once

#include <optional>
#include <string>
#include <vector>

#include "surface/json_io.hpp"

namespace surface::corpus {

/// The ESTree node types the analyses understand. Anything else is
/// skipped during ingestion with a warning.
bool is_supported_node_type(const std::string& type);

enum class ModuleKind { app, dependency, builtin_js };

ModuleKind module_kind_from_string(const std::string& s);
std::string to_string(ModuleKind k);

/// One parsed source unit. `ast` holds the ESTree JSON tree; nodes may
/// carry "line"/"column" ints for positions.
struct SourceModule {
    std::string id;  // corpus-relative, forward slashes
    ModuleKind kind = ModuleKind::app;
    json ast;
};

enum class ResolutionKind { local, builtin, unresolved };

struct RequireEdge {
    std::string importer;    // module id
    std::string specifier;   // literal text, or "<dynamic>" for non-literal
    ResolutionKind kind = ResolutionKind::unresolved;
    std::string target;      // local: module id; builtin: builtin name; else ""
    int line = 0;
    int col = 0;
};

struct ModuleGraph {
    std::vector<SourceModule> modules;  // manifest order
    std::vector<RequireEdge> edges;     // sorted by (importer, line, col)
    std::string entry;                  // empty for library corpora
    std::vector<std::string> builtin_names;
    std::vector<std::string> warnings;

    const SourceModule* find(const std::string& id) const;
};

/// Loads a corpus from a manifest file:
///   {"entry": str, "modules": [{"id", "kind", "ast_file"}], "builtin_names": [str]}
/// Module ids must be unique; ast files are resolved relative to the
/// manifest's directory. `entry` may be "" for corpora with no
/// application module (the builtin-layer corpus).
ModuleGraph load_corpus(const std::filesystem::path& manifest_path);

/// Bundle form used for round-trip serialization: the manifest and the
/// module ASTs in one document.
json module_graph_to_json(const ModuleGraph& graph);
ModuleGraph module_graph_from_json(const json& doc);

bool operator==(const RequireEdge& a, const RequireEdge& b);
bool operator==(const SourceModule& a, const SourceModule& b);
bool operator==(const ModuleGraph& a, const ModuleGraph& b);

/// Marker for "the callback is the last argument".
inline constexpr int kLastArg = -1;

struct RegistryEntry {
    std::string owner;   // builtin module name (fs, child_process) or a
                         // global object name (Array, Promise, ...)
    std::string method;  // method name; "new" matches constructor calls
    std::vector<int> callback_args;  // indices, kLastArg for LAST
    bool creates_function = false;
};

struct BuiltinRegistry {
    std::vector<RegistryEntry> entries;

    const RegistryEntry* find(const std::string& owner, const std::string& method) const;
    /// Entries whose owner is not a require-able module (global objects).
    /// `builtin_module_names` comes from the corpus manifest.
    bool is_global_owner(const std::string& owner,
                         const std::vector<std::string>& builtin_module_names) const;
};

/// Loads the registry JSON: an array of
///   {"owner", "method", "callback_args": [int | "LAST"], "creates_function"}.
/// Duplicate (owner, method) pairs or malformed positions are input errors.
BuiltinRegistry load_registry(const std::filesystem::path& path);

}  // namespace surface::corpus
