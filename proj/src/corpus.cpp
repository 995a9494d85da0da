#include "surface/corpus.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace surface::corpus {

namespace {

constexpr std::array kSupportedTypes = {
    "Program",
    "FunctionDeclaration",
    "FunctionExpression",
    "ArrowFunctionExpression",
    "VariableDeclaration",
    "VariableDeclarator",
    "AssignmentExpression",
    "MemberExpression",
    "CallExpression",
    "NewExpression",
    "Identifier",
    "Literal",
    "ObjectExpression",
    "Property",
    "ReturnStatement",
    "ExpressionStatement",
    "BlockStatement",
    "IfStatement",
    "ConditionalExpression",
};

int node_line(const json& node) {
    auto it = node.find("line");
    return it != node.end() && it->is_number_integer() ? it->get<int>() : 0;
}

int node_col(const json& node) {
    auto it = node.find("column");
    return it != node.end() && it->is_number_integer() ? it->get<int>() : 0;
}

// Walks the tree depth-first, pruning unsupported node types and
// recording one warning per pruned subtree.
void check_node_types(const json& node, const std::string& module_id,
                      std::vector<std::string>& warnings) {
    if (node.is_array()) {
        for (const auto& child : node) check_node_types(child, module_id, warnings);
        return;
    }
    if (!node.is_object()) return;
    auto type_it = node.find("type");
    if (type_it != node.end() && type_it->is_string()) {
        const std::string type = type_it->get<std::string>();
        if (!is_supported_node_type(type)) {
            warnings.push_back(module_id + ": skipped unsupported node type '" + type +
                               "' at " + std::to_string(node_line(node)) + ":" +
                               std::to_string(node_col(node)));
            return;
        }
    }
    for (const auto& [key, value] : node.items()) {
        (void)key;
        check_node_types(value, module_id, warnings);
    }
}

struct RequireSite {
    std::string specifier;  // literal text; empty when non-literal
    bool literal = false;
    int line = 0;
    int col = 0;
};

// Collects require(...) call sites in source order, honoring the same
// pruning as check_node_types.
void collect_require_sites(const json& node, std::vector<RequireSite>& out) {
    if (node.is_array()) {
        for (const auto& child : node) collect_require_sites(child, out);
        return;
    }
    if (!node.is_object()) return;
    auto type_it = node.find("type");
    if (type_it != node.end() && type_it->is_string() &&
        !is_supported_node_type(type_it->get<std::string>())) {
        return;
    }
    if (type_it != node.end() && *type_it == "CallExpression") {
        const auto& callee = node.value("callee", json());
        if (callee.is_object() && callee.value("type", "") == "Identifier" &&
            callee.value("name", "") == "require") {
            RequireSite site;
            site.line = node_line(node);
            site.col = node_col(node);
            const auto& args = node.value("arguments", json::array());
            if (!args.empty() && args[0].is_object() && args[0].value("type", "") == "Literal" &&
                args[0].contains("value") && args[0]["value"].is_string()) {
                site.literal = true;
                site.specifier = args[0]["value"].get<std::string>();
            }
            out.push_back(std::move(site));
        }
    }
    for (const auto& [key, value] : node.items()) {
        (void)key;
        collect_require_sites(value, out);
    }
}

std::string module_basename(const std::string& id) {
    auto slash = id.find_last_of('/');
    std::string base = slash == std::string::npos ? id : id.substr(slash + 1);
    if (base.size() > 3 && base.ends_with(".js")) base.resize(base.size() - 3);
    return base;
}

std::string normalize_relative(const std::string& importer, const std::string& spec) {
    std::filesystem::path dir = std::filesystem::path(importer).parent_path();
    return (dir / spec).lexically_normal().generic_string();
}

}  // namespace

bool is_supported_node_type(const std::string& type) {
    return std::find(kSupportedTypes.begin(), kSupportedTypes.end(), type) !=
           kSupportedTypes.end();
}

ModuleKind module_kind_from_string(const std::string& s) {
    if (s == "app") return ModuleKind::app;
    if (s == "dependency") return ModuleKind::dependency;
    if (s == "builtin-js") return ModuleKind::builtin_js;
    throw InputError("unknown module kind: " + s);
}

std::string to_string(ModuleKind k) {
    switch (k) {
        case ModuleKind::app: return "app";
        case ModuleKind::dependency: return "dependency";
        case ModuleKind::builtin_js: return "builtin-js";
    }
    return "app";
}

const SourceModule* ModuleGraph::find(const std::string& id) const {
    for (const auto& m : modules) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

namespace {

ModuleGraph assemble_graph(ModuleGraph graph) {
    // Node-type validation, in manifest order.
    for (const auto& module : graph.modules) {
        if (!module.ast.is_object() || module.ast.value("type", "") != "Program") {
            throw InputError("module " + module.id + ": AST root must be a Program node");
        }
        check_node_types(module.ast, module.id, graph.warnings);
    }

    std::set<std::string> local_ids;
    std::map<std::string, int> basename_count;
    std::map<std::string, std::string> basename_to_id;
    for (const auto& m : graph.modules) {
        local_ids.insert(m.id);
        std::string base = module_basename(m.id);
        basename_count[base] += 1;
        basename_to_id[base] = m.id;
    }
    const std::set<std::string> builtins(graph.builtin_names.begin(), graph.builtin_names.end());

    // Require resolution, per module in id order so edges come out sorted.
    std::vector<std::string> ids;
    ids.reserve(graph.modules.size());
    for (const auto& m : graph.modules) ids.push_back(m.id);
    std::sort(ids.begin(), ids.end());

    for (const auto& id : ids) {
        const SourceModule* module = graph.find(id);
        std::vector<RequireSite> sites;
        collect_require_sites(module->ast, sites);
        std::stable_sort(sites.begin(), sites.end(), [](const auto& a, const auto& b) {
            return std::tie(a.line, a.col) < std::tie(b.line, b.col);
        });
        for (const auto& site : sites) {
            RequireEdge edge;
            edge.importer = id;
            edge.line = site.line;
            edge.col = site.col;
            if (!site.literal) {
                edge.specifier = "<dynamic>";
                edge.kind = ResolutionKind::unresolved;
                graph.warnings.push_back(id + ": non-literal require specifier at " +
                                         std::to_string(site.line) + ":" +
                                         std::to_string(site.col));
            } else {
                edge.specifier = site.specifier;
                if (site.specifier.starts_with("./") || site.specifier.starts_with("../")) {
                    std::string base = normalize_relative(id, site.specifier);
                    std::string hit;
                    for (const std::string& candidate :
                         {base, base + ".js", base + "/index.js"}) {
                        if (local_ids.count(candidate)) {
                            hit = candidate;
                            break;
                        }
                    }
                    if (!hit.empty()) {
                        edge.kind = ResolutionKind::local;
                        edge.target = hit;
                    } else {
                        edge.kind = ResolutionKind::unresolved;
                        graph.warnings.push_back(id + ": unresolvable require '" +
                                                 site.specifier + "'");
                    }
                } else if (builtins.count(site.specifier)) {
                    edge.kind = ResolutionKind::builtin;
                    edge.target = site.specifier;
                } else if (basename_count[site.specifier] == 1) {
                    // Bare specifier naming a corpus module by basename
                    // (the manifest enumerates dependencies explicitly,
                    // so this stands in for node_modules lookup).
                    edge.kind = ResolutionKind::local;
                    edge.target = basename_to_id[site.specifier];
                } else {
                    edge.kind = ResolutionKind::unresolved;
                    graph.warnings.push_back(id + ": unresolvable require '" + site.specifier +
                                             "'");
                }
            }
            graph.edges.push_back(std::move(edge));
        }
    }

    if (!graph.entry.empty()) {
        const SourceModule* entry = graph.find(graph.entry);
        if (entry == nullptr) {
            throw InputError("entry module not in corpus: " + graph.entry);
        }
        if (entry->kind != ModuleKind::app) {
            throw InputError("entry module must have kind 'app': " + graph.entry);
        }
    }
    return graph;
}

}  // namespace

ModuleGraph load_corpus(const std::filesystem::path& manifest_path) {
    const json manifest = load_json_file(manifest_path);
    if (!manifest.is_object() || !manifest.contains("modules")) {
        throw InputError("manifest missing 'modules': " + manifest_path.string());
    }
    ModuleGraph graph;
    graph.entry = manifest.value("entry", "");
    for (const auto& name : manifest.value("builtin_names", json::array())) {
        graph.builtin_names.push_back(name.get<std::string>());
    }
    const auto base_dir = manifest_path.parent_path();
    std::set<std::string> seen;
    for (const auto& entry : manifest["modules"]) {
        SourceModule module;
        module.id = entry.value("id", "");
        if (module.id.empty()) throw InputError("module entry without id in manifest");
        if (!seen.insert(module.id).second) {
            throw InputError("duplicate module id: " + module.id);
        }
        module.kind = module_kind_from_string(entry.value("kind", "app"));
        module.ast = load_json_file(base_dir / entry.value("ast_file", ""));
        graph.modules.push_back(std::move(module));
    }
    return assemble_graph(std::move(graph));
}

json module_graph_to_json(const ModuleGraph& graph) {
    json doc;
    doc["entry"] = graph.entry;
    doc["builtin_names"] = graph.builtin_names;
    json modules = json::array();
    for (const auto& m : graph.modules) {
        modules.push_back({{"id", m.id}, {"kind", to_string(m.kind)}, {"ast", m.ast}});
    }
    doc["modules"] = std::move(modules);
    return doc;
}

ModuleGraph module_graph_from_json(const json& doc) {
    ModuleGraph graph;
    graph.entry = doc.value("entry", "");
    for (const auto& name : doc.value("builtin_names", json::array())) {
        graph.builtin_names.push_back(name.get<std::string>());
    }
    std::set<std::string> seen;
    for (const auto& entry : doc.value("modules", json::array())) {
        SourceModule module;
        module.id = entry.value("id", "");
        if (module.id.empty() || !seen.insert(module.id).second) {
            throw InputError("bad or duplicate module id in bundle");
        }
        module.kind = module_kind_from_string(entry.value("kind", "app"));
        module.ast = entry.value("ast", json());
        graph.modules.push_back(std::move(module));
    }
    return assemble_graph(std::move(graph));
}

bool operator==(const RequireEdge& a, const RequireEdge& b) {
    return a.importer == b.importer && a.specifier == b.specifier && a.kind == b.kind &&
           a.target == b.target && a.line == b.line && a.col == b.col;
}

bool operator==(const SourceModule& a, const SourceModule& b) {
    return a.id == b.id && a.kind == b.kind && a.ast == b.ast;
}

bool operator==(const ModuleGraph& a, const ModuleGraph& b) {
    return a.modules == b.modules && a.edges == b.edges && a.entry == b.entry &&
           a.builtin_names == b.builtin_names && a.warnings == b.warnings;
}

const RegistryEntry* BuiltinRegistry::find(const std::string& owner,
                                           const std::string& method) const {
    for (const auto& e : entries) {
        if (e.owner == owner && e.method == method) return &e;
    }
    return nullptr;
}

bool BuiltinRegistry::is_global_owner(
    const std::string& owner, const std::vector<std::string>& builtin_module_names) const {
    return std::find(builtin_module_names.begin(), builtin_module_names.end(), owner) ==
           builtin_module_names.end();
}

BuiltinRegistry load_registry(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    if (!doc.is_array()) {
        throw InputError("registry must be a JSON array: " + path.string());
    }
    BuiltinRegistry registry;
    std::set<std::pair<std::string, std::string>> seen;
    int index = 0;
    for (const auto& raw : doc) {
        RegistryEntry entry;
        entry.owner = raw.value("owner", "");
        entry.method = raw.value("method", "");
        if (entry.owner.empty() || entry.method.empty()) {
            throw InputError("registry entry " + std::to_string(index) +
                             ": owner and method are required");
        }
        if (!seen.insert({entry.owner, entry.method}).second) {
            throw InputError("registry entry " + std::to_string(index) + ": duplicate (" +
                             entry.owner + ", " + entry.method + ")");
        }
        for (const auto& pos : raw.value("callback_args", json::array())) {
            if (pos.is_string()) {
                if (pos.get<std::string>() != "LAST") {
                    throw InputError("registry entry " + std::to_string(index) +
                                     ": unknown position marker '" + pos.get<std::string>() +
                                     "'");
                }
                entry.callback_args.push_back(kLastArg);
            } else if (pos.is_number_integer()) {
                int v = pos.get<int>();
                if (v < 0) {
                    throw InputError("registry entry " + std::to_string(index) +
                                     ": negative callback position");
                }
                entry.callback_args.push_back(v);
            } else {
                throw InputError("registry entry " + std::to_string(index) +
                                 ": callback position must be an index or \"LAST\"");
            }
        }
        entry.creates_function = raw.value("creates_function", false);
        registry.entries.push_back(std::move(entry));
        ++index;
    }
    return registry;
}

}  // namespace surface::corpus
