#include "surface/js_callgraph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace surface::jscg {

std::string to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::static_: return "static";
        case EdgeKind::builtin_pattern: return "builtin-pattern";
        case EdgeKind::dynamic: return "dynamic";
    }
    return "static";
}

EdgeKind edge_kind_from_string(const std::string& s) {
    if (s == "static") return EdgeKind::static_;
    if (s == "builtin-pattern") return EdgeKind::builtin_pattern;
    if (s == "dynamic") return EdgeKind::dynamic;
    throw InputError("unknown edge kind: " + s);
}

bool CallGraph::has_edge(const FunctionId& caller, const FunctionId& callee) const {
    return std::any_of(edges.begin(), edges.end(), [&](const CallEdge& e) {
        return e.caller == caller && e.callee == callee;
    });
}

namespace {

// Accessor that never copies: analyses key node identity by address, so
// every descent must stay inside the original tree.
const json& child(const json& n, const char* key) {
    static const json null_node;
    if (!n.is_object()) return null_node;
    auto it = n.find(key);
    return it == n.end() ? null_node : *it;
}

bool is_function_node(const json& n) {
    if (!n.is_object()) return false;
    const std::string t = n.value("type", "");
    return t == "FunctionDeclaration" || t == "FunctionExpression" ||
           t == "ArrowFunctionExpression";
}

int node_line(const json& n) {
    auto it = n.find("line");
    return it != n.end() && it->is_number_integer() ? it->get<int>() : 0;
}

int node_col(const json& n) {
    auto it = n.find("column");
    return it != n.end() && it->is_number_integer() ? it->get<int>() : 0;
}

std::string static_property_name(const json& key, bool computed) {
    if (!key.is_object()) return "";
    const std::string t = key.value("type", "");
    if (!computed && t == "Identifier") return key.value("name", "");
    if (t == "Literal" && key.contains("value") && key["value"].is_string()) {
        return key["value"].get<std::string>();
    }
    return "";
}

std::optional<std::string> string_literal(const json& n) {
    if (n.is_object() && n.value("type", "") == "Literal" && n.contains("value") &&
        n["value"].is_string()) {
        return n["value"].get<std::string>();
    }
    return std::nullopt;
}

// Abstract values flowing through the corpus during the field-based fixpoint.
struct Value {
    enum class Kind {
        fn,              // function, index into the function table
        bound_fn,        // function produced by a creates_function method
        module_obj,      // the `module` object of module `a`
        module_ns,       // exports namespace of local module `a`
        builtin_module,  // require()'d builtin module named `a`
        builtin_member,  // method `b` of builtin module `a`
        binding_module,  // internalBinding(`a`) result
        binding_member,  // method `b` of binding module `a`
    };
    Kind kind;
    int fn = -1;
    std::string a;
    std::string b;

    auto operator<=>(const Value&) const = default;
};

using ValueSet = std::set<Value>;

bool is_module_like(const Value& v) {
    switch (v.kind) {
        case Value::Kind::module_obj:
        case Value::Kind::module_ns:
        case Value::Kind::builtin_module:
        case Value::Kind::binding_module:
            return true;
        default:
            return false;
    }
}

struct FunctionInfo {
    FunctionId id;
    const json* node = nullptr;  // Program node for "<top>"
    int parent = -1;
    std::string module;
    std::set<std::string> declared;  // params, vars, function declarations
};

struct Analyzer {
    const corpus::ModuleGraph& graph;
    const corpus::BuiltinRegistry& registry;

    std::vector<FunctionInfo> functions;
    std::map<const json*, int> node_to_fn;
    std::map<std::string, int> top_of_module;
    std::map<const json*, std::string> name_hints;

    std::vector<std::map<std::string, ValueSet>> bindings;  // per function
    std::map<std::string, ValueSet> props;                  // field-based, by name
    std::map<std::pair<std::string, std::string>, ValueSet> export_props;
    std::map<std::string, ValueSet> default_exports;

    std::map<std::tuple<std::string, int, int>, const corpus::RequireEdge*> require_sites;

    bool changed = false;
    CallGraph result;

    Analyzer(const corpus::ModuleGraph& g, const corpus::BuiltinRegistry& r)
        : graph(g), registry(r) {}

    // ---- discovery -------------------------------------------------

    void collect_name_hints(const json& n) {
        if (n.is_array()) {
            for (const auto& c : n) collect_name_hints(c);
            return;
        }
        if (!n.is_object()) return;
        const std::string t = n.value("type", "");
        if (!t.empty() && !corpus::is_supported_node_type(t)) return;
        if (t == "VariableDeclarator") {
            const json& id = child(n, "id");
            const json& init = child(n, "init");
            if (id.value("type", "") == "Identifier" && is_function_node(init)) {
                name_hints[&init] = id.value("name", "");
            }
        }
        for (const auto& item : n.items()) collect_name_hints(item.value());
    }

    int register_function(const json* node, int parent, const std::string& module,
                          const std::string& name) {
        FunctionInfo info;
        info.node = node;
        info.parent = parent;
        info.module = module;
        std::string path = parent < 0 ? "<top>" : functions[parent].id.path + "/" + name;
        bool taken = std::any_of(functions.begin(), functions.end(), [&](const auto& f) {
            return f.module == module && f.id.path == path;
        });
        if (taken) {
            path += "@" + std::to_string(node_line(*node)) + ":" +
                    std::to_string(node_col(*node));
        }
        info.id = FunctionId{module, path};
        functions.push_back(std::move(info));
        bindings.emplace_back();
        int idx = static_cast<int>(functions.size()) - 1;
        node_to_fn[node] = idx;
        return idx;
    }

    std::string function_name(const json& n) {
        auto hint = name_hints.find(&n);
        if (hint != name_hints.end() && !hint->second.empty()) return hint->second;
        const json& id = child(n, "id");
        if (id.value("type", "") == "Identifier") return id.value("name", "");
        return "anon@" + std::to_string(node_line(n)) + ":" + std::to_string(node_col(n));
    }

    void discover(const json& n, int fidx, const std::string& module) {
        if (n.is_array()) {
            for (const auto& c : n) discover(c, fidx, module);
            return;
        }
        if (!n.is_object()) return;
        const std::string t = n.value("type", "");
        if (!t.empty() && !corpus::is_supported_node_type(t)) return;
        if (is_function_node(n)) {
            std::string name = function_name(n);
            if (t == "FunctionDeclaration" && !name.empty()) {
                functions[fidx].declared.insert(name);
            }
            int inner = register_function(&n, fidx, module, name);
            for (const auto& p : child(n, "params")) {
                if (p.is_object() && p.value("type", "") == "Identifier") {
                    functions[inner].declared.insert(p.value("name", ""));
                }
            }
            discover(child(n, "body"), inner, module);
            return;
        }
        if (t == "VariableDeclarator") {
            const json& id = child(n, "id");
            if (id.value("type", "") == "Identifier") {
                functions[fidx].declared.insert(id.value("name", ""));
            }
        }
        for (const auto& item : n.items()) discover(item.value(), fidx, module);
    }

    // Visits the nodes belonging to one function, pruning nested function
    // bodies and unsupported subtrees. Nested function headers are still
    // passed to `fn` so declarations stay visible.
    template <typename F>
    void walk_own(const json& n, const json* self, F&& fn) {
        if (n.is_array()) {
            for (const auto& c : n) walk_own(c, self, fn);
            return;
        }
        if (!n.is_object()) return;
        const std::string t = n.value("type", "");
        if (!t.empty() && !corpus::is_supported_node_type(t)) return;
        if (is_function_node(n) && &n != self) {
            fn(n);
            return;
        }
        fn(n);
        for (const auto& item : n.items()) walk_own(item.value(), self, fn);
    }

    int resolve_scope(int fidx, const std::string& name) const {
        for (int f = fidx; f >= 0; f = functions[f].parent) {
            if (functions[f].declared.count(name)) return f;
        }
        return -1;
    }

    void declare_implicit_globals() {
        for (std::size_t f = 0; f < functions.size(); ++f) {
            walk_own(*functions[f].node, functions[f].node, [&](const json& n) {
                if (n.value("type", "") != "AssignmentExpression") return;
                const json& left = child(n, "left");
                if (left.value("type", "") != "Identifier") return;
                const std::string name = left.value("name", "");
                if (name.empty() || name == "exports" || name == "module") return;
                if (resolve_scope(static_cast<int>(f), name) < 0) {
                    int top = top_of_module.at(functions[f].module);
                    functions[top].declared.insert(name);
                }
            });
        }
    }

    // ---- flow ------------------------------------------------------

    void add_values(ValueSet& dst, const ValueSet& src) {
        for (const auto& v : src) {
            if (dst.insert(v).second) changed = true;
        }
    }

    ValueSet require_value(const json& call, const std::string& module) const {
        auto it = require_sites.find({module, node_line(call), node_col(call)});
        if (it == require_sites.end()) return {};
        const corpus::RequireEdge& edge = *it->second;
        if (edge.kind == corpus::ResolutionKind::local) {
            return {Value{Value::Kind::module_ns, -1, edge.target, ""}};
        }
        if (edge.kind == corpus::ResolutionKind::builtin) {
            return {Value{Value::Kind::builtin_module, -1, edge.target, ""}};
        }
        return {};
    }

    ValueSet eval(const json& n, int fidx) {
        if (!n.is_object()) return {};
        const std::string t = n.value("type", "");
        const std::string& module = functions[fidx].module;
        if (is_function_node(n)) {
            auto it = node_to_fn.find(&n);
            if (it == node_to_fn.end()) return {};
            return {Value{Value::Kind::fn, it->second, "", ""}};
        }
        if (t == "Identifier") {
            const std::string name = n.value("name", "");
            int scope = resolve_scope(fidx, name);
            if (scope >= 0) {
                auto it = bindings[scope].find(name);
                return it == bindings[scope].end() ? ValueSet{} : it->second;
            }
            if (name == "module") return {Value{Value::Kind::module_obj, -1, module, ""}};
            if (name == "exports") return {Value{Value::Kind::module_ns, -1, module, ""}};
            return {};
        }
        if (t == "MemberExpression") {
            const std::string prop =
                static_property_name(child(n, "property"), n.value("computed", false));
            if (prop.empty()) return {};
            ValueSet receiver = eval(child(n, "object"), fidx);
            ValueSet out;
            bool saw_module_like = false;
            for (const auto& v : receiver) {
                if (is_module_like(v)) saw_module_like = true;
                switch (v.kind) {
                    case Value::Kind::module_obj:
                        if (prop == "exports") {
                            out.insert(Value{Value::Kind::module_ns, -1, v.a, ""});
                        }
                        break;
                    case Value::Kind::module_ns: {
                        auto it = export_props.find({v.a, prop});
                        if (it != export_props.end()) {
                            out.insert(it->second.begin(), it->second.end());
                        }
                        break;
                    }
                    case Value::Kind::builtin_module:
                        out.insert(Value{Value::Kind::builtin_member, -1, v.a, prop});
                        break;
                    case Value::Kind::binding_module:
                        out.insert(Value{Value::Kind::binding_member, -1, v.a, prop});
                        break;
                    default:
                        break;
                }
            }
            if (!saw_module_like) {
                auto it = props.find(prop);
                if (it != props.end()) out.insert(it->second.begin(), it->second.end());
            }
            return out;
        }
        if (t == "CallExpression") {
            const json& callee = child(n, "callee");
            if (callee.value("type", "") == "Identifier") {
                const std::string name = callee.value("name", "");
                if (resolve_scope(fidx, name) < 0) {
                    if (name == "require") return require_value(n, module);
                    if (name == "internalBinding") {
                        const json& args = child(n, "arguments");
                        if (args.is_array() && !args.empty()) {
                            if (auto lit = string_literal(args[0])) {
                                return {Value{Value::Kind::binding_module, -1, *lit, ""}};
                            }
                        }
                        return {};
                    }
                }
            }
            // creates_function registry methods: `f.bind(...)` yields a
            // callable modeled as the original function.
            if (callee.value("type", "") == "MemberExpression") {
                const std::string prop = static_property_name(child(callee, "property"),
                                                              callee.value("computed", false));
                if (!prop.empty()) {
                    for (const auto& entry : registry.entries) {
                        if (entry.method != prop || !entry.creates_function) continue;
                        if (!registry.is_global_owner(entry.owner, graph.builtin_names)) {
                            continue;
                        }
                        ValueSet receiver = eval(child(callee, "object"), fidx);
                        ValueSet out;
                        for (const auto& v : receiver) {
                            if (v.kind == Value::Kind::fn || v.kind == Value::Kind::bound_fn) {
                                out.insert(Value{Value::Kind::bound_fn, v.fn, "", ""});
                            }
                        }
                        return out;
                    }
                }
            }
            return {};
        }
        if (t == "AssignmentExpression") {
            return eval(child(n, "right"), fidx);
        }
        if (t == "ConditionalExpression") {
            ValueSet out = eval(child(n, "consequent"), fidx);
            ValueSet alt = eval(child(n, "alternate"), fidx);
            out.insert(alt.begin(), alt.end());
            return out;
        }
        return {};
    }

    void flow_export_object_literal(const std::string& module, const json& rhs, int fidx) {
        if (rhs.value("type", "") != "ObjectExpression") return;
        for (const auto& p : child(rhs, "properties")) {
            if (!p.is_object() || p.value("type", "") != "Property") continue;
            const std::string key =
                static_property_name(child(p, "key"), p.value("computed", false));
            if (key.empty()) continue;
            add_values(export_props[{module, key}], eval(child(p, "value"), fidx));
        }
    }

    void flow_assignment(const json& n, int fidx) {
        const std::string& module = functions[fidx].module;
        const json& left = child(n, "left");
        const json& right = child(n, "right");
        if (left.value("type", "") == "Identifier") {
            const std::string name = left.value("name", "");
            int scope = resolve_scope(fidx, name);
            if (scope >= 0) {
                add_values(bindings[scope][name], eval(right, fidx));
            } else if (name == "exports") {
                // `exports = ...` rebinds the alias; treat like
                // `module.exports = ...`.
                add_values(default_exports[module], eval(right, fidx));
                flow_export_object_literal(module, right, fidx);
            }
            return;
        }
        if (left.value("type", "") == "MemberExpression") {
            const std::string prop =
                static_property_name(child(left, "property"), left.value("computed", false));
            if (prop.empty()) return;
            ValueSet receiver = eval(child(left, "object"), fidx);
            bool wrote_module_target = false;
            for (const auto& v : receiver) {
                if (v.kind == Value::Kind::module_obj && prop == "exports") {
                    add_values(default_exports[v.a], eval(right, fidx));
                    flow_export_object_literal(v.a, right, fidx);
                    wrote_module_target = true;
                } else if (v.kind == Value::Kind::module_ns) {
                    add_values(export_props[{v.a, prop}], eval(right, fidx));
                    wrote_module_target = true;
                }
            }
            if (!wrote_module_target) {
                add_values(props[prop], eval(right, fidx));
            }
        }
    }

    void flow_pass() {
        for (std::size_t f = 0; f < functions.size(); ++f) {
            int fidx = static_cast<int>(f);
            walk_own(*functions[f].node, functions[f].node, [&](const json& n) {
                const std::string t = n.value("type", "");
                if (t == "FunctionDeclaration" && &n != functions[f].node) {
                    auto it = node_to_fn.find(&n);
                    const json& id = child(n, "id");
                    if (it != node_to_fn.end() && id.is_object()) {
                        add_values(bindings[fidx][id.value("name", "")],
                                   {Value{Value::Kind::fn, it->second, "", ""}});
                    }
                } else if (t == "VariableDeclarator") {
                    const json& id = child(n, "id");
                    const json& init = child(n, "init");
                    if (id.value("type", "") == "Identifier" && !init.is_null()) {
                        add_values(bindings[fidx][id.value("name", "")], eval(init, fidx));
                    }
                } else if (t == "AssignmentExpression") {
                    flow_assignment(n, fidx);
                } else if (t == "ObjectExpression") {
                    for (const auto& p : child(n, "properties")) {
                        if (!p.is_object() || p.value("type", "") != "Property") continue;
                        const std::string key =
                            static_property_name(child(p, "key"), p.value("computed", false));
                        if (key.empty()) continue;
                        add_values(props[key], eval(child(p, "value"), fidx));
                    }
                }
            });
        }
    }

    // ---- result extraction ----------------------------------------

    ArgInfo arg_info(const json& arg, int fidx) {
        ArgInfo info;
        if (is_function_node(arg)) {
            auto it = node_to_fn.find(&arg);
            if (it != node_to_fn.end()) {
                info.kind = ArgInfo::Kind::function;
                info.function = functions[it->second].id;
            }
            return info;
        }
        if (auto lit = string_literal(arg)) {
            info.kind = ArgInfo::Kind::literal;
            info.literal = *lit;
            return info;
        }
        if (arg.is_object() && arg.value("type", "") == "Identifier") {
            // One level of variable binding: accepted only if the
            // declaring function binds the name exactly once, to a
            // function expression.
            const std::string name = arg.value("name", "");
            int scope = resolve_scope(fidx, name);
            if (scope < 0) return info;
            int occurrences = 0;
            const json* bound = nullptr;
            const FunctionInfo& owner = functions[static_cast<std::size_t>(scope)];
            for (const auto& p : child(*owner.node, "params")) {
                if (p.is_object() && p.value("name", "") == name) ++occurrences;
            }
            walk_own(*owner.node, owner.node, [&](const json& n) {
                const std::string t = n.value("type", "");
                if (t == "FunctionDeclaration" && &n != owner.node) {
                    const json& id = child(n, "id");
                    if (id.value("name", "") == name) {
                        ++occurrences;
                        bound = &n;
                    }
                } else if (t == "VariableDeclarator") {
                    const json& id = child(n, "id");
                    const json& init = child(n, "init");
                    if (id.value("type", "") == "Identifier" && id.value("name", "") == name &&
                        !init.is_null()) {
                        ++occurrences;
                        if (is_function_node(init)) bound = &init;
                    }
                } else if (t == "AssignmentExpression") {
                    const json& left = child(n, "left");
                    const json& right = child(n, "right");
                    if (left.value("type", "") == "Identifier" &&
                        left.value("name", "") == name) {
                        ++occurrences;
                        if (is_function_node(right)) bound = &right;
                    }
                }
            });
            if (occurrences == 1 && bound != nullptr) {
                auto it = node_to_fn.find(bound);
                if (it != node_to_fn.end()) {
                    info.kind = ArgInfo::Kind::function;
                    info.function = functions[it->second].id;
                }
            }
        }
        return info;
    }

    std::vector<ArgInfo> arg_infos(const json& call, int fidx) {
        std::vector<ArgInfo> out;
        for (const auto& a : child(call, "arguments")) {
            out.push_back(arg_info(a, fidx));
        }
        return out;
    }

    void record_call(const json& n, int fidx, bool is_new) {
        const std::string& module = functions[fidx].module;
        const FunctionId caller = functions[fidx].id;
        const CallSite site{module, node_line(n), node_col(n)};
        const json& callee = child(n, "callee");
        if (!callee.is_object()) return;

        if (!is_new && callee.value("type", "") == "Identifier") {
            const std::string name = callee.value("name", "");
            if (resolve_scope(fidx, name) < 0 &&
                (name == "require" || name == "internalBinding")) {
                if (name == "internalBinding") {
                    const json& args = child(n, "arguments");
                    if (!args.is_array() || args.empty() || !string_literal(args[0])) {
                        result.warnings.push_back(
                            module + ": non-literal internalBinding argument at " + site.str());
                    }
                }
                return;  // module linkage, not a call edge
            }
        }

        bool resolved = false;
        for (const auto& v : eval(callee, fidx)) {
            switch (v.kind) {
                case Value::Kind::fn:
                    result.edges.insert({site, caller, functions[v.fn].id, EdgeKind::static_});
                    resolved = true;
                    break;
                case Value::Kind::bound_fn:
                    result.edges.insert(
                        {site, caller, functions[v.fn].id, EdgeKind::builtin_pattern});
                    resolved = true;
                    break;
                case Value::Kind::module_ns: {
                    auto it = default_exports.find(v.a);
                    if (it == default_exports.end()) break;
                    for (const auto& target : it->second) {
                        if (target.kind == Value::Kind::fn) {
                            result.edges.insert(
                                {site, caller, functions[target.fn].id, EdgeKind::static_});
                            resolved = true;
                        } else if (target.kind == Value::Kind::bound_fn) {
                            result.edges.insert({site, caller, functions[target.fn].id,
                                                 EdgeKind::builtin_pattern});
                            resolved = true;
                        }
                    }
                    break;
                }
                case Value::Kind::builtin_member:
                    result.builtin_calls.insert({site, caller, v.a, v.b, arg_infos(n, fidx)});
                    resolved = true;
                    break;
                case Value::Kind::binding_member:
                    result.binding_calls.insert({site, caller, v.a, v.b, arg_infos(n, fidx)});
                    resolved = true;
                    break;
                default:
                    break;
            }
        }

        bool pattern_recorded = false;
        if (is_new) {
            if (callee.value("type", "") == "Identifier" &&
                resolve_scope(fidx, callee.value("name", "")) < 0) {
                result.pattern_calls.insert(
                    {site, caller, callee.value("name", ""), "new", arg_infos(n, fidx)});
                pattern_recorded = true;
            }
        } else if (callee.value("type", "") == "MemberExpression") {
            const std::string prop =
                static_property_name(child(callee, "property"), callee.value("computed", false));
            if (!prop.empty()) {
                ValueSet receiver = eval(child(callee, "object"), fidx);
                bool module_like =
                    std::any_of(receiver.begin(), receiver.end(), is_module_like);
                if (!module_like) {
                    result.pattern_calls.insert({site, caller, "", prop, arg_infos(n, fidx)});
                    pattern_recorded = true;
                }
            }
        }

        if (!resolved && !pattern_recorded) result.unresolved_calls += 1;
    }

    void extract() {
        for (const auto& f : functions) result.nodes.insert(f.id);
        for (std::size_t f = 0; f < functions.size(); ++f) {
            walk_own(*functions[f].node, functions[f].node, [&](const json& n) {
                const std::string t = n.value("type", "");
                if (t == "CallExpression") record_call(n, static_cast<int>(f), false);
                if (t == "NewExpression") record_call(n, static_cast<int>(f), true);
            });
        }
        for (const auto& [key, vals] : export_props) {
            for (const auto& v : vals) {
                if (v.kind == Value::Kind::fn || v.kind == Value::Kind::bound_fn) {
                    result.exports.insert({key.first, key.second, functions[v.fn].id});
                }
            }
        }
        for (const auto& [module, vals] : default_exports) {
            for (const auto& v : vals) {
                if (v.kind == Value::Kind::fn || v.kind == Value::Kind::bound_fn) {
                    result.default_exports.insert({module, "<default>", functions[v.fn].id});
                }
            }
        }
    }

    CallGraph run() {
        for (const auto& edge : graph.edges) {
            require_sites[{edge.importer, edge.line, edge.col}] = &edge;
        }
        for (const auto& module : graph.modules) collect_name_hints(module.ast);
        for (const auto& module : graph.modules) {
            int top = register_function(&module.ast, -1, module.id, "<top>");
            top_of_module[module.id] = top;
            discover(child(module.ast, "body"), top, module.id);
        }
        declare_implicit_globals();
        do {
            changed = false;
            flow_pass();
        } while (changed);
        extract();
        return std::move(result);
    }
};

std::string first_token(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_first_of(" \t", begin);
    return s.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

json function_id_to_json(const FunctionId& f) {
    return {{"module", f.module}, {"path", f.path}};
}

FunctionId function_id_from_json(const json& j) {
    return {j.value("module", ""), j.value("path", "")};
}

json site_to_json(const CallSite& s) {
    return {{"module", s.module}, {"line", s.line}, {"col", s.col}};
}

CallSite site_from_json(const json& j) {
    return {j.value("module", ""), j.value("line", 0), j.value("col", 0)};
}

json args_to_json(const std::vector<ArgInfo>& args) {
    json out = json::array();
    for (const auto& a : args) {
        switch (a.kind) {
            case ArgInfo::Kind::none:
                out.push_back({{"kind", "none"}});
                break;
            case ArgInfo::Kind::function:
                out.push_back({{"kind", "function"},
                               {"module", a.function.module},
                               {"path", a.function.path}});
                break;
            case ArgInfo::Kind::literal:
                out.push_back({{"kind", "literal"}, {"value", a.literal}});
                break;
        }
    }
    return out;
}

std::vector<ArgInfo> args_from_json(const json& j) {
    std::vector<ArgInfo> out;
    for (const auto& a : j) {
        ArgInfo info;
        const std::string kind = a.value("kind", "none");
        if (kind == "function") {
            info.kind = ArgInfo::Kind::function;
            info.function = {a.value("module", ""), a.value("path", "")};
        } else if (kind == "literal") {
            info.kind = ArgInfo::Kind::literal;
            info.literal = a.value("value", "");
        }
        out.push_back(std::move(info));
    }
    return out;
}

}  // namespace

CallGraph build_static_cg(const corpus::ModuleGraph& graph,
                          const corpus::BuiltinRegistry& registry) {
    Analyzer analyzer(graph, registry);
    CallGraph cg = analyzer.run();
    return annotate_builtin_edges(cg, registry, graph.builtin_names);
}

CallGraph annotate_builtin_edges(const CallGraph& cg, const corpus::BuiltinRegistry& registry,
                                 const std::vector<std::string>& builtin_module_names) {
    CallGraph out = cg;
    auto apply = [&](const CallSite& site, const FunctionId& caller,
                     const std::vector<ArgInfo>& args, const corpus::RegistryEntry& entry) {
        for (int pos : entry.callback_args) {
            int index = pos == corpus::kLastArg ? static_cast<int>(args.size()) - 1 : pos;
            if (index < 0 || index >= static_cast<int>(args.size())) continue;
            const ArgInfo& arg = args[static_cast<std::size_t>(index)];
            if (arg.kind == ArgInfo::Kind::function) {
                out.nodes.insert(arg.function);
                out.edges.insert({site, caller, arg.function, EdgeKind::builtin_pattern});
            } else {
                out.unresolved_callbacks += 1;
            }
        }
    };
    for (const auto& bc : cg.builtin_calls) {
        if (const auto* entry = registry.find(bc.owner, bc.method)) {
            apply(bc.site, bc.caller, bc.args, *entry);
        }
    }
    for (const auto& pc : cg.pattern_calls) {
        for (const auto& entry : registry.entries) {
            if (entry.method != pc.method) continue;
            if (!registry.is_global_owner(entry.owner, builtin_module_names)) continue;
            if (!pc.owner_hint.empty() && pc.owner_hint != entry.owner) continue;
            apply(pc.site, pc.caller, pc.args, entry);
        }
    }
    return out;
}

CallGraph merge_dynamic(const CallGraph& cg, const DynamicTrace& trace) {
    CallGraph out = cg;
    for (const auto& rec : trace.call_records) {
        out.nodes.insert(rec.caller);
        out.nodes.insert(rec.callee);
        bool present = std::any_of(out.edges.begin(), out.edges.end(), [&](const CallEdge& e) {
            return e.site == rec.site && e.caller == rec.caller && e.callee == rec.callee;
        });
        if (!present) {
            out.edges.insert({rec.site, rec.caller, rec.callee, EdgeKind::dynamic});
        }
    }
    return out;
}

DynamicTrace load_trace(const std::filesystem::path& path, const corpus::ModuleGraph& graph) {
    DynamicTrace trace;
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    auto check_module = [&](const std::string& id) {
        if (graph.find(id) == nullptr) {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": unknown module '" + id + "'");
        }
    };
    auto parse_site = [&](std::string token) -> CallSite {
        if (token.empty() || token[0] != '@') {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": expected @module:line:col, got '" + token + "'");
        }
        token.erase(0, 1);
        auto second = token.rfind(':');
        auto first =
            second == std::string::npos ? std::string::npos : token.rfind(':', second - 1);
        if (first == std::string::npos) {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": malformed site '" + token + "'");
        }
        CallSite site;
        site.module = token.substr(0, first);
        site.line = std::stoi(token.substr(first + 1, second - first - 1));
        site.col = std::stoi(token.substr(second + 1));
        check_module(site.module);
        return site;
    };
    auto parse_function = [&](const std::string& token) -> FunctionId {
        auto hash = token.find('#');
        if (hash == std::string::npos) {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": expected module#path, got '" + token + "'");
        }
        FunctionId id{token.substr(0, hash), token.substr(hash + 1)};
        check_module(id.module);
        return id;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "CALL") {
            std::string caller, site, arrow, callee;
            fields >> caller >> site >> arrow >> callee;
            if (arrow != "->" || callee.empty()) {
                throw InputError(path.string() + ":" + std::to_string(lineno) +
                                 ": malformed CALL record");
            }
            trace.call_records.push_back(
                {parse_site(site), parse_function(caller), parse_function(callee)});
        } else if (tag == "CMD") {
            std::string site;
            fields >> site;
            std::string rest;
            std::getline(fields, rest);
            if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
            trace.command_records.push_back({parse_site(site), rest});
        } else {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": unknown record tag '" + tag + "'");
        }
    }
    return trace;
}

std::vector<std::string> extract_commands(const corpus::ModuleGraph& graph, CallGraph& cg,
                                          const DynamicTrace& trace) {
    (void)graph;
    static const std::set<std::string> kExecMethods = {"exec", "execSync", "spawn",
                                                       "spawnSync"};
    std::map<CallSite, std::vector<std::string>> by_site;
    for (const auto& rec : trace.command_records) {
        by_site[rec.site].push_back(rec.command);
    }
    std::set<std::string> commands;
    for (const auto& bc : cg.builtin_calls) {
        if (bc.owner != "child_process" || !kExecMethods.count(bc.method)) continue;
        bool found = false;
        if (!bc.args.empty() && bc.args[0].kind == ArgInfo::Kind::literal) {
            std::string token = first_token(bc.args[0].literal);
            if (!token.empty()) {
                commands.insert(token);
                found = true;
            }
        }
        if (!found) {
            auto it = by_site.find(bc.site);
            if (it != by_site.end()) {
                for (const auto& cmd : it->second) {
                    std::string token = first_token(cmd);
                    if (!token.empty()) {
                        commands.insert(token);
                        found = true;
                    }
                }
            }
        }
        if (!found) {
            cg.warnings.push_back("unresolved command argument for " + bc.owner + "." +
                                  bc.method + " at " + bc.site.str());
        }
    }
    cg.commands.assign(commands.begin(), commands.end());
    return cg.commands;
}

std::set<std::pair<std::string, std::string>> reachable_builtins(const CallGraph& cg,
                                                                 const FunctionId& entry) {
    if (!cg.nodes.count(entry)) {
        throw InputError("entry function not in call graph: " + entry.str());
    }
    std::map<FunctionId, std::vector<FunctionId>> adjacency;
    for (const auto& e : cg.edges) adjacency[e.caller].push_back(e.callee);
    std::set<FunctionId> visited{entry};
    std::deque<FunctionId> queue{entry};
    while (!queue.empty()) {
        FunctionId current = queue.front();
        queue.pop_front();
        for (const auto& next : adjacency[current]) {
            if (visited.insert(next).second) queue.push_back(next);
        }
    }
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& bc : cg.builtin_calls) {
        if (visited.count(bc.caller)) out.insert({bc.owner, bc.method});
    }
    return out;
}

json call_graph_to_json(const CallGraph& cg) {
    json doc;
    json nodes = json::array();
    for (const auto& n : cg.nodes) nodes.push_back(function_id_to_json(n));
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& e : cg.edges) {
        edges.push_back({{"site", site_to_json(e.site)},
                         {"caller", function_id_to_json(e.caller)},
                         {"callee", function_id_to_json(e.callee)},
                         {"kind", to_string(e.kind)}});
    }
    doc["edges"] = std::move(edges);
    auto calls_to_json = [](const std::set<BuiltinCall>& calls) {
        json arr = json::array();
        for (const auto& c : calls) {
            arr.push_back({{"site", site_to_json(c.site)},
                           {"caller", function_id_to_json(c.caller)},
                           {"owner", c.owner},
                           {"method", c.method},
                           {"args", args_to_json(c.args)}});
        }
        return arr;
    };
    doc["builtin_calls"] = calls_to_json(cg.builtin_calls);
    doc["binding_calls"] = calls_to_json(cg.binding_calls);
    json patterns = json::array();
    for (const auto& p : cg.pattern_calls) {
        patterns.push_back({{"site", site_to_json(p.site)},
                            {"caller", function_id_to_json(p.caller)},
                            {"owner_hint", p.owner_hint},
                            {"method", p.method},
                            {"args", args_to_json(p.args)}});
    }
    doc["pattern_calls"] = std::move(patterns);
    auto exports_to_json = [](const std::set<ExportEntry>& entries) {
        json arr = json::array();
        for (const auto& e : entries) {
            arr.push_back({{"module", e.module},
                           {"method", e.method},
                           {"function", function_id_to_json(e.function)}});
        }
        return arr;
    };
    doc["exports"] = exports_to_json(cg.exports);
    doc["default_exports"] = exports_to_json(cg.default_exports);
    doc["commands"] = cg.commands;
    doc["stats"] = {{"unresolved_calls", cg.unresolved_calls},
                    {"unresolved_callbacks", cg.unresolved_callbacks}};
    doc["warnings"] = cg.warnings;
    return doc;
}

CallGraph call_graph_from_json(const json& doc) {
    CallGraph cg;
    for (const auto& n : doc.value("nodes", json::array())) {
        cg.nodes.insert(function_id_from_json(n));
    }
    for (const auto& e : doc.value("edges", json::array())) {
        cg.edges.insert({site_from_json(e.value("site", json::object())),
                         function_id_from_json(e.value("caller", json::object())),
                         function_id_from_json(e.value("callee", json::object())),
                         edge_kind_from_string(e.value("kind", "static"))});
    }
    auto calls_from_json = [](const json& arr, std::set<BuiltinCall>& out) {
        for (const auto& c : arr) {
            out.insert({site_from_json(c.value("site", json::object())),
                        function_id_from_json(c.value("caller", json::object())),
                        c.value("owner", ""), c.value("method", ""),
                        args_from_json(c.value("args", json::array()))});
        }
    };
    calls_from_json(doc.value("builtin_calls", json::array()), cg.builtin_calls);
    calls_from_json(doc.value("binding_calls", json::array()), cg.binding_calls);
    for (const auto& p : doc.value("pattern_calls", json::array())) {
        cg.pattern_calls.insert({site_from_json(p.value("site", json::object())),
                                 function_id_from_json(p.value("caller", json::object())),
                                 p.value("owner_hint", ""), p.value("method", ""),
                                 args_from_json(p.value("args", json::array()))});
    }
    auto exports_from_json = [](const json& arr, std::set<ExportEntry>& out) {
        for (const auto& e : arr) {
            out.insert({e.value("module", ""), e.value("method", ""),
                        function_id_from_json(e.value("function", json::object()))});
        }
    };
    exports_from_json(doc.value("exports", json::array()), cg.exports);
    exports_from_json(doc.value("default_exports", json::array()), cg.default_exports);
    for (const auto& c : doc.value("commands", json::array())) {
        cg.commands.push_back(c.get<std::string>());
    }
    const auto& stats = doc.value("stats", json::object());
    cg.unresolved_calls = stats.value("unresolved_calls", 0);
    cg.unresolved_callbacks = stats.value("unresolved_callbacks", 0);
    for (const auto& w : doc.value("warnings", json::array())) {
        cg.warnings.push_back(w.get<std::string>());
    }
    return cg;
}

}  // namespace surface::jscg
