#include "surface/mapping.hpp"

#include <algorithm>
#include <deque>

namespace surface::mapping {

using nir::NirStmt;
using nir::Operand;

std::string builtin_name_of(const std::string& module_id) {
    auto slash = module_id.find_last_of('/');
    std::string base = slash == std::string::npos ? module_id : module_id.substr(slash + 1);
    if (base.size() > 3 && base.ends_with(".js")) base.resize(base.size() - 3);
    return base;
}

std::map<MethodKey, std::set<MethodKey>> map_builtin(const jscg::CallGraph& builtin_cg) {
    std::map<jscg::FunctionId, std::vector<jscg::FunctionId>> adjacency;
    for (const auto& e : builtin_cg.edges) adjacency[e.caller].push_back(e.callee);

    std::map<MethodKey, std::set<MethodKey>> out;
    for (const auto& exp : builtin_cg.exports) {
        MethodKey key{builtin_name_of(exp.module), exp.method};
        out[key];  // the method exists even if it reaches no binding
        std::set<jscg::FunctionId> visited{exp.function};
        std::deque<jscg::FunctionId> queue{exp.function};
        while (!queue.empty()) {
            jscg::FunctionId current = queue.front();
            queue.pop_front();
            for (const auto& next : adjacency[current]) {
                if (visited.insert(next).second) queue.push_back(next);
            }
        }
        for (const auto& bc : builtin_cg.binding_calls) {
            if (visited.count(bc.caller)) out[key].insert({bc.owner, bc.method});
        }
    }
    return out;
}

std::map<MethodKey, std::string> map_binding(const nir::NirProgram& program) {
    std::map<MethodKey, std::string> out;
    for (const auto& b : program.bindings) {
        if (program.find(b.function) == nullptr) {
            throw InputError("binding " + b.module + "." + b.method +
                             " names missing function '" + b.function + "'");
        }
        auto [it, fresh] = out.insert({{b.module, b.method}, b.function});
        if (!fresh && it->second != b.function) {
            throw InputError("conflicting duplicate binding " + b.module + "." + b.method);
        }
    }
    return out;
}

std::map<std::string, std::set<std::string>> map_depend(
    const nir::NirProgram& program, const ncg::NativeCallGraph& cg,
    const ncg::SyscallResolution& resolution,
    const std::map<MethodKey, std::string>& m_binding) {
    (void)program;
    (void)cg;
    std::map<std::string, std::set<std::string>> out;
    for (const auto& [key, fn] : m_binding) {
        (void)key;
        auto it = resolution.by_function.find(fn);
        out[fn] = it == resolution.by_function.end() ? std::set<std::string>{} : it->second;
    }
    return out;
}

namespace {

// Resolved task targets of one submit_pool statement: a concrete fnref,
// a unique local fnref, or nothing.
std::set<std::string> task_targets(const nir::NirFunction& fn, const NirStmt& stmt) {
    if (stmt.task.kind == Operand::Kind::fnref) return {stmt.task.name};
    if (stmt.task.kind == Operand::Kind::local) {
        std::set<std::string> refs;
        nir::for_each_stmt(fn.body, [&](const NirStmt& s) {
            if (s.op == NirStmt::Op::assign && !s.dst_is_field && s.dst_name == stmt.task.name &&
                s.src.kind == Operand::Kind::fnref) {
                refs.insert(s.src.name);
            }
        });
        if (refs.size() == 1) return refs;
    }
    return {};
}

}  // namespace

PoolInfo identify_pool(const nir::NirProgram& program, const ncg::NativeCallGraph& cg,
                       const std::map<MethodKey, std::set<MethodKey>>& m_builtin,
                       const std::map<MethodKey, std::string>& m_binding, Mode mode) {
    PoolInfo info;
    for (const auto& [method, bindings] : m_builtin) {
        for (const auto& binding : bindings) {
            auto native = m_binding.find(binding);
            if (native == m_binding.end()) continue;
            std::set<std::string> reach = cg.reachable_from(native->second);
            reach.insert(native->second);
            for (const auto& g : reach) {
                const nir::NirFunction* fn = program.find(g);
                if (fn == nullptr) continue;
                nir::for_each_stmt(fn->body, [&](const NirStmt& stmt) {
                    if (stmt.op != NirStmt::Op::submit_pool) return;
                    info.pool_builtins.insert(method);
                    std::set<std::string> targets = task_targets(*fn, stmt);
                    if (targets.empty()) {
                        if (mode == Mode::strict) {
                            throw AnalysisError("unresolvable pool task in function '" + g +
                                                "' reached from " + method.first + "." +
                                                method.second);
                        }
                        info.unresolved.insert(method);
                        info.warnings.push_back("unresolvable pool task in '" + g +
                                                "' reached from " + method.first + "." +
                                                method.second +
                                                "; thread-pool set over-approximated");
                        return;
                    }
                    info.pool_tasks[method].insert(targets.begin(), targets.end());
                });
            }
        }
    }
    return info;
}

LayerMappings build_layer_mappings(const jscg::CallGraph& builtin_cg,
                                   const nir::NirProgram& program,
                                   const ncg::NativeCallGraph& cg,
                                   const ncg::SyscallResolution& resolution, Mode mode) {
    LayerMappings mappings;
    mappings.m_builtin = map_builtin(builtin_cg);
    mappings.m_binding = map_binding(program);
    mappings.m_depend = map_depend(program, cg, resolution, mappings.m_binding);
    PoolInfo pool = identify_pool(program, cg, mappings.m_builtin, mappings.m_binding, mode);
    mappings.pool_builtins = std::move(pool.pool_builtins);
    mappings.pool_tasks = std::move(pool.pool_tasks);
    mappings.unresolved_pool = std::move(pool.unresolved);
    mappings.warnings = std::move(pool.warnings);
    // Pool task functions join m_depend so composition can read their
    // transitive syscall sets.
    for (const auto& [method, tasks] : mappings.pool_tasks) {
        (void)method;
        for (const auto& task : tasks) {
            auto it = resolution.by_function.find(task);
            mappings.m_depend[task] =
                it == resolution.by_function.end() ? std::set<std::string>{} : it->second;
        }
    }
    return mappings;
}

ComposedMapping compose(const LayerMappings& mappings,
                        const std::set<std::string>& all_syscalls) {
    ComposedMapping out;
    for (const auto& [method, bindings] : mappings.m_builtin) {
        ComposedEntry entry;
        entry.uses_pool = mappings.pool_builtins.count(method) > 0;
        for (const auto& binding : bindings) {
            auto native = mappings.m_binding.find(binding);
            if (native == mappings.m_binding.end()) {
                out.dangling.push_back("builtin " + method.first + "." + method.second +
                                       " -> binding " + binding.first + "." + binding.second +
                                       ": no binding registered (binding layer)");
                continue;
            }
            auto depend = mappings.m_depend.find(native->second);
            if (depend == mappings.m_depend.end()) {
                out.dangling.push_back("binding " + binding.first + "." + binding.second +
                                       " -> native " + native->second +
                                       ": no dependency mapping (dependency layer)");
                continue;
            }
            entry.main_syscalls.insert(depend->second.begin(), depend->second.end());
        }
        auto tasks = mappings.pool_tasks.find(method);
        if (tasks != mappings.pool_tasks.end()) {
            for (const auto& task : tasks->second) {
                auto depend = mappings.m_depend.find(task);
                if (depend != mappings.m_depend.end()) {
                    entry.pool_syscalls.insert(depend->second.begin(), depend->second.end());
                }
            }
        }
        if (mappings.unresolved_pool.count(method)) {
            entry.pool_syscalls.insert(all_syscalls.begin(), all_syscalls.end());
        }
        out.entries[method] = std::move(entry);
    }
    return out;
}

std::string Witness::str() const {
    std::string s = builtin.first + "." + builtin.second + " -> " + binding.first + "." +
                    binding.second + " -> " + native;
    if (via_pool) s += " -> [pool]";
    for (const auto& fn : path) {
        if (fn != native || via_pool) s += " -> " + fn;
    }
    s += " -> " + syscall;
    return s;
}

std::optional<Witness> find_witness(const LayerMappings& mappings,
                                    const ncg::NativeCallGraph& cg,
                                    const ncg::SyscallResolution& resolution,
                                    const MethodKey& method, const std::string& syscall) {
    auto builtin = mappings.m_builtin.find(method);
    if (builtin == mappings.m_builtin.end()) return std::nullopt;

    auto succ = cg.successors();
    // Breadth-first path from `root` to a function whose own statements
    // resolve to the syscall.
    auto path_to_syscall = [&](const std::string& root) -> std::optional<std::vector<std::string>> {
        auto direct_hits = [&](const std::string& fn) {
            auto it = resolution.direct_by_function.find(fn);
            return it != resolution.direct_by_function.end() && it->second.count(syscall) > 0;
        };
        auto over = [&](const std::string& fn) {
            return resolution.over_approximated.count(fn) > 0;
        };
        std::map<std::string, std::string> parent;
        std::deque<std::string> queue{root};
        parent[root] = "";
        while (!queue.empty()) {
            std::string current = queue.front();
            queue.pop_front();
            if (direct_hits(current) || over(current)) {
                std::vector<std::string> path;
                for (std::string at = current; !at.empty(); at = parent[at]) {
                    path.push_back(at);
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            for (const auto& next : succ[current]) {
                if (!parent.count(next)) {
                    parent[next] = current;
                    queue.push_back(next);
                }
            }
        }
        return std::nullopt;
    };

    for (const auto& binding : builtin->second) {
        auto native = mappings.m_binding.find(binding);
        if (native == mappings.m_binding.end()) continue;
        // Main-thread path first.
        if (auto path = path_to_syscall(native->second)) {
            return Witness{method, binding, native->second, false, *path, syscall};
        }
        // Pool path through a task function.
        auto tasks = mappings.pool_tasks.find(method);
        if (tasks != mappings.pool_tasks.end()) {
            for (const auto& task : tasks->second) {
                if (auto path = path_to_syscall(task)) {
                    return Witness{method, binding, native->second, true, *path, syscall};
                }
            }
        }
    }
    return std::nullopt;
}

namespace {

json key_to_json(const MethodKey& key) {
    return {{"module", key.first}, {"method", key.second}};
}

MethodKey key_from_json(const json& j) {
    return {j.value("module", ""), j.value("method", "")};
}

json names_to_json(const std::set<std::string>& names) {
    json arr = json::array();
    for (const auto& n : names) arr.push_back(n);
    return arr;
}

std::set<std::string> names_from_json(const json& arr) {
    std::set<std::string> out;
    for (const auto& n : arr) out.insert(n.get<std::string>());
    return out;
}

}  // namespace

json mappings_to_json(const LayerMappings& mappings, const ComposedMapping& composed) {
    json doc;
    doc["schema_version"] = 1;
    json m_builtin = json::array();
    for (const auto& [key, targets] : mappings.m_builtin) {
        json t = json::array();
        for (const auto& target : targets) t.push_back(key_to_json(target));
        json entry = key_to_json(key);
        entry["targets"] = std::move(t);
        m_builtin.push_back(std::move(entry));
    }
    doc["m_builtin"] = std::move(m_builtin);
    json m_binding = json::array();
    for (const auto& [key, fn] : mappings.m_binding) {
        json entry = key_to_json(key);
        entry["function"] = fn;
        m_binding.push_back(std::move(entry));
    }
    doc["m_binding"] = std::move(m_binding);
    json m_depend = json::array();
    for (const auto& [fn, names] : mappings.m_depend) {
        m_depend.push_back({{"function", fn}, {"syscalls", names_to_json(names)}});
    }
    doc["m_depend"] = std::move(m_depend);
    json pool_builtins = json::array();
    for (const auto& key : mappings.pool_builtins) pool_builtins.push_back(key_to_json(key));
    doc["pool_builtins"] = std::move(pool_builtins);
    json pool_tasks = json::array();
    for (const auto& [key, tasks] : mappings.pool_tasks) {
        json entry = key_to_json(key);
        entry["tasks"] = names_to_json(tasks);
        pool_tasks.push_back(std::move(entry));
    }
    doc["pool_tasks"] = std::move(pool_tasks);
    json unresolved = json::array();
    for (const auto& key : mappings.unresolved_pool) unresolved.push_back(key_to_json(key));
    doc["unresolved_pool"] = std::move(unresolved);
    doc["warnings"] = mappings.warnings;
    json entries = json::array();
    for (const auto& [key, entry] : composed.entries) {
        json e = key_to_json(key);
        e["main_syscalls"] = names_to_json(entry.main_syscalls);
        e["pool_syscalls"] = names_to_json(entry.pool_syscalls);
        e["uses_pool"] = entry.uses_pool;
        entries.push_back(std::move(e));
    }
    doc["composed"] = std::move(entries);
    doc["dangling"] = composed.dangling;
    return doc;
}

std::pair<LayerMappings, ComposedMapping> mappings_from_json(const json& doc) {
    if (doc.value("schema_version", 0) != 1) {
        throw InputError("mapping database: unsupported schema_version");
    }
    LayerMappings mappings;
    ComposedMapping composed;
    for (const auto& e : doc.value("m_builtin", json::array())) {
        auto& targets = mappings.m_builtin[key_from_json(e)];
        for (const auto& t : e.value("targets", json::array())) {
            targets.insert(key_from_json(t));
        }
    }
    for (const auto& e : doc.value("m_binding", json::array())) {
        mappings.m_binding[key_from_json(e)] = e.value("function", "");
    }
    for (const auto& e : doc.value("m_depend", json::array())) {
        mappings.m_depend[e.value("function", "")] =
            names_from_json(e.value("syscalls", json::array()));
    }
    for (const auto& e : doc.value("pool_builtins", json::array())) {
        mappings.pool_builtins.insert(key_from_json(e));
    }
    for (const auto& e : doc.value("pool_tasks", json::array())) {
        mappings.pool_tasks[key_from_json(e)] = names_from_json(e.value("tasks", json::array()));
    }
    for (const auto& e : doc.value("unresolved_pool", json::array())) {
        mappings.unresolved_pool.insert(key_from_json(e));
    }
    for (const auto& w : doc.value("warnings", json::array())) {
        mappings.warnings.push_back(w.get<std::string>());
    }
    for (const auto& e : doc.value("composed", json::array())) {
        ComposedEntry entry;
        entry.main_syscalls = names_from_json(e.value("main_syscalls", json::array()));
        entry.pool_syscalls = names_from_json(e.value("pool_syscalls", json::array()));
        entry.uses_pool = e.value("uses_pool", false);
        composed.entries[key_from_json(e)] = std::move(entry);
    }
    for (const auto& d : doc.value("dangling", json::array())) {
        composed.dangling.push_back(d.get<std::string>());
    }
    return {std::move(mappings), std::move(composed)};
}

}  // namespace surface::mapping
