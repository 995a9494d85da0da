#include "surface/whitelist.hpp"

#include <cstdio>

namespace surface::policy {

Whitelist generate_whitelist(const std::set<mapping::MethodKey>& reachable,
                             const mapping::ComposedMapping& composed,
                             const EngineBaseline& baseline,
                             const std::vector<std::string>& commands,
                             const CommandProfile& profile, const SyscallTable& table,
                             Mode mode) {
    Whitelist wl;
    auto add = [&wl](const std::string& name, const std::string& source, bool to_pool) {
        (to_pool ? wl.pool : wl.main).insert(name);
        wl.provenance[name].insert(source);
    };

    for (const auto& name : baseline.main) add(name, "engine-baseline", false);

    bool any_pool = false;
    for (const auto& method : reachable) {
        auto entry = composed.entries.find(method);
        if (entry == composed.entries.end()) {
            const std::string label = method.first + "." + method.second;
            if (mode == Mode::strict) {
                throw AnalysisError("reachable builtin method " + label +
                                    " has no composed mapping");
            }
            wl.warnings.push_back("unmapped builtin method " + label + " ignored");
            continue;
        }
        const std::string source = "builtin:" + method.first + "." + method.second;
        for (const auto& name : entry->second.main_syscalls) add(name, source, false);
        if (entry->second.uses_pool) {
            any_pool = true;
            for (const auto& name : entry->second.pool_syscalls) add(name, source, true);
        }
    }

    for (const auto& binary : commands) {
        const std::set<std::string>* names = profile.find(binary);
        if (names == nullptr) {
            if (mode == Mode::strict) {
                throw AnalysisError("command '" + binary + "' has no syscall profile");
            }
            // An unknown child binary must not be under-allowed.
            wl.warnings.push_back("unprofiled command '" + binary +
                                  "'; granting the full table");
            for (const auto& name : table.all_names()) {
                add(name, "command:" + binary, false);
            }
            continue;
        }
        for (const auto& name : *names) add(name, "command:" + binary, false);
    }

    wl.pool_required = any_pool;
    if (any_pool) {
        for (const auto& name : baseline.pool) add(name, "engine-baseline", true);
    } else {
        wl.pool.clear();
    }

    for (const auto& name : wl.main) {
        if (!table.has_name(name)) {
            throw AnalysisError("whitelist syscall '" + name + "' not in table");
        }
    }
    for (const auto& name : wl.pool) {
        if (!table.has_name(name)) {
            throw AnalysisError("whitelist syscall '" + name + "' not in table");
        }
    }
    return wl;
}

json whitelist_to_json(const Whitelist& wl) {
    json doc;
    doc["main"] = json::array();
    for (const auto& n : wl.main) doc["main"].push_back(n);
    doc["pool"] = json::array();
    for (const auto& n : wl.pool) doc["pool"].push_back(n);
    doc["pool_required"] = wl.pool_required;
    json prov = json::object();
    for (const auto& [name, sources] : wl.provenance) {
        prov[name] = json::array();
        for (const auto& s : sources) prov[name].push_back(s);
    }
    doc["provenance"] = std::move(prov);
    doc["warnings"] = wl.warnings;
    return doc;
}

Whitelist whitelist_from_json(const json& doc) {
    Whitelist wl;
    for (const auto& n : doc.value("main", json::array())) wl.main.insert(n.get<std::string>());
    for (const auto& n : doc.value("pool", json::array())) wl.pool.insert(n.get<std::string>());
    wl.pool_required = doc.value("pool_required", false);
    for (const auto& [name, sources] : doc.value("provenance", json::object()).items()) {
        for (const auto& s : sources) wl.provenance[name].insert(s.get<std::string>());
    }
    for (const auto& w : doc.value("warnings", json::array())) {
        wl.warnings.push_back(w.get<std::string>());
    }
    return wl;
}

SurfaceMetrics compute_metrics(const Whitelist& wl, const SyscallTable& table) {
    if (table.size() == 0) throw InputError("compute_metrics: empty syscall table");
    std::set<std::string> allowed = wl.main;
    allowed.insert(wl.pool.begin(), wl.pool.end());
    SurfaceMetrics m;
    m.s_base = static_cast<int>(table.size());
    m.s_app = static_cast<int>(allowed.size());
    m.sr = static_cast<double>(m.s_app) / static_cast<double>(m.s_base);
    for (const auto& name : allowed) {
        if (table.is_critical(name)) {
            m.critical_allowed += 1;
        } else {
            m.trivial_allowed += 1;
        }
    }
    return m;
}

json metrics_to_json(const SurfaceMetrics& m) {
    return {{"s_base", m.s_base},
            {"s_app", m.s_app},
            {"sr", m.sr},
            {"sr_4dp", format_sr(m.sr)},
            {"critical_allowed", m.critical_allowed},
            {"trivial_allowed", m.trivial_allowed}};
}

std::string format_sr(double sr) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", sr);
    return buf;
}

Policy emit_policy(const Whitelist& wl, const std::optional<FsAdvisory>& advisory) {
    Policy policy;
    policy.mode = wl.pool_required ? "pool_required" : "pool_free";
    policy.main_allow.assign(wl.main.begin(), wl.main.end());
    policy.pool_allow.assign(wl.pool.begin(), wl.pool.end());
    policy.fs_advisory = advisory;
    return policy;
}

json policy_to_json(const Policy& policy) {
    json doc;
    doc["version"] = policy.version;
    doc["default_action"] = policy.default_action;
    doc["mode"] = policy.mode;
    json load_points;
    load_points["main"] = "before_app_load";
    if (policy.mode == "pool_required") load_points["pool"] = "after_pool_init";
    doc["load_points"] = std::move(load_points);
    doc["main_allow"] = policy.main_allow;
    doc["pool_allow"] = policy.pool_allow;
    if (policy.fs_advisory) {
        doc["fs_advisory"] = {{"root_dir", policy.fs_advisory->root_dir},
                              {"read_only", policy.fs_advisory->read_only}};
    }
    return doc;
}

Policy policy_from_json(const json& doc) {
    Policy policy;
    policy.version = doc.value("version", 1);
    policy.default_action = doc.value("default_action", "kill");
    policy.mode = doc.value("mode", "pool_free");
    if (policy.mode != "pool_required" && policy.mode != "pool_free") {
        throw InputError("policy mode must be pool_required or pool_free");
    }
    for (const auto& n : doc.value("main_allow", json::array())) {
        policy.main_allow.push_back(n.get<std::string>());
    }
    for (const auto& n : doc.value("pool_allow", json::array())) {
        policy.pool_allow.push_back(n.get<std::string>());
    }
    if (doc.contains("fs_advisory") && doc["fs_advisory"].is_object()) {
        FsAdvisory advisory;
        advisory.root_dir = doc["fs_advisory"].value("root_dir", "");
        advisory.read_only = doc["fs_advisory"].value("read_only", false);
        policy.fs_advisory = advisory;
    }
    return policy;
}

Policy load_policy(const std::filesystem::path& path) {
    return policy_from_json(load_json_file(path));
}

std::string policy_to_rules(const Policy& policy) {
    std::string out;
    out += "# seccomp-style allowlist, default " + policy.default_action + "\n";
    out += "mode " + policy.mode + "\n";
    if (policy.mode == "pool_required") {
        out += "[pool]  # load after_pool_init\n";
        for (const auto& name : policy.pool_allow) out += "allow " + name + "\n";
    }
    out += "[main]  # load before_app_load\n";
    for (const auto& name : policy.main_allow) out += "allow " + name + "\n";
    if (policy.fs_advisory) {
        out += "[fs-advisory]\n";
        out += "chroot " + policy.fs_advisory->root_dir + "\n";
        out += std::string("read_only ") + (policy.fs_advisory->read_only ? "true" : "false") +
               "\n";
    }
    return out;
}

}  // namespace surface::policy
