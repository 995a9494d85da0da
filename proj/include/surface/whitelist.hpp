#pragma once

#include "surface/mapping.hpp"
#include "surface/syscall_table.hpp"

namespace surface::policy {

/// Per-thread allow sets with provenance. Sources are encoded as
/// "engine-baseline", "builtin:<module>.<method>", "command:<binary>".
struct Whitelist {
    std::set<std::string> main;
    std::set<std::string> pool;
    std::map<std::string, std::set<std::string>> provenance;
    bool pool_required = false;
    std::vector<std::string> warnings;
};

/// Algorithm: main = baseline ∪ builtin main sets ∪ command profiles;
/// pool = baseline ∪ builtin pool sets when any reachable builtin uses
/// the thread pool, else empty (pool-free mode).
Whitelist generate_whitelist(const std::set<mapping::MethodKey>& reachable,
                             const mapping::ComposedMapping& composed,
                             const EngineBaseline& baseline,
                             const std::vector<std::string>& commands,
                             const CommandProfile& profile, const SyscallTable& table,
                             Mode mode);

json whitelist_to_json(const Whitelist& wl);
Whitelist whitelist_from_json(const json& doc);

struct SurfaceMetrics {
    int s_base = 0;
    int s_app = 0;
    double sr = 0.0;
    int critical_allowed = 0;
    int trivial_allowed = 0;
};

SurfaceMetrics compute_metrics(const Whitelist& wl, const SyscallTable& table);

json metrics_to_json(const SurfaceMetrics& m);

/// SR formatted to four decimal places, as reported by the CLI.
std::string format_sr(double sr);

struct FsAdvisory {
    std::string root_dir;
    bool read_only = false;
};

struct Policy {
    int version = 1;
    std::string default_action = "kill";
    std::string mode;  // "pool_required" | "pool_free"
    std::vector<std::string> main_allow;
    std::vector<std::string> pool_allow;
    std::optional<FsAdvisory> fs_advisory;
};

/// Builds the enforcement document from a whitelist. Load points are
/// fixed: the pool filter installs after pool initialization, the main
/// filter before the application loads.
Policy emit_policy(const Whitelist& wl, const std::optional<FsAdvisory>& advisory);

json policy_to_json(const Policy& policy);
Policy policy_from_json(const json& doc);
Policy load_policy(const std::filesystem::path& path);

/// Textual `.rules` export: one `allow <name>` line per syscall per
/// thread section; the pool section is omitted in pool-free mode.
std::string policy_to_rules(const Policy& policy);

}  // namespace surface::policy
