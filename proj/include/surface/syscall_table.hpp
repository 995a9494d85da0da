#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "surface/json_io.hpp"

namespace surface::policy {

struct SyscallRow {
    int number = 0;
    std::string name;
    bool critical = false;
};

/// The syscall universe: every allow-listable kernel entry point, with
/// the critical/trivial partition. Loaded from a TSV of
/// `number<TAB>name<TAB>class`.
class SyscallTable {
public:
    explicit SyscallTable(std::vector<SyscallRow> rows);
    SyscallTable() = default;

    std::size_t size() const { return rows_.size(); }
    bool has_name(const std::string& name) const { return by_name_.count(name) > 0; }
    bool is_critical(const std::string& name) const;
    std::optional<std::string> name_of(std::int64_t number) const;
    std::set<std::string> all_names() const;
    const std::vector<SyscallRow>& rows() const { return rows_; }

private:
    std::vector<SyscallRow> rows_;
    std::map<std::string, std::size_t> by_name_;
    std::map<std::int64_t, std::size_t> by_number_;
};

SyscallTable load_syscall_table(const std::filesystem::path& path);

/// Syscalls the bare engine needs before any application code runs,
/// split by thread class.
struct EngineBaseline {
    std::set<std::string> main;
    std::set<std::string> pool;
};

EngineBaseline load_engine_baseline(const std::filesystem::path& path,
                                    const SyscallTable& table);

/// Recorded per-binary syscall profiles for executed commands.
struct CommandProfile {
    std::map<std::string, std::set<std::string>> by_binary;

    const std::set<std::string>* find(const std::string& binary) const;
};

CommandProfile load_command_profile(const std::filesystem::path& path,
                                    const SyscallTable& table);

}  // namespace surface::policy
