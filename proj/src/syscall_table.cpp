#include "surface/syscall_table.hpp"

#include <sstream>

namespace surface::policy {

SyscallTable::SyscallTable(std::vector<SyscallRow> rows) : rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!by_name_.emplace(rows_[i].name, i).second) {
            throw InputError("syscall table: duplicate name '" + rows_[i].name + "'");
        }
        if (!by_number_.emplace(rows_[i].number, i).second) {
            throw InputError("syscall table: duplicate number " +
                             std::to_string(rows_[i].number));
        }
    }
}

bool SyscallTable::is_critical(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        throw InputError("syscall not in table: " + name);
    }
    return rows_[it->second].critical;
}

std::optional<std::string> SyscallTable::name_of(std::int64_t number) const {
    auto it = by_number_.find(number);
    if (it == by_number_.end()) return std::nullopt;
    return rows_[it->second].name;
}

std::set<std::string> SyscallTable::all_names() const {
    std::set<std::string> out;
    for (const auto& row : rows_) out.insert(row.name);
    return out;
}

SyscallTable load_syscall_table(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<SyscallRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        SyscallRow row;
        std::string cls;
        std::string number;
        if (!std::getline(fields, number, '\t') || !std::getline(fields, row.name, '\t') ||
            !std::getline(fields, cls)) {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": expected number<TAB>name<TAB>class");
        }
        try {
            row.number = std::stoi(number);
        } catch (const std::exception&) {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": bad syscall number '" + number + "'");
        }
        if (cls == "critical") {
            row.critical = true;
        } else if (cls == "trivial") {
            row.critical = false;
        } else {
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": class must be critical or trivial, got '" + cls + "'");
        }
        rows.push_back(std::move(row));
    }
    return SyscallTable(std::move(rows));
}

EngineBaseline load_engine_baseline(const std::filesystem::path& path,
                                    const SyscallTable& table) {
    const json doc = load_json_file(path);
    EngineBaseline baseline;
    auto read_list = [&](const char* key, std::set<std::string>& out) {
        for (const auto& name : doc.value(key, json::array())) {
            std::string s = name.get<std::string>();
            if (!table.has_name(s)) {
                throw InputError(path.string() + ": baseline syscall '" + s +
                                 "' not in syscall table");
            }
            out.insert(std::move(s));
        }
    };
    read_list("main", baseline.main);
    read_list("pool", baseline.pool);
    return baseline;
}

const std::set<std::string>* CommandProfile::find(const std::string& binary) const {
    auto it = by_binary.find(binary);
    return it == by_binary.end() ? nullptr : &it->second;
}

CommandProfile load_command_profile(const std::filesystem::path& path,
                                    const SyscallTable& table) {
    const json doc = load_json_file(path);
    if (!doc.is_object()) {
        throw InputError(path.string() + ": command profile must be a JSON object");
    }
    CommandProfile profile;
    for (const auto& [binary, names] : doc.items()) {
        std::set<std::string> set;
        for (const auto& name : names) {
            std::string s = name.get<std::string>();
            if (!table.has_name(s)) {
                throw InputError(path.string() + ": profile syscall '" + s +
                                 "' not in syscall table (binary " + binary + ")");
            }
            set.insert(std::move(s));
        }
        profile.by_binary[binary] = std::move(set);
    }
    return profile;
}

}  // namespace surface::policy
