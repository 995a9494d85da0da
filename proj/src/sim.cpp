#include "surface/sim.hpp"

#include <algorithm>
#include <sstream>

namespace surface::sim {

EventTrace parse_event_trace(const std::string& text) {
    EventTrace trace;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        Event event;
        if (tag == "POOL_INIT") {
            event.kind = Event::Kind::pool_init;
            if (!(fields >> event.pool_size) || event.pool_size < 1) {
                throw InputError("event trace line " + std::to_string(lineno) +
                                 ": POOL_INIT needs a positive size");
            }
        } else if (tag == "APP_START") {
            event.kind = Event::Kind::app_start;
        } else if (tag == "THREAD_CREATE") {
            event.kind = Event::Kind::thread_create;
            if (!(fields >> event.parent >> event.child)) {
                throw InputError("event trace line " + std::to_string(lineno) +
                                 ": THREAD_CREATE needs parent and child ids");
            }
        } else if (tag == "SYSCALL") {
            event.kind = Event::Kind::syscall;
            if (!(fields >> event.thread >> event.name)) {
                throw InputError("event trace line " + std::to_string(lineno) +
                                 ": SYSCALL needs thread id and name");
            }
        } else {
            throw InputError("event trace line " + std::to_string(lineno) +
                             ": unknown event '" + tag + "'");
        }
        trace.events.push_back(std::move(event));
    }
    return trace;
}

EventTrace load_event_trace(const std::filesystem::path& path) {
    return parse_event_trace(read_text_file(path));
}

namespace {

struct Filter {
    std::set<std::string> allow;
};

}  // namespace

std::vector<Verdict> simulate(const policy::Policy& policy, const EventTrace& trace) {
    const std::set<std::string> main_allow(policy.main_allow.begin(), policy.main_allow.end());
    const std::set<std::string> pool_allow(policy.pool_allow.begin(), policy.pool_allow.end());

    std::map<int, std::vector<Filter>> threads;  // thread id -> installed filters
    threads[0];                                  // main thread exists from the start
    bool seen_pool_init = false;
    bool seen_app_start = false;

    if (policy.mode == "pool_required") {
        bool has_pool_init = std::any_of(
            trace.events.begin(), trace.events.end(),
            [](const Event& e) { return e.kind == Event::Kind::pool_init; });
        if (!has_pool_init) {
            throw InputError("pool_required policy needs a POOL_INIT event in the trace");
        }
    }

    std::vector<Verdict> verdicts;
    int index = 0;
    for (const auto& event : trace.events) {
        switch (event.kind) {
            case Event::Kind::pool_init: {
                if (seen_pool_init) throw InputError("duplicate POOL_INIT event");
                if (seen_app_start) {
                    throw InputError("POOL_INIT must precede APP_START");
                }
                seen_pool_init = true;
                for (int t = 1; t <= event.pool_size; ++t) {
                    if (threads.count(t)) {
                        throw InputError("pool thread id " + std::to_string(t) +
                                         " already exists");
                    }
                    threads[t];  // created with no filters
                    if (policy.mode == "pool_required") {
                        threads[t].push_back({pool_allow});
                    }
                }
                break;
            }
            case Event::Kind::app_start: {
                if (seen_app_start) throw InputError("duplicate APP_START event");
                seen_app_start = true;
                threads[0].push_back({main_allow});
                break;
            }
            case Event::Kind::thread_create: {
                auto parent = threads.find(event.parent);
                if (parent == threads.end()) {
                    throw InputError("THREAD_CREATE from unknown thread " +
                                     std::to_string(event.parent));
                }
                if (threads.count(event.child)) {
                    throw InputError("THREAD_CREATE reuses thread id " +
                                     std::to_string(event.child));
                }
                threads[event.child] = parent->second;  // inherit a copy
                break;
            }
            case Event::Kind::syscall: {
                auto thread = threads.find(event.thread);
                if (thread == threads.end()) {
                    throw InputError("SYSCALL on unknown thread " +
                                     std::to_string(event.thread));
                }
                Verdict verdict;
                verdict.event_index = index;
                verdict.thread = event.thread;
                verdict.name = event.name;
                for (std::size_t f = 0; f < thread->second.size(); ++f) {
                    if (!thread->second[f].allow.count(event.name)) {
                        verdict.allowed = false;
                        verdict.denied_by = static_cast<int>(f);
                        break;
                    }
                }
                verdicts.push_back(std::move(verdict));
                break;
            }
        }
        ++index;
    }
    return verdicts;
}

json verdicts_to_json(const std::vector<Verdict>& verdicts) {
    json doc;
    doc["verdicts"] = json::array();
    int killed = 0;
    for (const auto& v : verdicts) {
        json entry = {{"event", v.event_index},
                      {"thread", v.thread},
                      {"name", v.name},
                      {"verdict", v.allowed ? "allowed" : "killed"}};
        if (!v.allowed) {
            entry["denied_by"] = v.denied_by;
            ++killed;
        }
        doc["verdicts"].push_back(std::move(entry));
    }
    doc["killed"] = killed;
    doc["allowed"] = static_cast<int>(verdicts.size()) - killed;
    return doc;
}

std::vector<Payload> load_payloads(const std::filesystem::path& path,
                                   const policy::SyscallTable& table) {
    const json doc = load_json_file(path);
    if (!doc.is_array()) throw InputError(path.string() + ": payload set must be an array");
    std::vector<Payload> payloads;
    for (const auto& p : doc) {
        Payload payload;
        payload.name = p.value("name", "");
        if (payload.name.empty()) {
            throw InputError(path.string() + ": payload without a name");
        }
        for (const auto& s : p.value("syscalls", json::array())) {
            std::string name = s.get<std::string>();
            if (!table.has_name(name)) {
                throw InputError(path.string() + ": payload '" + payload.name +
                                 "' uses unknown syscall '" + name + "'");
            }
            payload.syscalls.push_back(std::move(name));
        }
        // The category's defining syscall must be in its own list.
        if (std::find(payload.syscalls.begin(), payload.syscalls.end(), payload.name) ==
            payload.syscalls.end()) {
            // Category names map to their critical syscall directly
            // (exec -> execve is the one non-identity case).
            const std::string defining = payload.name == "exec" ? "execve" : payload.name;
            if (std::find(payload.syscalls.begin(), payload.syscalls.end(), defining) ==
                payload.syscalls.end()) {
                throw InputError(path.string() + ": payload '" + payload.name +
                                 "' does not contain its defining syscall '" + defining + "'");
            }
        }
        payloads.push_back(std::move(payload));
    }
    return payloads;
}

std::vector<PayloadOutcome> evaluate_payloads(const policy::Policy& policy,
                                              const std::vector<Payload>& payloads,
                                              int injection_thread) {
    std::vector<PayloadOutcome> outcomes;
    for (const auto& payload : payloads) {
        EventTrace trace;
        if (policy.mode == "pool_required") {
            Event pool_init;
            pool_init.kind = Event::Kind::pool_init;
            pool_init.pool_size = std::max(1, injection_thread);
            trace.events.push_back(pool_init);
        }
        Event app_start;
        app_start.kind = Event::Kind::app_start;
        trace.events.push_back(app_start);
        if (injection_thread != 0 && policy.mode != "pool_required") {
            Event create;
            create.kind = Event::Kind::thread_create;
            create.parent = 0;
            create.child = injection_thread;
            trace.events.push_back(create);
        }
        for (const auto& name : payload.syscalls) {
            Event syscall;
            syscall.kind = Event::Kind::syscall;
            syscall.thread = injection_thread;
            syscall.name = name;
            trace.events.push_back(syscall);
        }
        std::vector<Verdict> verdicts = simulate(policy, trace);
        bool blocked = std::any_of(verdicts.begin(), verdicts.end(),
                                   [](const Verdict& v) { return !v.allowed; });
        outcomes.push_back({payload.name, blocked});
    }
    return outcomes;
}

json payload_matrix_to_json(const std::vector<PayloadOutcome>& outcomes) {
    json doc = json::array();
    for (const auto& o : outcomes) {
        doc.push_back({{"payload", o.name}, {"result", o.blocked ? "blocked" : "executed"}});
    }
    return doc;
}

std::string payload_matrix_table(const std::vector<PayloadOutcome>& outcomes) {
    // Mirrors the usual exploit-matrix convention: check = blocked,
    // cross = executed.
    std::string out = "payload      result\n";
    for (const auto& o : outcomes) {
        std::string name = o.name;
        name.resize(12, ' ');
        out += name + (o.blocked ? " ✓ blocked" : " ✗ executed") + "\n";
    }
    return out;
}

}  // namespace surface::sim
