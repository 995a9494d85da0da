#pragma once

#include "surface/whitelist.hpp"

namespace surface::sim {

struct Event {
    enum class Kind { pool_init, app_start, thread_create, syscall };
    Kind kind = Kind::syscall;
    int pool_size = 0;        // pool_init
    int parent = 0;           // thread_create
    int child = 0;            // thread_create
    int thread = 0;           // syscall
    std::string name;         // syscall
};

/// Ordered event stream. Thread 0 is the main thread; pool_init creates
/// threads 1..pool_size.
struct EventTrace {
    std::vector<Event> events;
};

/// Line format: POOL_INIT <size> | APP_START | THREAD_CREATE <parent> <child>
/// | SYSCALL <thread> <name>. '#' starts a comment line.
EventTrace load_event_trace(const std::filesystem::path& path);
EventTrace parse_event_trace(const std::string& text);

struct Verdict {
    int event_index = 0;
    int thread = 0;
    std::string name;
    bool allowed = true;
    int denied_by = -1;  // index of the first denying filter on the thread

    auto operator<=>(const Verdict&) const = default;
};

/// Replays the trace against the policy. Pool threads receive the pool
/// filter at pool_init; the main filter installs on thread 0 at
/// app_start; children inherit a copy of the parent's filter list at
/// creation. A syscall passes only if every installed filter allows it.
std::vector<Verdict> simulate(const policy::Policy& policy, const EventTrace& trace);

json verdicts_to_json(const std::vector<Verdict>& verdicts);

struct Payload {
    std::string name;                   // exec, fork, setgid, setuid, connect, listen, bind
    std::vector<std::string> syscalls;  // ordered; includes the defining syscall
};

std::vector<Payload> load_payloads(const std::filesystem::path& path,
                                   const policy::SyscallTable& table);

struct PayloadOutcome {
    std::string name;
    bool blocked = false;
};

/// Appends each payload's syscalls on `injection_thread` after a
/// canonical startup (pool_init when the policy requires it, then
/// app_start). Blocked means at least one syscall was killed.
std::vector<PayloadOutcome> evaluate_payloads(const policy::Policy& policy,
                                              const std::vector<Payload>& payloads,
                                              int injection_thread);

json payload_matrix_to_json(const std::vector<PayloadOutcome>& outcomes);

/// Human-readable matrix; the check mark means blocked.
std::string payload_matrix_table(const std::vector<PayloadOutcome>& outcomes);

}  // namespace surface::sim
