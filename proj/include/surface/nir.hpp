#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "surface/json_io.hpp"

namespace surface::nir {

/// Operand of a NIR statement.
struct Operand {
    enum class Kind { constant, param, field, local, fnref };
    Kind kind = Kind::constant;
    std::int64_t value = 0;  // constant
    std::string name;        // param/local/fnref name; field's param name
    std::string field;       // field name

    static Operand constant(std::int64_t v) { return {Kind::constant, v, "", ""}; }
    static Operand param(std::string n) { return {Kind::param, 0, std::move(n), ""}; }
    static Operand field_of(std::string p, std::string f) {
        return {Kind::field, 0, std::move(p), std::move(f)};
    }
    static Operand local(std::string n) { return {Kind::local, 0, std::move(n), ""}; }
    static Operand fnref(std::string n) { return {Kind::fnref, 0, std::move(n), ""}; }

    auto operator<=>(const Operand&) const = default;
};

struct NirStmt;

struct SwitchCase {
    std::int64_t value = 0;
    std::vector<NirStmt> body;
};

/// Statement forms: assign, call, call_indirect, switch, syscall,
/// submit_pool. A single struct with a discriminator keeps cloning and
/// serialization simple.
struct NirStmt {
    enum class Op { assign, call, call_indirect, switch_, syscall, submit_pool };
    Op op = Op::call;

    // assign
    bool dst_is_field = false;
    std::string dst_name;   // local name, or param name when dst_is_field
    std::string dst_field;  // field name when dst_is_field
    Operand src;

    // call / call_indirect
    std::string callee;  // function name or fnptr param name
    std::vector<Operand> args;

    // switch
    Operand selector;
    std::vector<SwitchCase> cases;
    std::vector<NirStmt> default_body;

    // syscall
    Operand number;

    // submit_pool
    Operand task;
};

enum class ParamKind { value, fnptr };

struct NirParam {
    std::string name;
    ParamKind kind = ParamKind::value;
};

struct NirFunction {
    std::string name;
    std::vector<NirParam> params;
    std::vector<NirStmt> body;

    const NirParam* find_param(const std::string& name) const;
};

struct NirBinding {
    std::string module;
    std::string method;
    std::string function;
};

struct NirProgram {
    std::vector<NirFunction> functions;
    std::vector<NirBinding> bindings;
    std::vector<std::string> entries;

    const NirFunction* find(const std::string& name) const;
};

/// Parses and validates a NIR program file. Validation enforces: unique
/// function names without '.', existing call/fnref/binding/entry
/// targets, call arity, fnptr argument discipline, distinct switch case
/// values, and an acyclic call graph (no recursion).
NirProgram parse_nir(const std::filesystem::path& path);
NirProgram parse_nir_json(const json& doc);

/// `allow_clone_names` permits the '.' suffixes introduced by
/// specialization; source programs must not use them.
void validate(const NirProgram& program, bool allow_clone_names = false);

json program_to_json(const NirProgram& program);

/// Concrete runtime values for the interpreter. Value params receive
/// fresh objects by default; fields read before assignment yield 0.
struct RuntimeValue;
using RuntimeObject = std::map<std::string, std::shared_ptr<RuntimeValue>>;

struct RuntimeValue {
    enum class Kind { integer, fnref, object };
    Kind kind = Kind::integer;
    std::int64_t integer = 0;
    std::string fnref;
    std::shared_ptr<RuntimeObject> object;

    static RuntimeValue make_int(std::int64_t v);
    static RuntimeValue make_fnref(std::string name);
    static RuntimeValue make_object();
};

struct LoggedCall {
    std::string caller;
    int callsite = 0;  // pre-order call statement index within caller
    std::string callee;

    auto operator<=>(const LoggedCall&) const = default;
};

struct ExecutionLog {
    std::vector<LoggedCall> call_edges;
    std::vector<std::int64_t> syscalls;
    std::vector<std::string> pool_tasks;
};

/// Executes `entry` with the given arguments. Pool tasks are logged,
/// not executed. Errors (non-integer syscall number, arity mismatch)
/// raise AnalysisError.
ExecutionLog interpret(const NirProgram& program, const std::string& entry,
                       const std::vector<RuntimeValue>& args);

/// Convenience: runs `entry` with default arguments (fresh object per
/// value param). Entries with fnptr params are rejected.
ExecutionLog interpret_with_default_args(const NirProgram& program, const std::string& entry);

/// Strips a clone suffix: "uv__fs_work.12" -> "uv__fs_work". Names
/// without '.' are returned unchanged.
std::string project_clone_name(const std::string& name);

/// Applies `fn` to every statement pre-order, descending into switch
/// case and default bodies.
void for_each_stmt(const std::vector<NirStmt>& body,
                   const std::function<void(const NirStmt&)>& fn);

/// Pre-order indices of call / call_indirect statements; matches the
/// callsite numbering in interpreter logs and call-graph edges.
std::map<const NirStmt*, int> call_site_indices(const NirFunction& fn);

/// Pre-order indices of every statement (for diagnostics).
std::map<const NirStmt*, int> stmt_indices(const NirFunction& fn);

}  // namespace surface::nir
