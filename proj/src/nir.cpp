#include "surface/nir.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace surface::nir {

const NirParam* NirFunction::find_param(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

const NirFunction* NirProgram::find(const std::string& name) const {
    for (const auto& f : functions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

namespace {

Operand parse_operand(const json& j, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": operand must be an object");
    const std::string kind = j.value("kind", "");
    if (kind == "const") {
        if (!j.contains("value") || !j["value"].is_number_integer()) {
            throw InputError(where + ": const operand needs integer 'value'");
        }
        return Operand::constant(j["value"].get<std::int64_t>());
    }
    if (kind == "param") return Operand::param(j.value("name", ""));
    if (kind == "local") return Operand::local(j.value("name", ""));
    if (kind == "fnref") return Operand::fnref(j.value("function", ""));
    if (kind == "field") {
        return Operand::field_of(j.value("param", ""), j.value("field", ""));
    }
    throw InputError(where + ": unknown operand kind '" + kind + "'");
}

json operand_to_json(const Operand& op) {
    switch (op.kind) {
        case Operand::Kind::constant: return {{"kind", "const"}, {"value", op.value}};
        case Operand::Kind::param: return {{"kind", "param"}, {"name", op.name}};
        case Operand::Kind::local: return {{"kind", "local"}, {"name", op.name}};
        case Operand::Kind::fnref: return {{"kind", "fnref"}, {"function", op.name}};
        case Operand::Kind::field:
            return {{"kind", "field"}, {"param", op.name}, {"field", op.field}};
    }
    return {};
}

std::vector<NirStmt> parse_body(const json& j, const std::string& where);

NirStmt parse_stmt(const json& j, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": statement must be an object");
    NirStmt stmt;
    const std::string op = j.value("op", "");
    if (op == "assign") {
        stmt.op = NirStmt::Op::assign;
        const json& dst = j.contains("dst") ? j["dst"] : json();
        if (!dst.is_object()) throw InputError(where + ": assign needs 'dst'");
        if (dst.contains("local")) {
            stmt.dst_is_field = false;
            stmt.dst_name = dst.value("local", "");
        } else if (dst.contains("param") && dst.contains("field")) {
            stmt.dst_is_field = true;
            stmt.dst_name = dst.value("param", "");
            stmt.dst_field = dst.value("field", "");
        } else {
            throw InputError(where + ": assign dst must be {local} or {param, field}");
        }
        stmt.src = parse_operand(j.contains("src") ? j["src"] : json(), where + " src");
    } else if (op == "call") {
        stmt.op = NirStmt::Op::call;
        stmt.callee = j.value("callee", "");
        for (const auto& a : j.value("args", json::array())) {
            stmt.args.push_back(parse_operand(a, where + " arg"));
        }
    } else if (op == "call_indirect") {
        stmt.op = NirStmt::Op::call_indirect;
        stmt.callee = j.value("target", "");
        for (const auto& a : j.value("args", json::array())) {
            stmt.args.push_back(parse_operand(a, where + " arg"));
        }
    } else if (op == "switch") {
        stmt.op = NirStmt::Op::switch_;
        stmt.selector =
            parse_operand(j.contains("selector") ? j["selector"] : json(), where + " selector");
        int case_index = 0;
        for (const auto& c : j.value("cases", json::array())) {
            SwitchCase sc;
            if (!c.is_object() || !c.contains("value") || !c["value"].is_number_integer()) {
                throw InputError(where + ": switch case needs integer 'value'");
            }
            sc.value = c["value"].get<std::int64_t>();
            sc.body = parse_body(c.value("body", json::array()),
                                 where + " case " + std::to_string(case_index));
            stmt.cases.push_back(std::move(sc));
            ++case_index;
        }
        stmt.default_body =
            parse_body(j.value("default", json::array()), where + " default");
    } else if (op == "syscall") {
        stmt.op = NirStmt::Op::syscall;
        stmt.number =
            parse_operand(j.contains("number") ? j["number"] : json(), where + " number");
    } else if (op == "submit_pool") {
        stmt.op = NirStmt::Op::submit_pool;
        stmt.task = parse_operand(j.contains("task") ? j["task"] : json(), where + " task");
    } else {
        throw InputError(where + ": unknown statement op '" + op + "'");
    }
    return stmt;
}

std::vector<NirStmt> parse_body(const json& j, const std::string& where) {
    std::vector<NirStmt> body;
    int index = 0;
    for (const auto& s : j) {
        body.push_back(parse_stmt(s, where + " statement " + std::to_string(index)));
        ++index;
    }
    return body;
}

json stmt_to_json(const NirStmt& stmt);

json body_to_json(const std::vector<NirStmt>& body) {
    json out = json::array();
    for (const auto& s : body) out.push_back(stmt_to_json(s));
    return out;
}

json stmt_to_json(const NirStmt& stmt) {
    switch (stmt.op) {
        case NirStmt::Op::assign: {
            json dst = stmt.dst_is_field
                           ? json{{"param", stmt.dst_name}, {"field", stmt.dst_field}}
                           : json{{"local", stmt.dst_name}};
            return {{"op", "assign"}, {"dst", dst}, {"src", operand_to_json(stmt.src)}};
        }
        case NirStmt::Op::call: {
            json args = json::array();
            for (const auto& a : stmt.args) args.push_back(operand_to_json(a));
            return {{"op", "call"}, {"callee", stmt.callee}, {"args", args}};
        }
        case NirStmt::Op::call_indirect: {
            json args = json::array();
            for (const auto& a : stmt.args) args.push_back(operand_to_json(a));
            return {{"op", "call_indirect"}, {"target", stmt.callee}, {"args", args}};
        }
        case NirStmt::Op::switch_: {
            json cases = json::array();
            for (const auto& c : stmt.cases) {
                cases.push_back({{"value", c.value}, {"body", body_to_json(c.body)}});
            }
            return {{"op", "switch"},
                    {"selector", operand_to_json(stmt.selector)},
                    {"cases", cases},
                    {"default", body_to_json(stmt.default_body)}};
        }
        case NirStmt::Op::syscall:
            return {{"op", "syscall"}, {"number", operand_to_json(stmt.number)}};
        case NirStmt::Op::submit_pool:
            return {{"op", "submit_pool"}, {"task", operand_to_json(stmt.task)}};
    }
    return {};
}

struct Validator {
    const NirProgram& program;
    bool allow_clone_names = false;

    void check_operand(const Operand& op, const NirFunction& fn, const std::string& where) {
        switch (op.kind) {
            case Operand::Kind::param:
            case Operand::Kind::field:
                if (fn.find_param(op.name) == nullptr) {
                    throw InputError(where + ": unknown parameter '" + op.name + "'");
                }
                break;
            case Operand::Kind::fnref:
                if (program.find(op.name) == nullptr) {
                    throw InputError(where + ": fnref to undefined function '" + op.name + "'");
                }
                break;
            default:
                break;
        }
    }

    void check_call_args(const NirStmt& stmt, const NirFunction& fn,
                         const std::vector<NirParam>& callee_params, const std::string& where) {
        if (stmt.args.size() != callee_params.size()) {
            throw InputError(where + ": call arity mismatch (" +
                             std::to_string(stmt.args.size()) + " args, " +
                             std::to_string(callee_params.size()) + " params)");
        }
        for (std::size_t i = 0; i < stmt.args.size(); ++i) {
            const Operand& arg = stmt.args[i];
            check_operand(arg, fn, where);
            const bool callee_wants_fnptr = callee_params[i].kind == ParamKind::fnptr;
            const bool arg_is_fnptrish =
                arg.kind == Operand::Kind::fnref ||
                (arg.kind == Operand::Kind::param && fn.find_param(arg.name) != nullptr &&
                 fn.find_param(arg.name)->kind == ParamKind::fnptr) ||
                arg.kind == Operand::Kind::local;
            if (callee_wants_fnptr && !arg_is_fnptrish) {
                throw InputError(where + ": fnptr parameter '" + callee_params[i].name +
                                 "' needs a fnref, fnptr param, or local");
            }
            if (!callee_wants_fnptr && arg.kind == Operand::Kind::fnref) {
                throw InputError(where + ": fnref passed to value parameter '" +
                                 callee_params[i].name + "'");
            }
        }
    }

    void check_body(const std::vector<NirStmt>& body, const NirFunction& fn,
                    const std::string& where_prefix) {
        int index = 0;
        for (const auto& stmt : body) {
            const std::string where = where_prefix + " statement " + std::to_string(index);
            switch (stmt.op) {
                case NirStmt::Op::assign:
                    check_operand(stmt.src, fn, where);
                    if (stmt.dst_is_field) {
                        if (fn.find_param(stmt.dst_name) == nullptr) {
                            throw InputError(where + ": field assign to unknown parameter '" +
                                             stmt.dst_name + "'");
                        }
                        if (stmt.src.kind == Operand::Kind::fnref) {
                            throw InputError(where + ": fields cannot hold fnrefs");
                        }
                    }
                    break;
                case NirStmt::Op::call: {
                    const NirFunction* callee = program.find(stmt.callee);
                    if (callee == nullptr) {
                        throw InputError(where + ": call to undefined function '" +
                                         stmt.callee + "'");
                    }
                    check_call_args(stmt, fn, callee->params, where);
                    break;
                }
                case NirStmt::Op::call_indirect: {
                    const NirParam* target = fn.find_param(stmt.callee);
                    if (target == nullptr || target->kind != ParamKind::fnptr) {
                        throw InputError(where + ": call_indirect target '" + stmt.callee +
                                         "' is not a fnptr parameter");
                    }
                    for (const auto& arg : stmt.args) check_operand(arg, fn, where);
                    break;
                }
                case NirStmt::Op::switch_: {
                    check_operand(stmt.selector, fn, where);
                    if (stmt.selector.kind == Operand::Kind::fnref) {
                        throw InputError(where + ": switch selector cannot be a fnref");
                    }
                    std::set<std::int64_t> values;
                    for (const auto& c : stmt.cases) {
                        if (!values.insert(c.value).second) {
                            throw InputError(where + ": duplicate switch case value " +
                                             std::to_string(c.value));
                        }
                    }
                    int case_index = 0;
                    for (const auto& c : stmt.cases) {
                        check_body(c.body, fn,
                                   where + " case " + std::to_string(case_index));
                        ++case_index;
                    }
                    check_body(stmt.default_body, fn, where + " default");
                    break;
                }
                case NirStmt::Op::syscall:
                    check_operand(stmt.number, fn, where);
                    if (stmt.number.kind == Operand::Kind::fnref) {
                        throw InputError(where + ": syscall number cannot be a fnref");
                    }
                    break;
                case NirStmt::Op::submit_pool:
                    check_operand(stmt.task, fn, where);
                    break;
            }
            ++index;
        }
    }

    void check_acyclic() {
        // Over-approximate indirect targets by every fnref appearing
        // outside submit_pool tasks; pool tasks are not executed inline.
        std::set<std::string> indirect_targets;
        for (const auto& fn : program.functions) {
            for_each_stmt(fn.body, [&](const NirStmt& stmt) {
                if (stmt.op == NirStmt::Op::call || stmt.op == NirStmt::Op::call_indirect) {
                    for (const auto& arg : stmt.args) {
                        if (arg.kind == Operand::Kind::fnref) indirect_targets.insert(arg.name);
                    }
                }
                if (stmt.op == NirStmt::Op::assign && stmt.src.kind == Operand::Kind::fnref) {
                    indirect_targets.insert(stmt.src.name);
                }
            });
        }
        std::map<std::string, std::set<std::string>> succ;
        for (const auto& fn : program.functions) {
            auto& edges = succ[fn.name];
            for_each_stmt(fn.body, [&](const NirStmt& stmt) {
                if (stmt.op == NirStmt::Op::call) {
                    edges.insert(stmt.callee);
                } else if (stmt.op == NirStmt::Op::call_indirect) {
                    edges.insert(indirect_targets.begin(), indirect_targets.end());
                }
            });
        }
        // Colored DFS cycle detection.
        std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
        std::function<void(const std::string&)> visit = [&](const std::string& node) {
            color[node] = 1;
            for (const auto& next : succ[node]) {
                if (color[next] == 1) {
                    throw InputError("recursive call cycle involving '" + next + "'");
                }
                if (color[next] == 0) visit(next);
            }
            color[node] = 2;
        };
        for (const auto& fn : program.functions) {
            if (color[fn.name] == 0) visit(fn.name);
        }
    }

    void run() {
        std::set<std::string> names;
        for (const auto& fn : program.functions) {
            if (fn.name.empty()) throw InputError("function with empty name");
            if (!allow_clone_names && fn.name.find('.') != std::string::npos) {
                throw InputError("function name may not contain '.': " + fn.name);
            }
            if (!names.insert(fn.name).second) {
                throw InputError("duplicate function name: " + fn.name);
            }
            std::set<std::string> param_names;
            for (const auto& p : fn.params) {
                if (!param_names.insert(p.name).second) {
                    throw InputError("function '" + fn.name + "': duplicate parameter '" +
                                     p.name + "'");
                }
            }
        }
        for (const auto& fn : program.functions) {
            check_body(fn.body, fn, "function '" + fn.name + "'");
        }
        std::map<std::pair<std::string, std::string>, std::string> seen_bindings;
        for (const auto& b : program.bindings) {
            if (program.find(b.function) == nullptr) {
                throw InputError("binding " + b.module + "." + b.method +
                                 " names missing function '" + b.function + "'");
            }
            auto [it, fresh] = seen_bindings.insert({{b.module, b.method}, b.function});
            if (!fresh && it->second != b.function) {
                throw InputError("conflicting duplicate binding " + b.module + "." + b.method);
            }
        }
        for (const auto& e : program.entries) {
            if (program.find(e) == nullptr) {
                throw InputError("entry names missing function '" + e + "'");
            }
        }
        check_acyclic();
    }
};

}  // namespace

NirProgram parse_nir_json(const json& doc) {
    if (!doc.is_object()) throw InputError("NIR program must be a JSON object");
    NirProgram program;
    int index = 0;
    for (const auto& f : doc.value("functions", json::array())) {
        NirFunction fn;
        fn.name = f.value("name", "");
        const std::string where = "function '" + fn.name + "'";
        for (const auto& p : f.value("params", json::array())) {
            NirParam param;
            param.name = p.value("name", "");
            const std::string kind = p.value("kind", "value");
            if (kind == "value") {
                param.kind = ParamKind::value;
            } else if (kind == "fnptr") {
                param.kind = ParamKind::fnptr;
            } else {
                throw InputError(where + ": unknown param kind '" + kind + "'");
            }
            fn.params.push_back(std::move(param));
        }
        fn.body = parse_body(f.value("body", json::array()), where);
        program.functions.push_back(std::move(fn));
        ++index;
    }
    for (const auto& b : doc.value("bindings", json::array())) {
        program.bindings.push_back(
            {b.value("module", ""), b.value("method", ""), b.value("function", "")});
    }
    for (const auto& e : doc.value("entries", json::array())) {
        program.entries.push_back(e.get<std::string>());
    }
    validate(program);
    return program;
}

NirProgram parse_nir(const std::filesystem::path& path) {
    return parse_nir_json(load_json_file(path));
}

void validate(const NirProgram& program, bool allow_clone_names) {
    Validator{program, allow_clone_names}.run();
}

json program_to_json(const NirProgram& program) {
    json doc;
    json functions = json::array();
    for (const auto& fn : program.functions) {
        json params = json::array();
        for (const auto& p : fn.params) {
            params.push_back(
                {{"name", p.name}, {"kind", p.kind == ParamKind::fnptr ? "fnptr" : "value"}});
        }
        functions.push_back(
            {{"name", fn.name}, {"params", params}, {"body", body_to_json(fn.body)}});
    }
    doc["functions"] = std::move(functions);
    json bindings = json::array();
    for (const auto& b : program.bindings) {
        bindings.push_back(
            {{"module", b.module}, {"method", b.method}, {"function", b.function}});
    }
    doc["bindings"] = std::move(bindings);
    doc["entries"] = program.entries;
    return doc;
}

RuntimeValue RuntimeValue::make_int(std::int64_t v) {
    RuntimeValue out;
    out.kind = Kind::integer;
    out.integer = v;
    return out;
}

RuntimeValue RuntimeValue::make_fnref(std::string name) {
    RuntimeValue out;
    out.kind = Kind::fnref;
    out.fnref = std::move(name);
    return out;
}

RuntimeValue RuntimeValue::make_object() {
    RuntimeValue out;
    out.kind = Kind::object;
    out.object = std::make_shared<RuntimeObject>();
    return out;
}

namespace {

struct Interpreter {
    const NirProgram& program;
    ExecutionLog log;
    std::map<std::string, std::map<const NirStmt*, int>> site_index;

    explicit Interpreter(const NirProgram& p) : program(p) {
        for (const auto& fn : p.functions) site_index[fn.name] = call_site_indices(fn);
    }

    struct Frame {
        const NirFunction* fn = nullptr;
        std::map<std::string, RuntimeValue> params;
        std::map<std::string, RuntimeValue> locals;
    };

    RuntimeValue resolve(const Operand& op, Frame& frame) {
        switch (op.kind) {
            case Operand::Kind::constant:
                return RuntimeValue::make_int(op.value);
            case Operand::Kind::param: {
                auto it = frame.params.find(op.name);
                if (it == frame.params.end()) {
                    throw AnalysisError("unknown parameter '" + op.name + "' in " +
                                        frame.fn->name);
                }
                return it->second;
            }
            case Operand::Kind::local: {
                auto it = frame.locals.find(op.name);
                if (it == frame.locals.end()) {
                    throw AnalysisError("read of unassigned local '" + op.name + "' in " +
                                        frame.fn->name);
                }
                return it->second;
            }
            case Operand::Kind::field: {
                auto it = frame.params.find(op.name);
                if (it == frame.params.end() || it->second.kind != RuntimeValue::Kind::object) {
                    throw AnalysisError("field read from non-object '" + op.name + "' in " +
                                        frame.fn->name);
                }
                auto field = it->second.object->find(op.field);
                if (field == it->second.object->end()) {
                    return RuntimeValue::make_int(0);  // unset fields read as 0
                }
                return *field->second;
            }
            case Operand::Kind::fnref:
                return RuntimeValue::make_fnref(op.name);
        }
        return RuntimeValue::make_int(0);
    }

    void run_call(const std::string& callee, std::vector<RuntimeValue> args) {
        const NirFunction* fn = program.find(callee);
        if (fn == nullptr) throw AnalysisError("call to undefined function '" + callee + "'");
        if (args.size() != fn->params.size()) {
            throw AnalysisError("arity mismatch calling '" + callee + "'");
        }
        Frame frame;
        frame.fn = fn;
        for (std::size_t i = 0; i < args.size(); ++i) {
            frame.params.emplace(fn->params[i].name, std::move(args[i]));
        }
        run_body(fn->body, frame);
    }

    void run_body(const std::vector<NirStmt>& body, Frame& frame) {
        for (const auto& stmt : body) run_stmt(stmt, frame);
    }

    void run_stmt(const NirStmt& stmt, Frame& frame) {
        switch (stmt.op) {
            case NirStmt::Op::assign: {
                RuntimeValue value = resolve(stmt.src, frame);
                if (stmt.dst_is_field) {
                    auto it = frame.params.find(stmt.dst_name);
                    if (it == frame.params.end() ||
                        it->second.kind != RuntimeValue::Kind::object) {
                        throw AnalysisError("field assign to non-object '" + stmt.dst_name +
                                            "' in " + frame.fn->name);
                    }
                    (*it->second.object)[stmt.dst_field] =
                        std::make_shared<RuntimeValue>(std::move(value));
                } else {
                    frame.locals[stmt.dst_name] = std::move(value);
                }
                break;
            }
            case NirStmt::Op::call: {
                log.call_edges.push_back(
                    {frame.fn->name, site_index[frame.fn->name][&stmt], stmt.callee});
                std::vector<RuntimeValue> args;
                for (const auto& a : stmt.args) args.push_back(resolve(a, frame));
                run_call(stmt.callee, std::move(args));
                break;
            }
            case NirStmt::Op::call_indirect: {
                RuntimeValue target = resolve(Operand::param(stmt.callee), frame);
                if (target.kind != RuntimeValue::Kind::fnref) {
                    throw AnalysisError("call_indirect through unbound fnptr '" + stmt.callee +
                                        "' in " + frame.fn->name);
                }
                log.call_edges.push_back(
                    {frame.fn->name, site_index[frame.fn->name][&stmt], target.fnref});
                std::vector<RuntimeValue> args;
                for (const auto& a : stmt.args) args.push_back(resolve(a, frame));
                run_call(target.fnref, std::move(args));
                break;
            }
            case NirStmt::Op::switch_: {
                RuntimeValue sel = resolve(stmt.selector, frame);
                if (sel.kind != RuntimeValue::Kind::integer) {
                    throw AnalysisError("switch selector is not an integer in " +
                                        frame.fn->name);
                }
                const std::vector<NirStmt>* chosen = &stmt.default_body;
                for (const auto& c : stmt.cases) {
                    if (c.value == sel.integer) {
                        chosen = &c.body;
                        break;
                    }
                }
                run_body(*chosen, frame);
                break;
            }
            case NirStmt::Op::syscall: {
                RuntimeValue n = resolve(stmt.number, frame);
                if (n.kind != RuntimeValue::Kind::integer) {
                    throw AnalysisError("syscall number did not resolve to an integer in " +
                                        frame.fn->name);
                }
                log.syscalls.push_back(n.integer);
                break;
            }
            case NirStmt::Op::submit_pool: {
                RuntimeValue task = resolve(stmt.task, frame);
                if (task.kind != RuntimeValue::Kind::fnref) {
                    throw AnalysisError("submit_pool task did not resolve to a function in " +
                                        frame.fn->name);
                }
                log.pool_tasks.push_back(task.fnref);
                break;
            }
        }
    }
};

}  // namespace

ExecutionLog interpret(const NirProgram& program, const std::string& entry,
                       const std::vector<RuntimeValue>& args) {
    if (program.find(entry) == nullptr) {
        throw InputError("interpret: entry '" + entry + "' not found");
    }
    Interpreter interp(program);
    interp.run_call(entry, args);
    return std::move(interp.log);
}

ExecutionLog interpret_with_default_args(const NirProgram& program, const std::string& entry) {
    const NirFunction* fn = program.find(entry);
    if (fn == nullptr) throw InputError("interpret: entry '" + entry + "' not found");
    std::vector<RuntimeValue> args;
    for (const auto& p : fn->params) {
        if (p.kind == ParamKind::fnptr) {
            throw AnalysisError("entry '" + entry + "' has a fnptr parameter; pass args");
        }
        args.push_back(RuntimeValue::make_object());
    }
    return interpret(program, entry, args);
}

std::string project_clone_name(const std::string& name) {
    auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

void for_each_stmt(const std::vector<NirStmt>& body,
                   const std::function<void(const NirStmt&)>& fn) {
    for (const auto& stmt : body) {
        fn(stmt);
        if (stmt.op == NirStmt::Op::switch_) {
            for (const auto& c : stmt.cases) for_each_stmt(c.body, fn);
            for_each_stmt(stmt.default_body, fn);
        }
    }
}

std::map<const NirStmt*, int> call_site_indices(const NirFunction& fn) {
    std::map<const NirStmt*, int> out;
    int counter = 0;
    for_each_stmt(fn.body, [&](const NirStmt& stmt) {
        if (stmt.op == NirStmt::Op::call || stmt.op == NirStmt::Op::call_indirect) {
            out[&stmt] = counter++;
        }
    });
    return out;
}

std::map<const NirStmt*, int> stmt_indices(const NirFunction& fn) {
    std::map<const NirStmt*, int> out;
    int counter = 0;
    for_each_stmt(fn.body, [&](const NirStmt& stmt) { out[&stmt] = counter++; });
    return out;
}

}  // namespace surface::nir
