#include "surface/native_callgraph.hpp"

#include <algorithm>
#include <deque>
#include <optional>

namespace surface::ncg {

using nir::NirFunction;
using nir::NirProgram;
using nir::NirStmt;
using nir::Operand;
using nir::ParamKind;

std::map<std::string, std::set<std::string>> NativeCallGraph::successors() const {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& n : nodes) out[n];
    for (const auto& e : edges) out[e.caller].insert(e.callee);
    return out;
}

bool NativeCallGraph::has_edge(const std::string& caller, const std::string& callee) const {
    return std::any_of(edges.begin(), edges.end(), [&](const NcgEdge& e) {
        return e.caller == caller && e.callee == callee;
    });
}

std::set<std::string> NativeCallGraph::reachable_from(const std::string& from) const {
    auto succ = successors();
    std::set<std::string> visited;
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        std::string current = queue.front();
        queue.pop_front();
        for (const auto& next : succ[current]) {
            if (visited.insert(next).second) queue.push_back(next);
        }
    }
    return visited;
}

json native_cg_to_json(const NativeCallGraph& cg) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : cg.nodes) doc["nodes"].push_back(n);
    doc["edges"] = json::array();
    for (const auto& e : cg.edges) {
        doc["edges"].push_back({{"caller", e.caller}, {"site", e.site}, {"callee", e.callee}});
    }
    return doc;
}

NativeCallGraph native_cg_from_json(const json& doc) {
    NativeCallGraph cg;
    for (const auto& n : doc.value("nodes", json::array())) {
        cg.nodes.insert(n.get<std::string>());
    }
    for (const auto& e : doc.value("edges", json::array())) {
        cg.edges.insert({e.value("caller", ""), e.value("site", 0), e.value("callee", "")});
    }
    return cg;
}

json clone_report_to_json(const CloneReport& report) {
    json doc;
    doc["clones"] = json::array();
    for (const auto& c : report.clones) {
        doc["clones"].push_back({{"original", c.original},
                                 {"clone", c.clone},
                                 {"reason", c.reason == CloneReason::switch_ ? "switch" : "fnptr"},
                                 {"context", c.context},
                                 {"depth", c.depth}});
    }
    doc["indeterminate_sites"] = report.indeterminate_sites;
    return doc;
}

namespace {

struct CallSiteRef {
    const NirFunction* caller = nullptr;
    const NirStmt* stmt = nullptr;
    int call_index = 0;  // pre-order call statement numbering
    int stmt_index = 0;  // pre-order statement numbering
};

// Program text view: indices and call sites, shared by the analyses.
struct ProgramView {
    const NirProgram& program;
    std::map<std::string, std::map<const NirStmt*, int>> call_idx;
    std::map<std::string, std::map<const NirStmt*, int>> stmt_idx;
    std::map<std::string, std::vector<CallSiteRef>> sites_of;  // callee -> sites

    explicit ProgramView(const NirProgram& p) : program(p) {
        for (const auto& fn : p.functions) {
            call_idx[fn.name] = nir::call_site_indices(fn);
            stmt_idx[fn.name] = nir::stmt_indices(fn);
        }
        for (const auto& fn : p.functions) {
            nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
                if (stmt.op != NirStmt::Op::call) return;
                sites_of[stmt.callee].push_back({&fn, &stmt, call_idx[fn.name].at(&stmt),
                                                 stmt_idx[fn.name].at(&stmt)});
            });
        }
    }

    int param_index(const NirFunction& fn, const std::string& name) const {
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            if (fn.params[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }

    // ---- fnref flow (flow-insensitive) ----------------------------

    std::map<std::pair<std::string, std::string>, std::set<std::string>> flow_memo;

    std::set<std::string> fnrefs_of_operand(const NirFunction& fn, const Operand& op,
                                            std::set<std::string>& local_guard) {
        switch (op.kind) {
            case Operand::Kind::fnref:
                return {op.name};
            case Operand::Kind::param: {
                const auto* param = fn.find_param(op.name);
                if (param != nullptr && param->kind == ParamKind::fnptr) {
                    return fnptr_flow(fn.name, op.name);
                }
                return {};
            }
            case Operand::Kind::local: {
                std::string key = fn.name + "" + op.name;
                if (!local_guard.insert(key).second) return {};
                std::set<std::string> out;
                nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
                    if (stmt.op == NirStmt::Op::assign && !stmt.dst_is_field &&
                        stmt.dst_name == op.name) {
                        auto sub = fnrefs_of_operand(fn, stmt.src, local_guard);
                        out.insert(sub.begin(), sub.end());
                    }
                });
                return out;
            }
            default:
                return {};
        }
    }

    // Every fnref that can flow into fnptr parameter `param` of `fn`
    // from any call site in the program.
    std::set<std::string> fnptr_flow(const std::string& fn_name, const std::string& param) {
        auto key = std::make_pair(fn_name, param);
        auto memo = flow_memo.find(key);
        if (memo != flow_memo.end()) return memo->second;
        flow_memo[key] = {};  // cycle guard; caller chains are acyclic
        const NirFunction* fn = program.find(fn_name);
        std::set<std::string> out;
        if (fn != nullptr) {
            int pos = param_index(*fn, param);
            auto sites = sites_of.find(fn_name);
            if (pos >= 0 && sites != sites_of.end()) {
                for (const auto& site : sites->second) {
                    if (pos >= static_cast<int>(site.stmt->args.size())) continue;
                    std::set<std::string> guard;
                    auto sub = fnrefs_of_operand(*site.caller, site.stmt->args[pos], guard);
                    out.insert(sub.begin(), sub.end());
                }
            }
        }
        flow_memo[key] = out;
        return out;
    }

    // ---- backward constant resolution ------------------------------

    using Guard = std::set<std::string>;

    std::optional<std::int64_t> resolve_int(const NirFunction& fn, const Operand& op,
                                            int before, bool interprocedural, Guard& guard);

    // Value of `objparam.field` as seen at statement index `before` in
    // `fn`. Fields are only written through parameter names.
    std::optional<std::int64_t> resolve_field(const NirFunction& fn, const std::string& objparam,
                                              const std::string& field, int before,
                                              bool interprocedural, Guard& guard) {
        const auto& indices = stmt_idx.at(fn.name);
        const NirStmt* last_assign = nullptr;
        int last_index = -1;
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op != NirStmt::Op::assign || !stmt.dst_is_field) return;
            if (stmt.dst_name != objparam || stmt.dst_field != field) return;
            int index = indices.at(&stmt);
            if (index < before && index > last_index) {
                last_index = index;
                last_assign = &stmt;
            }
        });
        if (last_assign != nullptr) {
            return resolve_int(fn, last_assign->src, last_index, interprocedural, guard);
        }
        if (!interprocedural) return std::nullopt;
        // Not assigned locally: the object came in through a parameter;
        // consult every caller and require agreement.
        if (fn.find_param(objparam) == nullptr) return std::nullopt;
        std::string key = "F" + fn.name + "" + objparam + "" + field;
        if (!guard.insert(key).second) return std::nullopt;
        int pos = param_index(fn, objparam);
        auto sites = sites_of.find(fn.name);
        if (sites == sites_of.end() || sites->second.empty()) return std::nullopt;
        std::set<std::int64_t> values;
        for (const auto& site : sites->second) {
            if (pos >= static_cast<int>(site.stmt->args.size())) return std::nullopt;
            Operand arg = site.stmt->args[static_cast<std::size_t>(pos)];
            // A local object must alias a parameter of the caller.
            if (arg.kind == Operand::Kind::local) {
                std::optional<Operand> src = unique_local_source(*site.caller, arg.name);
                if (!src || src->kind != Operand::Kind::param) return std::nullopt;
                arg = *src;
            }
            if (arg.kind != Operand::Kind::param) return std::nullopt;
            auto v = resolve_field(*site.caller, arg.name, field, site.stmt_index,
                                   interprocedural, guard);
            if (!v) return std::nullopt;
            values.insert(*v);
        }
        if (values.size() == 1) return *values.begin();
        return std::nullopt;
    }

    std::optional<Operand> unique_local_source(const NirFunction& fn,
                                               const std::string& local) const {
        const NirStmt* found = nullptr;
        int count = 0;
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::assign && !stmt.dst_is_field &&
                stmt.dst_name == local) {
                ++count;
                found = &stmt;
            }
        });
        if (count == 1 && found != nullptr) return found->src;
        return std::nullopt;
    }
};

std::optional<std::int64_t> ProgramView::resolve_int(const NirFunction& fn, const Operand& op,
                                                     int before, bool interprocedural,
                                                     Guard& guard) {
    switch (op.kind) {
        case Operand::Kind::constant:
            return op.value;
        case Operand::Kind::local: {
            const auto& indices = stmt_idx.at(fn.name);
            const NirStmt* last_assign = nullptr;
            int last_index = -1;
            nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
                if (stmt.op != NirStmt::Op::assign || stmt.dst_is_field ||
                    stmt.dst_name != op.name) {
                    return;
                }
                int index = indices.at(&stmt);
                if (index < before && index > last_index) {
                    last_index = index;
                    last_assign = &stmt;
                }
            });
            if (last_assign == nullptr) return std::nullopt;
            return resolve_int(fn, last_assign->src, last_index, interprocedural, guard);
        }
        case Operand::Kind::field:
            return resolve_field(fn, op.name, op.field, before, interprocedural, guard);
        case Operand::Kind::param: {
            if (!interprocedural) return std::nullopt;
            std::string key = "P" + fn.name + "" + op.name;
            if (!guard.insert(key).second) return std::nullopt;
            int pos = param_index(fn, op.name);
            auto sites = sites_of.find(fn.name);
            if (pos < 0 || sites == sites_of.end() || sites->second.empty()) {
                return std::nullopt;
            }
            std::set<std::int64_t> values;
            for (const auto& site : sites->second) {
                if (pos >= static_cast<int>(site.stmt->args.size())) return std::nullopt;
                auto v = resolve_int(*site.caller, site.stmt->args[static_cast<std::size_t>(pos)],
                                     site.stmt_index, interprocedural, guard);
                if (!v) return std::nullopt;
                values.insert(*v);
            }
            if (values.size() == 1) return *values.begin();
            return std::nullopt;
        }
        case Operand::Kind::fnref:
            return std::nullopt;
    }
    return std::nullopt;
}

// Mutable pre-order walk, for applying call-site rewrites.
void for_each_stmt_mut(std::vector<NirStmt>& body, const std::function<void(NirStmt&)>& fn) {
    for (auto& stmt : body) {
        fn(stmt);
        if (stmt.op == NirStmt::Op::switch_) {
            for (auto& c : stmt.cases) for_each_stmt_mut(c.body, fn);
            for_each_stmt_mut(stmt.default_body, fn);
        }
    }
}

// ---- switch-case specialization ------------------------------------

struct SwitchInfo {
    const NirStmt* stmt = nullptr;
    std::string selector_param;  // parameter feeding the selector
    std::string selector_field;  // "" when the parameter itself is the selector
};

// Traces the selector operand back to a parameter or parameter field
// through single-assignment locals.
std::optional<std::pair<std::string, std::string>> selector_origin(const ProgramView& view,
                                                                   const NirFunction& fn,
                                                                   const Operand& op,
                                                                   int depth = 0) {
    if (depth > 16) return std::nullopt;
    switch (op.kind) {
        case Operand::Kind::param:
            if (fn.find_param(op.name) != nullptr) return std::make_pair(op.name, std::string());
            return std::nullopt;
        case Operand::Kind::field:
            if (fn.find_param(op.name) != nullptr) return std::make_pair(op.name, op.field);
            return std::nullopt;
        case Operand::Kind::local: {
            auto src = view.unique_local_source(fn, op.name);
            if (!src) return std::nullopt;
            return selector_origin(view, fn, *src, depth + 1);
        }
        default:
            return std::nullopt;
    }
}

// Branches call different functions: at least two bodies (cases plus a
// non-empty default) with unequal direct-call sets.
bool branches_call_different_functions(const NirStmt& sw) {
    std::vector<std::set<std::string>> call_sets;
    auto calls_in = [](const std::vector<NirStmt>& body) {
        std::set<std::string> out;
        nir::for_each_stmt(body, [&](const NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::call) out.insert(stmt.callee);
        });
        return out;
    };
    for (const auto& c : sw.cases) call_sets.push_back(calls_in(c.body));
    if (!sw.default_body.empty()) call_sets.push_back(calls_in(sw.default_body));
    for (std::size_t i = 0; i < call_sets.size(); ++i) {
        for (std::size_t j = i + 1; j < call_sets.size(); ++j) {
            if (call_sets[i] != call_sets[j]) return true;
        }
    }
    return false;
}

std::vector<SwitchInfo> candidate_switches(const ProgramView& view, const NirFunction& fn) {
    std::vector<SwitchInfo> out;
    nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
        if (stmt.op != NirStmt::Op::switch_) return;
        auto origin = selector_origin(view, fn, stmt.selector);
        if (!origin) return;
        if (!branches_call_different_functions(stmt)) return;
        out.push_back({&stmt, origin->first, origin->second});
    });
    return out;
}

// Constant feeding the selector at one call site, or nullopt.
std::optional<std::int64_t> selector_constant_at_site(ProgramView& view,
                                                      const SwitchInfo& info,
                                                      const NirFunction& switch_fn,
                                                      const CallSiteRef& site,
                                                      bool interprocedural) {
    int pos = view.param_index(switch_fn, info.selector_param);
    if (pos < 0 || pos >= static_cast<int>(site.stmt->args.size())) return std::nullopt;
    Operand arg = site.stmt->args[static_cast<std::size_t>(pos)];
    ProgramView::Guard guard;
    if (info.selector_field.empty()) {
        return view.resolve_int(*site.caller, arg, site.stmt_index, interprocedural, guard);
    }
    if (arg.kind == Operand::Kind::local) {
        auto src = view.unique_local_source(*site.caller, arg.name);
        if (!src || src->kind != Operand::Kind::param) return std::nullopt;
        arg = *src;
    }
    if (arg.kind != Operand::Kind::param) return std::nullopt;
    return view.resolve_field(*site.caller, arg.name, info.selector_field, site.stmt_index,
                              interprocedural, guard);
}

NirFunction make_switch_clone(const NirFunction& original, const NirStmt* sw,
                              std::int64_t constant, const std::string& clone_name) {
    NirFunction clone = original;  // deep copy
    clone.name = clone_name;
    // Locate the copied switch by statement position, then splice in the
    // selected branch.
    std::vector<const NirStmt*> orig_order;
    nir::for_each_stmt(original.body, [&](const NirStmt& s) { orig_order.push_back(&s); });
    int target_pos = -1;
    for (std::size_t i = 0; i < orig_order.size(); ++i) {
        if (orig_order[i] == sw) target_pos = static_cast<int>(i);
    }
    std::vector<NirStmt*> clone_order;
    for_each_stmt_mut(clone.body, [&](NirStmt& s) { clone_order.push_back(&s); });
    NirStmt* clone_sw = clone_order.at(static_cast<std::size_t>(target_pos));

    const std::vector<NirStmt>* selected = &clone_sw->default_body;
    for (const auto& c : clone_sw->cases) {
        if (c.value == constant) {
            selected = &c.body;
            break;
        }
    }
    std::vector<NirStmt> branch = *selected;  // copy before mutating the switch away

    std::function<bool(std::vector<NirStmt>&)> splice = [&](std::vector<NirStmt>& body) {
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (&body[i] == clone_sw) {
                body.erase(body.begin() + static_cast<std::ptrdiff_t>(i));
                body.insert(body.begin() + static_cast<std::ptrdiff_t>(i),
                            branch.begin(), branch.end());
                return true;
            }
            if (body[i].op == NirStmt::Op::switch_) {
                for (auto& c : body[i].cases) {
                    if (splice(c.body)) return true;
                }
                if (splice(body[i].default_body)) return true;
            }
        }
        return false;
    };
    splice(clone.body);
    return clone;
}

}  // namespace

NativeCallGraph build_base_cg(const nir::NirProgram& program) {
    ProgramView view(program);
    NativeCallGraph cg;
    for (const auto& fn : program.functions) cg.nodes.insert(fn.name);
    for (const auto& fn : program.functions) {
        const auto& call_idx = view.call_idx.at(fn.name);
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::call) {
                cg.edges.insert({fn.name, call_idx.at(&stmt), stmt.callee});
            } else if (stmt.op == NirStmt::Op::call_indirect) {
                for (const auto& target : view.fnptr_flow(fn.name, stmt.callee)) {
                    cg.edges.insert({fn.name, call_idx.at(&stmt), target});
                }
            }
        });
    }
    return cg;
}

std::vector<SwitchCandidate> find_switch_candidates(const nir::NirProgram& program) {
    ProgramView view(program);
    std::vector<SwitchCandidate> out;
    for (const auto& fn : program.functions) {
        for (const auto& info : candidate_switches(view, fn)) {
            auto sites = view.sites_of.find(fn.name);
            if (sites == view.sites_of.end()) continue;
            for (const auto& site : sites->second) {
                if (selector_constant_at_site(view, info, fn, site,
                                              /*interprocedural=*/false)) {
                    out.push_back({fn.name, site.caller->name, site.call_index});
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

SpecializeResult specialize_switch(const nir::NirProgram& program) {
    ProgramView view(program);
    SpecializeResult result;

    struct Redirect {
        std::string caller;
        int call_index;
        std::string new_callee;
    };
    std::vector<Redirect> redirects;
    std::map<std::pair<std::string, std::int64_t>, NirFunction> clones;

    for (const auto& fn : program.functions) {
        auto infos = candidate_switches(view, fn);
        if (infos.empty()) continue;
        auto sites = view.sites_of.find(fn.name);
        if (sites == view.sites_of.end()) continue;
        if (infos.size() > 1) {
            // Several candidate switches in one function would need a
            // composite context; those sites stay context-insensitive.
            result.report.indeterminate_sites += static_cast<int>(sites->second.size());
            continue;
        }
        const SwitchInfo& info = infos.front();
        for (const auto& site : sites->second) {
            auto constant = selector_constant_at_site(view, info, fn, site,
                                                      /*interprocedural=*/true);
            if (!constant) {
                result.report.indeterminate_sites += 1;
                continue;
            }
            std::string clone_name = fn.name + "." + std::to_string(*constant);
            auto key = std::make_pair(fn.name, *constant);
            if (!clones.count(key)) {
                clones.emplace(key, make_switch_clone(fn, info.stmt, *constant, clone_name));
                result.report.clones.push_back(
                    {fn.name, clone_name, CloneReason::switch_, std::to_string(*constant), 1});
            }
            redirects.push_back({site.caller->name, site.call_index, clone_name});
        }
    }

    result.program = program;  // deep copy
    // Apply redirects by call index (the copy preserves statement order).
    for (auto& fn : result.program.functions) {
        std::vector<NirStmt*> call_order;
        for_each_stmt_mut(fn.body, [&](NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::call || stmt.op == NirStmt::Op::call_indirect) {
                call_order.push_back(&stmt);
            }
        });
        for (const auto& r : redirects) {
            if (r.caller != fn.name) continue;
            NirStmt* stmt = call_order.at(static_cast<std::size_t>(r.call_index));
            stmt->callee = r.new_callee;
        }
    }
    for (auto& [key, clone] : clones) {
        result.program.functions.push_back(std::move(clone));
    }
    std::sort(result.report.clones.begin(), result.report.clones.end());
    nir::validate(result.program, /*allow_clone_names=*/true);
    return result;
}

SpecializeResult specialize_fnptr(const nir::NirProgram& program) {
    ProgramView view(program);
    SpecializeResult result;

    // Parameters invoked via call_indirect or used as a submit_pool
    // task, then closed transitively over forwarding calls.
    std::map<std::pair<std::string, std::string>, int> invoking_depth;
    for (const auto& fn : program.functions) {
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            bool invoking =
                (stmt.op == NirStmt::Op::call_indirect) ||
                (stmt.op == NirStmt::Op::submit_pool &&
                 stmt.task.kind == Operand::Kind::param);
            if (!invoking) return;
            const std::string& param =
                stmt.op == NirStmt::Op::call_indirect ? stmt.callee : stmt.task.name;
            invoking_depth[{fn.name, param}] = 1;
        });
    }
    // forwards: (fn, param) -> set of (callee, callee fnptr param)
    std::map<std::pair<std::string, std::string>,
             std::set<std::pair<std::string, std::string>>>
        forwards;
    for (const auto& fn : program.functions) {
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op != NirStmt::Op::call) return;
            const NirFunction* callee = program.find(stmt.callee);
            if (callee == nullptr) return;
            for (std::size_t i = 0; i < stmt.args.size() && i < callee->params.size(); ++i) {
                if (callee->params[i].kind != ParamKind::fnptr) continue;
                const Operand& arg = stmt.args[i];
                if (arg.kind == Operand::Kind::param &&
                    fn.find_param(arg.name) != nullptr &&
                    fn.find_param(arg.name)->kind == ParamKind::fnptr) {
                    forwards[{fn.name, arg.name}].insert({callee->name, callee->params[i].name});
                }
            }
        });
    }
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [from, tos] : forwards) {
            for (const auto& to : tos) {
                auto target = invoking_depth.find(to);
                if (target == invoking_depth.end()) continue;
                int depth = target->second + 1;
                auto current = invoking_depth.find(from);
                if (current == invoking_depth.end() || current->second < depth) {
                    // Keep the longest chain for reporting.
                    if (current == invoking_depth.end()) {
                        invoking_depth[from] = depth;
                        grew = true;
                    } else if (current->second < depth) {
                        current->second = depth;
                        grew = true;
                    }
                }
            }
        }
    }

    // Functions with more than one invoked fnptr parameter cannot carry
    // a single-name context; keep them context-insensitive.
    std::set<std::string> ambiguous_fns;
    {
        std::map<std::string, int> counts;
        for (const auto& [key, depth] : invoking_depth) {
            (void)depth;
            counts[key.first] += 1;
        }
        for (const auto& [name, count] : counts) {
            if (count > 1) ambiguous_fns.insert(name);
        }
    }

    auto invoking_param_of = [&](const std::string& fn_name) -> std::optional<std::string> {
        std::optional<std::string> found;
        for (const auto& [key, depth] : invoking_depth) {
            (void)depth;
            if (key.first == fn_name) found = key.second;
        }
        return found;
    };

    std::map<std::pair<std::string, std::string>, NirFunction> clones;  // (fn, fnref)
    std::function<std::string(const std::string&, const std::string&, const std::string&)>
        make_clone = [&](const std::string& fn_name, const std::string& param,
                         const std::string& fnref) -> std::string {
        auto key = std::make_pair(fn_name, fnref);
        auto memo = clones.find(key);
        std::string clone_name = fn_name + "." + fnref;
        if (memo != clones.end()) return clone_name;
        const NirFunction* original = program.find(fn_name);
        NirFunction clone = *original;
        clone.name = clone_name;
        clones.emplace(key, clone);  // placeholder first; rewrites below may recurse
        for_each_stmt_mut(clones.at(key).body, [&](NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::call_indirect && stmt.callee == param) {
                stmt.op = NirStmt::Op::call;
                stmt.callee = fnref;
            } else if (stmt.op == NirStmt::Op::submit_pool &&
                       stmt.task.kind == Operand::Kind::param && stmt.task.name == param) {
                stmt.task = Operand::fnref(fnref);
            } else if (stmt.op == NirStmt::Op::call) {
                const NirFunction* callee = program.find(stmt.callee);
                if (callee == nullptr) return;
                int forwarded_positions = 0;
                int position = -1;
                for (std::size_t i = 0; i < stmt.args.size() && i < callee->params.size();
                     ++i) {
                    if (callee->params[i].kind == ParamKind::fnptr &&
                        stmt.args[i].kind == Operand::Kind::param &&
                        stmt.args[i].name == param) {
                        ++forwarded_positions;
                        position = static_cast<int>(i);
                    }
                }
                if (forwarded_positions != 1) return;
                const std::string& next_param =
                    callee->params[static_cast<std::size_t>(position)].name;
                if (!invoking_depth.count({callee->name, next_param})) return;
                if (ambiguous_fns.count(callee->name)) return;
                stmt.callee = make_clone(callee->name, next_param, fnref);
            }
        });
        int depth = invoking_depth.count({fn_name, param}) ? invoking_depth[{fn_name, param}] : 1;
        result.report.clones.push_back(
            {fn_name, clone_name, CloneReason::fnptr, fnref, depth});
        return clone_name;
    };

    // Trigger sites: calls passing a concrete fnref (or a unique local
    // fnref) into an invoked fnptr parameter.
    struct Redirect {
        std::string caller;
        int call_index;
        std::string new_callee;
    };
    std::vector<Redirect> redirects;
    for (const auto& fn : program.functions) {
        const auto& call_idx = view.call_idx.at(fn.name);
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op != NirStmt::Op::call) return;
            const NirFunction* callee = program.find(stmt.callee);
            if (callee == nullptr) return;
            int concrete_positions = 0;
            int position = -1;
            std::string fnref;
            bool ambiguous_local = false;
            for (std::size_t i = 0; i < stmt.args.size() && i < callee->params.size(); ++i) {
                if (callee->params[i].kind != ParamKind::fnptr) continue;
                if (!invoking_depth.count({callee->name, callee->params[i].name})) continue;
                const Operand& arg = stmt.args[i];
                if (arg.kind == Operand::Kind::fnref) {
                    ++concrete_positions;
                    position = static_cast<int>(i);
                    fnref = arg.name;
                } else if (arg.kind == Operand::Kind::local) {
                    std::set<std::string> guard;
                    auto refs = view.fnrefs_of_operand(fn, arg, guard);
                    if (refs.size() == 1) {
                        ++concrete_positions;
                        position = static_cast<int>(i);
                        fnref = *refs.begin();
                    } else if (refs.size() > 1) {
                        ambiguous_local = true;
                    }
                }
            }
            if (ambiguous_local) {
                result.report.indeterminate_sites += 1;
                return;
            }
            if (concrete_positions != 1) {
                if (concrete_positions > 1) result.report.indeterminate_sites += 1;
                return;
            }
            if (ambiguous_fns.count(callee->name)) {
                result.report.indeterminate_sites += 1;
                return;
            }
            const std::string& param = callee->params[static_cast<std::size_t>(position)].name;
            std::string clone_name = make_clone(callee->name, param, fnref);
            redirects.push_back({fn.name, call_idx.at(&stmt), clone_name});
        });
    }

    result.program = program;  // deep copy
    for (auto& fn : result.program.functions) {
        std::vector<NirStmt*> call_order;
        for_each_stmt_mut(fn.body, [&](NirStmt& stmt) {
            if (stmt.op == NirStmt::Op::call || stmt.op == NirStmt::Op::call_indirect) {
                call_order.push_back(&stmt);
            }
        });
        for (const auto& r : redirects) {
            if (r.caller != fn.name) continue;
            NirStmt* stmt = call_order.at(static_cast<std::size_t>(r.call_index));
            stmt->callee = r.new_callee;
        }
    }
    for (auto& [key, clone] : clones) {
        result.program.functions.push_back(std::move(clone));
    }
    std::sort(result.report.clones.begin(), result.report.clones.end());
    nir::validate(result.program, /*allow_clone_names=*/true);
    return result;
}

SyscallResolution resolve_syscalls(const nir::NirProgram& program, const NativeCallGraph& cg,
                                   const policy::SyscallTable& table, Mode mode) {
    ProgramView view(program);
    SyscallResolution result;

    // Per-function direct syscalls.
    std::map<std::string, std::set<std::string>> direct;
    std::set<std::string> direct_over;
    for (const auto& fn : program.functions) {
        const auto& indices = view.stmt_idx.at(fn.name);
        nir::for_each_stmt(fn.body, [&](const NirStmt& stmt) {
            if (stmt.op != NirStmt::Op::syscall) return;
            int index = indices.at(&stmt);
            ProgramView::Guard guard;
            auto number = view.resolve_int(fn, stmt.number, index, /*interprocedural=*/true,
                                           guard);
            if (!number) {
                result.unresolved_sites.push_back({fn.name, index});
                if (mode == Mode::strict) {
                    throw AnalysisError("unresolved syscall number in function '" + fn.name +
                                        "' statement " + std::to_string(index));
                }
                direct_over.insert(fn.name);
                return;
            }
            auto name = table.name_of(*number);
            if (!name) {
                throw AnalysisError("syscall number " + std::to_string(*number) +
                                    " (function '" + fn.name + "' statement " +
                                    std::to_string(index) + ") is not in the syscall table");
            }
            direct[fn.name].insert(*name);
        });
    }

    const std::set<std::string> all_names =
        direct_over.empty() ? std::set<std::string>{} : table.all_names();
    result.direct_by_function = direct;
    for (const auto& fn : program.functions) {
        std::set<std::string> reach = cg.reachable_from(fn.name);
        reach.insert(fn.name);
        std::set<std::string> out;
        bool over = false;
        for (const auto& g : reach) {
            auto it = direct.find(g);
            if (it != direct.end()) out.insert(it->second.begin(), it->second.end());
            if (direct_over.count(g)) over = true;
        }
        if (over) {
            out.insert(all_names.begin(), all_names.end());
            result.over_approximated.insert(fn.name);
        }
        result.by_function[fn.name] = std::move(out);
    }
    return result;
}

json syscall_resolution_to_json(const SyscallResolution& res) {
    json doc;
    json by_fn = json::object();
    for (const auto& [fn, names] : res.by_function) {
        by_fn[fn] = json::array();
        for (const auto& n : names) by_fn[fn].push_back(n);
    }
    doc["by_function"] = std::move(by_fn);
    doc["over_approximated"] = json::array();
    for (const auto& fn : res.over_approximated) doc["over_approximated"].push_back(fn);
    doc["unresolved_sites"] = json::array();
    for (const auto& [fn, index] : res.unresolved_sites) {
        doc["unresolved_sites"].push_back({{"function", fn}, {"statement", index}});
    }
    return doc;
}

}  // namespace surface::ncg
