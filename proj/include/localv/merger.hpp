// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "localv/doc_index.hpp"
#include "localv/errors.hpp"
#include "localv/generator.hpp"
#include "localv/planner.hpp"
#include "localv/providers.hpp"
#include "localv/retriever.hpp"
#include "localv/text.hpp"
#include "localv/verilog_ast.hpp"

namespace localv {

struct MergeConflict {
    enum class Kind { DuplicateDeclaration, UndeclaredIdentifier, PortMismatch };
    Kind kind;
    std::string identifier;
    std::string detail;
};

inline const char* conflict_kind_name(MergeConflict::Kind k) {
    switch (k) {
        case MergeConflict::Kind::DuplicateDeclaration: return "duplicate_declaration";
        case MergeConflict::Kind::UndeclaredIdentifier: return "undeclared_identifier";
        case MergeConflict::Kind::PortMismatch: return "port_mismatch";
    }
    return "unknown";
}

struct LineProvenance {
    int first_line = 0;
    int last_line = 0;
    std::string fragment_id; // "skeleton" for boilerplate kept from the skeleton
};

struct SpliceResult {
    std::string draft;
    std::vector<MergeConflict> conflicts;
    std::vector<LineProvenance> provenance;
};

struct MergeNote {
    std::string conflict;
    std::string resolution; // "provider" | "none"
};

struct CandidateModule {
    std::string code_text;
    std::string module_name;
    std::vector<LineProvenance> provenance;
    std::vector<MergeNote> merge_notes;
};

namespace detail {

/// Mechanical checks over a best-effort parse of the draft: duplicate
/// declarations (outside `ifdef branches), identifiers used but never
/// declared anywhere in the module, and assignments driving input ports.
inline std::vector<MergeConflict> detect_conflicts(const std::string& draft) {
    std::vector<MergeConflict> conflicts;
    VerilogAst ast;
    try {
        ast = parse_verilog(draft);
    } catch (const Error&) {
        return conflicts; // unparseable drafts surface later in simulation
    }

    std::map<std::string, int> decl_count;
    for (const auto& d : ast.decls)
        if (!d.conditional) ++decl_count[d.name];
    for (const auto& [name, count] : decl_count) {
        if (count > 1)
            conflicts.push_back({MergeConflict::Kind::DuplicateDeclaration, name,
                                 name + " declared " + std::to_string(count) + " times"});
    }

    std::set<std::string> symbols;
    for (const auto& p : ast.ports) symbols.insert(p.name);
    for (const auto& d : ast.decls) symbols.insert(d.name);
    for (const auto& it : ast.items) {
        // instance output connections implicitly name nets; instance and
        // module names are not signal references
        if (it.kind == AstItemKind::Instantiation) {
            symbols.insert(it.instance_name);
            symbols.insert(it.module_name);
        }
    }
    auto check_ref = [&](const std::string& id, int line) {
        if (!symbols.count(id)) {
            conflicts.push_back({MergeConflict::Kind::UndeclaredIdentifier, id,
                                 id + " referenced at line " + std::to_string(line) +
                                     " but never declared"});
            symbols.insert(id); // report each identifier once
        }
    };
    for (const auto& it : ast.items) {
        if (it.kind == AstItemKind::ContinuousAssign) {
            if (!it.lhs.empty()) check_ref(it.lhs, it.first_line);
            for (const auto& r : it.rhs_ids) check_ref(r, it.first_line);
        } else if (it.kind == AstItemKind::ProceduralBlock) {
            for (const auto& a : it.assigned_ids) check_ref(a, it.first_line);
            for (const auto& r : it.read_ids) check_ref(r, it.first_line);
        } else if (it.kind == AstItemKind::Instantiation) {
            for (const auto& pc : it.port_connections)
                for (const auto& id : pc.actual_ids) check_ref(id, it.first_line);
        }
    }

    for (const auto& it : ast.items) {
        if (it.kind != AstItemKind::ContinuousAssign || it.lhs.empty()) continue;
        auto dir = ast.port_direction(it.lhs);
        if (dir && *dir == "input")
            conflicts.push_back({MergeConflict::Kind::PortMismatch, it.lhs,
                                 "input port " + it.lhs + " driven at line " +
                                     std::to_string(it.first_line)});
    }
    return conflicts;
}

inline int count_module_envelopes(const std::string& text) {
    int modules = 0;
    for (const auto& tok : vl::lex(text)) {
        if (tok.kind == vl::TokKind::Ident && tok.text == "module") ++modules;
    }
    return modules;
}

} // namespace detail

/// Replaces each placeholder block with its fragment; skeleton text outside
/// the blocks (preamble directives, the trailing endmodule) is kept verbatim.
inline SpliceResult splice(const Skeleton& skeleton, const std::vector<Fragment>& fragments) {
    std::map<std::string, const Fragment*> by_placeholder;
    for (const auto& f : fragments)
        for (const auto& pid : f.placeholder_ids) by_placeholder[pid] = &f;
    for (const auto& ph : skeleton.placeholders) {
        if (!by_placeholder.count(ph.id))
            throw Error(ErrorCode::MergeCoverageError,
                        "no fragment covers placeholder " + ph.id);
    }

    auto regions = skeleton_blocks(skeleton);
    auto lines = split_lines(skeleton.text);
    SpliceResult result;
    std::vector<std::string> out;
    auto emit = [&](const std::string& line, const std::string& frag_id) {
        out.push_back(line);
        int ln = static_cast<int>(out.size());
        if (!result.provenance.empty() && result.provenance.back().fragment_id == frag_id &&
            result.provenance.back().last_line == ln - 1) {
            result.provenance.back().last_line = ln;
        } else {
            result.provenance.push_back({ln, ln, frag_id});
        }
    };

    size_t next_line = 1;
    for (const auto& r : regions) {
        while (next_line < static_cast<size_t>(r.first_line) && next_line <= lines.size()) {
            emit(lines[next_line - 1], "skeleton");
            ++next_line;
        }
        const Fragment* frag = by_placeholder.at(r.placeholder_id);
        for (const auto& fl : split_lines(frag->code_text)) emit(fl, frag->subtask_id);
        next_line = static_cast<size_t>(r.last_line) + 1;
    }
    while (next_line <= lines.size()) {
        emit(lines[next_line - 1], "skeleton");
        ++next_line;
    }

    result.draft = join_lines(out, true);
    result.conflicts = detail::detect_conflicts(result.draft);
    return result;
}

inline std::vector<ChatMessage> merge_prompt(const std::string& draft,
                                             const std::vector<MergeConflict>& conflicts,
                                             const std::vector<std::string>& doc_sections) {
    std::string user = "Merged draft:\n```verilog\n" + draft + "```\n\nDetected conflicts:\n";
    for (const auto& c : conflicts)
        user += "- [" + std::string(conflict_kind_name(c.kind)) + "] " + c.detail + "\n";
    user += "\nRelevant documentation:\n";
    for (const auto& s : doc_sections) {
        user += s;
        if (!user.empty() && user.back() != '\n') user += '\n';
    }
    return {
        {"system",
         "You are a Verilog merger agent. Rewrite the draft as one complete, consistent module "
         "that resolves every listed conflict. Reply with one fenced code block containing the "
         "whole module."},
        {"user", user},
    };
}

/// Conflict-free drafts pass through untouched (and provider-free). With
/// conflicts, relevant sections are retrieved and the provider rewrites the
/// whole module once; a rewrite that still lacks a clean envelope is an error.
inline CandidateModule merge(const Skeleton& skeleton, const std::vector<Fragment>& fragments,
                             const DocumentIndex& index, CompletionProvider* provider,
                             const RetrievalWeights& weights = {}) {
    SpliceResult sp = splice(skeleton, fragments);
    CandidateModule cm;
    cm.provenance = sp.provenance;
    if (sp.conflicts.empty()) {
        cm.code_text = sp.draft;
    } else {
        if (!provider)
            throw Error(ErrorCode::MergeUnresolved,
                        "conflicts present and no provider; draft retained");
        RetrievalQuery q;
        q.purpose = QueryPurpose::Merging;
        for (const auto& c : sp.conflicts) {
            q.query_entities.insert(c.identifier);
            q.query_text += c.detail + "\n";
        }
        auto res = retrieve(index, q, weights);
        std::vector<std::string> sections;
        for (size_t idx : res.paragraph_indices)
            if (idx < index.paragraph_bodies.size())
                sections.push_back(index.paragraph_bodies[idx]);
        std::string fixed;
        try {
            auto reply = provider->complete(merge_prompt(sp.draft, sp.conflicts, sections));
            fixed = extract_code_block(reply.text);
        } catch (const Error& e) {
            throw Error(ErrorCode::MergeUnresolved,
                        std::string("provider failed with outstanding conflicts: ") + e.what() +
                            "\n--- draft ---\n" + sp.draft);
        }
        if (detail::count_module_envelopes(fixed) != 1)
            throw Error(ErrorCode::MergeUnresolved,
                        "provider rewrite lost the single-module envelope\n--- draft ---\n" +
                            sp.draft);
        cm.code_text = fixed;
        cm.provenance = {{1, static_cast<int>(split_lines(fixed).size()), "merger"}};
        for (const auto& c : sp.conflicts)
            cm.merge_notes.push_back({c.detail, "provider"});
    }
    try {
        cm.module_name = parse_verilog(cm.code_text).module_name;
    } catch (const Error&) {
        cm.module_name.clear();
    }
    return cm;
}

} // namespace localv
