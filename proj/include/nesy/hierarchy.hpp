#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "focal_set.hpp"
#include "text.hpp"

namespace nesy {

enum class Level { fine, coarse };

inline const char* to_string(Level level) { return level == Level::fine ? "fine" : "coarse"; }

struct LabelSpace {
    Level level = Level::fine;
    std::size_t size = 0;
    std::vector<std::string> names; // empty, or exactly `size` unique entries
};

// Two-level label structure. `parent[y]` is the coarse label of fine label y; the same
// map serves as the decode-time singleton map g.
struct Hierarchy {
    LabelSpace fine;
    LabelSpace coarse;
    std::vector<Label> parent;

    [[nodiscard]] Label parent_of(Label fine_label) const {
        require(fine_label < parent.size(), ErrorKind::invalid_label,
                "fine label " + std::to_string(fine_label) + " out of range");
        return parent[fine_label];
    }
};

/// Lists every broken Hierarchy invariant; an empty result means the value is well formed.
inline std::vector<std::string> validate_hierarchy(const Hierarchy& h) {
    std::vector<std::string> violations;
    if (h.fine.size < 2) {
        violations.push_back("fine space size " + std::to_string(h.fine.size) + " < 2");
    }
    if (h.coarse.size < 2) {
        violations.push_back("coarse space size " + std::to_string(h.coarse.size) + " < 2");
    }
    if (h.fine.level != Level::fine || h.coarse.level != Level::coarse) {
        violations.push_back("label space levels swapped");
    }
    if (h.parent.size() != h.fine.size) {
        violations.push_back("parent map has " + std::to_string(h.parent.size()) + " entries for " +
                             std::to_string(h.fine.size) + " fine labels");
    }
    std::vector<std::size_t> children(h.coarse.size, 0);
    for (std::size_t y = 0; y < h.parent.size(); ++y) {
        if (h.parent[y] >= h.coarse.size) {
            violations.push_back("fine " + std::to_string(y) + " parent out of range");
        } else {
            ++children[h.parent[y]];
        }
    }
    for (std::size_t c = 0; c < h.coarse.size; ++c) {
        if (children[c] == 0) {
            violations.push_back("coarse " + std::to_string(c) + " childless");
        }
    }
    for (const auto* space : {&h.fine, &h.coarse}) {
        if (space->names.empty()) {
            continue;
        }
        if (space->names.size() != space->size) {
            violations.push_back(std::string(to_string(space->level)) + " names length mismatch");
            continue;
        }
        std::set<std::string> seen;
        for (std::size_t i = 0; i < space->names.size(); ++i) {
            if (!seen.insert(space->names[i]).second) {
                violations.push_back(std::string(to_string(space->level)) + " " + std::to_string(i) +
                                     " duplicate name '" + space->names[i] + "'");
            }
        }
    }
    return violations;
}

inline Hierarchy make_hierarchy(std::vector<Label> parent, std::size_t coarse_size,
                                std::vector<std::string> fine_names = {},
                                std::vector<std::string> coarse_names = {}) {
    Hierarchy h;
    h.fine = LabelSpace{Level::fine, parent.size(), std::move(fine_names)};
    h.coarse = LabelSpace{Level::coarse, coarse_size, std::move(coarse_names)};
    h.parent = std::move(parent);
    const auto violations = validate_hierarchy(h);
    if (!violations.empty()) {
        fail(ErrorKind::config, "invalid hierarchy: " + violations.front());
    }
    return h;
}

/// Set lift of the parent map: {parent(y) : y in fine_set}.
inline FocalSet project_set(const FocalSet& fine_set, const Hierarchy& h) {
    require(fine_set.universe() == h.fine.size, ErrorKind::shape, "set is not over the fine space");
    FocalSet out(h.coarse.size);
    for (Label y : fine_set.members()) {
        out.insert(h.parent_of(y));
    }
    return out;
}

// Hierarchy file: `fine_index,coarse_index[,fine_name,coarse_name]` per line, `#` comments.
inline Hierarchy read_hierarchy(std::istream& in) {
    std::map<Label, Label> parent;
    std::map<Label, std::string> fine_names;
    std::map<Label, std::string> coarse_names;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        const auto fields = text::split(body, ',');
        if (fields.size() != 2 && fields.size() != 4) {
            fail(ErrorKind::parse, text::where(lineno) + ": expected 2 or 4 comma-separated fields");
        }
        const auto f = text::parse_index(fields[0], lineno);
        const auto c = text::parse_index(fields[1], lineno);
        if (!parent.emplace(f, c).second) {
            fail(ErrorKind::parse, text::where(lineno) + ": duplicate fine index " + std::to_string(f));
        }
        if (fields.size() == 4) {
            fine_names[f] = std::string(fields[2]);
            const auto [it, inserted] = coarse_names.emplace(c, std::string(fields[3]));
            if (!inserted && it->second != fields[3]) {
                fail(ErrorKind::parse, text::where(lineno) + ": coarse " + std::to_string(c) +
                                           " named inconsistently");
            }
        }
    }
    require(!parent.empty(), ErrorKind::parse, "hierarchy file has no records");
    const std::size_t n_fine = parent.rbegin()->first + 1;
    require(parent.size() == n_fine, ErrorKind::parse, "fine indices are not dense 0.." + std::to_string(n_fine - 1));
    std::size_t n_coarse = 0;
    std::vector<Label> parents;
    parents.reserve(n_fine);
    for (const auto& [f, c] : parent) {
        parents.push_back(c);
        n_coarse = std::max(n_coarse, c + 1);
    }
    std::vector<std::string> fnames;
    std::vector<std::string> cnames;
    if (!fine_names.empty()) {
        require(fine_names.size() == n_fine, ErrorKind::parse, "names given for some but not all fine labels");
        for (const auto& [f, name] : fine_names) {
            fnames.push_back(name);
        }
        for (std::size_t c = 0; c < n_coarse; ++c) {
            const auto it = coarse_names.find(c);
            cnames.push_back(it == coarse_names.end() ? std::to_string(c) : it->second);
        }
    }
    return make_hierarchy(std::move(parents), n_coarse, std::move(fnames), std::move(cnames));
}

inline Hierarchy load_hierarchy(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open hierarchy file " + path);
    return read_hierarchy(in);
}

inline void write_hierarchy(std::ostream& out, const Hierarchy& h) {
    const bool named = !h.fine.names.empty() && !h.coarse.names.empty();
    for (std::size_t y = 0; y < h.fine.size; ++y) {
        out << y << ',' << h.parent[y];
        if (named) {
            out << ',' << h.fine.names[y] << ',' << h.coarse.names[h.parent[y]];
        }
        out << '\n';
    }
}

} // namespace nesy
