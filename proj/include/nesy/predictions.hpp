#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "text.hpp"

namespace nesy {

// Per-sample sigmoid beliefs of both heads plus the true labels.
struct Predictions {
    std::vector<Label> true_fine;
    std::vector<Label> true_coarse;
    Matrix beliefs_f;
    Matrix beliefs_c;
};

// Header `n=<samples> f=<|O^f|> c=<|O^c|>`, then per sample
// `true_fine true_coarse | <f beliefs> | <c beliefs>`.
inline Predictions read_predictions(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> n, f, c;
    Predictions p;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        if (!n) {
            for (const auto& [key, value] : text::parse_header(body, lineno)) {
                if (key == "n") n = text::parse_index(value, lineno);
                else if (key == "f") f = text::parse_index(value, lineno);
                else if (key == "c") c = text::parse_index(value, lineno);
                else fail(ErrorKind::parse, text::where(lineno) + ": unknown header key '" + key + "'");
            }
            require(n && f && c, ErrorKind::parse, text::where(lineno) + ": header needs n=, f= and c=");
            p.beliefs_f = Matrix(*n, *f);
            p.beliefs_c = Matrix(*n, *c);
            continue;
        }
        require(row < *n, ErrorKind::parse, text::where(lineno) + ": more rows than n=" + std::to_string(*n));
        const auto parts = text::split(body, '|');
        require(parts.size() == 3, ErrorKind::parse, text::where(lineno) + ": expected three '|'-separated fields");
        const auto labels = text::split_ws(parts[0]);
        require(labels.size() == 2, ErrorKind::parse, text::where(lineno) + ": expected `true_fine true_coarse`");
        p.true_fine.push_back(text::parse_index(labels[0], lineno));
        p.true_coarse.push_back(text::parse_index(labels[1], lineno));
        const auto fill = [&](std::string_view field, Matrix& dst, const char* what) {
            const auto toks = text::split_ws(field);
            require(toks.size() == dst.cols(), ErrorKind::parse,
                    text::where(lineno) + ": expected " + std::to_string(dst.cols()) + " " + what + " beliefs, got " +
                        std::to_string(toks.size()));
            for (std::size_t j = 0; j < toks.size(); ++j) {
                const double v = text::parse_real(toks[j], lineno);
                require(v >= 0.0 && v <= 1.0, ErrorKind::parse, text::where(lineno) + ": belief outside [0,1]");
                dst(row, j) = v;
            }
        };
        fill(parts[1], p.beliefs_f, "fine");
        fill(parts[2], p.beliefs_c, "coarse");
        ++row;
    }
    require(n.has_value(), ErrorKind::parse, "predictions file has no header");
    require(row == *n, ErrorKind::parse, "predictions file declares n=" + std::to_string(*n) + " but has " + std::to_string(row) + " rows");
    return p;
}

inline Predictions load_predictions(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::parse, "cannot open predictions file " + path);
    return read_predictions(in);
}

inline void write_predictions(std::ostream& out, const Predictions& p) {
    out << "n=" << p.true_fine.size() << " f=" << p.beliefs_f.cols() << " c=" << p.beliefs_c.cols() << '\n';
    for (std::size_t i = 0; i < p.true_fine.size(); ++i) {
        out << p.true_fine[i] << ' ' << p.true_coarse[i] << " |";
        for (double v : p.beliefs_f.row(i)) out << ' ' << text::real(v);
        out << " |";
        for (double v : p.beliefs_c.row(i)) out << ' ' << text::real(v);
        out << '\n';
    }
}

} // namespace nesy
