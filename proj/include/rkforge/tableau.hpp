#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkforge/decimal.hpp"
#include "rkforge/scalar.hpp"

namespace rkforge {

/**
 * An s-stage explicit method: strictly lower-triangular A (packed row-major)
 * and weights b.  The abscissae c are always derived as the row sums of A,
 * never stored independently.
 */
template <typename S>
struct Tableau {
    int s = 0;
    std::vector<S> a;  ///< s(s-1)/2 entries, rows 2..s
    std::vector<S> b;  ///< s entries
    std::vector<S> c;  ///< row sums of A
    std::string name;

    Tableau() = default;
    Tableau(int stages, std::vector<S> a_packed, std::vector<S> b_vec, std::string label = {})
        : s(stages), a(std::move(a_packed)), b(std::move(b_vec)), name(std::move(label)) {
        if (static_cast<int>(a.size()) != s * (s - 1) / 2 || static_cast<int>(b.size()) != s)
            throw std::invalid_argument("Tableau: inconsistent sizes");
        derive_c();
    }

    const S& a_at(int i, int j) const { return a[static_cast<std::size_t>(i * (i - 1) / 2 + j)]; }

    void derive_c() {
        c.assign(static_cast<std::size_t>(s), S{});
        for (int i = 1; i < s; ++i) {
            S acc{};
            for (int j = 0; j < i; ++j) acc += a_at(i, j);
            c[static_cast<std::size_t>(i)] = acc;
        }
    }

    /// Strict-lower A entries in row-major order followed by b.
    std::vector<S> parameters() const {
        std::vector<S> x = a;
        x.insert(x.end(), b.begin(), b.end());
        return x;
    }

    static Tableau from_parameters(int stages, std::span<const S> x, std::string label = {}) {
        const int na = stages * (stages - 1) / 2;
        if (static_cast<int>(x.size()) != na + stages)
            throw std::invalid_argument("Tableau: parameter vector has wrong length");
        return Tableau(stages, std::vector<S>(x.begin(), x.begin() + na),
                       std::vector<S>(x.begin() + na, x.end()), std::move(label));
    }
};

template <typename S>
Tableau<S> euler_method() {
    return Tableau<S>(1, {}, {scalar_from_ratio<S>(1, 1)}, "euler");
}

template <typename S>
Tableau<S> midpoint_method() {
    return Tableau<S>(2, {scalar_from_ratio<S>(1, 2)},
                      {S{}, scalar_from_ratio<S>(1, 1)}, "midpoint");
}

template <typename S>
Tableau<S> heun_method() {
    return Tableau<S>(2, {scalar_from_ratio<S>(1, 1)},
                      {scalar_from_ratio<S>(1, 2), scalar_from_ratio<S>(1, 2)}, "heun");
}

template <typename S>
Tableau<S> rk4_method() {
    const S half = scalar_from_ratio<S>(1, 2);
    const S sixth = scalar_from_ratio<S>(1, 6);
    const S third = scalar_from_ratio<S>(1, 3);
    const S one = scalar_from_ratio<S>(1, 1);
    return Tableau<S>(4, {half, S{}, half, S{}, S{}, one}, {sixth, third, third, sixth}, "rk4");
}

/**
 * Order-p Richardson extrapolation of Euler's method over the harmonic step
 * sequence 1, 2, …, p, with all inner Euler runs sharing the first stage.
 * Stage count is 1 + p(p-1)/2.  The combination weights are the Lagrange
 * basis values at h = 0 for the nodes 1/j, computed exactly.
 */
template <typename S>
Tableau<S> extrapolated_euler(int p) {
    if (p < 1 || p > 12) throw std::invalid_argument("extrapolated_euler: p must be in [1, 12]");
    // w_j = prod_{k != j} (1/k) / (1/k - 1/j) = prod_{k != j} j / (j - k)
    std::vector<Rational> w(static_cast<std::size_t>(p + 1));
    for (int j = 1; j <= p; ++j) {
        Rational wj = 1;
        for (int k = 1; k <= p; ++k)
            if (k != j) wj *= Rational(j) / Rational(j - k);
        w[static_cast<std::size_t>(j)] = wj;
    }

    const int s = 1 + p * (p - 1) / 2;
    // Stage 0 is the shared f(y0); run j contributes stages for substeps
    // 1..j-1, laid out consecutively.
    std::vector<int> run_base(static_cast<std::size_t>(p + 1), 0);
    {
        int next = 1;
        for (int j = 1; j <= p; ++j) {
            run_base[static_cast<std::size_t>(j)] = next;
            next += j - 1;
        }
    }
    auto to_scalar = [](const Rational& r) {
        return scalar_from_ratio<S>(
            boost::multiprecision::numerator(r).template convert_to<std::int64_t>(),
            boost::multiprecision::denominator(r).template convert_to<std::int64_t>());
    };

    std::vector<S> a(static_cast<std::size_t>(s * (s - 1) / 2));
    std::vector<S> b(static_cast<std::size_t>(s));
    auto a_set = [&](int i, int j, const S& v) { a[static_cast<std::size_t>(i * (i - 1) / 2 + j)] = v; };

    for (int j = 1; j <= p; ++j) {
        const S inv_j = scalar_from_ratio<S>(1, j);
        const S wj_over_j = to_scalar(w[static_cast<std::size_t>(j)] / Rational(j));
        // Substep i of run j sits at stage run_base[j] + i - 1 and sees the
        // shared stage plus this run's earlier substeps, all weighted 1/j.
        for (int i = 1; i <= j - 1; ++i) {
            const int row = run_base[static_cast<std::size_t>(j)] + i - 1;
            a_set(row, 0, inv_j);
            for (int k = 1; k < i; ++k)
                a_set(row, run_base[static_cast<std::size_t>(j)] + k - 1, inv_j);
        }
        b[0] += wj_over_j;
        for (int i = 1; i <= j - 1; ++i)
            b[static_cast<std::size_t>(run_base[static_cast<std::size_t>(j)] + i - 1)] = wj_over_j;
    }
    return Tableau<S>(s, std::move(a), std::move(b), "euler-extrapolated:" + std::to_string(p));
}

/// Filesystem-level failure (missing file, failed write).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tableau-file syntax error with 1-based line and column.
class TableauFormatError : public std::runtime_error {
public:
    TableauFormatError(const std::string& what, int line, int column)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

namespace detail {

struct TableauEntry {
    bool is_b = false;
    int i = 0;  // 1-based
    int j = 0;  // 1-based, a entries only
    Rational value;
};

// token := a_{i,j} | b_{i}
inline bool parse_token(const std::string& tok, bool& is_b, int& i, int& j) {
    auto read_int = [](const std::string& s, std::size_t& pos, int& out) {
        std::size_t start = pos;
        long v = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            v = v * 10 + (s[pos] - '0');
            if (v > 1000000) return false;
            ++pos;
        }
        out = static_cast<int>(v);
        return pos > start;
    };
    std::size_t pos = 0;
    if (tok.size() < 4) return false;
    if (tok[0] == 'a') {
        is_b = false;
        if (tok.compare(1, 2, "_{") != 0) return false;
        pos = 3;
        if (!read_int(tok, pos, i)) return false;
        if (pos >= tok.size() || tok[pos] != ',') return false;
        ++pos;
        if (!read_int(tok, pos, j)) return false;
        return pos + 1 == tok.size() && tok[pos] == '}';
    }
    if (tok[0] == 'b') {
        is_b = true;
        if (tok.compare(1, 2, "_{") != 0) return false;
        pos = 3;
        if (!read_int(tok, pos, i)) return false;
        j = 0;
        return pos + 1 == tok.size() && tok[pos] == '}';
    }
    return false;
}

inline std::vector<TableauEntry> parse_tableau_entries(std::istream& in) {
    std::vector<TableauEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string tok, value, extra;
        if (!(ls >> tok)) continue;  // blank
        TableauEntry e;
        if (!parse_token(tok, e.is_b, e.i, e.j))
            throw TableauFormatError("expected a_{i,j} or b_{i}", lineno, 1);
        if (!(ls >> value)) throw TableauFormatError("missing coefficient value", lineno,
                                                     static_cast<int>(tok.size()) + 2);
        if (ls >> extra) throw TableauFormatError("unexpected trailing token", lineno, 1);
        if (e.i < 1 || (!e.is_b && (e.j < 1 || e.j >= e.i)))
            throw TableauFormatError("index outside the strict lower triangle", lineno, 1);
        try {
            e.value = parse_decimal(value);
        } catch (const ParseError& pe) {
            throw TableauFormatError(pe.what(), lineno,
                                     static_cast<int>(tok.size() + 2 + pe.offset()));
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace detail

/**
 * Parse the one-coefficient-per-line tableau format: `a_{i,j} <decimal>` and
 * `b_{i} <decimal>` tokens, `#` comments, blank lines, entries in any order.
 * The stage count is the largest index seen.  Missing a entries default to
 * zero; every b entry must be present.  Duplicate entries are an error.
 */
template <typename S>
Tableau<S> parse_tableau(std::istream& in, std::string name = {}) {
    const auto entries = detail::parse_tableau_entries(in);
    if (entries.empty()) throw TableauFormatError("empty tableau", 1, 1);
    int s = 0;
    for (const auto& e : entries) s = std::max(s, e.i);
    if (s > 64) throw TableauFormatError("stage count out of range", 1, 1);

    std::map<std::pair<int, int>, Rational> a_entries;
    std::map<int, Rational> b_entries;
    for (const auto& e : entries) {
        if (e.is_b) {
            if (!b_entries.emplace(e.i, e.value).second)
                throw TableauFormatError("duplicate b_{" + std::to_string(e.i) + "}", 1, 1);
        } else {
            if (!a_entries.emplace(std::make_pair(e.i, e.j), e.value).second)
                throw TableauFormatError("duplicate a_{" + std::to_string(e.i) + "," +
                                             std::to_string(e.j) + "}",
                                         1, 1);
        }
    }
    for (int i = 1; i <= s; ++i)
        if (!b_entries.count(i))
            throw TableauFormatError("missing b_{" + std::to_string(i) + "}", 1, 1);

    auto to_scalar = [](const Rational& r) {
        if constexpr (std::is_same_v<S, Rational>) {
            return r;
        } else if constexpr (std::is_same_v<S, double>) {
            return nearest_double(r);
        } else {
            return rational_to_expansion<S::kLimbs>(r);
        }
    };

    std::vector<S> a(static_cast<std::size_t>(s * (s - 1) / 2));
    std::vector<S> b(static_cast<std::size_t>(s));
    for (const auto& [ij, v] : a_entries)
        a[static_cast<std::size_t>((ij.first - 1) * (ij.first - 2) / 2 + (ij.second - 1))] =
            to_scalar(v);
    for (const auto& [i, v] : b_entries) b[static_cast<std::size_t>(i - 1)] = to_scalar(v);
    return Tableau<S>(s, std::move(a), std::move(b), std::move(name));
}

template <typename S>
Tableau<S> read_tableau_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tableau file: " + path.string());
    return parse_tableau<S>(in, path.stem().string());
}

/// Canonical writer: a rows in row-major order, then b, one entry per line,
/// each coefficient printed to `digits` significant digits.
template <typename S>
std::string write_tableau(const Tableau<S>& tab, int digits) {
    std::string out;
    auto fmt = [&](const S& v) {
        if constexpr (std::is_same_v<S, Rational>) {
            return format_decimal(v, digits);
        } else if constexpr (std::is_same_v<S, double>) {
            return to_decimal(v, digits);
        } else {
            return to_decimal(v, digits);
        }
    };
    for (int i = 2; i <= tab.s; ++i)
        for (int j = 1; j < i; ++j) {
            out += "a_{" + std::to_string(i) + "," + std::to_string(j) + "} ";
            out += fmt(tab.a_at(i - 1, j - 1));
            out += "\n";
        }
    for (int i = 1; i <= tab.s; ++i) {
        out += "b_{" + std::to_string(i) + "} ";
        out += fmt(tab.b[static_cast<std::size_t>(i - 1)]);
        out += "\n";
    }
    return out;
}

/// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace rkforge
