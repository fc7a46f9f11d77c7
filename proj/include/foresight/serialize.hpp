// Text serialization helpers. All numeric state files (datasets,
// checkpoints) are line-oriented text; doubles are written with 17
// significant digits, which round-trips IEEE-754 exactly.

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "foresight/errors.hpp"
#include "foresight/linalg.hpp"

namespace foresight {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw parse_error(context + ": not a number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw parse_error(context + ": not an integer: '" + s + "'");
    return v;
}

// Whitespace-token reader with positional error messages.
class TokenReader {
public:
    explicit TokenReader(std::istream& in, std::string source)
        : in_(in), source_(std::move(source)) {}

    std::string next(const std::string& what) {
        std::string tok;
        if (!(in_ >> tok))
            throw parse_error(source_ + ": unexpected end of file while reading " + what);
        return tok;
    }

    double next_double(const std::string& what) {
        return parse_double(next(what), source_ + ": " + what);
    }

    long long next_int(const std::string& what) {
        return parse_int(next(what), source_ + ": " + what);
    }

    void expect(const std::string& literal) {
        const std::string tok = next("'" + literal + "'");
        if (tok != literal)
            throw parse_error(source_ + ": expected '" + literal + "', got '" + tok + "'");
    }

    bool try_token(std::string& out) { return static_cast<bool>(in_ >> out); }

    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
};

inline void write_vector(std::ostream& os, const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << format_double(v[i]);
    }
    os << '\n';
}

inline void read_vector(TokenReader& r, Vector& v, std::size_t n,
                        const std::string& what) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = r.next_double(what);
}

inline void write_matrix_block(std::ostream& os, const std::string& tag,
                               const std::string& name, const Matrix& m) {
    os << tag << ' ' << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << format_double(row[j]);
        }
        os << '\n';
    }
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    return in;
}

} // namespace foresight
