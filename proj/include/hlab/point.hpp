#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace hlab {

/// Finite symbol word over {1..n}. A word w stands for the one-sided
/// sequence w·111..., so trailing symbols beyond its length read as 1.
using Word = std::vector<int>;

/// A point of the ambient space: a coordinate vector in R^d or a symbol word.
class Point {
public:
    Point() : value_(Eigen::VectorXd()) {}
    Point(Eigen::VectorXd coords) : value_(std::move(coords)) {}
    Point(Word word) : value_(std::move(word)) {}

    static Point scalar(double x) { return Point(Eigen::VectorXd::Constant(1, x)); }

    bool symbolic() const noexcept { return std::holds_alternative<Word>(value_); }

    const Eigen::VectorXd& coords() const {
        if (symbolic()) throw InputError("expected a euclidean point, got a symbol word");
        return std::get<Eigen::VectorXd>(value_);
    }

    const Word& word() const {
        if (!symbolic()) throw InputError("expected a symbol word, got a euclidean point");
        return std::get<Word>(value_);
    }

    /// Coordinate count for euclidean points, word length for symbolic ones.
    std::size_t size() const {
        return symbolic() ? word().size() : static_cast<std::size_t>(coords().size());
    }

    /// First coordinate; only meaningful in 1-D.
    double x() const { return coords()(0); }

    friend bool operator==(const Point& a, const Point& b) {
        if (a.symbolic() != b.symbolic()) return false;
        if (a.symbolic()) return a.word() == b.word();
        return a.coords().size() == b.coords().size() && a.coords() == b.coords();
    }

private:
    std::variant<Eigen::VectorXd, Word> value_;
};

/// Symbol at 0-based position k of the sequence represented by w.
inline int symbol_at(const Word& w, std::size_t k) { return k < w.size() ? w[k] : 1; }

/// d(w, v) = sum_i 2^-i [w_i != v_i], positions numbered from 1.
inline double sequence_distance(const Word& w, const Word& v) {
    const std::size_t len = std::max(w.size(), v.size());
    double d = 0.0;
    double scale = 0.5;
    for (std::size_t k = 0; k < len; ++k, scale *= 0.5) {
        if (symbol_at(w, k) != symbol_at(v, k)) d += scale;
    }
    return d;
}

inline double distance(const Point& a, const Point& b) {
    if (a.symbolic() != b.symbolic()) throw InputError("distance between points of different spaces");
    if (a.symbolic()) return sequence_distance(a.word(), b.word());
    if (a.coords().size() != b.coords().size()) throw InputError("distance between points of different dimension");
    return (a.coords() - b.coords()).norm();
}

/// Word truncated or padded (with 1s) to exactly `len` symbols.
inline Word resized_word(const Word& w, std::size_t len) {
    Word out(len, 1);
    std::copy_n(w.begin(), std::min(len, w.size()), out.begin());
    return out;
}

/// Word with trailing 1s stripped; two words denote the same sequence iff
/// their canonical forms are equal.
inline Word canonical_word(Word w) {
    while (!w.empty() && w.back() == 1) w.pop_back();
    return w;
}

inline std::string to_string(const Word& w) {
    std::string s;
    for (int sym : w) {
        if (!s.empty()) s += ' ';
        s += std::to_string(sym);
    }
    return s;
}

inline std::string to_string(const Point& p) {
    if (p.symbolic()) return "(" + to_string(p.word()) + ")";
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index k = 0; k < p.coords().size(); ++k) {
        if (k) os << ", ";
        os << p.coords()(k);
    }
    os << ')';
    return os.str();
}

/// Parses "121" or "1,2,1" or "1 2 1" into a word.
inline Word parse_word(const std::string& text) {
    Word w;
    const bool separated = text.find_first_of(", ") != std::string::npos;
    if (separated) {
        std::string token;
        std::istringstream is(text);
        while (std::getline(is, token, text.find(',') != std::string::npos ? ',' : ' ')) {
            if (token.empty()) continue;
            w.push_back(std::stoi(token));
        }
    } else {
        for (char c : text) {
            if (c < '1' || c > '9') throw InputError("bad word '" + text + "'");
            w.push_back(c - '0');
        }
    }
    return w;
}

}  // namespace hlab
