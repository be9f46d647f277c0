#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "point.hpp"

namespace hlab {

// ---------------------------------------------------------------------------
// Word budget
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultCellBudget = std::size_t{1} << 22;

/// Cap on n^N, read from HLAB_BUDGET_CELLS when set.
inline std::size_t cell_budget() {
    if (const char* env = std::getenv("HLAB_BUDGET_CELLS")) {
        try {
            const long long v = std::stoll(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw InputError(std::string("HLAB_BUDGET_CELLS is not a positive integer: ") + env);
    }
    return kDefaultCellBudget;
}

/// n^depth, or ResourceError when it exceeds `budget`.
inline std::size_t checked_word_count(std::size_t n, std::size_t depth, std::size_t budget) {
    std::size_t count = 1;
    for (std::size_t k = 0; k < depth; ++k) {
        if (count > budget / n) {
            throw ResourceError("word count " + std::to_string(n) + "^" + std::to_string(depth) +
                                " exceeds the cell budget HLAB_BUDGET_CELLS=" + std::to_string(budget));
        }
        count *= n;
    }
    if (count > budget) {
        throw ResourceError("word count " + std::to_string(count) +
                            " exceeds the cell budget HLAB_BUDGET_CELLS=" + std::to_string(budget));
    }
    return count;
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    std::size_t dimension() const { return static_cast<std::size_t>(lo.size()); }
    double diameter() const { return (hi - lo).norm(); }
    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }

    /// Distance from x to the closed box (0 inside).
    double distance_to(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd below = (lo - x).cwiseMax(0.0);
        const Eigen::VectorXd above = (x - hi).cwiseMax(0.0);
        return (below + above).norm();
    }
};

// ---------------------------------------------------------------------------
// Contraction maps
// ---------------------------------------------------------------------------

/// One branch of an IFS: an affine map x -> A x + b on R^d, or the symbol
/// prepend w -> i·w on the coding space.
class ContractionMap {
public:
    static ContractionMap affine(Eigen::MatrixXd a, Eigen::VectorXd b) {
        if (a.rows() != a.cols() || a.rows() != b.size() || a.rows() == 0) {
            throw InputError("affine map needs a square d x d matrix and a d-vector offset");
        }
        ContractionMap m;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
        const auto& s = svd.singularValues();
        m.upper_ = s(0);
        m.lower_ = s(s.size() - 1);
        if (!(m.upper_ < 1.0)) throw InputError("affine map is not a contraction (operator norm >= 1)");
        if (!(m.lower_ > 0.0)) throw InputError("affine map is singular");
        m.inverse_ = a.inverse();
        m.matrix_ = std::move(a);
        m.offset_ = std::move(b);
        return m;
    }

    static ContractionMap scalar(double slope, double offset) {
        return affine(Eigen::MatrixXd::Constant(1, 1, slope), Eigen::VectorXd::Constant(1, offset));
    }

    static ContractionMap prepend(int symbol) {
        if (symbol < 1) throw InputError("symbols are numbered from 1");
        ContractionMap m;
        m.symbol_ = symbol;
        m.lower_ = 0.5;
        m.upper_ = 0.5;
        return m;
    }

    bool symbolic() const noexcept { return symbol_ != 0; }
    int symbol() const noexcept { return symbol_; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    const Eigen::VectorXd& offset() const noexcept { return offset_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(offset_.size()); }

    /// Declared two-sided Lipschitz bounds c1 <= c2 (singular values for affine maps).
    double lower_bound() const noexcept { return lower_; }
    double upper_bound() const noexcept { return upper_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix_ * x + offset_; }

    Point operator()(const Point& x) const {
        if (symbolic()) {
            const Word& w = x.word();
            Word out;
            out.reserve(w.size() + 1);
            out.push_back(symbol_);
            out.insert(out.end(), w.begin(), w.end());
            return Point(std::move(out));
        }
        if (static_cast<std::size_t>(x.coords().size()) != dimension()) {
            throw InputError("point dimension " + std::to_string(x.coords().size()) +
                             " does not match map dimension " + std::to_string(dimension()));
        }
        return Point(apply(x.coords()));
    }

    /// gamma^{-1}(x). Symbolic: drops the head symbol.
    Point inverse(const Point& x) const {
        if (symbolic()) {
            const Word& w = x.word();
            return Point(w.empty() ? Word{} : Word(w.begin() + 1, w.end()));
        }
        return Point(Eigen::VectorXd(inverse_ * (x.coords() - offset_)));
    }

    /// Unique fixed point b / (I - A).
    Eigen::VectorXd fixed_point() const {
        const auto d = static_cast<Eigen::Index>(dimension());
        return (Eigen::MatrixXd::Identity(d, d) - matrix_).lu().solve(offset_);
    }

    /// Image of a box: exact bounding box of the affine image.
    Box image(const Box& box) const {
        const Eigen::VectorXd c = apply(box.center());
        const Eigen::VectorXd h = matrix_.cwiseAbs() * (0.5 * (box.hi - box.lo));
        return {c - h, c + h};
    }

    bool diagonal() const {
        return !symbolic() && matrix_.isDiagonal(0.0);
    }

private:
    ContractionMap() = default;

    int symbol_ = 0;
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd inverse_;
    Eigen::VectorXd offset_;
    double lower_ = 0.0;
    double upper_ = 0.0;
};

inline Point eval_map(const ContractionMap& map, const Point& x) { return map(x); }

// ---------------------------------------------------------------------------
// Iterated function systems
// ---------------------------------------------------------------------------

enum class Metric { euclidean, sequence };

/// Ordered family (gamma_1, ..., gamma_n) with probability weights.
/// Indices into maps() are 0-based; symbols and words are 1-based.
class IFSystem {
public:
    IFSystem(std::vector<ContractionMap> maps, std::vector<double> weights = {}, std::string name = {},
             std::optional<Box> box = std::nullopt)
        : maps_(std::move(maps)), weights_(std::move(weights)), name_(std::move(name)) {
        const std::size_t n = maps_.size();
        if (n < 2) throw InputError("an IFS needs at least two maps");
        if (weights_.empty()) weights_.assign(n, 1.0 / static_cast<double>(n));
        if (weights_.size() != n) throw InputError("weight count does not match map count");
        double total = 0.0;
        for (double p : weights_) {
            if (!(p > 0.0)) throw InputError("weights must be positive");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw InputError("weights must sum to 1");

        metric_ = maps_.front().symbolic() ? Metric::sequence : Metric::euclidean;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& m = maps_[i];
            if (m.symbolic() != (metric_ == Metric::sequence)) {
                throw InputError("cannot mix symbolic and affine maps");
            }
            if (m.symbolic() && m.symbol() != static_cast<int>(i + 1)) {
                throw InputError("symbolic map " + std::to_string(i + 1) + " must prepend symbol " +
                                 std::to_string(i + 1));
            }
            if (!m.symbolic() && m.dimension() != maps_.front().dimension()) {
                throw InputError("affine maps of different dimensions");
            }
        }
        if (metric_ == Metric::euclidean) {
            box_ = box ? *box : invariant_box();
            if (box_.dimension() != dimension()) throw InputError("bounding box dimension mismatch");
        }
    }

    std::size_t size() const noexcept { return maps_.size(); }
    const ContractionMap& map(std::size_t i) const { return maps_.at(i); }
    const std::vector<ContractionMap>& maps() const noexcept { return maps_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::string& name() const noexcept { return name_; }
    Metric metric() const noexcept { return metric_; }
    bool symbolic() const noexcept { return metric_ == Metric::sequence; }

    /// Euclidean dimension d; 0 for symbolic systems.
    std::size_t dimension() const noexcept { return symbolic() ? 0 : maps_.front().dimension(); }

    /// Ambient bounding box (euclidean only).
    const Box& box() const {
        if (symbolic()) throw UnsupportedError("symbolic systems have no bounding box");
        return box_;
    }

    /// Diameter reference: box diagonal, or sum 2^-i = 1 for the sequence metric.
    double diameter() const { return symbolic() ? 1.0 : box_.diameter(); }

    /// max_i c2(gamma_i).
    double contraction_upper() const {
        double c = 0.0;
        for (const auto& m : maps_) c = std::max(c, m.upper_bound());
        return c;
    }

    double contraction_lower() const {
        double c = 1.0;
        for (const auto& m : maps_) c = std::min(c, m.lower_bound());
        return c;
    }

    bool uniform_weights() const {
        const double u = 1.0 / static_cast<double>(size());
        return std::all_of(weights_.begin(), weights_.end(), [u](double p) { return std::abs(p - u) <= 1e-12; });
    }

    /// Fixed point of gamma_1, or the constant-1 sequence (empty word).
    Point default_seed() const {
        if (symbolic()) return Point(Word{});
        return Point(maps_.front().fixed_point());
    }

    IFSystem with_weights(std::vector<double> weights) const {
        return IFSystem(maps_, std::move(weights), name_, symbolic() ? std::nullopt : std::optional<Box>(box_));
    }

    bool same_space(const Point& x) const {
        if (symbolic()) return x.symbolic();
        return !x.symbolic() && static_cast<std::size_t>(x.coords().size()) == dimension();
    }

private:
    // Smallest box B with hull(U gamma_i(B)) = B, reached by iterating the box
    // map from a ball that every gamma_i maps into itself. Contains K.
    Box invariant_box() const {
        const auto d = static_cast<Eigen::Index>(dimension());
        Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
        for (const auto& m : maps_) c += m.fixed_point();
        c /= static_cast<double>(size());
        double radius = 0.0;
        for (const auto& m : maps_) {
            radius = std::max(radius, (m.apply(c) - c).norm() / (1.0 - m.upper_bound()));
        }
        radius = std::max(radius, 1e-300);
        Box b{c.array() - radius, c.array() + radius};
        for (int it = 0; it < 4000; ++it) {
            Box next = maps_.front().image(b);
            for (const auto& m : maps_) {
                const Box img = m.image(b);
                next.lo = next.lo.cwiseMin(img.lo);
                next.hi = next.hi.cwiseMax(img.hi);
            }
            const double change = std::max((next.lo - b.lo).cwiseAbs().maxCoeff(), (next.hi - b.hi).cwiseAbs().maxCoeff());
            b = std::move(next);
            if (change == 0.0) break;
        }
        return b;
    }

    std::vector<ContractionMap> maps_;
    std::vector<double> weights_;
    std::string name_;
    Metric metric_ = Metric::euclidean;
    Box box_;
};

// ---------------------------------------------------------------------------
// Built-in systems and JSON definitions
// ---------------------------------------------------------------------------

/// Inverse branches of the tent map: x/2 and -x/2 + 1 on [0, 1].
inline IFSystem make_tent() {
    return IFSystem({ContractionMap::scalar(0.5, 0.0), ContractionMap::scalar(-0.5, 1.0)}, {}, "tent",
                    Box{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)});
}

/// x -> r x and x -> r x + 1 - r on [0, 1].
inline IFSystem make_cantor(double ratio = 1.0 / 3.0) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("cantor ratio must lie in (0, 1)");
    std::string name = "cantor";
    if (ratio != 1.0 / 3.0) {
        std::ostringstream os;
        os.precision(17);
        os << "cantor:" << ratio;
        name = os.str();
    }
    return IFSystem({ContractionMap::scalar(ratio, 0.0), ContractionMap::scalar(ratio, 1.0 - ratio)}, {}, name,
                    Box{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)});
}

/// Full one-sided shift on n symbols with prepend branches.
inline IFSystem make_shift(int n) {
    if (n < 2) throw InputError("shift needs at least two symbols");
    std::vector<ContractionMap> maps;
    for (int i = 1; i <= n; ++i) maps.push_back(ContractionMap::prepend(i));
    return IFSystem(std::move(maps), {}, "shift:" + std::to_string(n));
}

/// Sierpinski triangle on vertices (0,0), (1,0), (1/2, sqrt(3)/2).
inline IFSystem make_sierpinski() {
    const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    const double h = std::numbers::sqrt3 / 2.0;
    std::vector<ContractionMap> maps;
    maps.push_back(ContractionMap::affine(half, Eigen::Vector2d(0.0, 0.0)));
    maps.push_back(ContractionMap::affine(half, Eigen::Vector2d(0.5, 0.0)));
    maps.push_back(ContractionMap::affine(half, Eigen::Vector2d(0.25, h / 2.0)));
    return IFSystem(std::move(maps), {}, "sierpinski", Box{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, h)});
}

/// Resolves "tent", "cantor", "cantor:<r>", "shift:<n>", "sierpinski".
inline std::optional<IFSystem> builtin_system(const std::string& name) {
    const auto colon = name.find(':');
    const std::string head = name.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
    try {
        if (head == "tent" && arg.empty()) return make_tent();
        if (head == "sierpinski" && arg.empty()) return make_sierpinski();
        if (head == "cantor") return arg.empty() ? make_cantor() : make_cantor(std::stod(arg));
        if (head == "shift") return make_shift(arg.empty() ? 2 : std::stoi(arg));
    } catch (const std::logic_error&) {
        throw InputError("bad built-in system parameter in '" + name + "'");
    }
    return std::nullopt;
}

/// {"metric": "euclidean"|"sequence", "dimension"|"symbols": int,
///  "maps": [{"A": [[...]], "b": [...]}, ...], "weights": [...],
///  optional "box": {"lo": [...], "hi": [...]}, optional "name"}.
inline IFSystem system_from_json(const nlohmann::json& j, const std::string& fallback_name = "custom") {
    try {
        const std::string metric = j.value("metric", "euclidean");
        std::vector<double> weights = j.value("weights", std::vector<double>{});
        const std::string name = j.value("name", fallback_name);
        if (metric == "sequence") {
            const int n = j.at("symbols").get<int>();
            IFSystem shift = make_shift(n);
            return IFSystem(shift.maps(), std::move(weights), name);
        }
        if (metric != "euclidean") throw InputError("unknown metric '" + metric + "'");
        const auto d = static_cast<Eigen::Index>(j.at("dimension").get<int>());
        std::vector<ContractionMap> maps;
        for (const auto& jm : j.at("maps")) {
            const auto rows = jm.at("A").get<std::vector<std::vector<double>>>();
            const auto b = jm.at("b").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(rows.size()) != d || static_cast<Eigen::Index>(b.size()) != d) {
                throw InputError("map shape does not match dimension " + std::to_string(d));
            }
            Eigen::MatrixXd a(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                if (static_cast<Eigen::Index>(rows[r].size()) != d) throw InputError("matrix row length mismatch");
                for (Eigen::Index c = 0; c < d; ++c) a(r, c) = rows[r][c];
            }
            maps.push_back(ContractionMap::affine(a, Eigen::Map<const Eigen::VectorXd>(b.data(), d)));
        }
        std::optional<Box> box;
        if (j.contains("box")) {
            const auto lo = j["box"].at("lo").get<std::vector<double>>();
            const auto hi = j["box"].at("hi").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(lo.size()) != d || static_cast<Eigen::Index>(hi.size()) != d) {
                throw InputError("box dimension mismatch");
            }
            box = Box{Eigen::Map<const Eigen::VectorXd>(lo.data(), d), Eigen::Map<const Eigen::VectorXd>(hi.data(), d)};
        }
        return IFSystem(std::move(maps), std::move(weights), name, box);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed IFS definition: ") + e.what());
    }
}

inline nlohmann::json system_to_json(const IFSystem& sys) {
    nlohmann::json j;
    j["name"] = sys.name();
    j["weights"] = sys.weights();
    if (sys.symbolic()) {
        j["metric"] = "sequence";
        j["symbols"] = sys.size();
        return j;
    }
    j["metric"] = "euclidean";
    j["dimension"] = sys.dimension();
    j["maps"] = nlohmann::json::array();
    for (const auto& m : sys.maps()) {
        std::vector<std::vector<double>> rows(m.dimension());
        for (std::size_t r = 0; r < m.dimension(); ++r) {
            for (std::size_t c = 0; c < m.dimension(); ++c) rows[r].push_back(m.matrix()(r, c));
        }
        j["maps"].push_back({{"A", rows}, {"b", std::vector<double>(m.offset().data(), m.offset().data() + m.offset().size())}});
    }
    const Box& b = sys.box();
    j["box"] = {{"lo", std::vector<double>(b.lo.data(), b.lo.data() + b.lo.size())},
                {"hi", std::vector<double>(b.hi.data(), b.hi.data() + b.hi.size())}};
    return j;
}

/// Built-in name, or path to a JSON definition.
inline IFSystem load_system(const std::string& spec) {
    if (auto sys = builtin_system(spec)) return *sys;
    std::ifstream in(spec);
    if (!in) throw InputError("'" + spec + "' is neither a built-in system nor a readable JSON file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("cannot parse '" + spec + "': " + e.what());
    }
    return system_from_json(j, spec);
}

}  // namespace hlab
