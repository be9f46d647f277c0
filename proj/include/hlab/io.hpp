#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attractor.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "measure.hpp"
#include "point.hpp"

namespace hlab {

namespace detail {

inline void write_point_fields(std::ostream& os, const Point& p) {
    if (p.symbolic()) {
        os << to_string(p.word());
        return;
    }
    for (Eigen::Index k = 0; k < p.coords().size(); ++k) {
        if (k) os << ',';
        os << p.coords()(k);
    }
}

inline void write_point_header(std::ostream& os, const Point& p) {
    if (p.symbolic()) {
        os << "word";
        return;
    }
    static const char* names[] = {"x", "y", "z"};
    for (Eigen::Index k = 0; k < p.coords().size(); ++k) {
        if (k) os << ',';
        if (k < 3) os << names[k];
        else os << 'x' << k + 1;
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    return out;
}

}  // namespace detail

/// One point per row, with a header line (x[,y..] or word).
inline void write_points_csv(std::ostream& os, const std::vector<Point>& points) {
    if (points.empty()) return;
    os.precision(17);
    detail::write_point_header(os, points.front());
    os << '\n';
    for (const auto& p : points) {
        detail::write_point_fields(os, p);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Density rasters
// ---------------------------------------------------------------------------

/// Point counts on a width x height pixel grid over a box, row 0 at the top.
/// 1-D clouds fill whole columns (a strip).
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint32_t> counts;

    std::uint32_t at(std::size_t col, std::size_t row) const { return counts[row * width + col]; }
    std::uint32_t max_count() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }
};

inline Raster density_raster(const std::vector<Point>& points, const Box& box, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw InputError("raster needs positive size");
    const std::size_t d = box.dimension();
    if (d != 1 && d != 2) throw UnsupportedError("density rasters are 1-D or 2-D only");
    Raster r{width, height, std::vector<std::uint32_t>(width * height, 0)};
    auto bin = [](double v, double lo, double hi, std::size_t count) {
        const double span = hi - lo;
        const double t = span > 0.0 ? (v - lo) / span : 0.5;
        const auto k = static_cast<long long>(std::floor(t * static_cast<double>(count)));
        return static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(count) - 1));
    };
    for (const auto& p : points) {
        const Eigen::VectorXd& c = p.coords();
        const std::size_t col = bin(c(0), box.lo(0), box.hi(0), width);
        if (d == 1) {
            for (std::size_t row = 0; row < height; ++row) ++r.counts[row * width + col];
        } else {
            const std::size_t row = height - 1 - bin(c(1), box.lo(1), box.hi(1), height);
            ++r.counts[row * width + col];
        }
    }
    return r;
}

/// Default raster for a cloud: 512 x 64 strip in 1-D, 512 x 512 in 2-D.
inline Raster density_raster(const std::vector<Point>& points, const Box& box) {
    return box.dimension() == 1 ? density_raster(points, box, 512, 64) : density_raster(points, box, 512, 512);
}

namespace detail {

// White background; occupied pixels darken with log density, never fully white.
inline int gray_level(std::uint32_t count, std::uint32_t max_count) {
    if (count == 0 || max_count == 0) return 255;
    const double t = std::log1p(static_cast<double>(count)) / std::log1p(static_cast<double>(max_count));
    return std::min(200, static_cast<int>(std::lround(200.0 * (1.0 - t))));
}

}  // namespace detail

/// Plain (ASCII) PGM.
inline void write_pgm(std::ostream& os, const Raster& r) {
    os << "P2\n" << r.width << ' ' << r.height << "\n255\n";
    const std::uint32_t top = r.max_count();
    for (std::size_t row = 0; row < r.height; ++row) {
        for (std::size_t col = 0; col < r.width; ++col) {
            if (col) os << ' ';
            os << detail::gray_level(r.at(col, row), top);
        }
        os << '\n';
    }
}

/// Plain (ASCII) PPM, occupied pixels in a blue ramp.
inline void write_ppm(std::ostream& os, const Raster& r) {
    os << "P3\n" << r.width << ' ' << r.height << "\n255\n";
    const std::uint32_t top = r.max_count();
    for (std::size_t row = 0; row < r.height; ++row) {
        for (std::size_t col = 0; col < r.width; ++col) {
            const int g = detail::gray_level(r.at(col, row), top);
            if (col) os << ' ';
            if (g == 255) os << "255 255 255";
            else os << g / 2 << ' ' << g / 2 << ' ' << std::min(255, g + 55);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

inline const char* to_string(MeasureKind k) { return k == MeasureKind::deterministic ? "deterministic" : "empirical"; }

/// Coordinates (or word) followed by the weight, one atom per row.
inline void write_measure_csv(std::ostream& os, const AtomicMeasure& mu) {
    if (mu.atoms.empty()) throw InputError("cannot export an empty measure");
    os.precision(17);
    detail::write_point_header(os, mu.atoms.front().point);
    os << ",weight\n";
    for (const auto& a : mu.atoms) {
        detail::write_point_fields(os, a.point);
        os << ',' << a.weight << '\n';
    }
}

inline nlohmann::json measure_sidecar(const AtomicMeasure& mu, const std::string& system) {
    return {{"system", system}, {"depth", mu.resolution}, {"kind", to_string(mu.kind)}};
}

/// Reads a measure written by write_measure_csv; the sidecar supplies
/// resolution and kind.
inline AtomicMeasure read_measure_csv(std::istream& is, const nlohmann::json& sidecar) {
    AtomicMeasure mu;
    try {
        mu.resolution = sidecar.at("depth").get<std::size_t>();
        const std::string kind = sidecar.at("kind").get<std::string>();
        if (kind == "deterministic") mu.kind = MeasureKind::deterministic;
        else if (kind == "empirical") mu.kind = MeasureKind::empirical;
        else throw InputError("unknown measure kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed measure sidecar: ") + e.what());
    }
    std::string line;
    if (!std::getline(is, line)) throw InputError("measure CSV is empty");
    const auto header = detail::split_csv(line);
    if (header.size() < 2 || header.back() != "weight") throw InputError("measure CSV header must end with 'weight'");
    const bool symbolic = header.front() == "word";
    const std::size_t dim = header.size() - 1;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = detail::split_csv(line);
        if (fields.size() != header.size()) throw InputError("measure CSV row " + std::to_string(row) + " has the wrong field count");
        try {
            const double w = std::stod(fields.back());
            if (symbolic) {
                mu.atoms.push_back({Point(parse_word(fields.front())), w});
            } else {
                Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
                for (std::size_t k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(k)) = std::stod(fields[k]);
                mu.atoms.push_back({Point(std::move(x)), w});
            }
        } catch (const std::logic_error&) {
            throw InputError("measure CSV row " + std::to_string(row) + " is not numeric");
        }
    }
    if (mu.atoms.empty()) throw InputError("measure CSV has no atoms");
    return mu;
}

/// 1-D cumulative distribution: x, F(x) after each atom, sorted by x.
inline void write_cdf_csv(std::ostream& os, const AtomicMeasure& mu) {
    if (mu.symbolic() || mu.dimension() != 1) throw UnsupportedError("CDF export is 1-D only");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : mu.atoms) atoms.emplace_back(a.point.x(), a.weight);
    std::sort(atoms.begin(), atoms.end());
    os.precision(17);
    os << "x,cdf\n";
    double cdf = 0.0;
    for (const auto& [x, w] : atoms) {
        cdf += w;
        os << x << ',' << cdf << '\n';
    }
}

}  // namespace hlab
