#ifndef QCONTACT_POINT_HPP
#define QCONTACT_POINT_HPP

#include <map>
#include <string>
#include <vector>

#include "qcontact/errors.hpp"

namespace qcontact {

using ParamMap = std::map<std::string, double>;

// A point of the extended phase space TQ x R^q, stored as the flat coordinate
// vector (q^1..q^n, v^1..v^n, z_1..z_q).
struct ExtendedPoint {
    int n = 0;
    int qcount = 0;
    std::vector<double> coords;

    ExtendedPoint() = default;
    ExtendedPoint(int n_, int qcount_, std::vector<double> c)
        : n(n_), qcount(qcount_), coords(std::move(c)) {
        if (static_cast<int>(coords.size()) != dim())
            throw DimensionMismatch("point has " + std::to_string(coords.size()) +
                                    " coordinates, expected " + std::to_string(dim()));
    }

    static ExtendedPoint zero(int n, int qcount) {
        return ExtendedPoint(n, qcount, std::vector<double>(2 * n + qcount, 0.0));
    }

    int dim() const { return 2 * n + qcount; }

    // 1-based accessors matching the q1/v1/z1 naming of the expression language.
    double q(int i) const { return coords[static_cast<std::size_t>(i - 1)]; }
    double v(int i) const { return coords[static_cast<std::size_t>(n + i - 1)]; }
    double z(int k) const { return coords[static_cast<std::size_t>(2 * n + k - 1)]; }

    double& q(int i) { return coords[static_cast<std::size_t>(i - 1)]; }
    double& v(int i) { return coords[static_cast<std::size_t>(n + i - 1)]; }
    double& z(int k) { return coords[static_cast<std::size_t>(2 * n + k - 1)]; }
};

} // namespace qcontact

#endif // QCONTACT_POINT_HPP
