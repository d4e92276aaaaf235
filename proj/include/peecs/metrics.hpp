#pragma once

#include "peecs/rfs_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace peecs {

class AssignmentError : public Error {
public:
    using Error::Error;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials, O(n^3)). Returns row -> column.
[[nodiscard]] inline std::vector<int> assignment_min_cost(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw AssignmentError("assignment: cost matrix is not square");
    if (!cost.allFinite()) throw AssignmentError("assignment: cost matrix has non-finite entries");
    const int n = static_cast<int>(cost.rows());
    if (n == 0) return {};

    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; p[j] is the row matched to column j, column 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

struct OspaParams {
    double cutoff = 100.0;
    double order = 1.0;
};

struct OspaResult {
    double total = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

/// OSPA distance between two finite point sets, split into localisation and cardinality parts
/// (total^p = localization^p + cardinality^p). Two empty sets are at distance 0.
[[nodiscard]] inline OspaResult ospa(const std::vector<Eigen::VectorXd>& truth,
                                     const std::vector<Eigen::VectorXd>& estimate, const OspaParams& params) {
    const std::vector<Eigen::VectorXd>& small = truth.size() <= estimate.size() ? truth : estimate;
    const std::vector<Eigen::VectorXd>& large = truth.size() <= estimate.size() ? estimate : truth;
    const auto m = static_cast<Eigen::Index>(small.size());
    const auto n = static_cast<Eigen::Index>(large.size());
    OspaResult out;
    if (n == 0) return out;

    const double c = params.cutoff;
    const double p = params.order;
    const double cp = std::pow(c, p);

    double loc_sum = 0.0;
    if (m > 0) {
        // Pad to n x n with rows costing c^p; every padded row absorbs one unmatched point.
        Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, cp);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (small[i].size() != large[j].size()) throw DimensionMismatch("ospa: point dimensions differ");
                const double d = std::min(c, (small[i] - large[j]).norm());
                cost(i, j) = std::pow(d, p);
            }
        }
        const auto assignment = assignment_min_cost(cost);
        // Sum matched costs in sorted order so that swapping the arguments is bit-exact.
        std::vector<double> matched;
        matched.reserve(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) matched.push_back(cost(i, assignment[static_cast<std::size_t>(i)]));
        std::sort(matched.begin(), matched.end());
        for (double d : matched) loc_sum += d;
    }
    const double card_sum = static_cast<double>(n - m) * cp;
    const double nn = static_cast<double>(n);
    out.localization = std::pow(loc_sum / nn, 1.0 / p);
    out.cardinality = std::pow(card_sum / nn, 1.0 / p);
    out.total = std::pow((loc_sum + card_sum) / nn, 1.0 / p);
    return out;
}

}  // namespace peecs
