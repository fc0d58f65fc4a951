#pragma once

// Dense two-phase simplex with Bland's rule.
//
// The programs this toolkit generates are small in variables (certificate
// coefficients plus one margin variable) but can be large in rows (one row per
// condition/sample pair), so solve_active() wraps the core solver in a
// row-activation loop: solve on a working subset, scan every row for
// violations, add the worst offenders, repeat. Infeasibility of a subset is
// already infeasibility of the whole program, and the final Feasible answer is
// re-verified against every row, so the wrapper changes cost, not answers.
//
// Variables carry finite box bounds. Lower bounds are shifted away; upper
// bounds become ordinary rows. Bland's rule (lowest eligible index enters,
// lowest basis index breaks ratio ties) makes the pivot sequence deterministic
// and cycle-free.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ccert/errors.hpp"

namespace ccert {

enum class Relation { Le, Ge, Eq };

struct LpRow {
    std::vector<double> coeffs;
    Relation rel = Relation::Le;
    double rhs = 0.0;
};

struct LinearProgram {
    int num_vars = 0;
    std::vector<double> lower, upper; // finite, per variable
    std::vector<double> objective;    // maximize objective . x
    std::vector<LpRow> rows;

    void add_row(std::vector<double> coeffs, Relation rel, double rhs) {
        assert(static_cast<int>(coeffs.size()) == num_vars);
        rows.push_back(LpRow{std::move(coeffs), rel, rhs});
    }
};

enum class LpStatus { Feasible, Infeasible };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;      // valid when Feasible
    double objective = 0.0;     // valid when Feasible
    std::vector<std::pair<int, int>> pivots; // (entering col, leaving row) log
};

constexpr double kLpFeasTol = 1e-9;
constexpr double kLpPivotTol = 1e-12;

inline double lp_row_violation(const LpRow& r, const std::vector<double>& x) {
    double lhs = 0.0;
    for (size_t j = 0; j < r.coeffs.size(); ++j) lhs += r.coeffs[j] * x[j];
    switch (r.rel) {
    case Relation::Le: return lhs - r.rhs;
    case Relation::Ge: return r.rhs - lhs;
    case Relation::Eq: return std::fabs(lhs - r.rhs);
    }
    return 0.0;
}

namespace detail {

// Equality-standard-form tableau solver. Rows are a.x' = b with b >= 0 and x'
// the shifted variables followed by slack/artificial columns.
class SimplexTableau {
public:
    // rows: pairs (coeffs over n structural vars, rel, rhs) already shifted.
    SimplexTableau(int n, const std::vector<LpRow>& rows) : n_(n) {
        m_ = static_cast<int>(rows.size());
        // Count slacks: one per inequality row.
        int slacks = 0;
        for (const auto& r : rows)
            if (r.rel != Relation::Eq) ++slacks;
        cols_ = n_ + slacks + m_; // structural + slack + one artificial per row
        a_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
        basis_.assign(m_, -1);
        int s = 0;
        for (int i = 0; i < m_; ++i) {
            const LpRow& r = rows[i];
            double sign = r.rhs < 0.0 ? -1.0 : 1.0;
            for (int j = 0; j < n_; ++j) a_[i][j] = sign * r.coeffs[j];
            a_[i][cols_] = sign * r.rhs;
            if (r.rel != Relation::Eq) {
                double sc = (r.rel == Relation::Le) ? 1.0 : -1.0;
                a_[i][n_ + s] = sign * sc;
                ++s;
            }
            // Artificial for this row; always granted so phase 1 starts basic.
            a_[i][n_ + slacks + i] = 1.0;
            basis_[i] = n_ + slacks + i;
        }
        n_slack_ = slacks;
    }

    // Phase 1: minimize sum of artificials. Returns final infeasibility.
    double phase1(std::vector<std::pair<int, int>>* log) {
        std::vector<double> cost(cols_, 0.0);
        for (int i = 0; i < m_; ++i) cost[n_ + n_slack_ + i] = -1.0; // maximize -sum
        run(cost, n_ + n_slack_ + m_, log); // artificials allowed as entering? they start basic; excluding them from entering is fine too
        double infeas = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= n_ + n_slack_) infeas += a_[i][cols_];
        return infeas;
    }

    // Pivot remaining artificials out of the basis where possible; rows whose
    // artificial cannot be displaced are redundant (0 = 0 after phase 1) and
    // are deleted so phase 2 can never regrow an artificial. Afterwards the
    // artificial columns are frozen out of the entering-candidate set.
    void retire_artificials(std::vector<std::pair<int, int>>* log) {
        for (int i = m_ - 1; i >= 0; --i) {
            if (basis_[i] < n_ + n_slack_) continue;
            int enter = -1;
            for (int j = 0; j < n_ + n_slack_; ++j)
                if (std::fabs(a_[i][j]) > kLpPivotTol) { enter = j; break; }
            if (enter >= 0) {
                pivot(i, enter);
                if (log) log->emplace_back(enter, i);
            } else {
                a_.erase(a_.begin() + i);
                basis_.erase(basis_.begin() + i);
                --m_;
            }
        }
        frozen_ = n_ + n_slack_;
    }

    // Phase 2: maximize cost over structural+slack columns.
    void phase2(const std::vector<double>& structural_cost,
                std::vector<std::pair<int, int>>* log) {
        std::vector<double> cost(cols_, 0.0);
        for (int j = 0; j < n_ && j < static_cast<int>(structural_cost.size()); ++j)
            cost[j] = structural_cost[j];
        run(cost, frozen_, log);
    }

    std::vector<double> structural_solution() const {
        std::vector<double> x(n_, 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < n_) x[basis_[i]] = a_[i][cols_];
        return x;
    }

    std::string dump() const {
        std::ostringstream os;
        os << "tableau " << m_ << " rows x " << cols_ << " cols (" << n_
           << " structural, " << n_slack_ << " slack, " << m_ << " artificial)\n";
        for (int i = 0; i < m_; ++i) {
            os << "  b" << basis_[i] << " |";
            for (int j = 0; j <= cols_; ++j) os << ' ' << a_[i][j];
            os << '\n';
        }
        return os.str();
    }

private:
    int n_, m_, cols_, n_slack_ = 0;
    int frozen_ = -1; // columns >= frozen_ are never entering in phase 2
    std::vector<std::vector<double>> a_;
    std::vector<int> basis_;

    void pivot(int row, int col) {
        double p = a_[row][col];
        assert(std::fabs(p) > 0.0);
        double inv = 1.0 / p;
        for (int j = 0; j <= cols_; ++j) a_[row][j] *= inv;
        a_[row][col] = 1.0; // exact
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            double f = a_[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= cols_; ++j) a_[i][j] -= f * a_[row][j];
            a_[i][col] = 0.0; // exact
        }
        basis_[row] = col;
    }

    // Simplex iterations maximizing cost.x with Bland's rule; columns with
    // index >= col_limit never enter.
    void run(const std::vector<double>& cost, int col_limit,
             std::vector<std::pair<int, int>>* log) {
        // Reduced costs computed from scratch each iteration; m and n are
        // small enough that simplicity beats maintaining the cost row.
        for (;;) {
            // z_j - c_j for nonbasic j; entering needs c_j - z_j > tol.
            int enter = -1;
            for (int j = 0; j < col_limit && enter < 0; ++j) {
                bool basic = false;
                for (int i = 0; i < m_; ++i)
                    if (basis_[i] == j) { basic = true; break; }
                if (basic) continue;
                double z = 0.0;
                for (int i = 0; i < m_; ++i) z += cost[basis_[i]] * a_[i][j];
                if (cost[j] - z > 1e-9) enter = j; // Bland: first improving index
            }
            if (enter < 0) return; // optimal
            int leave = -1;
            double best = 0.0;
            for (int i = 0; i < m_; ++i) {
                if (a_[i][enter] <= kLpPivotTol) continue;
                double ratio = a_[i][cols_] / a_[i][enter];
                if (leave < 0 || ratio < best - 1e-12 ||
                    (std::fabs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave]))
                    { leave = i; best = ratio; }
            }
            if (leave < 0) {
                // Unbounded direction. Bounded-box callers only hit this when
                // the objective touches no bounded variable; treat the current
                // vertex as optimal for them (documented: boxes make the
                // feasible set compact, so a true unbounded ray cannot occur).
                throw NumericalBreakdown("simplex detected an unbounded direction; "
                                         "variable bounds are missing or not finite");
            }
            pivot(leave, enter);
            if (log) log->emplace_back(enter, leave);
        }
    }
};

} // namespace detail

// Solve with every row included. Bounds must be finite.
inline LpResult solve_lp(const LinearProgram& lp) {
    const int n = lp.num_vars;
    if (static_cast<int>(lp.lower.size()) != n || static_cast<int>(lp.upper.size()) != n)
        throw DimensionMismatch("variable bounds do not match num_vars");
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]))
            throw Error("variable bounds must be finite");
        if (lp.lower[j] > lp.upper[j]) return LpResult{LpStatus::Infeasible, {}, 0.0, {}};
    }

    // Shift x = lower + x', x' >= 0; upper bounds become rows x'_j <= u-l.
    std::vector<LpRow> rows;
    rows.reserve(lp.rows.size() + n);
    for (const auto& r : lp.rows) {
        if (static_cast<int>(r.coeffs.size()) != n)
            throw DimensionMismatch("row width does not match num_vars");
        LpRow s = r;
        double shift = 0.0;
        for (int j = 0; j < n; ++j) shift += r.coeffs[j] * lp.lower[j];
        s.rhs -= shift;
        rows.push_back(std::move(s));
    }
    for (int j = 0; j < n; ++j) {
        LpRow ub;
        ub.coeffs.assign(n, 0.0);
        ub.coeffs[j] = 1.0;
        ub.rel = Relation::Le;
        ub.rhs = lp.upper[j] - lp.lower[j];
        rows.push_back(std::move(ub));
    }

    detail::SimplexTableau tab(n, rows);
    LpResult res;
    double infeas = tab.phase1(&res.pivots);
    if (infeas > 1e-7)
        return LpResult{LpStatus::Infeasible, {}, 0.0, std::move(res.pivots)};
    tab.retire_artificials(&res.pivots);
    tab.phase2(lp.objective, &res.pivots);

    std::vector<double> xs = tab.structural_solution();
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) res.x[j] = lp.lower[j] + xs[j];
    res.objective = 0.0;
    for (int j = 0; j < n && j < static_cast<int>(lp.objective.size()); ++j)
        res.objective += lp.objective[j] * res.x[j];

    // Re-verify: a Feasible claim must satisfy every row and bound.
    for (int j = 0; j < n; ++j) {
        if (res.x[j] < lp.lower[j] - 1e-6 || res.x[j] > lp.upper[j] + 1e-6)
            throw NumericalBreakdown("simplex produced an out-of-bounds solution");
        res.x[j] = std::clamp(res.x[j], lp.lower[j], lp.upper[j]);
    }
    for (const auto& r : lp.rows)
        if (lp_row_violation(r, res.x) > 1e-6)
            throw NumericalBreakdown("simplex solution fails re-verification");
    res.status = LpStatus::Feasible;
    return res;
}

// Row-activation variant for programs with many rows (see header comment).
inline LpResult solve_lp_active(const LinearProgram& lp, int batch = 64) {
    const size_t m = lp.rows.size();
    if (m <= 256) return solve_lp(lp);

    LinearProgram sub = lp;
    sub.rows.clear();
    std::vector<char> active(m, 0);
    // Seed with an index-spread sample of rows so the first solve is not
    // degenerate toward one condition family.
    size_t seed_count = std::min<size_t>(m, std::max(2 * lp.num_vars + 8, 32));
    for (size_t k = 0; k < seed_count; ++k) {
        size_t idx = k * m / seed_count;
        if (!active[idx]) { active[idx] = 1; sub.rows.push_back(lp.rows[idx]); }
    }

    for (;;) {
        LpResult r = solve_lp(sub);
        if (r.status == LpStatus::Infeasible) return r; // subset infeasible => LP infeasible
        // Scan all rows for violations at the candidate point.
        std::vector<std::pair<double, size_t>> bad;
        for (size_t i = 0; i < m; ++i) {
            if (active[i]) continue;
            double v = lp_row_violation(lp.rows[i], r.x);
            if (v > kLpFeasTol) bad.emplace_back(-v, i); // sort by decreasing violation
        }
        if (bad.empty()) return r;
        std::sort(bad.begin(), bad.end());
        for (size_t k = 0; k < bad.size() && k < static_cast<size_t>(batch); ++k) {
            active[bad[k].second] = 1;
            sub.rows.push_back(lp.rows[bad[k].second]);
        }
    }
}

// Human-readable dump for debugging failed programs.
inline std::string dump_lp(const LinearProgram& lp) {
    std::ostringstream os;
    os << "maximize";
    for (int j = 0; j < lp.num_vars; ++j)
        os << (j ? " + " : " ") << (j < (int)lp.objective.size() ? lp.objective[j] : 0.0)
           << "*v" << j;
    os << "\nsubject to\n";
    for (const auto& r : lp.rows) {
        os << " ";
        for (int j = 0; j < lp.num_vars; ++j) os << " " << r.coeffs[j] << "*v" << j;
        os << (r.rel == Relation::Le ? " <= " : r.rel == Relation::Ge ? " >= " : " == ")
           << r.rhs << "\n";
    }
    for (int j = 0; j < lp.num_vars; ++j)
        os << "  " << lp.lower[j] << " <= v" << j << " <= " << lp.upper[j] << "\n";
    return os.str();
}

} // namespace ccert
