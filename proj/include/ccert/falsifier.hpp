#pragma once

// Interval branch-and-prune engine. A claim is a quantified statement over a
// box (optionally narrowed by constraint inequalities): either
//   ForAllNonneg:  for all v in D, e(v) >= 0
//   UnsatConj:     no v in D satisfies e_1(v) >= 0, ..., e_k(v) >= 0
// decide() returns Verified (interval-proved, sound thanks to outward
// rounding), Falsified (with a concrete, pointwise revalidated witness), or
// Unknown (budget or width floor reached first). bound_min() computes an
// enclosure of the exact minimum of an expression over such a domain; the
// checker uses it to report certificate margins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/expr.hpp"
#include "ccert/region.hpp"

namespace ccert {

enum class Outcome { Verified, Falsified, Unknown };

inline const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::Verified: return "verified";
    case Outcome::Falsified: return "falsified";
    case Outcome::Unknown: return "unknown";
    }
    return "?";
}

struct FalsifierOptions {
    double delta = 1e-3;         // stop splitting once used dims are this narrow
    uint64_t budget = 1'000'000; // maximum number of box evaluations
    double eps = 1e-6;           // robustness threshold for witnesses
};

enum class ClaimKind { ForAllNonneg, UnsatConj };

struct Claim {
    ClaimKind kind = ClaimKind::ForAllNonneg;
    std::vector<Expr> exprs;       // ForAllNonneg uses exprs[0]; UnsatConj all
    Box domain;                    // finite box over all claim variables
    std::vector<Expr> constraints; // membership: every g(v) >= 0
    const RegionResolver* regions = nullptr;
    std::string tag;               // label carried into reports
};

struct FalsifierResult {
    Outcome outcome = Outcome::Unknown;
    std::vector<double> witness;   // set when Falsified
    double witness_value = 0.0;    // offending expression value at the witness
    uint64_t boxes = 0;            // boxes evaluated
    uint64_t unknown_leaves = 0;   // leaves retired at the width floor
    double pending_low = std::numeric_limits<double>::infinity();
    // ^ smallest unresolved lower bound (ForAllNonneg) left behind on Unknown
    double smallest_box = std::numeric_limits<double>::infinity();
    // ^ smallest unresolved box width (diagnostic for Unknown outcomes)
    bool budget_exhausted = false;
};

// ---------------------------------------------------------------------------
// Claim-scoped region views. Certificate bases write ind(R) where R is a
// region of the *state* space; inside a claim over stacked variable blocks
// (x, y, z copies of the state) the same name must test only its block. The
// scoped table maps a name to a base region plus a variable offset.

class ScopedRegionTable : public RegionResolver {
public:
    void add(const std::string& name, const Region* base, int offset) {
        if (!base) throw Error("scoped region '" + name + "' has no base");
        entries_[name] = Entry{base, offset, {}};
    }

    // Register a region reached through a coordinate map: membership of the
    // ambient point p is decided as base ∋ (map_1(p), ..., map_d(p)).
    void add_composed(const std::string& name, const Region* base, std::vector<Expr> map) {
        if (!base) throw Error("scoped region '" + name + "' has no base");
        entries_[name] = Entry{base, 0, std::move(map)};
    }

    bool has(const std::string& name) const { return entries_.count(name) > 0; }

    bool contains_point(const std::string& name, std::span<const double> pt) const override {
        const Entry& e = find(name);
        int dim = e.dim();
        if (!e.map.empty()) {
            std::vector<double> q;
            q.reserve(e.map.size());
            for (const auto& m : e.map) q.push_back(m.eval_point(pt, this));
            return e.base->contains(q, this);
        }
        if (e.offset + dim > (int)pt.size())
            throw DimensionMismatch("point too short for region '" + name + "'");
        return e.base->contains(pt.subspan(e.offset, dim), this);
    }

    BoxStatus box_status(const std::string& name, const Box& box) const override {
        const Entry& e = find(name);
        int dim = e.dim();
        Box sub;
        if (!e.map.empty()) {
            for (const auto& m : e.map) sub.push_back(m.eval_box(box, this));
        } else {
            if (e.offset + dim > (int)box.size())
                throw DimensionMismatch("box too short for region '" + name + "'");
            for (int i = 0; i < dim; ++i) sub.push_back(box[e.offset + i]);
        }
        return e.base->status(sub, this);
    }

    std::vector<Box> region_boxes(const std::string& name) const override {
        const Entry& e = find(name);
        if (!e.map.empty()) return {}; // clause faces are not invertible through the map
        int dim = e.dim();
        std::vector<Box> out;
        for (const auto& c : e.base->clauses) {
            // Lift the clause bound into claim coordinates; dimensions outside
            // the block carry no face information (infinite extent).
            Box lifted;
            for (int i = 0; i < e.offset; ++i)
                lifted.push_back(Interval(-std::numeric_limits<double>::infinity(),
                                          std::numeric_limits<double>::infinity()));
            for (int i = 0; i < dim; ++i) lifted.push_back(c.bound[i]);
            out.push_back(std::move(lifted));
        }
        return out;
    }

    std::vector<int> region_dims(const std::string& name) const override {
        const Entry& e = find(name);
        std::vector<int> out;
        if (!e.map.empty()) {
            std::vector<bool> used;
            for (const auto& m : e.map) m.collect_vars(used);
            for (size_t i = 0; i < used.size(); ++i)
                if (used[i]) out.push_back((int)i);
            return out;
        }
        for (int i = 0; i < e.dim(); ++i) out.push_back(e.offset + i);
        return out;
    }

private:
    struct Entry {
        const Region* base = nullptr;
        int offset = 0;
        std::vector<Expr> map; // empty: plain block at `offset`
        int dim() const {
            return base->clauses.empty() ? 0 : (int)base->clauses.front().bound.size();
        }
    };
    const Entry& find(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw UnknownRegion(name);
        return it->second;
    }
    std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------

namespace detail {

struct LeafEval {
    std::vector<Interval> expr_bounds;
    std::vector<Interval> con_bounds;
    bool domain_empty = false;  // some constraint provably < 0
    bool proved = false;        // claim established on this box
    double score = 0.0;         // queue priority, higher pops first
};

struct ClaimWork {
    const Claim* claim;
    FalsifierOptions opts;
    std::vector<int> used_dims;            // dims worth splitting
    std::vector<std::pair<int, double>> faces; // region face planes (dim, coord)
    uint64_t boxes = 0;

    explicit ClaimWork(const Claim& c, const FalsifierOptions& o) : claim(&c), opts(o) {
        if (c.exprs.empty()) throw Error("claim has no expressions");
        if (c.domain.empty()) throw Error("claim has an empty domain");
        for (const auto& iv : c.domain)
            if (!iv.is_finite()) throw Error("claim domain must be a finite box");

        std::vector<bool> used;
        std::vector<std::string> region_names;
        for (const auto& e : c.exprs) {
            e.collect_vars(used);
            e.collect_regions(region_names);
        }
        for (const auto& g : c.constraints) {
            g.collect_vars(used);
            g.collect_regions(region_names);
        }
        std::sort(region_names.begin(), region_names.end());
        region_names.erase(std::unique(region_names.begin(), region_names.end()),
                           region_names.end());
        if (!region_names.empty() && !c.regions)
            throw UnknownRegion(region_names.front());
        if ((size_t)std::count(used.begin(), used.end(), true) == 0 &&
            region_names.empty()) {
            // constant claim; still give the loop one dim to look at
        }
        used.resize(c.domain.size(), false);
        for (const auto& r : region_names) {
            for (int d : c.regions->region_dims(r))
                if (d >= 0 && d < (int)used.size()) used[d] = true;
            for (const auto& b : c.regions->region_boxes(r))
                for (size_t d = 0; d < b.size() && d < c.domain.size(); ++d) {
                    for (double coord : {b[d].lo, b[d].hi})
                        if (std::isfinite(coord)) faces.emplace_back((int)d, coord);
                }
        }
        std::sort(faces.begin(), faces.end());
        faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
        for (size_t d = 0; d < used.size(); ++d)
            if (used[d]) used_dims.push_back((int)d);
        if (used_dims.empty())
            for (size_t d = 0; d < c.domain.size(); ++d) used_dims.push_back((int)d);
    }

    LeafEval evaluate(const Box& box) {
        ++boxes;
        LeafEval ev;
        ev.con_bounds.reserve(claim->constraints.size());
        for (const auto& g : claim->constraints) {
            Interval b = g.eval_box(box, claim->regions);
            ev.con_bounds.push_back(b);
            if (b.hi < 0.0) ev.domain_empty = true;
        }
        if (ev.domain_empty) {
            ev.proved = true;
            return ev;
        }
        ev.expr_bounds.reserve(claim->exprs.size());
        for (const auto& e : claim->exprs)
            ev.expr_bounds.push_back(e.eval_box(box, claim->regions));
        if (claim->kind == ClaimKind::ForAllNonneg) {
            ev.proved = ev.expr_bounds[0].lo >= 0.0;
            ev.score = -ev.expr_bounds[0].lo; // most negative bound first
        } else {
            double min_hi = std::numeric_limits<double>::infinity();
            double min_lo = std::numeric_limits<double>::infinity();
            for (const auto& b : ev.expr_bounds) {
                min_hi = std::min(min_hi, b.hi);
                min_lo = std::min(min_lo, b.lo);
            }
            ev.proved = min_hi < 0.0;      // some conjunct is negative throughout
            ev.score = min_lo;             // closest to satisfying everywhere first
        }
        return ev;
    }

    bool point_in_domain(std::span<const double> pt) const {
        for (size_t d = 0; d < claim->domain.size(); ++d)
            if (!claim->domain[d].contains(pt[d])) return false;
        for (const auto& g : claim->constraints)
            if (g.eval_point(pt, claim->regions) < 0.0) return false;
        return true;
    }

    // Value whose sign decides a witness: ForAllNonneg wants it <= -eps/2,
    // UnsatConj wants min over conjuncts >= +eps/2.
    double witness_value(std::span<const double> pt) const {
        if (claim->kind == ClaimKind::ForAllNonneg)
            return claim->exprs[0].eval_point(pt, claim->regions);
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : claim->exprs)
            m = std::min(m, e.eval_point(pt, claim->regions));
        return m;
    }

    bool is_witness(std::span<const double> pt) const {
        if (!point_in_domain(pt)) return false;
        double v = witness_value(pt);
        return claim->kind == ClaimKind::ForAllNonneg ? v <= -opts.eps / 2
                                                      : v >= opts.eps / 2;
    }

    // Candidate witnesses inside `box`: the midpoint, then a coordinate-wise
    // greedy walk toward the offending sign that never leaves the domain.
    std::vector<std::vector<double>> candidates(const Box& box) const {
        std::vector<std::vector<double>> out;
        std::vector<double> mid = box.midpoint();
        out.push_back(mid);

        const bool want_low = claim->kind == ClaimKind::ForAllNonneg;
        std::vector<double> cur = mid;
        if (!point_in_domain(cur)) return out;
        double best = witness_value(cur);
        for (int d : used_dims) {
            double keep = cur[d];
            for (double cand : {box[d].lo, box[d].hi}) {
                cur[d] = cand;
                if (!point_in_domain(cur)) continue;
                double v = witness_value(cur);
                if (want_low ? v < best : v > best) {
                    best = v;
                    keep = cand;
                }
            }
            cur[d] = keep;
        }
        if (cur != mid) out.push_back(cur);
        return out;
    }

    // Split placement. Prefer a region face plane that a straddling indicator
    // needs resolved; otherwise bisect the widest used dimension.
    std::pair<int, double> choose_split(const Box& box) const {
        int best_dim = -1;
        double best_coord = 0.0, best_balance = 0.0;
        for (const auto& [d, coord] : faces) {
            if (d >= (int)box.size()) continue;
            const Interval& iv = box[d];
            double margin = 1e-12 * std::max(1.0, std::fabs(coord));
            if (coord <= iv.lo + margin || coord >= iv.hi - margin) continue;
            double balance = std::min(coord - iv.lo, iv.hi - coord);
            if (balance > best_balance) {
                best_balance = balance;
                best_dim = d;
                best_coord = coord;
            }
        }
        if (best_dim >= 0) return {best_dim, best_coord};

        int dim = used_dims.front();
        double width = box[dim].width();
        for (int d : used_dims)
            if (box[d].width() > width) { width = box[d].width(); dim = d; }
        return {dim, box[dim].midpoint()};
    }

    double max_used_width(const Box& box) const {
        double w = 0.0;
        for (int d : used_dims) w = std::max(w, box[d].width());
        return w;
    }
};

} // namespace detail

inline FalsifierResult decide(const Claim& claim, const FalsifierOptions& opts = {}) {
    detail::ClaimWork work(claim, opts);
    FalsifierResult res;

    struct QueueItem {
        double score;
        uint64_t order;
        Box box;
        bool operator<(const QueueItem& o) const {
            if (score != o.score) return score < o.score;
            return order > o.order; // FIFO among equal scores
        }
    };
    std::priority_queue<QueueItem> queue;
    uint64_t order = 0;
    bool proved_everywhere = true;

    auto admit = [&](Box box) -> bool {
        detail::LeafEval ev = work.evaluate(box);
        if (ev.proved) return true;
        for (const auto& pt : work.candidates(box)) {
            if (work.is_witness(pt)) {
                res.outcome = Outcome::Falsified;
                res.witness = pt;
                res.witness_value = work.witness_value(pt);
                return false;
            }
        }
        double width = work.max_used_width(box);
        if (width <= opts.delta) {
            ++res.unknown_leaves;
            proved_everywhere = false;
            res.smallest_box = std::min(res.smallest_box, width);
            if (claim.kind == ClaimKind::ForAllNonneg)
                res.pending_low = std::min(res.pending_low, ev.expr_bounds[0].lo);
            return true;
        }
        queue.push(QueueItem{ev.score, order++, std::move(box)});
        return true;
    };

    if (!admit(claim.domain)) {
        res.boxes = work.boxes;
        return res;
    }
    while (!queue.empty()) {
        if (work.boxes >= opts.budget) {
            // Whatever remains queued is unresolved.
            res.outcome = Outcome::Unknown;
            res.budget_exhausted = true;
            res.unknown_leaves += queue.size();
            while (!queue.empty()) {
                if (claim.kind == ClaimKind::ForAllNonneg) {
                    Interval b = claim.exprs[0].eval_box(queue.top().box, claim.regions);
                    res.pending_low = std::min(res.pending_low, b.lo);
                }
                res.smallest_box = std::min(res.smallest_box, work.max_used_width(queue.top().box));
                queue.pop();
            }
            res.boxes = work.boxes;
            return res;
        }
        Box box = queue.top().box;
        queue.pop();
        auto [dim, at] = work.choose_split(box);
        auto [left, right] = box.split_at(dim, at);
        if (!admit(std::move(left)) || !admit(std::move(right))) {
            res.boxes = work.boxes;
            return res;
        }
    }

    res.outcome = proved_everywhere ? Outcome::Verified : Outcome::Unknown;
    res.boxes = work.boxes;
    return res;
}

// ---------------------------------------------------------------------------
// Enclosure of min over the domain of a single expression. `lower` is a sound
// lower bound of the exact minimum; `upper` is the value at the best feasible
// point found (+inf if none, e.g. when the constrained domain is empty).

struct BoundResult {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    std::vector<double> arg_upper; // feasible point achieving `upper`
    uint64_t boxes = 0;
    bool converged = false; // gap closed to tolerance before any budget stop
};

inline BoundResult bound_min(const Expr& expr, const Box& domain,
                             const std::vector<Expr>& constraints,
                             const RegionResolver* regions,
                             const FalsifierOptions& opts = {}) {
    Claim probe;
    probe.kind = ClaimKind::ForAllNonneg;
    probe.exprs = {expr};
    probe.domain = domain;
    probe.constraints = constraints;
    probe.regions = regions;
    detail::ClaimWork work(probe, opts);

    BoundResult res;
    struct QueueItem {
        double low;
        uint64_t order;
        Box box;
        bool operator>(const QueueItem& o) const {
            if (low != o.low) return low > o.low;
            return order > o.order;
        }
    };
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<QueueItem>> queue;
    uint64_t order = 0;
    double floor_low = std::numeric_limits<double>::infinity(); // retired leaves
    bool any_domain = false;

    auto try_points = [&](const Box& box) {
        for (const auto& pt : work.candidates(box)) {
            if (!work.point_in_domain(pt)) continue;
            double v = expr.eval_point(pt, regions);
            if (v < res.upper) {
                res.upper = v;
                res.arg_upper = pt;
            }
        }
    };
    auto admit = [&](Box box) {
        detail::LeafEval ev = work.evaluate(box);
        if (ev.domain_empty) return;
        any_domain = true;
        try_points(box);
        double low = ev.expr_bounds.empty()
                         ? expr.eval_box(box, regions).lo
                         : ev.expr_bounds[0].lo;
        if (work.max_used_width(box) <= opts.delta) {
            floor_low = std::min(floor_low, low);
            return;
        }
        queue.push(QueueItem{low, order++, std::move(box)});
    };

    admit(domain);
    const double tol = 1e-9;
    while (!queue.empty() && work.boxes < opts.budget) {
        double q_low = queue.top().low;
        double global_low = std::min(q_low, floor_low);
        if (std::isfinite(res.upper) &&
            res.upper - global_low <= tol + 1e-6 * std::fabs(res.upper)) {
            res.converged = true;
            break;
        }
        if (q_low > floor_low) {
            // Refining the queue cannot raise the floor; the gap is already as
            // tight as the width floor allows.
            break;
        }
        Box box = queue.top().box;
        queue.pop();
        auto [dim, at] = work.choose_split(box);
        auto [left, right] = box.split_at(dim, at);
        admit(std::move(left));
        admit(std::move(right));
    }
    double low = floor_low;
    while (!queue.empty()) {
        low = std::min(low, queue.top().low);
        queue.pop();
    }
    if (!any_domain) {
        // Empty feasible set: min over nothing.
        res.lower = std::numeric_limits<double>::infinity();
        res.upper = std::numeric_limits<double>::infinity();
        res.converged = true;
    } else {
        res.lower = low;
    }
    res.boxes = work.boxes;
    return res;
}

} // namespace ccert
