#pragma once

// Regions are finite unions of conjunctive clauses. A clause is a bounding box
// plus zero or more polynomial-ish constraints g(x) >= 0 over the state
// variables x1..xn. Membership is closed (boundaries belong to the region).
//
// Box classification is conservative in exactly one direction each:
//   Inside    -> every point of the box is in the region (some clause
//                certainly contains the whole box),
//   Outside   -> no point of the box is in the region (every clause certainly
//                excludes the whole box),
//   Straddles -> anything else.
// Overlapping clauses that only jointly cover a box therefore classify as
// Straddles; callers split until the question resolves.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/expr.hpp"
#include "ccert/interval.hpp"
#include "ccert/rng.hpp"

namespace ccert {

struct RegionClause {
    Box bound;                    // required; degenerate (point) dims allowed
    std::vector<Expr> constraints; // each meaning g(x) >= 0

    bool contains(std::span<const double> pt, const RegionResolver* rr = nullptr) const {
        for (size_t i = 0; i < bound.size(); ++i)
            if (!bound[i].contains(pt[i])) return false;
        for (const auto& g : constraints)
            if (g.eval_point(pt, rr) < 0.0) return false;
        return true;
    }

    BoxStatus status(const Box& box, const RegionResolver* rr = nullptr) const {
        if (!bound.intersects(box)) return BoxStatus::Outside;
        bool inside = bound.contains(box);
        for (const auto& g : constraints) {
            Interval v = g.eval_box(box, rr);
            if (v.hi < 0.0) return BoxStatus::Outside;
            if (v.lo < 0.0) inside = false;
        }
        return inside ? BoxStatus::Inside : BoxStatus::Straddles;
    }
};

struct Region {
    std::string id;
    std::vector<RegionClause> clauses; // empty vector = empty region

    bool contains(std::span<const double> pt, const RegionResolver* rr = nullptr) const {
        for (const auto& c : clauses)
            if (c.contains(pt, rr)) return true;
        return false;
    }

    BoxStatus status(const Box& box, const RegionResolver* rr = nullptr) const {
        bool all_outside = true;
        for (const auto& c : clauses) {
            BoxStatus s = c.status(box, rr);
            if (s == BoxStatus::Inside) return BoxStatus::Inside;
            if (s != BoxStatus::Outside) all_outside = false;
        }
        return all_outside ? BoxStatus::Outside : BoxStatus::Straddles;
    }

    bool empty() const { return clauses.empty(); }

    // Hull of the clause bounds; meaningless for empty regions.
    std::optional<Box> bounding_box() const {
        if (clauses.empty()) return std::nullopt;
        Box h = clauses.front().bound;
        for (size_t c = 1; c < clauses.size(); ++c)
            for (size_t d = 0; d < h.size(); ++d)
                h[d] = hull(h[d], clauses[c].bound[d]);
        return h;
    }

    static Region from_box(std::string id, Box b) {
        Region r;
        r.id = std::move(id);
        r.clauses.push_back(RegionClause{std::move(b), {}});
        return r;
    }
};

// Rejection sampling, per clause: round-robin over clauses, draw uniformly in
// the clause's bounding box, keep the draw if the clause constraints accept
// it. Sampling per clause (rather than in the region hull) is what makes
// degenerate clauses — single points — samplable at all. Fails with
// EmptyRegion after `max_attempts` consecutive rejections.
inline std::vector<std::vector<double>> sample_region(
    const Region& r, size_t count, SplitMix64& rng,
    const RegionResolver* rr = nullptr, size_t max_attempts = 1000000) {
    std::vector<std::vector<double>> out;
    if (count == 0) return out;
    if (r.clauses.empty())
        throw EmptyRegion("region '" + r.id + "' has no clauses; nothing to sample");
    size_t attempts = 0;
    size_t clause_idx = 0;
    while (out.size() < count) {
        const RegionClause& c = r.clauses[clause_idx % r.clauses.size()];
        ++clause_idx;
        std::vector<double> pt(c.bound.size());
        for (size_t d = 0; d < pt.size(); ++d)
            pt[d] = c.bound[d].is_point() ? c.bound[d].lo
                                          : rng.uniform(c.bound[d].lo, c.bound[d].hi);
        bool ok = true;
        for (const auto& g : c.constraints)
            if (g.eval_point(pt, rr) < 0.0) { ok = false; break; }
        if (ok) {
            out.push_back(std::move(pt));
            attempts = 0;
        } else if (++attempts >= max_attempts) {
            throw EmptyRegion("region '" + r.id + "' rejected " +
                              std::to_string(max_attempts) +
                              " consecutive samples; it is empty or vanishingly thin");
        }
    }
    return out;
}

// Name -> region lookup; doubles as the RegionResolver all indicator
// expressions evaluate against. Regions may reference each other through
// indicator constraints as long as there is no cycle (not checked; the
// bundled material never nests indicators).
class RegionTable : public RegionResolver {
public:
    void add(Region r) { regions_[r.id] = std::move(r); }

    bool has(const std::string& id) const { return regions_.count(id) > 0; }

    const Region& get(const std::string& id) const {
        auto it = regions_.find(id);
        if (it == regions_.end()) throw UnknownRegion(id);
        return it->second;
    }

    bool contains_point(const std::string& id, std::span<const double> pt) const override {
        return get(id).contains(pt, this);
    }

    BoxStatus box_status(const std::string& id, const Box& box) const override {
        return get(id).status(box, this);
    }

    std::vector<Box> region_boxes(const std::string& id) const override {
        std::vector<Box> out;
        for (const auto& c : get(id).clauses) out.push_back(c.bound);
        return out;
    }

    std::vector<int> region_dims(const std::string& id) const override {
        const Region& r = get(id);
        size_t dim = r.clauses.empty() ? 0 : r.clauses.front().bound.size();
        std::vector<int> out(dim);
        for (size_t i = 0; i < dim; ++i) out[i] = static_cast<int>(i);
        return out;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : regions_) out.push_back(k);
        return out;
    }

private:
    std::unordered_map<std::string, Region> regions_;
};

} // namespace ccert
