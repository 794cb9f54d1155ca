#pragma once

#include <cmath>
#include <vector>

#include "graphnav/common.hpp"
#include "graphnav/world.hpp"

namespace graphnav {

struct Point {
    double x = 0.0, y = 0.0;
};
using PointPath = std::vector<Point>;

inline double point_dist(const Point& a, const Point& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

inline PointPath path_points(const World& w, const std::vector<int>& ids) {
    PointPath p;
    for (int id : ids) {
        const auto& vp = w.at(id);
        p.push_back({vp.x, vp.y});
    }
    return p;
}

inline double traj_length(const PointPath& p) {
    require(!p.empty(), "traj_length: empty trajectory");
    double len = 0.0;
    for (size_t i = 1; i < p.size(); ++i) len += point_dist(p[i - 1], p[i]);
    return len;
}

inline double nav_error(const PointPath& p, const PointPath& r) {
    require(!p.empty() && !r.empty(), "nav_error: empty trajectory");
    return point_dist(p.back(), r.back());
}

// success threshold is inclusive
inline double success(double ne, double d_th) { return ne <= d_th ? 1.0 : 0.0; }

// l is the graph shortest-path length from start to goal; degenerate l = 0
// (start == goal) defines SPL = SR.
inline double spl(double sr, double tl, double l) {
    if (l == 0.0) return sr;
    return sr * l / std::max(tl, l);
}

// Classic dynamic-time-warping over Euclidean node distances with both
// endpoints matched.
inline double dtw(const PointPath& p, const PointPath& r) {
    require(!p.empty() && !r.empty(), "dtw: empty trajectory");
    const size_t np = p.size(), nr = r.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(nr, inf), cur(nr, inf);
    for (size_t i = 0; i < np; ++i) {
        for (size_t j = 0; j < nr; ++j) {
            const double c = point_dist(p[i], r[j]);
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else if (i == 0)
                best = cur[j - 1];
            else if (j == 0)
                best = prev[j];
            else
                best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = c + best;
        }
        std::swap(prev, cur);
    }
    return prev[nr - 1];
}

inline double ndtw(const PointPath& p, const PointPath& r, double d_th) {
    return std::exp(-dtw(p, r) / (static_cast<double>(r.size()) * d_th));
}

// coverage term: mean over reference nodes of exp(-d(r, P)/d_th)
inline double path_coverage(const PointPath& p, const PointPath& r, double d_th) {
    require(!p.empty() && !r.empty(), "path_coverage: empty trajectory");
    double pc = 0.0;
    for (const auto& rn : r) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& pn : p) dmin = std::min(dmin, point_dist(rn, pn));
        pc += std::exp(-dmin / d_th);
    }
    return pc / static_cast<double>(r.size());
}

inline double cls(const PointPath& p, const PointPath& r, double d_th) {
    const double pc = path_coverage(p, r, d_th);
    const double tl_r = traj_length(r);
    if (tl_r == 0.0) return pc;
    const double epl = pc * tl_r;
    const double ls = epl / (epl + std::abs(traj_length(p) - epl));
    return pc * ls;
}

struct EpisodeMetrics {
    double tl = 0.0, ne = 0.0, sr = 0.0, spl = 0.0;
    double ndtw = 0.0, sdtw = 0.0, cls = 0.0;
};

inline EpisodeMetrics compute_metrics(const PointPath& p, const PointPath& r,
                                      double shortest_len, double d_th) {
    require(d_th > 0.0, "compute_metrics: d_th must be positive");
    EpisodeMetrics m;
    m.tl = traj_length(p);
    m.ne = nav_error(p, r);
    m.sr = success(m.ne, d_th);
    m.spl = spl(m.sr, m.tl, shortest_len);
    m.ndtw = ndtw(p, r, d_th);
    m.sdtw = m.sr * m.ndtw;
    m.cls = cls(p, r, d_th);
    return m;
}

inline EpisodeMetrics mean_metrics(const std::vector<EpisodeMetrics>& ms) {
    require(!ms.empty(), "mean_metrics: empty set");
    EpisodeMetrics s;
    for (const auto& m : ms) {
        s.tl += m.tl;
        s.ne += m.ne;
        s.sr += m.sr;
        s.spl += m.spl;
        s.ndtw += m.ndtw;
        s.sdtw += m.sdtw;
        s.cls += m.cls;
    }
    const double n = static_cast<double>(ms.size());
    s.tl /= n;
    s.ne /= n;
    s.sr /= n;
    s.spl /= n;
    s.ndtw /= n;
    s.sdtw /= n;
    s.cls /= n;
    return s;
}

}  // namespace graphnav
