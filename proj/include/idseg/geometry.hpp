#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "idseg/tensor.hpp"

// Polygon machinery for turning a probability map into a document quad and
// for scoring quads against ground truth. Coordinates are x = column,
// y = row, origin top-left. "Counter-clockwise" always means positive
// shoelace sum under that convention.

namespace idseg {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Four ordered vertices in pixel coordinates.
struct Quad {
    std::array<Point, 4> v{};
};

struct PixelPoint {
    int x = 0;
    int y = 0;
};

/// Closed polyline of integer pixel coordinates along one component's outer
/// border. Consecutive points are 8-adjacent.
struct Contour {
    std::vector<PixelPoint> points;
};

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int height, int width) : h(height), w(width) {
        if (height <= 0 || width <= 0) throw ShapeError("BinaryMask: dimensions must be positive");
        bits.assign(static_cast<size_t>(height) * static_cast<size_t>(width), 0);
    }
    bool at(int r, int c) const { return bits[static_cast<size_t>(r) * w + c] != 0; }
    void set(int r, int c, bool v) { bits[static_cast<size_t>(r) * w + c] = v ? 1 : 0; }
    int64_t count() const {
        int64_t n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
};

inline double signed_area(std::span<const Point> pts) {
    double s = 0.0;
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

/// Shoelace area, |sum(x_i*y_{i+1} - x_{i+1}*y_i)| / 2.
inline double polygon_area(std::span<const Point> pts) { return std::abs(signed_area(pts)); }

inline double quad_area(const Quad& q) { return polygon_area(std::span<const Point>(q.v)); }

/// All nonzero cross products of consecutive edges share one sign; collinear
/// (zero) cross products are tolerated.
inline bool is_convex(std::span<const Point> pts) {
    const size_t n = pts.size();
    if (n < 3) return true;
    int sign = 0;
    for (size_t i = 0; i < n; ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % n];
        const Point& c = pts[(i + 2) % n];
        const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        if (cross == 0.0) continue;
        const int s = cross > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

inline bool point_on_segment(Point a, Point b, Point p, double tol = 1e-9) {
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    if (len2 <= tol * tol) {
        const double dx = p.x - a.x, dy = p.y - a.y;
        return dx * dx + dy * dy <= tol * tol;
    }
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross * cross > tol * tol * len2) return false;
    const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    return dot >= -tol && dot <= len2 + tol;
}

/// Even-odd (crossing number) membership test; points exactly on an edge
/// count as inside.
inline bool point_in_polygon(std::span<const Point> pts, Point p) {
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i)
        if (point_on_segment(pts[i], pts[(i + 1) % n], p)) return true;
    bool inside = false;
    for (size_t i = 0; i < n; ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

inline Quad make_ccw(const Quad& q) {
    if (signed_area(std::span<const Point>(q.v)) >= 0.0) return q;
    return Quad{{q.v[0], q.v[3], q.v[2], q.v[1]}};
}

/// Sutherland-Hodgman intersection of two convex CCW polygons.
/// Non-convex input is rejected; callers fall back to the raster path.
inline std::vector<Point> convex_clip(std::span<const Point> subject,
                                      std::span<const Point> clip) {
    if (!is_convex(subject) || !is_convex(clip))
        throw std::invalid_argument("convex_clip: inputs must be convex");
    std::vector<Point> output(subject.begin(), subject.end());
    const size_t cn = clip.size();
    for (size_t e = 0; e < cn && !output.empty(); ++e) {
        const Point a = clip[e];
        const Point b = clip[(e + 1) % cn];
        const std::vector<Point> input = std::move(output);
        output.clear();
        const auto inside = [&](Point p) {
            return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0;
        };
        const auto intersect = [&](Point p, Point q) {
            const double a1 = b.y - a.y, b1 = a.x - b.x, c1 = a1 * a.x + b1 * a.y;
            const double a2 = q.y - p.y, b2 = p.x - q.x, c2 = a2 * p.x + b2 * p.y;
            const double det = a1 * b2 - a2 * b1;
            if (det == 0.0) return p;
            return Point{(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
        };
        Point prev = input.back();
        bool prev_in = inside(prev);
        for (const Point& cur : input) {
            const bool cur_in = inside(cur);
            if (cur_in) {
                if (!prev_in) output.push_back(intersect(prev, cur));
                output.push_back(cur);
            } else if (prev_in) {
                output.push_back(intersect(prev, cur));
            }
            prev = cur;
            prev_in = cur_in;
        }
    }
    if (output.size() < 3) output.clear();
    return output;
}

namespace detail {

/// Intersection-over-union by cell counting on a 1024x1024 grid fit to the
/// joint bounding box. Total for any vertex configuration.
inline double raster_iou(const Quad& qa, const Quad& qb, int grid = 1024) {
    double minx = qa.v[0].x, maxx = qa.v[0].x, miny = qa.v[0].y, maxy = qa.v[0].y;
    for (const auto& q : {qa, qb})
        for (const Point& p : q.v) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
    if (!(maxx > minx) || !(maxy > miny)) return 0.0;
    const double sx = (maxx - minx) / grid;
    const double sy = (maxy - miny) / grid;
    const std::span<const Point> a(qa.v), b(qb.v);
    int64_t inter = 0, uni = 0;
    for (int gy = 0; gy < grid; ++gy) {
        const double py = miny + (gy + 0.5) * sy;
        for (int gx = 0; gx < grid; ++gx) {
            const Point p{minx + (gx + 0.5) * sx, py};
            const bool in_a = point_in_polygon(a, p);
            const bool in_b = point_in_polygon(b, p);
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
        }
    }
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace detail

/// IoU of two quads: exact convex clipping when both are convex with positive
/// area, raster counting otherwise. Two degenerate quads give 0.
inline double quad_iou(const Quad& a, const Quad& b) {
    const Quad ca = make_ccw(a);
    const Quad cb = make_ccw(b);
    const double area_a = quad_area(ca);
    const double area_b = quad_area(cb);
    const std::span<const Point> pa(ca.v), pb(cb.v);
    if (is_convex(pa) && is_convex(pb) && area_a > 0.0 && area_b > 0.0) {
        const auto inter_poly = convex_clip(pa, pb);
        const double inter = inter_poly.empty() ? 0.0 : polygon_area(inter_poly);
        const double uni = area_a + area_b - inter;
        return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
    }
    return detail::raster_iou(ca, cb);
}

/// Bit set iff p >= tau. Accepts a 1 x h x w x 1 or h x w probability tensor.
template <class T>
BinaryMask threshold_map(const TensorT<T>& prob, double tau = 0.5) {
    int h = 0, w = 0;
    if (prob.rank() == 4 && prob.shape[0] == 1 && prob.shape[3] == 1) {
        h = prob.shape[1];
        w = prob.shape[2];
    } else if (prob.rank() == 2) {
        h = prob.shape[0];
        w = prob.shape[1];
    } else {
        throw ShapeError("threshold_map: expected 1xhxwx1 or hxw, got " + shape_str(prob.shape));
    }
    BinaryMask mask(h, w);
    for (size_t i = 0; i < mask.bits.size(); ++i)
        mask.bits[i] = static_cast<double>(prob.data[i]) >= tau ? 1 : 0;
    return mask;
}

namespace detail {

// Clockwise ring in screen coordinates (y down): E, SE, S, SW, W, NW, N, NE.
inline constexpr std::array<std::array<int, 2>, 8> kRing = {{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

/// Moore border following over one labeled component, Jacob's stopping
/// criterion (terminate on repeating the first move's full state).
inline Contour trace_border(const std::vector<int32_t>& labels, int h, int w, int32_t id,
                            PixelPoint start) {
    const auto is_fg = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h &&
               labels[static_cast<size_t>(y) * w + x] == id;
    };
    Contour contour;
    contour.points.push_back(start);

    // Backtrack begins at the west neighbor, which is background for the
    // raster-first pixel of a component.
    auto step = [&](PixelPoint c, PixelPoint back,
                    PixelPoint& next, PixelPoint& next_back) -> bool {
        int bdir = -1;
        for (int d = 0; d < 8; ++d)
            if (c.x + kRing[static_cast<size_t>(d)][0] == back.x &&
                c.y + kRing[static_cast<size_t>(d)][1] == back.y) {
                bdir = d;
                break;
            }
        PixelPoint prev_checked = back;
        for (int k = 1; k <= 8; ++k) {
            const int d = (bdir + k) % 8;
            const PixelPoint n{c.x + kRing[static_cast<size_t>(d)][0],
                               c.y + kRing[static_cast<size_t>(d)][1]};
            if (is_fg(n.x, n.y)) {
                next = n;
                next_back = prev_checked;
                return true;
            }
            prev_checked = n;
        }
        return false;
    };

    PixelPoint cur = start;
    PixelPoint back{start.x - 1, start.y};
    PixelPoint first_cur{}, first_back{};
    if (!step(cur, back, first_cur, first_back)) return contour;  // isolated pixel

    cur = first_cur;
    back = first_back;
    const int64_t max_steps = static_cast<int64_t>(h) * w * 8 + 16;
    for (int64_t it = 0; it < max_steps; ++it) {
        PixelPoint next{}, next_back{};
        const bool found = step(cur, back, next, next_back);
        // Jacob's criterion: back at the start and about to repeat the first
        // move means the border is complete.
        if (cur.x == start.x && cur.y == start.y && found &&
            next.x == first_cur.x && next.y == first_cur.y &&
            next_back.x == first_back.x && next_back.y == first_back.y)
            break;
        contour.points.push_back(cur);
        if (!found) break;
        cur = next;
        back = next_back;
    }
    return contour;
}

}  // namespace detail

/// One outer contour per 8-connected foreground component (holes ignored),
/// ordered by topmost-then-leftmost starting pixel.
inline std::vector<Contour> extract_contours(const BinaryMask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<int32_t> labels(static_cast<size_t>(h) * w, -1);
    std::vector<PixelPoint> starts;
    std::vector<int64_t> stack;
    int32_t next_id = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask.at(r, c) || labels[static_cast<size_t>(r) * w + c] >= 0) continue;
            const int32_t id = next_id++;
            starts.push_back({c, r});
            labels[static_cast<size_t>(r) * w + c] = id;
            stack.push_back(static_cast<int64_t>(r) * w + c);
            while (!stack.empty()) {
                const int64_t pos = stack.back();
                stack.pop_back();
                const int py = static_cast<int>(pos / w), px = static_cast<int>(pos % w);
                for (const auto& d : detail::kRing) {
                    const int nx = px + d[0], ny = py + d[1];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (!mask.at(ny, nx) || labels[static_cast<size_t>(ny) * w + nx] >= 0) continue;
                    labels[static_cast<size_t>(ny) * w + nx] = id;
                    stack.push_back(static_cast<int64_t>(ny) * w + nx);
                }
            }
        }
    }

    std::vector<Contour> contours;
    contours.reserve(starts.size());
    for (int32_t id = 0; id < next_id; ++id)
        contours.push_back(detail::trace_border(labels, h, w, id, starts[static_cast<size_t>(id)]));
    return contours;
}

namespace detail {

inline double point_segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

inline void douglas_peucker(std::span<const Point> pts, size_t lo, size_t hi, double eps,
                            std::vector<char>& keep) {
    if (hi <= lo + 1) return;
    double best = -1.0;
    size_t best_i = lo;
    for (size_t i = lo + 1; i < hi; ++i) {
        const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
        if (d > best) {
            best = d;
            best_i = i;
        }
    }
    if (best > eps) {
        keep[best_i] = 1;
        douglas_peucker(pts, lo, best_i, eps, keep);
        douglas_peucker(pts, best_i, hi, eps, keep);
    }
}

inline std::vector<Point> simplify_open(std::span<const Point> pts, double eps) {
    std::vector<char> keep(pts.size(), 0);
    keep.front() = 1;
    keep.back() = 1;
    douglas_peucker(pts, 0, pts.size() - 1, eps, keep);
    std::vector<Point> out;
    for (size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(pts[i]);
    return out;
}

}  // namespace detail

/// Douglas-Peucker on a closed polyline: split at the two farthest-apart
/// points, simplify each arc, rejoin. Every discarded point lies within
/// epsilon of the simplified chain.
inline std::vector<Point> simplify_polygon(const Contour& contour, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("simplify_polygon: epsilon must be positive");
    std::vector<Point> pts;
    pts.reserve(contour.points.size());
    for (const PixelPoint& p : contour.points)
        pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
    const size_t n = pts.size();
    if (n <= 2) return pts;

    size_t ia = 0, ib = 0;
    double best = -1.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
            const double d2 = dx * dx + dy * dy;
            if (d2 > best) {
                best = d2;
                ia = i;
                ib = j;
            }
        }

    std::vector<Point> arc1(pts.begin() + static_cast<std::ptrdiff_t>(ia),
                            pts.begin() + static_cast<std::ptrdiff_t>(ib) + 1);
    std::vector<Point> arc2(pts.begin() + static_cast<std::ptrdiff_t>(ib), pts.end());
    arc2.insert(arc2.end(), pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(ia) + 1);

    std::vector<Point> s1 = detail::simplify_open(arc1, epsilon);
    std::vector<Point> s2 = detail::simplify_open(arc2, epsilon);
    std::vector<Point> out = std::move(s1);
    out.insert(out.end(), s2.begin() + 1, s2.end() - 1);  // shared endpoints once
    return out;
}

namespace detail {

inline double contour_perimeter(const Contour& c) {
    double per = 0.0;
    const size_t n = c.points.size();
    for (size_t i = 0; i < n; ++i) {
        const auto& a = c.points[i];
        const auto& b = c.points[(i + 1) % n];
        per += std::hypot(static_cast<double>(b.x - a.x), static_cast<double>(b.y - a.y));
    }
    return per;
}

}  // namespace detail

/// Document candidate selection: simplify each contour with epsilon
/// proportional to its perimeter, keep convex 4-vertex candidates above the
/// minimum area, return the biggest, counter-clockwise.
inline std::optional<Quad> select_document_quad(const std::vector<Contour>& contours,
                                                int mask_h, int mask_w,
                                                double min_area_frac = 0.01,
                                                double epsilon_frac = 0.02) {
    if (min_area_frac <= 0.0 || min_area_frac >= 1.0 || epsilon_frac <= 0.0 || epsilon_frac >= 1.0)
        throw std::invalid_argument("select_document_quad: fractions must be in (0,1)");
    const double min_area = min_area_frac * static_cast<double>(mask_h) * static_cast<double>(mask_w);
    std::optional<Quad> best;
    double best_area = 0.0;
    for (const Contour& contour : contours) {
        const double perimeter = detail::contour_perimeter(contour);
        if (perimeter <= 0.0) continue;
        const std::vector<Point> simplified = simplify_polygon(contour, epsilon_frac * perimeter);
        if (simplified.size() != 4) continue;
        if (!is_convex(simplified)) continue;
        const double area = polygon_area(simplified);
        if (area < min_area) continue;
        if (area > best_area) {
            best_area = area;
            Quad q;
            std::copy_n(simplified.begin(), 4, q.v.begin());
            best = make_ccw(q);
        }
    }
    return best;
}

/// Vertex-wise scaling; order preserved.
inline Quad scale_quad(const Quad& q, double sx, double sy) {
    Quad out;
    for (size_t i = 0; i < 4; ++i) out.v[i] = {q.v[i].x * sx, q.v[i].y * sy};
    return out;
}

}  // namespace idseg
