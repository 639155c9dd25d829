#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "spinlets/reduction.hpp"

namespace spinlets {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string colour(double beta) { return beta >= 0.0 ? "#c0392b" : "#2471a3"; }

std::string polygon(const std::vector<Point2>& hull) {
    std::string pts;
    for (const auto& p : hull) pts += (pts.empty() ? "" : " ") + fmt(p.x) + "," + fmt(p.y);
    return pts;
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::string render_svg(const std::vector<GroupGeometry>& groups, const std::string& title) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-4 -8 128 92\" width=\"960\" height=\"690\">\n";
    const std::string safe_title = xml_escape(title);
    s << "<title>" << safe_title << "</title>\n";
    s << "<defs><marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"4\" markerHeight=\"4\" "
         "orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#222\"/></marker></defs>\n";
    s << "<g fill=\"none\" stroke=\"#555\" stroke-width=\"0.3\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"120\" height=\"80\"/>\n"
      << "<line x1=\"60\" y1=\"0\" x2=\"60\" y2=\"80\"/>\n"
      << "<circle cx=\"60\" cy=\"40\" r=\"10\"/>\n"
      << "<rect x=\"0\" y=\"18\" width=\"18\" height=\"44\"/>\n"
      << "<rect x=\"102\" y=\"18\" width=\"18\" height=\"44\"/>\n"
      << "</g>\n";
    s << "<text x=\"0\" y=\"-3\" font-size=\"3\">" << safe_title << "</text>\n";
    std::size_t max_count = 1;
    for (const auto& g : groups) max_count = std::max(max_count, g.count);
    for (const auto& g : groups) {
        const std::string c = colour(g.fused_beta);
        for (const auto* hull : {&g.origin_hull, &g.dest_hull})
            if (hull->size() >= 3)
                s << "<polygon points=\"" << polygon(*hull) << "\" fill=\"" << c
                  << "\" fill-opacity=\"0.15\" stroke=\"" << c << "\" stroke-width=\"0.2\"/>\n";
    }
    for (const auto& g : groups) {
        const double width = 0.2 + 1.8 * static_cast<double>(g.count) / static_cast<double>(max_count);
        s << "<line x1=\"" << fmt(g.origin_centroid.x) << "\" y1=\"" << fmt(g.origin_centroid.y) << "\" x2=\""
          << fmt(g.dest_centroid.x) << "\" y2=\"" << fmt(g.dest_centroid.y) << "\" stroke=\"" << colour(g.fused_beta)
          << "\" stroke-width=\"" << fmt(width) << "\" marker-end=\"url(#head)\"><title>" << to_string(g.node)
          << " beta=" << fmt(g.fused_beta) << " n=" << g.count << "</title></line>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_hull_csv(const std::vector<GroupGeometry>& groups, std::ostream& out) {
    out << "group,node,endpoint,vertex,x,y\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto node = std::to_string(groups[g].node.depth) + ":" + std::to_string(groups[g].node.index);
        for (int side = 0; side < 2; ++side) {
            const auto& hull = side == 0 ? groups[g].origin_hull : groups[g].dest_hull;
            for (std::size_t v = 0; v < hull.size(); ++v) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%zu,%s,%s,%zu,%.17g,%.17g\n", g + 1, node.c_str(),
                              side == 0 ? "origin" : "destination", v + 1, hull[v].x, hull[v].y);
                out << buf;
            }
        }
    }
}

}  // namespace spinlets
