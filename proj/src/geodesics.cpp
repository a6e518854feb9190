#include "rvparc/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <set>

namespace rvparc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Third triangle vertex above the x-axis given |A q| and |B q|, A = 0, B = (len, 0).
Vec2 layout_apex(double len, double len_aq, double len_bq) {
  const double x = (len_aq * len_aq + len * len - len_bq * len_bq) / (2.0 * len);
  return {x, std::sqrt(std::max(0.0, len_aq * len_aq - x * x))};
}

// A window lives on halfedge `he` of the face it propagates into. Coordinates
// are in the halfedge frame: origin at the halfedge tail, x-axis along it,
// face on the y > 0 side, unfolded source at `src` with src.y <= 0.
struct Window {
  int he = -1;
  double b0 = 0.0, b1 = 0.0;
  Vec2 src{0.0, 0.0};
  double sigma = 0.0;
  int version = 0;
  bool alive = true;
  bool propagated = false;
};

struct Event {
  double key;
  int id;  // >= 0: window id, < 0: vertex -(id + 1)
  int version;
  bool operator>(const Event& o) const {
    if (key != o.key) return key > o.key;
    return id > o.id;
  }
};

struct Interval {
  double lo, hi;
};

class WindowPropagation {
 public:
  WindowPropagation(const TriSurface& s, GeodesicStats* stats) : s_(s), topo_(s.topology()), stats_(stats) {
    const int ne = topo_.num_edges();
    len_.resize(ne);
    for (int e = 0; e < ne; ++e) len_[e] = s.edge_length(e);
    edge_windows_.assign(ne, {});
    dist_.assign(s.num_vertices(), kInf);
    emitted_.assign(s.num_vertices(), kInf);
    const Eigen::VectorXd angles = vertex_angle_sums(s);
    pseudo_.assign(s.num_vertices(), 0);
    for (int v = 0; v < s.num_vertices(); ++v) {
      pseudo_[v] = topo_.boundary_vertex[v] || angles(v) >= 2.0 * kPi - 1e-6;
    }
  }

  ScalarField run(std::span<const int> sources) {
    for (int v : sources) {
      if (v < 0 || v >= s_.num_vertices()) throw TopologyError("invalid source vertex " + std::to_string(v));
      dist_[v] = 0.0;
      queue_.push({0.0, -(v + 1), 0});
    }
    const long cap = 4000L * std::max(1, s_.num_faces()) + 100000L;
    long steps = 0;
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      if (++steps > cap) throw NumericalError("geodesic window propagation did not terminate");
      if (ev.id < 0) {
        const int v = -(ev.id + 1);
        if (ev.key == dist_[v] && ev.key < emitted_[v]) {
          emitted_[v] = ev.key;
          emit_from_vertex(v);
        }
        continue;
      }
      Window& w = windows_[ev.id];
      if (!w.alive || w.propagated || w.version != ev.version) continue;
      w.propagated = true;
      propagate(ev.id);
    }
    ScalarField out(s_.num_vertices());
    for (int v = 0; v < s_.num_vertices(); ++v) out(v) = dist_[v];
    return out;
  }

 private:
  int tail(int he) const { return s_.faces()(he / 3, he % 3); }
  int head(int he) const { return s_.faces()(he / 3, (he % 3 + 1) % 3); }
  int opposite(int he) const { return s_.faces()(he / 3, (he % 3 + 2) % 3); }
  double hlen(int he) const { return len_[topo_.halfedge_edge[he]]; }

  static double min_distance(const Window& w) {
    const double x = std::clamp(w.src.x(), w.b0, w.b1);
    return w.sigma + std::hypot(x - w.src.x(), w.src.y());
  }

  // Canonical parametrisation along an undirected edge, measured from its
  // lower-index vertex, so windows from either side can be compared.
  bool reversed(int he) const { return tail(he) != topo_.edges[topo_.halfedge_edge[he]][0]; }
  double to_canonical(int he, double x) const { return reversed(he) ? hlen(he) - x : x; }

  double eval_canonical(const Window& w, double c) const {
    const double x = to_canonical(w.he, c);  // the map is an involution
    return w.sigma + std::hypot(x - w.src.x(), w.src.y());
  }

  void update_vertex(int v, double d) {
    if (!(d < dist_[v])) return;
    dist_[v] = d;
    if (pseudo_[v] && d < emitted_[v] - 1e-12 * (1.0 + d)) queue_.push({d, -(v + 1), 0});
  }

  void emit_from_vertex(int v) {
    if (stats_) ++stats_->pseudo_sources;
    const double d = dist_[v];
    for (int f : topo_.vertex_faces[v]) {
      int k = 0;
      while (s_.faces()(f, k) != v) ++k;
      const int he_opp = 3 * f + (k + 1) % 3;  // opposite edge, oriented inside f
      update_vertex(tail(he_opp), d + hlen(3 * f + k));
      update_vertex(head(he_opp), d + hlen(3 * f + (k + 2) % 3));
      const int he = topo_.twin[he_opp];
      if (he < 0) continue;
      // In the frame of `he` (tail = head(he_opp)), v sits below the x-axis.
      const double len = hlen(he);
      const double len_av = (s_.vertex(tail(he)) - s_.vertex(v)).norm();
      const double len_bv = (s_.vertex(head(he)) - s_.vertex(v)).norm();
      const Vec2 up = layout_apex(len, len_av, len_bv);
      Window w;
      w.he = he;
      w.b0 = 0.0;
      w.b1 = len;
      w.src = Vec2(up.x(), -up.y());
      w.sigma = d;
      insert(std::move(w));
    }
  }

  void push(int id) {
    const Window& w = windows_[id];
    queue_.push({min_distance(w), id, w.version});
  }

  void insert(Window w) {
    const double len = hlen(w.he);
    const double tol_len = 1e-10 * len;
    if (w.b1 - w.b0 <= tol_len) return;
    if (stats_) ++stats_->windows_created;

    if (w.b0 <= tol_len) update_vertex(tail(w.he), w.sigma + w.src.norm());
    if (w.b1 >= len - tol_len) update_vertex(head(w.he), w.sigma + (w.src - Vec2(len, 0.0)).norm());

    const int edge = topo_.halfedge_edge[w.he];
    std::vector<Interval> pieces{canonical_interval(w)};
    std::vector<int> existing = edge_windows_[edge];
    for (int oid : existing) {
      if (pieces.empty()) break;
      if (!windows_[oid].alive) continue;
      trim_pair(w, pieces, oid, tol_len);
    }
    for (const Interval& iv : pieces) {
      if (iv.hi - iv.lo <= tol_len) continue;
      Window piece = w;
      set_canonical_interval(piece, iv);
      const int id = static_cast<int>(windows_.size());
      windows_.push_back(piece);
      edge_windows_[edge].push_back(id);
      push(id);
    }
  }

  Interval canonical_interval(const Window& w) const {
    const double a = to_canonical(w.he, w.b0), b = to_canonical(w.he, w.b1);
    return {std::min(a, b), std::max(a, b)};
  }

  void set_canonical_interval(Window& w, const Interval& iv) const {
    const double a = to_canonical(w.he, iv.lo), b = to_canonical(w.he, iv.hi);
    w.b0 = std::min(a, b);
    w.b1 = std::max(a, b);
  }

  // Points in (lo, hi) where the two distance functions may cross.
  std::vector<double> crossings(const Window& n, const Window& o, double lo, double hi) const {
    const double an = to_canonical(n.he, n.src.x()), hn2 = n.src.y() * n.src.y();
    const double ao = to_canonical(o.he, o.src.x()), ho2 = o.src.y() * o.src.y();
    const double k = o.sigma - n.sigma;
    // sqrt(Pn) - sqrt(Po) = k, squared twice.
    const double alpha = -2.0 * (an - ao);
    const double gamma = an * an - ao * ao + hn2 - ho2 - k * k;
    const double qa = alpha * alpha - 4.0 * k * k;
    const double qb = 2.0 * alpha * gamma + 8.0 * k * k * ao;
    const double qc = gamma * gamma - 4.0 * k * k * (ao * ao + ho2);
    std::vector<double> roots;
    const double scale = std::max({std::abs(qa) * (hi * hi + 1.0), std::abs(qb) * (hi + 1.0), std::abs(qc), 1e-300});
    if (std::abs(qa) * (hi * hi + 1.0) <= 1e-14 * scale) {
      if (std::abs(qb) > 0.0) roots.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (qb + std::copysign(sq, qb));
        if (q != 0.0) roots.push_back(qc / q);
        roots.push_back(q / qa);
      } else if (disc > -1e-12 * qb * qb) {
        roots.push_back(-qb / (2.0 * qa));
      }
    }
    std::vector<double> inside;
    for (double r : roots)
      if (r > lo && r < hi) inside.push_back(r);
    std::sort(inside.begin(), inside.end());
    return inside;
  }

  // Splits the overlap of the incoming window `n` (still described by
  // `pieces`) and stored window `oid` into parts owned by whichever is
  // shorter. Ties stay with the stored window.
  void trim_pair(const Window& n, std::vector<Interval>& pieces, int oid, double tol_len) {
    const Window o = windows_[oid];
    const Interval oi = canonical_interval(o);
    const Interval ni = canonical_interval(n);
    const double lo = std::max(oi.lo, ni.lo), hi = std::min(oi.hi, ni.hi);
    if (hi - lo <= 0.0) return;

    std::vector<double> cuts{lo};
    for (double r : crossings(n, o, lo, hi)) cuts.push_back(r);
    cuts.push_back(hi);

    std::vector<Interval> new_wins, old_wins;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (b <= a) continue;
      const double m = 0.5 * (a + b);
      const double dn = eval_canonical(n, m), dold = eval_canonical(o, m);
      auto& dst = (dn < dold - 1e-12 * (1.0 + dold)) ? new_wins : old_wins;
      if (!dst.empty() && dst.back().hi == a) {
        dst.back().hi = b;
      } else {
        dst.push_back({a, b});
      }
    }

    pieces = subtract(pieces, old_wins);
    if (new_wins.empty()) return;

    const std::vector<Interval> remaining = subtract({oi}, new_wins);
    if (stats_) ++stats_->windows_trimmed;
    Window& ow = windows_[oid];
    std::vector<Interval> kept;
    for (const auto& iv : remaining)
      if (iv.hi - iv.lo > tol_len) kept.push_back(iv);
    if (kept.empty()) {
      ow.alive = false;
      return;
    }
    set_canonical_interval(ow, kept[0]);
    ++ow.version;
    if (!ow.propagated) push(oid);
    const int edge = topo_.halfedge_edge[o.he];
    for (size_t i = 1; i < kept.size(); ++i) {
      Window extra = windows_[oid];
      set_canonical_interval(extra, kept[i]);
      extra.version = 0;
      const int id = static_cast<int>(windows_.size());
      windows_.push_back(extra);
      edge_windows_[edge].push_back(id);
      if (!extra.propagated) push(id);
    }
  }

  static std::vector<Interval> subtract(const std::vector<Interval>& from, const std::vector<Interval>& cut) {
    std::vector<Interval> out = from;
    for (const auto& c : cut) {
      std::vector<Interval> next;
      for (const auto& iv : out) {
        if (c.hi <= iv.lo || c.lo >= iv.hi) {
          next.push_back(iv);
          continue;
        }
        if (c.lo > iv.lo) next.push_back({iv.lo, c.lo});
        if (c.hi < iv.hi) next.push_back({c.hi, iv.hi});
      }
      out = std::move(next);
    }
    return out;
  }

  // Parameter range t in [0,1] along e0->e1 whose rays from `src` cross the
  // x-axis inside [b0, b1].
  static std::optional<Interval> visible_range(const Vec2& src, double b0, double b1, const Vec2& e0, const Vec2& e1) {
    const double sx = src.x(), sy = src.y();
    auto intercept = [&](const Vec2& p) { return sx + (p.x() - sx) * (-sy) / (p.y() - sy); };
    const Vec2 d = e1 - e0;
    auto solve = [&](double b) {
      const double den = -sy * d.x() - (b - sx) * d.y();
      return ((b - sx) * (e0.y() - sy) + (e0.x() - sx) * sy) / den;
    };
    const double x0 = intercept(e0), x1 = intercept(e1);
    double tlo, thi;
    if (x0 <= x1) {
      if (x0 > b1 || x1 < b0) return std::nullopt;
      tlo = x0 >= b0 ? 0.0 : solve(b0);
      thi = x1 <= b1 ? 1.0 : solve(b1);
    } else {
      if (x1 > b1 || x0 < b0) return std::nullopt;
      tlo = x0 <= b1 ? 0.0 : solve(b1);
      thi = x1 >= b0 ? 1.0 : solve(b0);
    }
    tlo = std::clamp(tlo, 0.0, 1.0);
    thi = std::clamp(thi, 0.0, 1.0);
    if (!(thi > tlo)) return std::nullopt;
    return Interval{tlo, thi};
  }

  void spawn_child(const Window& parent, int child_he, const Vec2& e0, const Vec2& e1) {
    if (child_he < 0) return;
    const auto range = visible_range(parent.src, parent.b0, parent.b1, e0, e1);
    if (!range) return;
    const Vec2 d = e1 - e0;
    const double len = d.norm();
    const Vec2 u = d / len;
    const Vec2 rel = parent.src - e0;
    Window c;
    c.he = child_he;
    c.b0 = range->lo * len;
    c.b1 = range->hi * len;
    c.src = Vec2(rel.dot(u), std::min(0.0, cross2(u, rel)));
    c.sigma = parent.sigma;
    insert(std::move(c));
  }

  void propagate(int id) {
    if (stats_) ++stats_->windows_propagated;
    const Window w = windows_[id];
    const int he = w.he;
    const double len = hlen(he);
    if (w.src.y() > -1e-14 * len) return;  // grazing: source on the edge line

    const Vec2 a(0.0, 0.0), b(len, 0.0);
    const Vec2 q = layout_apex(len, hlen(Topology::prev(he)), hlen(Topology::next(he)));
    const double xq = w.src.x() + (q.x() - w.src.x()) * (-w.src.y()) / (q.y() - w.src.y());
    const double tol = 1e-9 * len;
    if (xq >= w.b0 - tol && xq <= w.b1 + tol) update_vertex(opposite(he), w.sigma + (q - w.src).norm());

    // Edge a->q is the twin of prev(he); edge q->b is the twin of next(he).
    spawn_child(w, topo_.twin[Topology::prev(he)], a, q);
    spawn_child(w, topo_.twin[Topology::next(he)], q, b);
  }

  const TriSurface& s_;
  const Topology& topo_;
  GeodesicStats* stats_;
  std::vector<double> len_;
  std::vector<Window> windows_;
  std::vector<std::vector<int>> edge_windows_;
  std::vector<double> dist_;
  std::vector<double> emitted_;
  std::vector<char> pseudo_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
};

}  // namespace

DistanceField exact_geodesic(const TriSurface& s, std::span<const int> sources, GeodesicStats* stats) {
  if (sources.empty()) throw TopologyError("geodesic source set is empty");
  WindowPropagation prop(s, stats);
  return {prop.run(sources), std::nullopt};
}

DistanceField dijkstra_oracle(const TriSurface& s, std::span<const int> sources) {
  if (sources.empty()) throw TopologyError("geodesic source set is empty");
  const auto& topo = s.topology();
  std::vector<double> dist(s.num_vertices(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  for (int v : sources) {
    if (v < 0 || v >= s.num_vertices()) throw TopologyError("invalid source vertex " + std::to_string(v));
    dist[v] = 0.0;
    q.push({0.0, v});
  }
  while (!q.empty()) {
    const auto [d, v] = q.top();
    q.pop();
    if (d > dist[v]) continue;
    for (int n : topo.vertex_neighbors[v]) {
      const double nd = d + (s.vertex(v) - s.vertex(n)).norm();
      if (nd < dist[n]) {
        dist[n] = nd;
        q.push({nd, n});
      }
    }
  }
  ScalarField out(s.num_vertices());
  for (int v = 0; v < s.num_vertices(); ++v) out(v) = dist[v];
  return {out, std::nullopt};
}

const DistanceField& LandmarkDistances::operator[](Landmark l) const {
  switch (l) {
    case Landmark::apex: return apex;
    case Landmark::tricuspid: return tricuspid;
    case Landmark::pulmonary: return pulmonary;
  }
  return apex;
}

ScalarField LandmarkDistances::valves() const { return tricuspid.values.cwiseMin(pulmonary.values); }

std::vector<int> landmark_rim(const TriSurface& s, const std::vector<int>& patch) {
  const std::set<int> members(patch.begin(), patch.end());
  std::vector<int> rim;
  for (int v : patch) {
    const auto& nb = s.topology().vertex_neighbors[v];
    if (std::any_of(nb.begin(), nb.end(), [&](int n) { return !members.count(n); })) rim.push_back(v);
  }
  return rim.empty() ? patch : rim;
}

LandmarkDistances distance_to_set(const TriSurface& s, const LandmarkSet& lm, LandmarkSources mode, bool parallel) {
  lm.validate(s.num_vertices());
  auto one = [&](Landmark l) {
    const std::vector<int> src = mode == LandmarkSources::rim ? landmark_rim(s, lm[l]) : lm[l];
    DistanceField d = exact_geodesic(s, src);
    // Every listed vertex belongs to the landmark, rim mode included.
    for (int v : lm[l]) d.values(v) = 0.0;
    d.source = l;
    return d;
  };
  if (!parallel) return {one(Landmark::apex), one(Landmark::tricuspid), one(Landmark::pulmonary)};
  auto fa = std::async(std::launch::async, one, Landmark::apex);
  auto ft = std::async(std::launch::async, one, Landmark::tricuspid);
  DistanceField p = one(Landmark::pulmonary);
  return {fa.get(), ft.get(), std::move(p)};
}

}  // namespace rvparc
