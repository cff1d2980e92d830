#ifndef MSTNHP_CORE_HPP
#define MSTNHP_CORE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mstnhp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double sq_dist(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double dist(const Point& a, const Point& b) { return std::sqrt(sq_dist(a, b)); }

// Marked spatio-temporal event. Type ids are 1..K; id 0 is reserved for the
// beginning-of-sequence token and never appears in stored sequences.
struct STEvent {
  int k = 1;
  double t = 0.0;
  Point s{};
};

// Deterministic, platform-independent random stream (splitmix64 counter).
// Single-owner: never share one stream between concurrent consumers.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with the given rate; rate must be positive.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Child stream for worker `index`, decorrelated from the parent by mixing
  // the pair (seed, index) through splitmix64.
  RandomStream child(std::uint64_t index) const {
    RandomStream mixer(state_ ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    return RandomStream(mixer.next_u64());
  }

 private:
  std::uint64_t state_;
};

// Observation region: axis-aligned rectangle or simple polygon.
class SpatialDomain {
 public:
  enum class Kind { Rectangle, Polygon };

  static SpatialDomain rectangle(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0) || !(y1 > y0))
      throw std::invalid_argument("SpatialDomain: degenerate rectangle");
    SpatialDomain d;
    d.kind_ = Kind::Rectangle;
    d.x0_ = x0;
    d.x1_ = x1;
    d.y0_ = y0;
    d.y1_ = y1;
    d.area_ = (x1 - x0) * (y1 - y0);
    return d;
  }

  static SpatialDomain unit_square() { return rectangle(0.0, 1.0, 0.0, 1.0); }

  static SpatialDomain polygon(std::vector<Point> vertices) {
    if (vertices.size() < 3)
      throw std::invalid_argument("SpatialDomain: polygon needs >= 3 vertices");
    SpatialDomain d;
    d.kind_ = Kind::Polygon;
    d.vertices_ = std::move(vertices);
    double a2 = 0.0;  // shoelace, twice the signed area
    double bx0 = d.vertices_[0].x, bx1 = bx0, by0 = d.vertices_[0].y, by1 = by0;
    const std::size_t n = d.vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = d.vertices_[i];
      const Point& q = d.vertices_[(i + 1) % n];
      a2 += p.x * q.y - q.x * p.y;
      bx0 = std::min(bx0, p.x);
      bx1 = std::max(bx1, p.x);
      by0 = std::min(by0, p.y);
      by1 = std::max(by1, p.y);
    }
    d.area_ = 0.5 * std::abs(a2);
    if (!(d.area_ > 0.0))
      throw std::invalid_argument("SpatialDomain: polygon has zero area");
    d.x0_ = bx0;
    d.x1_ = bx1;
    d.y0_ = by0;
    d.y1_ = by1;
    return d;
  }

  Kind kind() const { return kind_; }
  double area() const { return area_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  // Bounding box (the rectangle itself for rectangles).
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }

  Point centroid() const {
    if (kind_ == Kind::Rectangle) return {0.5 * (x0_ + x1_), 0.5 * (y0_ + y1_)};
    // polygon centroid via the shoelace moments
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = vertices_[i];
      const Point& q = vertices_[(i + 1) % n];
      const double cross = p.x * q.y - q.x * p.y;
      a2 += cross;
      cx += (p.x + q.x) * cross;
      cy += (p.y + q.y) * cross;
    }
    return {cx / (3.0 * a2), cy / (3.0 * a2)};
  }

  // Rectangles include their boundary; polygons use the even-odd rule.
  bool contains(const Point& s) const {
    if (kind_ == Kind::Rectangle)
      return s.x >= x0_ && s.x <= x1_ && s.y >= y0_ && s.y <= y1_;
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = vertices_[i];
      const Point& b = vertices_[j];
      if ((a.y > s.y) != (b.y > s.y) &&
          s.x < (b.x - a.x) * (s.y - a.y) / (b.y - a.y) + a.x)
        inside = !inside;
    }
    return inside;
  }

  // Uniform draw: direct inversion for rectangles, rejection from the
  // bounding box for polygons (guarded against degenerate shapes).
  Point sample_uniform(RandomStream& rng) const {
    if (kind_ == Kind::Rectangle)
      return {rng.uniform(x0_, x1_), rng.uniform(y0_, y1_)};
    for (long attempt = 0; attempt < 1000000; ++attempt) {
      Point s{rng.uniform(x0_, x1_), rng.uniform(y0_, y1_)};
      if (contains(s)) return s;
    }
    throw std::runtime_error("SpatialDomain: rejection sampling exceeded 1e6 attempts");
  }

 private:
  Kind kind_ = Kind::Rectangle;
  double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 1.0;
  double area_ = 1.0;
  std::vector<Point> vertices_;
};

// Breaks exact time ties by nudging later duplicates forward by i*1e-9,
// preserving input order. Input must be sorted (non-strictly).
inline void break_time_ties(std::vector<STEvent>& events) {
  constexpr double eps = 1e-9;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t <= events[i - 1].t)
      events[i].t = events[i - 1].t + eps;
  }
}

// Ordered event sequence on [0, T] over a spatial domain. Times are strictly
// increasing; construction validates all invariants.
class EventSequence {
 public:
  EventSequence(std::vector<STEvent> events, double T, SpatialDomain domain,
                bool spatial = true)
      : events_(std::move(events)), T_(T), domain_(std::move(domain)), spatial_(spatial) {
    if (!(T_ >= 0.0)) throw std::invalid_argument("EventSequence: T must be >= 0");
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const STEvent& e = events_[i];
      if (e.k < 1)
        throw std::invalid_argument("EventSequence: type id < 1 at index " + std::to_string(i));
      if (!(e.t >= 0.0) || !(e.t <= T_))
        throw std::invalid_argument("EventSequence: time outside [0,T] at index " +
                                    std::to_string(i));
      if (i > 0 && !(e.t > events_[i - 1].t))
        throw std::invalid_argument("EventSequence: times not strictly increasing at index " +
                                    std::to_string(i));
      if (spatial_ && !domain_.contains(e.s))
        throw std::invalid_argument("EventSequence: location outside domain at index " +
                                    std::to_string(i));
    }
  }

  const std::vector<STEvent>& events() const { return events_; }
  double T() const { return T_; }
  const SpatialDomain& domain() const { return domain_; }
  bool spatial() const { return spatial_; }
  std::size_t size() const { return events_.size(); }

  int max_type() const {
    int k = 0;
    for (const STEvent& e : events_) k = std::max(k, e.k);
    return k;
  }

 private:
  std::vector<STEvent> events_;
  double T_;
  SpatialDomain domain_;
  bool spatial_;
};

}  // namespace mstnhp

#endif  // MSTNHP_CORE_HPP
