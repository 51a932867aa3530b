#include "qs/shapes.hpp"

#include <algorithm>
#include <cmath>

#include "qs/random.hpp"

namespace qs {

namespace {

template <class Pred>
DomainMask mask_from(const GridSpec& g, Pred&& inside) {
  DomainMask m(g);
  for (std::size_t c = 0; c < g.cell_count(); ++c) m.active[c] = inside(g.cell_center(c)) ? 1 : 0;
  return m;
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

DomainMask full_mask(const GridSpec& g) { return DomainMask(g, true); }

DomainMask disc_mask(const GridSpec& g, Point center, double radius) {
  return mask_from(g, [&](Point p) { return dist(p, center) < radius; });
}

DomainMask annulus_mask(const GridSpec& g, Point center, double inner, double outer) {
  return mask_from(g, [&](Point p) {
    const double r = dist(p, center);
    return r > inner && r < outer;
  });
}

DomainMask rectangle_mask(const GridSpec& g, Point lo, Point hi) {
  return mask_from(g, [&](Point p) { return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y; });
}

DomainMask slit_square_mask(const GridSpec& g, Point center, double half) {
  auto m = rectangle_mask(g, {center.x - half, center.y - half}, {center.x + half, center.y + half});
  const double h = g.h();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto p = g.cell_center(c);
    if (p.x >= center.x && p.x < center.x + h && p.y > center.y) m.active[c] = 0;
  }
  return m;
}

DomainMask random_blob_mask(const GridSpec& g, std::uint64_t seed, int blobs) {
  CounterRng rng(seed, 17);
  const double side = std::min(g.width(), g.height());
  DomainMask m(g);
  for (int b = 0; b < blobs; ++b) {
    const Point c{g.origin().x + rng.uniform(0.15, 0.85) * g.width(),
                  g.origin().y + rng.uniform(0.15, 0.85) * g.height()};
    const double r = rng.uniform(0.1, 0.35) * side;
    m = m.unite(disc_mask(g, c, r));
  }
  return m;
}

}  // namespace qs
