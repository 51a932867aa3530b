#include "qs/energy.hpp"

#include <algorithm>

namespace qs {

namespace {

Site node_site(const GridSpec& g, std::size_t k) {
  return {g.node_point(k), static_cast<std::ptrdiff_t>(k)};
}

}  // namespace

CellEnergy::CellEnergy(IntegrandSpec f, const ScalarField& base, std::vector<std::size_t> free_nodes,
                       std::vector<std::size_t> cells)
    : f_(std::move(f)), u_(base), free_(std::move(free_nodes)), cells_(std::move(cells)) {
  const auto& g = u_.grid;
  zero_level_.assign(g.node_count(), 0.0);
  std::vector<std::uint8_t> seen(g.node_count(), 0);
  for (auto c : cells_)
    for (auto k : g.cell_nodes(c))
      if (!seen[k]) {
        seen[k] = 1;
        zero_level_[k] = f_->zero_level(node_site(g, k));
      }
  cell_mass_.reserve(cells_.size());
  const double w = g.cell_area() / 6.0;
  for (auto c : cells_) {
    const auto n = g.cell_nodes(c);
    // n00 and n11 sit in one triangle each, n10 and n01 in both
    cell_mass_.push_back(w * (zero_level_[n[0]] + 2.0 * zero_level_[n[1]] + 2.0 * zero_level_[n[2]] +
                              zero_level_[n[3]]));
  }
  grad_full_.assign(g.node_count(), 0.0);
  slot_.assign(g.node_count(), -1);
  for (std::size_t i = 0; i < free_.size(); ++i) slot_[free_[i]] = static_cast<std::ptrdiff_t>(i);
}

double CellEnergy::cell_zero_mass(const Integrand& f, const GridSpec& g, std::size_t cell) {
  const auto n = g.cell_nodes(cell);
  double z[4];
  for (int i = 0; i < 4; ++i) z[i] = f.zero_level(node_site(g, n[i]));
  return g.cell_area() / 6.0 * (z[0] + 2.0 * z[1] + 2.0 * z[2] + z[3]);
}

void CellEnergy::scatter(std::span<const double> x) {
  for (std::size_t i = 0; i < free_.size(); ++i) u_.values[free_[i]] = x[i];
}

std::vector<double> CellEnergy::gather() const {
  std::vector<double> x(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) x[i] = u_.values[free_[i]];
  return x;
}

template <bool WithGrad>
double CellEnergy::assemble(std::span<double> gf) {
  const auto& g = u_.grid;
  const double h = g.h();
  const double inv_h = 1.0 / h;
  const double w = g.cell_area() / 6.0;
  const auto& u = u_.values;
  const Integrand& f = *f_;
  const double s2 = sigma_ * sigma_;
  double total = 0.0;

  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const auto n = g.cell_nodes(cells_[ci]);
    const std::size_t tri[2][3] = {{n[0], n[1], n[2]}, {n[1], n[3], n[2]}};
    for (int t = 0; t < 2; ++t) {
      const auto a = tri[t][0], b = tri[t][1], c = tri[t][2];
      const Vec2 z = triangle_gradient(static_cast<std::size_t>(t), u[a], u[b], u[c], h);
      Vec2 zsum{0.0, 0.0};
      for (auto v : {a, b, c}) {
        const auto iv = f.evaluate(node_site(g, v), u[v], z);
        total += w * (iv.f - zero_level_[v]);
        if constexpr (WithGrad) {
          gf[v] += w * iv.fs;
          zsum[0] += w * iv.fz[0];
          zsum[1] += w * iv.fz[1];
        }
      }
      if constexpr (WithGrad) {
        if (t == 0) {
          gf[a] -= (zsum[0] + zsum[1]) * inv_h;
          gf[b] += zsum[0] * inv_h;
          gf[c] += zsum[1] * inv_h;
        } else {
          gf[b] += (zsum[0] + zsum[1]) * inv_h;
          gf[c] -= zsum[0] * inv_h;
          gf[a] -= zsum[1] * inv_h;
        }
      }
    }
    if (sigma_ > 0.0 && cell_mass_[ci] != 0.0) {
      const double ms = 0.25 * (u[n[0]] * u[n[0]] + u[n[1]] * u[n[1]] + u[n[2]] * u[n[2]] + u[n[3]] * u[n[3]]);
      const double den = ms + s2;
      total += cell_mass_[ci] * ms / den;
      if constexpr (WithGrad) {
        const double dphi = cell_mass_[ci] * s2 / (den * den) * 0.5;
        for (auto k : n) gf[k] += dphi * u[k];
      }
    }
  }
  return total;
}

double CellEnergy::value(std::span<const double> x) {
  scatter(x);
  return assemble<false>({});
}

double CellEnergy::value_grad(std::span<const double> x, std::span<double> g) {
  scatter(x);
  for (auto k : free_) grad_full_[k] = 0.0;
  // also clear every node touched by the cell list
  for (auto c : cells_)
    for (auto k : u_.grid.cell_nodes(c)) grad_full_[k] = 0.0;
  const double e = assemble<true>(grad_full_);
  for (std::size_t i = 0; i < free_.size(); ++i) g[i] = grad_full_[free_[i]];
  return e;
}

double cell_integral(const Integrand& f, const ScalarField& u, std::size_t c) {
  const auto& g = u.grid;
  const double h = g.h();
  const double w = g.cell_area() / 6.0;
  const auto n = g.cell_nodes(c);
  const std::size_t tri[2][3] = {{n[0], n[1], n[2]}, {n[1], n[3], n[2]}};
  double sum = 0.0;
  for (int t = 0; t < 2; ++t) {
    const auto a = tri[t][0], b = tri[t][1], cc = tri[t][2];
    const Vec2 z = triangle_gradient(static_cast<std::size_t>(t), u[a], u[b], u[cc], h);
    for (auto v : {a, b, cc}) sum += w * f.eval(node_site(g, v), u[v], z);
  }
  return sum;
}

void CellEnergy::hessian(std::span<const double> x, std::vector<SparseEntry>& out) {
  scatter(x);
  out.clear();
  const auto& g = u_.grid;
  const double h = g.h();
  const double w = g.cell_area() / 6.0;
  const auto& u = u_.values;
  // z = G (u_a, u_b, u_c) for the two triangle shapes
  const double G[2][2][3] = {{{-1.0, 1.0, 0.0}, {-1.0, 0.0, 1.0}}, {{0.0, 1.0, -1.0}, {-1.0, 1.0, 0.0}}};
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const auto n = g.cell_nodes(cells_[ci]);
    const std::size_t tri[2][3] = {{n[0], n[1], n[2]}, {n[1], n[3], n[2]}};
    for (int t = 0; t < 2; ++t) {
      const std::size_t* nodes = tri[t];
      const Vec2 z = triangle_gradient(static_cast<std::size_t>(t), u[nodes[0]], u[nodes[1]], u[nodes[2]], h);
      double m[3][3] = {};
      for (int v = 0; v < 3; ++v) {
        const auto hl = f_->hessian(node_site(g, nodes[v]), u[nodes[v]], z);
        double gz[2][3];
        for (int a = 0; a < 2; ++a)
          for (int i = 0; i < 3; ++i) gz[a][i] = G[t][a][i] / h;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double e = 0.0;
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) e += gz[a][i] * hl.zz[a][b] * gz[b][j];
            if (i == v) e += hl.sz[0] * gz[0][j] + hl.sz[1] * gz[1][j];
            if (j == v) e += hl.sz[0] * gz[0][i] + hl.sz[1] * gz[1][i];
            if (i == v && j == v) e += hl.ss;
            m[i][j] += w * e;
          }
      }
      for (int i = 0; i < 3; ++i) {
        const auto si = slot_[nodes[i]];
        if (si < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const auto sj = slot_[nodes[j]];
          if (sj < 0) continue;
          out.push_back({static_cast<std::size_t>(si), static_cast<std::size_t>(sj), m[i][j]});
        }
      }
    }
    if (sigma_ > 0.0) {
      // positive part only: the rank-one term of phi'' is negative
      const double s2 = sigma_ * sigma_;
      double ms = 0.0;
      for (auto k : n) ms += 0.25 * u[k] * u[k];
      const double dphi = cell_mass_[ci] * s2 / ((ms + s2) * (ms + s2)) * 0.5;
      for (auto k : n)
        if (slot_[k] >= 0) out.push_back({static_cast<std::size_t>(slot_[k]), static_cast<std::size_t>(slot_[k]), dphi});
    }
  }
}

std::vector<double> cell_integrals(const Integrand& f, const ScalarField& u) {
  std::vector<double> out(u.grid.cell_count(), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = cell_integral(f, u, c);
  return out;
}

std::vector<double> cell_zero_masses(const Integrand& f, const GridSpec& g) {
  std::vector<double> z(g.node_count());
  for (std::size_t k = 0; k < g.node_count(); ++k) z[k] = f.zero_level(node_site(g, k));
  std::vector<double> out(g.cell_count());
  const double w = g.cell_area() / 6.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto n = g.cell_nodes(c);
    out[c] = w * (z[n[0]] + 2.0 * z[n[1]] + 2.0 * z[n[2]] + z[n[3]]);
  }
  return out;
}

std::vector<std::size_t> cells_touching(const GridSpec& g, std::span<const std::size_t> nodes) {
  std::vector<std::size_t> out;
  out.reserve(nodes.size() * 4);
  for (auto k : nodes)
    for (auto c : g.node_cells(k)) out.push_back(c);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace qs
