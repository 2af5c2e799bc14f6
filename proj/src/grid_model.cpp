#include "mgrid/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <utility>

#include "mgrid/errors.hpp"

namespace mgrid {

namespace {

bool connected(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    auto u = frontier.front();
    frontier.pop();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n;
}

void check_partition(std::size_t n_non_pcc, std::span<const std::size_t> gen,
                     std::span<const std::size_t> load) {
  std::vector<int> hits(n_non_pcc + 1, 0);
  for (auto set : {gen, load}) {
    for (auto b : set) {
      if (b == 0 || b > n_non_pcc) {
        std::ostringstream msg;
        msg << "bus " << b << " is not a non-PCC bus index in [1, " << n_non_pcc << "]";
        throw ModelError(msg.str());
      }
      if (++hits[b] > 1) {
        std::ostringstream msg;
        msg << "bus " << b << " appears in more than one partition slot";
        throw ModelError(msg.str());
      }
    }
  }
}

}  // namespace

Line Line::from_impedance(std::size_t from, std::size_t to, double r, double x,
                          double b_shunt) {
  const Complex z{r, x};
  if (std::abs(z) == 0.0) throw ModelError("line impedance must be nonzero");
  return Line{from, to, 1.0 / z, Complex{0.0, b_shunt}};
}

Eigen::MatrixXcd build_admittance(std::span<const Line> lines, std::size_t n_buses) {
  if (n_buses < 2) throw ModelError("network needs at least two buses");

  // Merge parallel lines by unordered endpoint pair.
  std::map<std::pair<std::size_t, std::size_t>, std::pair<Complex, Complex>> merged;
  for (const auto& line : lines) {
    if (line.from == line.to) throw ModelError("line endpoints must differ");
    if (line.from >= n_buses || line.to >= n_buses) {
      std::ostringstream msg;
      msg << "line " << line.from << "-" << line.to << " references a bus outside [0, "
          << n_buses - 1 << "]";
      throw ModelError(msg.str());
    }
    if (line.admittance == Complex{0.0, 0.0}) throw ModelError("line admittance is zero");
    auto key = std::minmax(line.from, line.to);
    auto& slot = merged[{key.first, key.second}];
    slot.first += line.admittance;
    slot.second += line.shunt_admittance;
  }

  std::vector<std::vector<std::size_t>> adj(n_buses);
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n_buses, n_buses);
  for (const auto& [key, adm] : merged) {
    const auto [a, b] = key;
    const auto& [series, shunt] = adm;
    y(a, b) -= series;
    y(b, a) -= series;
    y(a, a) += series + 0.5 * shunt;
    y(b, b) += series + 0.5 * shunt;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  if (!connected(n_buses, adj)) throw ModelError("network graph is disconnected");
  return y;
}

Eigen::MatrixXcd compute_sensitivity(const Eigen::MatrixXcd& admittance) {
  const auto n = admittance.rows();
  if (n != admittance.cols() || n < 2) throw ModelError("admittance must be square");
  Eigen::MatrixXcd bordered = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  bordered.topLeftCorner(n, n) = admittance;
  bordered.col(n).head(n).setOnes();
  bordered.row(n).head(n).setOnes();

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(bordered);
  if (!lu.isInvertible()) throw ModelError("bordered admittance matrix is singular");
  Eigen::MatrixXcd inv = lu.inverse();
  return inv.topLeftCorner(n, n);
}

Eigen::MatrixXcd ground_at_pcc(const Eigen::MatrixXcd& x_full) {
  const auto n = x_full.rows() - 1;
  // X_g[v,w] = X[v,w] - X[v,0] - X[0,w] + X[0,0] over non-PCC v, w.
  Eigen::MatrixXcd g = x_full.bottomRightCorner(n, n);
  g.colwise() -= x_full.col(0).tail(n);
  g.rowwise() -= x_full.row(0).tail(n);
  g.array() += x_full(0, 0);
  return g;
}

SensitivityBlocks decompose_blocks(const Eigen::MatrixXd& x,
                                   std::span<const std::size_t> gen_buses,
                                   std::span<const std::size_t> load_buses) {
  const auto n = static_cast<std::size_t>(x.rows());
  check_partition(n, gen_buses, load_buses);
  if (gen_buses.size() + load_buses.size() != n) {
    throw ModelError("generation and consumption buses must cover every non-PCC bus");
  }
  SensitivityBlocks out;
  out.x = x;
  out.gen_buses.assign(gen_buses.begin(), gen_buses.end());
  out.load_buses.assign(load_buses.begin(), load_buses.end());
  const auto ng = static_cast<Eigen::Index>(gen_buses.size());
  const auto nc = static_cast<Eigen::Index>(load_buses.size());
  out.m.resize(ng, ng);
  out.nblk.resize(ng, nc);
  out.q.resize(nc, nc);
  for (Eigen::Index i = 0; i < ng; ++i) {
    for (Eigen::Index j = 0; j < ng; ++j) out.m(i, j) = x(gen_buses[i] - 1, gen_buses[j] - 1);
    for (Eigen::Index j = 0; j < nc; ++j) out.nblk(i, j) = x(gen_buses[i] - 1, load_buses[j] - 1);
  }
  for (Eigen::Index i = 0; i < nc; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) out.q(i, j) = x(load_buses[i] - 1, load_buses[j] - 1);
  return out;
}

Eigen::MatrixXd reassemble_blocks(const SensitivityBlocks& b) {
  const auto n = static_cast<Eigen::Index>(b.gen_buses.size() + b.load_buses.size());
  Eigen::MatrixXd x(n, n);
  const auto ng = static_cast<Eigen::Index>(b.gen_buses.size());
  const auto nc = static_cast<Eigen::Index>(b.load_buses.size());
  for (Eigen::Index i = 0; i < ng; ++i) {
    for (Eigen::Index j = 0; j < ng; ++j) x(b.gen_buses[i] - 1, b.gen_buses[j] - 1) = b.m(i, j);
    for (Eigen::Index j = 0; j < nc; ++j) {
      x(b.gen_buses[i] - 1, b.load_buses[j] - 1) = b.nblk(i, j);
      x(b.load_buses[j] - 1, b.gen_buses[i] - 1) = b.nblk(i, j);
    }
  }
  for (Eigen::Index i = 0; i < nc; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) x(b.load_buses[i] - 1, b.load_buses[j] - 1) = b.q(i, j);
  return x;
}

Eigen::VectorXd voltage_approx(const Eigen::MatrixXd& x, const Eigen::VectorXd& p,
                               double u_nominal) {
  if (x.rows() != p.size()) throw ModelError("voltage_approx: shape mismatch");
  Eigen::VectorXd u(p.size() + 1);
  u(0) = u_nominal;
  u.tail(p.size()) = (x * p) / u_nominal;
  u.tail(p.size()).array() += u_nominal;
  return u;
}

double power_loss(const SensitivityBlocks& b, const Eigen::VectorXd& p_gen,
                  const Eigen::VectorXd& p_cons, double u_nominal) {
  if (p_gen.size() != b.m.rows() || p_cons.size() != b.q.rows())
    throw ModelError("power_loss: shape mismatch");
  double acc = p_cons.dot(b.q * p_cons);
  if (p_gen.size() > 0) acc += p_gen.dot(b.m * p_gen) - 2.0 * p_gen.dot(b.nblk * p_cons);
  return acc / (u_nominal * u_nominal);
}

double power_loss_full(const Eigen::MatrixXcd& x_grounded, const Eigen::VectorXd& p,
                       const Eigen::VectorXd& q, double u_nominal) {
  const Eigen::MatrixXd r = x_grounded.real();
  return (p.dot(r * p) + q.dot(r * q)) / (u_nominal * u_nominal);
}

double grid_intake(const Eigen::VectorXd& p_gen, const Eigen::VectorXd& p_cons,
                   double loss) {
  return p_cons.sum() - p_gen.sum() + loss;
}

std::vector<double> radial_line_flows(std::span<const Edge> edges,
                                      std::span<const double> injections) {
  const std::size_t n = injections.size();
  if (n == 0) throw ModelError("radial_line_flows: no buses");
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (e.a >= n || e.b >= n || e.a == e.b) throw ModelError("radial_line_flows: bad edge");
    adj[e.a].push_back({e.b, k});
    adj[e.b].push_back({e.a, k});
  }
  if (edges.size() != n - 1) {
    // A connected graph on n nodes with n-1 edges is a tree; anything else
    // either has a cycle or is disconnected.
    throw ModelError(edges.size() >= n ? "network contains a cycle" : "network is disconnected");
  }

  // Breadth-first order from the root, then accumulate subtree sums leaf-up.
  std::vector<std::size_t> order;
  std::vector<std::size_t> parent(n, n), parent_edge(n, edges.size());
  std::vector<bool> seen(n, false);
  order.reserve(n);
  order.push_back(0);
  seen[0] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto u = order[i];
    for (auto [v, k] : adj[u]) {
      if (v == parent[u] && k == parent_edge[u]) continue;
      if (seen[v]) throw ModelError("network contains a cycle");
      seen[v] = true;
      parent[v] = u;
      parent_edge[v] = k;
      order.push_back(v);
    }
  }
  if (order.size() != n) throw ModelError("network is disconnected");

  std::vector<double> subtree(injections.begin(), injections.end());
  std::vector<double> flows(edges.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (v == 0) break;
    flows[parent_edge[v]] = -subtree[v];
    subtree[parent[v]] += subtree[v];
  }
  return flows;
}

GridModel::GridModel(std::vector<Line> lines, std::size_t n_buses, double u_nominal,
                     std::vector<std::size_t> gen_buses,
                     std::vector<std::size_t> load_buses)
    : lines_(std::move(lines)), n_buses_(n_buses), u_nominal_(u_nominal) {
  if (!(u_nominal > 0.0) || !std::isfinite(u_nominal))
    throw ModelError("nominal voltage must be positive");
  admittance_ = build_admittance(lines_, n_buses_);
  x_full_ = compute_sensitivity(admittance_);
  x_grounded_ = ground_at_pcc(x_full_);
  blocks_ = decompose_blocks(x_grounded_.real(), gen_buses, load_buses);
}

Eigen::VectorXd GridModel::injections(const Eigen::VectorXd& p_gen,
                                      const Eigen::VectorXd& p_cons) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_buses_ - 1));
  for (std::size_t i = 0; i < blocks_.gen_buses.size(); ++i)
    p(blocks_.gen_buses[i] - 1) += p_gen(i);
  for (std::size_t i = 0; i < blocks_.load_buses.size(); ++i)
    p(blocks_.load_buses[i] - 1) -= p_cons(i);
  return p;
}

}  // namespace mgrid
