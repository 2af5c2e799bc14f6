#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mgrid {

using Complex = std::complex<double>;

/// Pi-model line: series admittance plus total shunt admittance, split
/// equally between both ends.
struct Line {
  std::size_t from = 0;
  std::size_t to = 0;
  Complex admittance{1.0, 0.0};
  Complex shunt_admittance{0.0, 0.0};

  static Line from_impedance(std::size_t from, std::size_t to, double r, double x,
                             double b_shunt = 0.0);
};

/// Bus-admittance matrix with the standard sign convention: off-diagonal
/// Y[n][m] = -y_nm, diagonal Y[n][n] = sum over incident lines of (y_nm + shunt/2).
/// Parallel lines between the same pair are merged by summing admittances.
/// Throws ModelError on invalid lines or a disconnected graph.
Eigen::MatrixXcd build_admittance(std::span<const Line> lines, std::size_t n_buses);

/// Returns X_full, the upper-left (N+1)x(N+1) block of the inverse of the
/// bordered matrix [[Y, 1], [1^T, 0]]. For a zero-shunt network this is the
/// pseudo-inverse of Y: Y X_full = I - 11^T/(N+1) and X_full 1 = 0.
Eigen::MatrixXcd compute_sensitivity(const Eigen::MatrixXcd& admittance);

/// PCC-referenced sensitivity: E^T X_full E with E = [-1^T; I]. This is the
/// N x N matrix mapping non-PCC injections to voltage deviations when bus 0
/// is held at nominal voltage and absorbs the balance.
Eigen::MatrixXcd ground_at_pcc(const Eigen::MatrixXcd& x_full);

/// Real-part blocks of the grounded sensitivity for a generation/consumption
/// partition of the non-PCC buses. Bus indices in gen/load sets are 1-based
/// network indices (bus 0 is the PCC).
struct SensitivityBlocks {
  Eigen::MatrixXd x;     // Re(grounded X), N x N, row/col k <-> bus k+1
  Eigen::MatrixXd m;     // gen x gen
  Eigen::MatrixXd nblk;  // gen x load
  Eigen::MatrixXd q;     // load x load
  std::vector<std::size_t> gen_buses;
  std::vector<std::size_t> load_buses;
};

SensitivityBlocks decompose_blocks(const Eigen::MatrixXd& x,
                                   std::span<const std::size_t> gen_buses,
                                   std::span<const std::size_t> load_buses);

/// Reassembles Re(X) from its blocks (inverse of decompose_blocks).
Eigen::MatrixXd reassemble_blocks(const SensitivityBlocks& blocks);

/// Linearized voltage magnitudes |u_v| = U_N + [Re(X) p]_v / U_N for every
/// bus; entry 0 is the PCC, fixed at U_N. `p` holds the N non-PCC active
/// injections (generation positive, consumption negative).
Eigen::VectorXd voltage_approx(const Eigen::MatrixXd& x, const Eigen::VectorXd& p,
                               double u_nominal);

/// Linearized line loss from the block form:
/// (p_g^T M p_g - 2 p_g^T N p_c + p_c^T Q p_c) / U_N^2.
double power_loss(const SensitivityBlocks& blocks, const Eigen::VectorXd& p_gen,
                  const Eigen::VectorXd& p_cons, double u_nominal);

/// Full-vector loss with reactive injections:
/// (p^T Re(X) p + q^T Re(X) q) / U_N^2, X the grounded complex sensitivity.
double power_loss_full(const Eigen::MatrixXcd& x_grounded, const Eigen::VectorXd& p,
                       const Eigen::VectorXd& q, double u_nominal);

/// Grid intake at the PCC: 1^T p_c - 1^T p_g + loss.
double grid_intake(const Eigen::VectorXd& p_gen, const Eigen::VectorXd& p_cons,
                   double loss);

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
};

/// Flow on every edge of a radial network rooted at bus 0, in input edge
/// order. Positive means power travels from the parent (root side) to the
/// child. The root absorbs any injection imbalance.
std::vector<double> radial_line_flows(std::span<const Edge> edges,
                                      std::span<const double> injections);

/// Immutable network: lines, admittance, sensitivities, and bus partition.
class GridModel {
 public:
  GridModel(std::vector<Line> lines, std::size_t n_buses, double u_nominal,
            std::vector<std::size_t> gen_buses, std::vector<std::size_t> load_buses);

  std::size_t n_buses() const { return n_buses_; }
  std::size_t n_gen() const { return blocks_.gen_buses.size(); }
  std::size_t n_load() const { return blocks_.load_buses.size(); }
  double u_nominal() const { return u_nominal_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Eigen::MatrixXcd& admittance() const { return admittance_; }
  const Eigen::MatrixXcd& x_full() const { return x_full_; }
  const Eigen::MatrixXcd& x_grounded() const { return x_grounded_; }
  const SensitivityBlocks& blocks() const { return blocks_; }

  /// Stacks generation and consumption into the N-vector of non-PCC
  /// injections (generation positive, consumption negative).
  Eigen::VectorXd injections(const Eigen::VectorXd& p_gen,
                             const Eigen::VectorXd& p_cons) const;

 private:
  std::vector<Line> lines_;
  std::size_t n_buses_;
  double u_nominal_;
  Eigen::MatrixXcd admittance_;
  Eigen::MatrixXcd x_full_;
  Eigen::MatrixXcd x_grounded_;
  SensitivityBlocks blocks_;
};

}  // namespace mgrid
