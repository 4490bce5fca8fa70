#pragma once

#include <Eigen/Sparse>
#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "evolab/common.hpp"
#include "evolab/material_law.hpp"
#include "evolab/weighted_signal.hpp"

namespace evolab {

using SpMatR = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;

/// Box [0,Lx]x[0,Ly]x[0,Lz] with n cells per axis. Cells whose index along
/// interface_axis (1-based) is below interface_index form region 1.
struct YeeGrid {
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> n_cells{4, 4, 4};
  int interface_axis = 3;
  int interface_index = 2;

  void validate() const;
  double h(int axis) const { return extents[static_cast<size_t>(axis)] / n_cells[static_cast<size_t>(axis)]; }
  Eigen::Index n_cells_total() const;
  /// Interior (PEC-kept) edges: nx(ny-1)(nz-1) + (nx-1)ny(nz-1) + (nx-1)(ny-1)nz.
  Eigen::Index n_edges() const;
  /// All faces: (nx+1)ny nz + nx(ny+1)nz + nx ny(nz+1).
  Eigen::Index n_faces() const;
  Eigen::Index n_interior_nodes() const;
  /// Stable textual key used for cache file names.
  std::string key() const;
};

/// Sparse operators of the staggered grid. E lives on interior edges, H on faces.
struct OperatorBundle {
  YeeGrid grid;
  SpMatR C0;       ///< edge -> face curl
  SpMatR C;        ///< face -> edge curl, exactly C0^T
  SpMatR D;        ///< face -> cell divergence
  SpMatR D0;       ///< cell -> face gradient, -D^T
  SpMatR G0;       ///< interior node -> edge gradient (zero boundary values)
  SpMatR A;        ///< [[0, -C], [C0, 0]] on (E, H)
  SpMatR C0_int;   ///< C0 before the 1/h scaling, entries in {-1, 0, 1}
  VecR edge_w1;    ///< region-1 fraction of cells touching each edge
  VecR face_w1;    ///< region-1 fraction of cells touching each face

  Eigen::Index n_e() const { return C0.cols(); }
  Eigen::Index n_h() const { return C0.rows(); }
  Eigen::Index dim() const { return n_e() + n_h(); }
};

OperatorBundle build_curl_pair(const YeeGrid& grid);

/// Orthonormal kernel bases and ranks from a dense SVD of C0.
struct ProjectionBasis {
  MatR basis_ker_C0;  ///< columns span ker(C0) in edge space
  MatR basis_ker_C;   ///< columns span ker(C) in face space
  MatR basis_ran_C;   ///< columns span ran(C) = ker(C0)^perp in edge space
  VecR singular_values;
  Eigen::Index rank = 0;
  /// Singular values adjacent to the rank threshold were not well separated.
  bool rank_ambiguous = false;

  VecR apply_pi0(const VecR& e) const { return basis_ker_C0 * (basis_ker_C0.transpose() * e); }
  VecR apply_pi1(const VecR& h) const { return basis_ker_C * (basis_ker_C.transpose() * h); }
};

/// Dense rank-revealing computation; optionally cached on disk under cache_dir.
ProjectionBasis helmholtz_projections(const OperatorBundle& b,
                                      const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

struct PoincareReport {
  double sigma_min = 0.0;
  double constant = 0.0;  ///< 1 / sigma_min
  int iterations = 0;
};

/// Inverse iteration on C0^T C0 + G0 G0^T restricted to ker(C0)^perp.
PoincareReport poincare_constant(const OperatorBundle& b, const ProjectionBasis& p, double tol = 1e-13,
                                 int max_iter = 500);

/// Dimensions relevant to the identity ker(Div) = ran(Curl).
struct CohomologyReport {
  Eigen::Index dim_ker_C0 = 0;
  Eigen::Index dim_ran_C0 = 0;
  Eigen::Index dim_ker_C = 0;
  Eigen::Index dim_ker_div_edges = 0;   ///< ker(G0^T)
  Eigen::Index dim_ker_div_faces = 0;   ///< ker(D) over all faces
  Eigen::Index dim_ker_div0_faces = 0;  ///< ker(D) over faces with zero boundary flux
  Eigen::Index n_interior_nodes = 0;
};
CohomologyReport cohomology_dimensions(const OperatorBundle& b, const ProjectionBasis& p);

/// Per-face permeability from the piecewise material.
VecR face_mu(const OperatorBundle& b, const PiecewiseMaterial& m);

/// ||D(mu H(t)) - D(mu H(0))|| per sample; traj holds H or the full (E, H) state.
VecR divergence_diagnostics(const OperatorBundle& b, const WeightedSignal& traj, const VecR& mu);

/// Writes "row col value" lines, one per stored entry.
void export_triplets(const std::filesystem::path& path, const SpMatR& m);

}  // namespace evolab
