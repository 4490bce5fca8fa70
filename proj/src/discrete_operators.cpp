#include "evolab/discrete_operators.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace evolab {

void YeeGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (n_cells[static_cast<size_t>(a)] < 2) throw InvalidArgument("YeeGrid needs at least 2 cells per axis");
    if (!(extents[static_cast<size_t>(a)] > 0.0)) throw InvalidArgument("YeeGrid extents must be positive");
  }
  if (interface_axis < 1 || interface_axis > 3) throw InvalidArgument("interface_axis must be 1, 2 or 3");
  const int n = n_cells[static_cast<size_t>(interface_axis - 1)];
  if (interface_index < 1 || interface_index > n - 1) {
    throw InvalidArgument("interface must lie strictly inside the box");
  }
}

Eigen::Index YeeGrid::n_cells_total() const {
  return Eigen::Index(n_cells[0]) * n_cells[1] * n_cells[2];
}

Eigen::Index YeeGrid::n_edges() const {
  const Eigen::Index nx = n_cells[0], ny = n_cells[1], nz = n_cells[2];
  return nx * (ny - 1) * (nz - 1) + (nx - 1) * ny * (nz - 1) + (nx - 1) * (ny - 1) * nz;
}

Eigen::Index YeeGrid::n_faces() const {
  const Eigen::Index nx = n_cells[0], ny = n_cells[1], nz = n_cells[2];
  return (nx + 1) * ny * nz + nx * (ny + 1) * nz + nx * ny * (nz + 1);
}

Eigen::Index YeeGrid::n_interior_nodes() const {
  return Eigen::Index(n_cells[0] - 1) * (n_cells[1] - 1) * (n_cells[2] - 1);
}

std::string YeeGrid::key() const {
  std::ostringstream os;
  os.precision(17);
  os << "yee:" << extents[0] << ',' << extents[1] << ',' << extents[2] << ':' << n_cells[0] << ',' << n_cells[1]
     << ',' << n_cells[2];
  return os.str();
}

namespace {

using Idx = std::array<int, 3>;

/// Index tables for one family of staggered entities (edges or faces of a
/// given orientation). dims are the index ranges per axis.
struct Family {
  Idx dims{};
  std::vector<Eigen::Index> id;  // -1 when eliminated
  Eigen::Index offset = 0;

  Eigen::Index at(const Idx& p) const {
    for (int a = 0; a < 3; ++a) {
      if (p[static_cast<size_t>(a)] < 0 || p[static_cast<size_t>(a)] >= dims[static_cast<size_t>(a)]) return -1;
    }
    return id[static_cast<size_t>((p[0] * dims[1] + p[1]) * dims[2] + p[2])];
  }
};

template <class Keep>
Family make_family(const Idx& dims, Eigen::Index& counter, Keep keep) {
  Family f;
  f.dims = dims;
  f.offset = counter;
  f.id.assign(static_cast<size_t>(dims[0] * dims[1] * dims[2]), -1);
  for (int i = 0; i < dims[0]; ++i) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int k = 0; k < dims[2]; ++k) {
        if (keep(Idx{i, j, k})) f.id[static_cast<size_t>((i * dims[1] + j) * dims[2] + k)] = counter++;
      }
    }
  }
  return f;
}

Idx plus(Idx p, int axis) {
  ++p[static_cast<size_t>(axis)];
  return p;
}

Idx minus(Idx p, int axis) {
  --p[static_cast<size_t>(axis)];
  return p;
}

struct Layout {
  std::array<Family, 3> edges;
  std::array<Family, 3> faces;
  Family cells;
  Family nodes;  // interior nodes only
  Eigen::Index n_e = 0, n_f = 0, n_c = 0, n_n = 0;
};

Layout make_layout(const YeeGrid& g) {
  const Idx n{g.n_cells[0], g.n_cells[1], g.n_cells[2]};
  Layout L;
  for (int a = 0; a < 3; ++a) {
    Idx dims{n[0] + 1, n[1] + 1, n[2] + 1};
    dims[static_cast<size_t>(a)] = n[static_cast<size_t>(a)];
    // Tangential E vanishes on the boundary: keep edges off every boundary plane
    // parallel to them.
    L.edges[static_cast<size_t>(a)] = make_family(dims, L.n_e, [&](const Idx& p) {
      for (int b = 0; b < 3; ++b) {
        if (b == a) continue;
        if (p[static_cast<size_t>(b)] == 0 || p[static_cast<size_t>(b)] == n[static_cast<size_t>(b)]) return false;
      }
      return true;
    });
  }
  for (int a = 0; a < 3; ++a) {
    Idx dims = n;
    dims[static_cast<size_t>(a)] = n[static_cast<size_t>(a)] + 1;
    L.faces[static_cast<size_t>(a)] = make_family(dims, L.n_f, [](const Idx&) { return true; });
  }
  L.cells = make_family(n, L.n_c, [](const Idx&) { return true; });
  L.nodes = make_family(Idx{n[0] + 1, n[1] + 1, n[2] + 1}, L.n_n, [&](const Idx& p) {
    for (int b = 0; b < 3; ++b) {
      if (p[static_cast<size_t>(b)] == 0 || p[static_cast<size_t>(b)] == n[static_cast<size_t>(b)]) return false;
    }
    return true;
  });
  return L;
}

bool in_region1(const YeeGrid& g, const Idx& cell) {
  return cell[static_cast<size_t>(g.interface_axis - 1)] < g.interface_index;
}

}  // namespace

OperatorBundle build_curl_pair(const YeeGrid& grid) {
  grid.validate();
  const Layout L = make_layout(grid);
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> curl_int, curl, div, grad;
  OperatorBundle b;
  b.grid = grid;
  b.edge_w1 = VecR::Zero(L.n_e);
  b.face_w1 = VecR::Zero(L.n_f);

  // Curl: face with normal a at p circulates E_c (offset along b) and E_b (offset along c).
  for (int a = 0; a < 3; ++a) {
    const int bx = (a + 1) % 3, cx = (a + 2) % 3;
    const Family& F = L.faces[static_cast<size_t>(a)];
    for (int i = 0; i < F.dims[0]; ++i) {
      for (int j = 0; j < F.dims[1]; ++j) {
        for (int k = 0; k < F.dims[2]; ++k) {
          const Idx p{i, j, k};
          const Eigen::Index row = F.at(p);
          auto add = [&](int fam, const Idx& q, int sign, double h) {
            const Eigen::Index col = L.edges[static_cast<size_t>(fam)].at(q);
            if (col < 0) return;
            curl_int.emplace_back(row, col, double(sign));
            curl.emplace_back(row, col, double(sign) / h);
          };
          add(cx, plus(p, bx), +1, grid.h(bx));
          add(cx, p, -1, grid.h(bx));
          add(bx, plus(p, cx), -1, grid.h(cx));
          add(bx, p, +1, grid.h(cx));
        }
      }
    }
  }
  // Divergence over cells.
  for (int i = 0; i < grid.n_cells[0]; ++i) {
    for (int j = 0; j < grid.n_cells[1]; ++j) {
      for (int k = 0; k < grid.n_cells[2]; ++k) {
        const Idx p{i, j, k};
        const Eigen::Index row = L.cells.at(p);
        for (int a = 0; a < 3; ++a) {
          const Family& F = L.faces[static_cast<size_t>(a)];
          div.emplace_back(row, F.at(plus(p, a)), 1.0 / grid.h(a));
          div.emplace_back(row, F.at(p), -1.0 / grid.h(a));
          const double w = in_region1(grid, p) ? 1.0 : 0.0;
          (void)w;
        }
      }
    }
  }
  // Gradient from interior nodes to interior edges.
  for (int a = 0; a < 3; ++a) {
    const Family& E = L.edges[static_cast<size_t>(a)];
    for (int i = 0; i < E.dims[0]; ++i) {
      for (int j = 0; j < E.dims[1]; ++j) {
        for (int k = 0; k < E.dims[2]; ++k) {
          const Idx p{i, j, k};
          const Eigen::Index row = E.at(p);
          if (row < 0) continue;
          const Eigen::Index n1 = L.nodes.at(plus(p, a)), n0 = L.nodes.at(p);
          if (n1 >= 0) grad.emplace_back(row, n1, 1.0 / grid.h(a));
          if (n0 >= 0) grad.emplace_back(row, n0, -1.0 / grid.h(a));
          // Region fraction over the (up to four) cells around the edge.
          const int bx = (a + 1) % 3, cx = (a + 2) % 3;
          int total = 0, in1 = 0;
          for (int db = -1; db <= 0; ++db) {
            for (int dc = -1; dc <= 0; ++dc) {
              Idx c = p;
              c[static_cast<size_t>(bx)] += db;
              c[static_cast<size_t>(cx)] += dc;
              if (L.cells.at(c) < 0) continue;
              ++total;
              in1 += in_region1(grid, c) ? 1 : 0;
            }
          }
          b.edge_w1(row) = double(in1) / double(total);
        }
      }
    }
  }
  for (int a = 0; a < 3; ++a) {
    const Family& F = L.faces[static_cast<size_t>(a)];
    for (int i = 0; i < F.dims[0]; ++i) {
      for (int j = 0; j < F.dims[1]; ++j) {
        for (int k = 0; k < F.dims[2]; ++k) {
          const Idx p{i, j, k};
          int total = 0, in1 = 0;
          for (const Idx& c : {minus(p, a), p}) {
            if (L.cells.at(c) < 0) continue;
            ++total;
            in1 += in_region1(grid, c) ? 1 : 0;
          }
          b.face_w1(F.at(p)) = double(in1) / double(total);
        }
      }
    }
  }

  b.C0_int.resize(L.n_f, L.n_e);
  b.C0_int.setFromTriplets(curl_int.begin(), curl_int.end());
  b.C0.resize(L.n_f, L.n_e);
  b.C0.setFromTriplets(curl.begin(), curl.end());
  b.C = SpMatR(b.C0.transpose());
  b.D.resize(L.n_c, L.n_f);
  b.D.setFromTriplets(div.begin(), div.end());
  b.D0 = SpMatR(-SpMatR(b.D.transpose()));
  b.G0.resize(L.n_e, L.n_n);
  b.G0.setFromTriplets(grad.begin(), grad.end());

  std::vector<Trip> a_trips;
  for (int k = 0; k < b.C0.outerSize(); ++k) {
    for (SpMatR::InnerIterator it(b.C0, k); it; ++it) {
      // C0 block at (E rows offset n_e, H cols) is (row=n_e+face, col=edge);
      // -C = -C0^T block at (row=edge, col=n_e+face).
      a_trips.emplace_back(L.n_e + it.row(), it.col(), it.value());
      a_trips.emplace_back(it.col(), L.n_e + it.row(), -it.value());
    }
  }
  b.A.resize(L.n_e + L.n_f, L.n_e + L.n_f);
  b.A.setFromTriplets(a_trips.begin(), a_trips.end());
  return b;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_mat(std::ofstream& os, const MatR& m) {
  const std::int64_t r = m.rows(), c = m.cols();
  os.write(reinterpret_cast<const char*>(&r), sizeof r);
  os.write(reinterpret_cast<const char*>(&c), sizeof c);
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

bool read_mat(std::ifstream& is, MatR& m) {
  std::int64_t r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&r), sizeof r);
  is.read(reinterpret_cast<char*>(&c), sizeof c);
  if (!is || r < 0 || c < 0) return false;
  m.resize(r, c);
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  return static_cast<bool>(is);
}

ProjectionBasis compute_projections(const OperatorBundle& b) {
  const MatR C0 = MatR(b.C0);
  Eigen::BDCSVD<MatR> svd(C0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProjectionBasis p;
  p.singular_values = svd.singularValues();
  const double smax = p.singular_values.size() ? p.singular_values(0) : 0.0;
  const double thresh = 1e-9 * smax;
  Eigen::Index r = 0;
  while (r < p.singular_values.size() && p.singular_values(r) > thresh) ++r;
  p.rank = r;
  if (r > 0 && r < p.singular_values.size()) {
    const double gap = p.singular_values(r - 1) - p.singular_values(r);
    p.rank_ambiguous = gap < 1e-8 * smax;
  }
  const Eigen::Index ne = C0.cols(), nf = C0.rows();
  p.basis_ran_C = svd.matrixV().leftCols(r);
  p.basis_ker_C0 = svd.matrixV().rightCols(ne - r);
  p.basis_ker_C = svd.matrixU().rightCols(nf - r);
  return p;
}

}  // namespace

ProjectionBasis helmholtz_projections(const OperatorBundle& b, const std::optional<std::filesystem::path>& cache_dir) {
  std::filesystem::path file;
  if (cache_dir) {
    std::ostringstream name;
    name << "projections_" << std::hex << fnv1a(b.grid.key()) << ".bin";
    file = *cache_dir / name.str();
    std::ifstream is(file, std::ios::binary);
    if (is) {
      ProjectionBasis p;
      std::int64_t rank = 0;
      std::uint8_t amb = 0;
      is.read(reinterpret_cast<char*>(&rank), sizeof rank);
      is.read(reinterpret_cast<char*>(&amb), sizeof amb);
      MatR sv;
      if (is && read_mat(is, sv) && read_mat(is, p.basis_ker_C0) && read_mat(is, p.basis_ker_C) &&
          read_mat(is, p.basis_ran_C) && p.basis_ker_C0.rows() == b.n_e()) {
        p.rank = rank;
        p.rank_ambiguous = amb != 0;
        p.singular_values = sv.col(0);
        return p;
      }
    }
  }
  ProjectionBasis p = compute_projections(b);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    std::ofstream os(file, std::ios::binary);
    const std::int64_t rank = p.rank;
    const std::uint8_t amb = p.rank_ambiguous ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&rank), sizeof rank);
    os.write(reinterpret_cast<const char*>(&amb), sizeof amb);
    write_mat(os, MatR(p.singular_values));
    write_mat(os, p.basis_ker_C0);
    write_mat(os, p.basis_ker_C);
    write_mat(os, p.basis_ran_C);
  }
  return p;
}

PoincareReport poincare_constant(const OperatorBundle& b, const ProjectionBasis& p, double tol, int max_iter) {
  const SpMatR K = SpMatR(b.C0.transpose() * b.C0) + SpMatR(b.G0 * b.G0.transpose());
  Eigen::SimplicialLDLT<SpMatR> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw LinearSolveFailure("curl-grad operator factorization failed");
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  VecR x(b.n_e());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
  x -= p.apply_pi0(x);
  x.normalize();
  double lambda = 0.0;
  PoincareReport rep;
  for (int it = 1; it <= max_iter; ++it) {
    VecR y = ldlt.solve(x);
    y -= p.apply_pi0(y);
    y.normalize();
    const double next = (b.C0 * y).squaredNorm();
    rep.iterations = it;
    const bool done = std::abs(next - lambda) <= tol * next;
    lambda = next;
    x = y;
    if (done) break;
  }
  rep.sigma_min = std::sqrt(lambda);
  rep.constant = 1.0 / rep.sigma_min;
  return rep;
}

namespace {

Eigen::Index dense_rank(const MatR& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<MatR> svd(m);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > 1e-9 * s(0)) ++r;
  return r;
}

}  // namespace

CohomologyReport cohomology_dimensions(const OperatorBundle& b, const ProjectionBasis& p) {
  CohomologyReport r;
  r.dim_ker_C0 = p.basis_ker_C0.cols();
  r.dim_ran_C0 = p.rank;
  r.dim_ker_C = p.basis_ker_C.cols();
  r.n_interior_nodes = b.G0.cols();
  r.dim_ker_div_edges = b.n_e() - dense_rank(MatR(b.G0));
  const MatR D = MatR(b.D);
  r.dim_ker_div_faces = b.n_h() - dense_rank(D);
  // Faces on the boundary carry flux out of the box; drop them for Div0.
  std::vector<Eigen::Index> interior;
  const SpMatR Dt = b.D.transpose();
  for (Eigen::Index f = 0; f < b.n_h(); ++f) {
    if (Dt.col(f).nonZeros() == 2) interior.push_back(f);
  }
  MatR D0(D.rows(), static_cast<Eigen::Index>(interior.size()));
  for (size_t j = 0; j < interior.size(); ++j) D0.col(static_cast<Eigen::Index>(j)) = D.col(interior[j]);
  r.dim_ker_div0_faces = D0.cols() - dense_rank(D0);
  return r;
}

VecR face_mu(const OperatorBundle& b, const PiecewiseMaterial& m) {
  return (b.face_w1.array() * m.mu1 + (1.0 - b.face_w1.array()) * m.mu2).matrix();
}

VecR divergence_diagnostics(const OperatorBundle& b, const WeightedSignal& traj, const VecR& mu) {
  Eigen::Index off = 0;
  if (traj.dim() == b.dim()) {
    off = b.n_e();
  } else if (traj.dim() != b.n_h()) {
    throw InvalidArgument("trajectory dimension matches neither H nor (E, H)");
  }
  const SpMatC Dc = b.D.cast<cplx>();
  VecR out(traj.n());
  VecC ref;
  for (Eigen::Index k = 0; k < traj.n(); ++k) {
    const VecC muH = (traj.values.row(k).segment(off, b.n_h()).transpose().array() * mu.array()).matrix();
    const VecC div = Dc * muH;
    if (k == 0) ref = div;
    out(k) = (div - ref).norm();
  }
  return out;
}

void export_triplets(const std::filesystem::path& path, const SpMatR& m) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path.string());
  os.precision(17);
  os << "# row col value (0-based), shape " << m.rows() << ' ' << m.cols() << '\n';
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMatR::InnerIterator it(m, k); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
}

}  // namespace evolab
