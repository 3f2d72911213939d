#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace cidet {

struct GraphSpec {
  enum class Kind { path, cycle, complete, star, erdos_renyi, edge_list };

  Kind kind = Kind::path;
  int n = 0;
  double p = 0.0;              // erdos_renyi edge probability
  std::uint64_t seed = 0;      // erdos_renyi
  bool require_connected = false;
  std::vector<std::pair<int, int>> edges;  // edge_list

  static GraphSpec path(int n);
  static GraphSpec cycle(int n);
  static GraphSpec complete(int n);
  static GraphSpec star(int n);
  static GraphSpec erdos_renyi(int n, double p, std::uint64_t seed,
                               bool require_connected = false);
  static GraphSpec edge_list(int n, std::vector<std::pair<int, int>> edges);
};

// Simple undirected sensor network. The Laplacian is Diag(degrees) minus
// the adjacency matrix; entries are integer valued, so its row sums are
// exactly zero in floating point.
struct NetworkGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // normalized i < j, sorted
  Eigen::VectorXi degrees;
  Eigen::MatrixXd laplacian;
};

struct LaplacianSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, column i <-> eigenvalue i

  double lambda2() const { return eigenvalues(1); }
  double lambda_n() const { return eigenvalues(eigenvalues.size() - 1); }
};

NetworkGraph build_graph(const GraphSpec& spec);

// Dense symmetric eigendecomposition. The zero-eigenvalue cluster is
// rotated so the first column is the constant vector 1/sqrt(n).
LaplacianSpectrum spectrum(const NetworkGraph& g);

bool is_connected(const LaplacianSpectrum& s);

// I - alpha * L. Symmetric with unit row and column sums; callers enforce
// step-size admissibility.
Eigen::MatrixXd averaging_matrix(const Eigen::MatrixXd& laplacian, double alpha);

// Number of eigenvalues at or below the connectivity tolerance; equals the
// number of connected components.
int component_count(const LaplacianSpectrum& s);

// Edge-list file format: first line "n=<int>", then one "<i> <j>" pair per
// line, 0-based, whitespace separated, '#' starts a comment.
NetworkGraph read_edge_list(std::istream& in);
void write_edge_list(const NetworkGraph& g, std::ostream& out);

}  // namespace cidet
