#include "cidet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cidet/common.hpp"

namespace cidet {

namespace {

// splitmix64, kept local so edge sampling is deterministic across platforms.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

struct EdgeRng {
  std::uint64_t s;
  double u01() {
    s += 0x9e3779b97f4a7c15ULL;
    return static_cast<double>(mix64(s) >> 11) * 0x1.0p-53;
  }
};

// Disjoint-set connectivity check: generation stays independent of the
// spectral machinery.
bool edges_connect(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) {
      root[v] = root[root[v]];
      v = root[v];
    }
    return v;
  };
  int components = n;
  for (auto [i, j] : edges) {
    int a = find(i), b = find(j);
    if (a != b) {
      root[a] = b;
      --components;
    }
  }
  return components == 1;
}

NetworkGraph finalize(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 2) throw std::invalid_argument("graph needs at least 2 sensors");
  for (auto& e : edges) {
    if (e.first == e.second) {
      throw std::invalid_argument("self-loop at vertex " + std::to_string(e.first));
    }
    if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::invalid_argument("duplicate edge in edge list");
  }

  NetworkGraph g;
  g.n = n;
  g.edges = std::move(edges);
  g.degrees = Eigen::VectorXi::Zero(n);
  g.laplacian = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : g.edges) {
    g.degrees(i) += 1;
    g.degrees(j) += 1;
    g.laplacian(i, j) = -1.0;
    g.laplacian(j, i) = -1.0;
  }
  for (int i = 0; i < n; ++i) g.laplacian(i, i) = g.degrees(i);
  return g;
}

std::vector<std::pair<int, int>> sample_erdos_renyi(int n, double p, EdgeRng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.u01() < p) edges.emplace_back(i, j);
    }
  }
  return edges;
}

}  // namespace

namespace {
GraphSpec named(GraphSpec::Kind kind, int n) {
  GraphSpec s;
  s.kind = kind;
  s.n = n;
  return s;
}
}  // namespace

GraphSpec GraphSpec::path(int n) { return named(Kind::path, n); }
GraphSpec GraphSpec::cycle(int n) { return named(Kind::cycle, n); }
GraphSpec GraphSpec::complete(int n) { return named(Kind::complete, n); }
GraphSpec GraphSpec::star(int n) { return named(Kind::star, n); }

GraphSpec GraphSpec::erdos_renyi(int n, double p, std::uint64_t seed,
                                 bool require_connected) {
  GraphSpec s;
  s.kind = Kind::erdos_renyi;
  s.n = n;
  s.p = p;
  s.seed = seed;
  s.require_connected = require_connected;
  return s;
}

GraphSpec GraphSpec::edge_list(int n, std::vector<std::pair<int, int>> edges) {
  GraphSpec s;
  s.kind = Kind::edge_list;
  s.n = n;
  s.edges = std::move(edges);
  return s;
}

NetworkGraph build_graph(const GraphSpec& spec) {
  const int n = spec.n;
  std::vector<std::pair<int, int>> edges;
  switch (spec.kind) {
    case GraphSpec::Kind::path:
      if (n < 2) throw std::invalid_argument("path graph needs n >= 2");
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case GraphSpec::Kind::cycle:
      if (n < 3) throw std::invalid_argument("cycle graph needs n >= 3");
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      edges.emplace_back(0, n - 1);
      break;
    case GraphSpec::Kind::complete:
      if (n < 2) throw std::invalid_argument("complete graph needs n >= 2");
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphSpec::Kind::star:
      if (n < 2) throw std::invalid_argument("star graph needs n >= 2");
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case GraphSpec::Kind::erdos_renyi: {
      if (n < 2) throw std::invalid_argument("random graph needs n >= 2");
      if (spec.p < 0.0 || spec.p > 1.0) {
        throw std::invalid_argument("edge probability outside [0, 1]");
      }
      EdgeRng rng{mix64(spec.seed ^ 0x853c49e6748fea9bULL)};
      edges = sample_erdos_renyi(n, spec.p, rng);
      if (spec.require_connected) {
        int attempts = 1;
        while (!edges_connect(n, edges)) {
          if (++attempts > 1000) {
            throw NumericalError("no connected sample in 1000 attempts");
          }
          edges = sample_erdos_renyi(n, spec.p, rng);
        }
      }
      break;
    }
    case GraphSpec::Kind::edge_list:
      edges = spec.edges;
      break;
  }
  return finalize(n, std::move(edges));
}

LaplacianSpectrum spectrum(const NetworkGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.laplacian);
  if (es.info() != Eigen::Success) {
    throw NumericalError("Laplacian eigensolver did not converge");
  }
  LaplacianSpectrum s;
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();

  const int n = g.n;
  const double lam_n = s.eigenvalues(n - 1);
  const double tol = 1e-9 * std::max(1.0, lam_n);
  int cluster = 0;
  while (cluster < n && s.eigenvalues(cluster) <= tol) ++cluster;

  // The constant vector spans part of the null cluster; rotate the cluster
  // basis so it leads, then orient it positively.
  Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  if (cluster <= 1) {
    if (s.eigenvectors.col(0).sum() < 0.0) s.eigenvectors.col(0) *= -1.0;
  } else {
    Eigen::MatrixXd basis(n, cluster);
    basis.col(0) = ones;
    int got = 1;
    for (int j = 0; j < cluster && got < cluster; ++j) {
      Eigen::VectorXd v = s.eigenvectors.col(j);
      for (int i = 0; i < got; ++i) v -= basis.col(i).dot(v) * basis.col(i);
      double norm = v.norm();
      if (norm > 1e-6) basis.col(got++) = v / norm;
    }
    if (got != cluster) {
      throw NumericalError("null-space basis completion failed");
    }
    s.eigenvectors.leftCols(cluster) = basis;
  }
  return s;
}

bool is_connected(const LaplacianSpectrum& s) {
  return s.eigenvalues(1) > 1e-9 * std::max(1.0, s.lambda_n());
}

int component_count(const LaplacianSpectrum& s) {
  const double tol = 1e-9 * std::max(1.0, s.lambda_n());
  int c = 0;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    if (s.eigenvalues(i) <= tol) ++c;
  }
  return c;
}

Eigen::MatrixXd averaging_matrix(const Eigen::MatrixXd& laplacian, double alpha) {
  return Eigen::MatrixXd::Identity(laplacian.rows(), laplacian.cols()) -
         alpha * laplacian;
}

NetworkGraph read_edge_list(std::istream& in) {
  std::string line;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (n < 0) {
      std::string head;
      if (!(ls >> head)) continue;  // blank before header
      if (head.rfind("n=", 0) != 0) {
        throw std::invalid_argument("edge list must start with n=<int>");
      }
      n = std::stoi(head.substr(2));
      continue;
    }
    int i, j;
    if (!(ls >> i)) continue;  // blank or comment-only line
    if (!(ls >> j)) {
      throw std::invalid_argument("malformed edge at line " + std::to_string(lineno));
    }
    edges.emplace_back(i, j);
  }
  if (n < 0) throw std::invalid_argument("edge list missing n=<int> header");
  return build_graph(GraphSpec::edge_list(n, std::move(edges)));
}

void write_edge_list(const NetworkGraph& g, std::ostream& out) {
  out << "n=" << g.n << '\n';
  for (auto [i, j] : g.edges) out << i << ' ' << j << '\n';
}

}  // namespace cidet
