#include "msgs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace msgs {

std::vector<int> Graph::neighbors(int node) const {
  std::vector<int> out;
  for (SpMatrix::InnerIterator it(adjacency, node); it; ++it) {
    out.push_back(static_cast<int>(it.row()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Graph build_graph(int num_nodes, const std::vector<std::pair<int, int>>& edge_list,
                  SelfLoopPolicy policy) {
  if (num_nodes < 0) throw InputError("build_graph: negative node count");
  std::set<std::pair<int, int>> unique_edges;
  for (const auto& [a, b] : edge_list) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes) {
      throw InputError("build_graph: edge (" + std::to_string(a) + ", " +
                       std::to_string(b) + ") out of range for " +
                       std::to_string(num_nodes) + " nodes");
    }
    if (a == b) {
      if (policy == SelfLoopPolicy::Reject) {
        throw InputError("build_graph: self-loop at node " + std::to_string(a));
      }
      continue;
    }
    unique_edges.emplace(std::min(a, b), std::max(a, b));
  }

  Graph g;
  g.num_nodes = num_nodes;
  g.edges.assign(unique_edges.begin(), unique_edges.end());
  g.degrees = IntVector::Zero(num_nodes);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.edges.size());
  for (const auto& [i, j] : g.edges) {
    triplets.emplace_back(i, j, 1.0);
    triplets.emplace_back(j, i, 1.0);
    g.degrees[i] += 1;
    g.degrees[j] += 1;
  }
  g.adjacency.resize(num_nodes, num_nodes);
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

Matrix laplacian(const Graph& g, LaplacianKind kind) {
  const int n = g.num_nodes;
  const Matrix a = Matrix(g.adjacency);
  const Vector d = g.degrees.cast<double>();

  switch (kind) {
    case LaplacianKind::Combinatorial:
      return Matrix(d.asDiagonal()) - a;
    case LaplacianKind::SymmetricNormalized: {
      if ((g.degrees.array() == 0).any()) {
        throw InputError("laplacian: isolated node, normalized form undefined");
      }
      const Vector dinv_sqrt = d.cwiseSqrt().cwiseInverse();
      Matrix l = Matrix::Identity(n, n) -
                 dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();
      return 0.5 * (l + l.transpose());
    }
    case LaplacianKind::RandomWalk: {
      if ((g.degrees.array() == 0).any()) {
        throw InputError("laplacian: isolated node, random-walk form undefined");
      }
      return Matrix::Identity(n, n) - Matrix(d.cwiseInverse().asDiagonal()) * a;
    }
  }
  throw InputError("laplacian: unknown kind");
}

PropagationMatrix propagation_matrix(const Graph& g, PropagationKind kind) {
  const int n = g.num_nodes;
  std::vector<Eigen::Triplet<double>> triplets;

  if (kind == PropagationKind::GcnRenormalized) {
    const Vector dtilde = (g.degrees.cast<double>().array() + 1.0).matrix();
    triplets.reserve(2 * g.edges.size() + n);
    for (const auto& [i, j] : g.edges) {
      const double v = 1.0 / std::sqrt(dtilde[i] * dtilde[j]);
      triplets.emplace_back(i, j, v);
      triplets.emplace_back(j, i, v);
    }
    for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / dtilde[i]);
  } else {
    triplets.reserve(2 * g.edges.size());
    for (const auto& [i, j] : g.edges) {
      const double v =
          1.0 / std::sqrt(static_cast<double>(g.degrees[i]) * g.degrees[j]);
      triplets.emplace_back(i, j, v);
      triplets.emplace_back(j, i, v);
    }
  }

  PropagationMatrix p;
  p.kind = kind;
  p.matrix.resize(n, n);
  p.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

DirectedEdges directed_edges(const Graph& g) {
  DirectedEdges de;
  const int m = static_cast<int>(g.edges.size());
  de.src.reserve(2 * m);
  de.dst.reserve(2 * m);
  de.norm.resize(2 * m);
  int e = 0;
  for (const auto& [i, j] : g.edges) {
    const double w =
        1.0 / std::sqrt(static_cast<double>(g.degrees[i]) * g.degrees[j]);
    de.src.push_back(i);
    de.dst.push_back(j);
    de.norm[e++] = w;
    de.src.push_back(j);
    de.dst.push_back(i);
    de.norm[e++] = w;
  }
  return de;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes == 0) return true;
  std::vector<char> seen(g.num_nodes, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (SpMatrix::InnerIterator it(g.adjacency, u); it; ++it) {
      const int v = static_cast<int>(it.row());
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
    }
  }
  return reached == g.num_nodes;
}

Graph load_edge_list(const std::string& path, int num_nodes_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list: " + path);

  std::vector<std::pair<int, int>> edges;
  int max_index = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long a = 0, b = 0;
    std::string extra;
    if (!(ls >> a >> b) || (ls >> extra)) {
      throw InputError("edge list parse error at line " + std::to_string(line_no) +
                       " of " + path);
    }
    if (a < 0 || b < 0) {
      throw InputError("edge list: negative node id at line " +
                       std::to_string(line_no) + " of " + path);
    }
    edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    max_index = std::max(max_index, static_cast<int>(std::max(a, b)));
  }
  const int n = num_nodes_override >= 0 ? num_nodes_override : max_index + 1;
  return build_graph(n, edges, SelfLoopPolicy::Reject);
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write edge list: " + path);
  for (const auto& [i, j] : g.edges) out << i << " " << j << "\n";
}

}  // namespace msgs
