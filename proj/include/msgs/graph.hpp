#pragma once

#include <string>
#include <utility>
#include <vector>

#include "msgs/types.hpp"

namespace msgs {

/// Undirected, unweighted graph. Edges are stored deduplicated with i < j;
/// adjacency is symmetric 0/1 and degrees are its row sums. Instances are
/// immutable after construction and safe for concurrent reads.
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  SpMatrix adjacency;
  IntVector degrees;

  /// Neighborhood of a node, by adjacency row scan. Sorted ascending.
  std::vector<int> neighbors(int node) const;
};

enum class LaplacianKind { Combinatorial, SymmetricNormalized, RandomWalk };

enum class PropagationKind { GcnRenormalized, PlainNormalizedAdjacency };

enum class SelfLoopPolicy { Reject, Drop };

/// Symmetric propagation operator. GcnRenormalized adds self-loops first
/// (all eigenvalues in (-1, 1] on connected graphs); PlainNormalizedAdjacency
/// normalizes the raw adjacency.
struct PropagationMatrix {
  SpMatrix matrix;
  PropagationKind kind = PropagationKind::GcnRenormalized;
};

/// Directed expansion of the edge set: every stored edge (i, j) appears as
/// (i, j) and (j, i). norm[e] = 1/sqrt(d_src * d_dst) with self-loop-free
/// degrees.
struct DirectedEdges {
  std::vector<int> src;
  std::vector<int> dst;
  Vector norm;

  int count() const { return static_cast<int>(src.size()); }
};

/// Builds a Graph from a raw pair list: symmetrizes, deduplicates, computes
/// degrees. Indices outside [0, num_nodes) are an InputError; self-loops are
/// rejected or silently dropped per policy.
Graph build_graph(int num_nodes, const std::vector<std::pair<int, int>>& edge_list,
                  SelfLoopPolicy policy = SelfLoopPolicy::Reject);

/// Dense N x N Laplacian of the requested kind. Normalized kinds reject
/// graphs with isolated nodes.
Matrix laplacian(const Graph& g, LaplacianKind kind);

PropagationMatrix propagation_matrix(const Graph& g, PropagationKind kind);

DirectedEdges directed_edges(const Graph& g);

bool is_connected(const Graph& g);

/// Edge-list file: one "i j" pair of 0-based ids per line, lines starting
/// with '#' ignored. Node count is 1 + max index unless overridden.
Graph load_edge_list(const std::string& path, int num_nodes_override = -1);

void save_edge_list(const Graph& g, const std::string& path);

}  // namespace msgs
