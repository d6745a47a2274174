#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "msgs/graph.hpp"
#include "msgs/types.hpp"

namespace msgs::ad {

/// Handle to a node on a Tape. Plain value; the owning tape is passed
/// explicitly to every operation.
struct Var {
  int id = -1;
  int rows = 0;
  int cols = 0;
};

using GradMap = std::map<int, Matrix>;

/// Append-only record of forward operations over dense matrices, replayed in
/// reverse for gradients. Node inputs always have smaller ids, and backward
/// visits nodes exactly once in reverse id order. A tape is single-threaded;
/// independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;

  /// Training-mode tape: dropout draws from a counter-based generator keyed
  /// by (seed, epoch, node id), so replays are exact.
  Tape(std::uint64_t seed, int epoch, bool training)
      : seed_(seed), epoch_(epoch), training_(training) {}

  bool training() const { return training_; }
  std::uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Leaf holding a trainable tensor; its gradient is kept by backward().
  Var parameter(const Matrix& value);

  /// Leaf holding a non-trainable value; gradients through it are discarded.
  Var constant(const Matrix& value);

  const Matrix& value(Var v) const;
  const Matrix& value(int id) const;

  /// Reverse pass from a 1x1 loss node. Returns gradients for every
  /// parameter node (zero matrices for parameters the loss never touched);
  /// intermediate gradients are freed as soon as they have been consumed.
  GradMap backward(Var loss);

  // Recording machinery, used by the free-function primitives.
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;
  Var record(Matrix value, BackwardFn backward);
  void accumulate(int id, const Matrix& grad);

 private:
  struct Node {
    Matrix value;
    BackwardFn backward;
    bool is_parameter = false;
  };
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::vector<char> has_grad_;
  std::uint64_t seed_ = 0;
  int epoch_ = 0;
  bool training_ = false;
};

// ---- Recorded primitives -------------------------------------------------
// Shape rules are exact (no broadcasting); mismatches raise InputError
// naming the primitive. All results are new nodes on the tape.

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scalar_mul(Tape& t, Var a, double c);
Var hadamard(Tape& t, Var a, Var b);
Var sparse_matmul(Tape& t, const PropagationMatrix& p, Var x);
/// Concatenates along each row: [a | b], equal row counts.
Var row_concat(Tape& t, Var a, Var b);
Var relu(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var row_softmax(Tape& t, Var a);
/// Inverted dropout: kept entries scaled by 1/(1 - rate). Identity in
/// evaluation mode. rate must lie in [0, 1).
Var dropout(Tape& t, Var a, double rate);
Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);

/// Mean over masked rows of -log softmax(logits)[label]. The backward is the
/// closed form (softmax - onehot) / n_masked on masked rows, zero elsewhere.
Var cross_entropy_with_softmax(Tape& t, Var logits, const std::vector<int>& labels,
                               const std::vector<char>& mask);

// Expansion/indexing primitives used by the per-edge model code.
Var gather_rows(Tape& t, Var a, const std::vector<int>& rows);
Var scatter_add_rows(Tape& t, Var a, const std::vector<int>& rows, int num_rows);
/// Scales row i of m by s(i, 0); s must be rows(m) x 1.
Var row_scale(Tape& t, Var m, Var s);
/// Repeats a 1 x C row vector into an n x C matrix.
Var broadcast_rows(Tape& t, Var row, int n);

// ---- Gradient checking ----------------------------------------------------

using ParamMap = std::map<std::string, Matrix>;

struct FdEntry {
  std::string name;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FdReport {
  double max_rel_error = 0.0;
  FdEntry worst;
  int entries_checked = 0;
};

/// Central-difference check of analytic gradients: perturbs up to
/// max_entries_per_tensor randomly chosen entries per tensor by +/- h and
/// compares (f(+h) - f(-h)) / 2h against the analytic value. The closure must
/// be deterministic. Relative error uses a 1e-3 denominator floor so
/// near-zero gradients are compared absolutely.
FdReport finite_difference_check(const std::function<double(const ParamMap&)>& loss_fn,
                                 const ParamMap& params, const ParamMap& analytic,
                                 double h, int max_entries_per_tensor,
                                 std::uint64_t seed);

}  // namespace msgs::ad
