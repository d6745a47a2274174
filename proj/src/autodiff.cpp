#include "msgs/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "msgs/rng.hpp"

namespace msgs::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

std::string shape_of(Var v) {
  return std::to_string(v.rows) + "x" + std::to_string(v.cols);
}

void require_same_shape(Var a, Var b, const char* op) {
  require(a.rows == b.rows && a.cols == b.cols,
          std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

}  // namespace

Var Tape::parameter(const Matrix& value) {
  nodes_.push_back({value, nullptr, true});
  return {size() - 1, static_cast<int>(value.rows()), static_cast<int>(value.cols())};
}

Var Tape::constant(const Matrix& value) {
  nodes_.push_back({value, nullptr, false});
  return {size() - 1, static_cast<int>(value.rows()), static_cast<int>(value.cols())};
}

const Matrix& Tape::value(Var v) const { return value(v.id); }

const Matrix& Tape::value(int id) const {
  require(id >= 0 && id < size(), "tape: node id out of range");
  return nodes_[static_cast<std::size_t>(id)].value;
}

Var Tape::record(Matrix value, BackwardFn backward) {
  const int r = static_cast<int>(value.rows());
  const int c = static_cast<int>(value.cols());
  nodes_.push_back({std::move(value), std::move(backward), false});
  return {size() - 1, r, c};
}

void Tape::accumulate(int id, const Matrix& grad) {
  if (has_grad_[static_cast<std::size_t>(id)]) {
    grads_[static_cast<std::size_t>(id)] += grad;
  } else {
    grads_[static_cast<std::size_t>(id)] = grad;
    has_grad_[static_cast<std::size_t>(id)] = 1;
  }
}

GradMap Tape::backward(Var loss) {
  require(loss.id >= 0 && loss.id < size(), "backward: loss not on this tape");
  require(loss.rows == 1 && loss.cols == 1, "backward: loss must be 1x1 scalar");

  grads_.assign(nodes_.size(), Matrix());
  has_grad_.assign(nodes_.size(), 0);
  accumulate(loss.id, Matrix::Ones(1, 1));

  for (int id = loss.id; id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!has_grad_[static_cast<std::size_t>(id)]) continue;
    if (node.backward) node.backward(*this, grads_[static_cast<std::size_t>(id)]);
    if (!node.is_parameter) {
      grads_[static_cast<std::size_t>(id)] = Matrix();
      has_grad_[static_cast<std::size_t>(id)] = 0;
    }
  }

  GradMap out;
  for (int id = 0; id < size(); ++id) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.is_parameter) continue;
    if (has_grad_[static_cast<std::size_t>(id)]) {
      out[id] = std::move(grads_[static_cast<std::size_t>(id)]);
    } else {
      out[id] = Matrix::Zero(node.value.rows(), node.value.cols());
    }
  }
  grads_.clear();
  has_grad_.clear();
  return out;
}

Var matmul(Tape& t, Var a, Var b) {
  require(a.cols == b.rows, "matmul: inner dimensions " + shape_of(a) + " vs " +
                                shape_of(b) + " do not agree");
  Matrix value = t.value(a) * t.value(b);
  return t.record(std::move(value), [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, g * tape.value(b).transpose());
    tape.accumulate(b.id, tape.value(a).transpose() * g);
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(a, b, "add");
  return t.record(t.value(a) + t.value(b), [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, g);
    tape.accumulate(b.id, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(a, b, "sub");
  return t.record(t.value(a) - t.value(b), [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, g);
    tape.accumulate(b.id, -g);
  });
}

Var scalar_mul(Tape& t, Var a, double c) {
  return t.record(c * t.value(a), [a, c](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, c * g);
  });
}

Var hadamard(Tape& t, Var a, Var b) {
  require_same_shape(a, b, "hadamard");
  return t.record(t.value(a).cwiseProduct(t.value(b)),
                  [a, b](Tape& tape, const Matrix& g) {
                    tape.accumulate(a.id, g.cwiseProduct(tape.value(b)));
                    tape.accumulate(b.id, g.cwiseProduct(tape.value(a)));
                  });
}

Var sparse_matmul(Tape& t, const PropagationMatrix& p, Var x) {
  require(p.matrix.cols() == x.rows,
          "sparse_matmul: matrix " + std::to_string(p.matrix.rows()) + "x" +
              std::to_string(p.matrix.cols()) + " vs input " + shape_of(x));
  // The PropagationMatrix contract keeps p symmetric; the transpose is used
  // anyway so the rule stays correct for any sparse operand.
  auto mat = std::make_shared<SpMatrix>(p.matrix);
  Matrix value = *mat * t.value(x);
  return t.record(std::move(value), [mat, x](Tape& tape, const Matrix& g) {
    tape.accumulate(x.id, mat->transpose() * g);
  });
}

Var row_concat(Tape& t, Var a, Var b) {
  require(a.rows == b.rows, "row_concat: row counts " + shape_of(a) + " vs " +
                                shape_of(b) + " differ");
  Matrix value(a.rows, a.cols + b.cols);
  value << t.value(a), t.value(b);
  return t.record(std::move(value), [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, g.leftCols(a.cols));
    tape.accumulate(b.id, g.rightCols(b.cols));
  });
}

Var relu(Tape& t, Var a) {
  return t.record(t.value(a).cwiseMax(0.0), [a](Tape& tape, const Matrix& g) {
    const Matrix mask =
        (tape.value(a).array() > 0.0).cast<double>().matrix();
    tape.accumulate(a.id, g.cwiseProduct(mask));
  });
}

Var tanh(Tape& t, Var a) {
  const int out_id = t.size();
  return t.record(t.value(a).array().tanh().matrix(),
                  [a, out_id](Tape& tape, const Matrix& g) {
                    const auto y = tape.value(out_id).array();
                    tape.accumulate(a.id,
                                    (g.array() * (1.0 - y.square())).matrix());
                  });
}

Var sigmoid(Tape& t, Var a) {
  const int out_id = t.size();
  Matrix value =
      (1.0 / (1.0 + (-t.value(a).array()).exp())).matrix();
  return t.record(std::move(value), [a, out_id](Tape& tape, const Matrix& g) {
    const auto y = tape.value(out_id).array();
    tape.accumulate(a.id, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var row_softmax(Tape& t, Var a) {
  Matrix value(a.rows, a.cols);
  const Matrix& x = t.value(a);
  for (int i = 0; i < a.rows; ++i) {
    const double m = x.row(i).maxCoeff();
    Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
    value.row(i) = e / e.sum();
  }
  const int out_id = t.size();
  return t.record(std::move(value), [a, out_id](Tape& tape, const Matrix& g) {
    const Matrix& y = tape.value(out_id);
    Matrix grad(y.rows(), y.cols());
    for (int i = 0; i < y.rows(); ++i) {
      const double dot = g.row(i).dot(y.row(i));
      grad.row(i) = y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
    }
    tape.accumulate(a.id, grad);
  });
}

Var dropout(Tape& t, Var a, double rate) {
  require(rate >= 0.0 && rate < 1.0,
          "dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  if (!t.training() || rate == 0.0) return a;
  const int node_id = t.size();  // id the new node will get
  const std::uint64_t key_base =
      splitmix64(splitmix64(t.seed() ^ 0x9e3779b97f4a7c15ULL) ^
                 static_cast<std::uint64_t>(t.epoch())) ^
      splitmix64(static_cast<std::uint64_t>(node_id));
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Matrix>(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) {
      const std::uint64_t idx =
          static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(a.cols) + c;
      (*mask)(r, c) = hash_unit(key_base ^ splitmix64(idx)) >= rate ? keep_scale : 0.0;
    }
  }
  Matrix value = t.value(a).cwiseProduct(*mask);
  return t.record(std::move(value), [a, mask](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, g.cwiseProduct(*mask));
  });
}

Var sum(Tape& t, Var a) {
  Matrix value(1, 1);
  value(0, 0) = t.value(a).sum();
  return t.record(std::move(value), [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, Matrix::Constant(a.rows, a.cols, g(0, 0)));
  });
}

Var mean(Tape& t, Var a) {
  require(a.rows > 0 && a.cols > 0, "mean: empty input");
  const double inv = 1.0 / (static_cast<double>(a.rows) * a.cols);
  Matrix value(1, 1);
  value(0, 0) = t.value(a).sum() * inv;
  return t.record(std::move(value), [a, inv](Tape& tape, const Matrix& g) {
    tape.accumulate(a.id, Matrix::Constant(a.rows, a.cols, g(0, 0) * inv));
  });
}

Var cross_entropy_with_softmax(Tape& t, Var logits, const std::vector<int>& labels,
                               const std::vector<char>& mask) {
  require(static_cast<int>(labels.size()) == logits.rows,
          "cross_entropy_with_softmax: label count " +
              std::to_string(labels.size()) + " vs logits " + shape_of(logits));
  require(mask.size() == labels.size(),
          "cross_entropy_with_softmax: mask length mismatch");
  int n_masked = 0;
  for (char m : mask) n_masked += m ? 1 : 0;
  require(n_masked > 0, "cross_entropy_with_softmax: empty mask");

  const Matrix& x = t.value(logits);
  auto probs = std::make_shared<Matrix>(Matrix::Zero(logits.rows, logits.cols));
  double loss = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < logits.cols,
            "cross_entropy_with_softmax: label " + std::to_string(y) +
                " outside [0, " + std::to_string(logits.cols) + ")");
    const double m = x.row(i).maxCoeff();
    Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
    const double z = e.sum();
    probs->row(i) = e / z;
    loss -= std::log((*probs)(i, y));
  }
  loss /= n_masked;

  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  auto mask_copy = std::make_shared<std::vector<char>>(mask);
  Matrix value(1, 1);
  value(0, 0) = loss;
  return t.record(std::move(value), [logits, probs, labels_copy, mask_copy,
                                     n_masked](Tape& tape, const Matrix& g) {
    Matrix grad = Matrix::Zero(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
      if (!(*mask_copy)[static_cast<std::size_t>(i)]) continue;
      grad.row(i) = probs->row(i);
      grad(i, (*labels_copy)[static_cast<std::size_t>(i)]) -= 1.0;
    }
    tape.accumulate(logits.id, (g(0, 0) / n_masked) * grad);
  });
}

Var gather_rows(Tape& t, Var a, const std::vector<int>& rows) {
  for (int r : rows) {
    require(r >= 0 && r < a.rows,
            "gather_rows: index " + std::to_string(r) + " out of range");
  }
  auto idx = std::make_shared<std::vector<int>>(rows);
  Matrix value(static_cast<int>(rows.size()), a.cols);
  const Matrix& x = t.value(a);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    value.row(static_cast<int>(i)) = x.row(rows[i]);
  }
  return t.record(std::move(value), [a, idx](Tape& tape, const Matrix& g) {
    Matrix grad = Matrix::Zero(a.rows, a.cols);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      grad.row((*idx)[i]) += g.row(static_cast<int>(i));
    }
    tape.accumulate(a.id, grad);
  });
}

Var scatter_add_rows(Tape& t, Var a, const std::vector<int>& rows, int num_rows) {
  require(static_cast<int>(rows.size()) == a.rows,
          "scatter_add_rows: index count " + std::to_string(rows.size()) +
              " vs input rows " + std::to_string(a.rows));
  for (int r : rows) {
    require(r >= 0 && r < num_rows,
            "scatter_add_rows: index " + std::to_string(r) + " out of range");
  }
  auto idx = std::make_shared<std::vector<int>>(rows);
  Matrix value = Matrix::Zero(num_rows, a.cols);
  const Matrix& x = t.value(a);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    value.row(rows[i]) += x.row(static_cast<int>(i));
  }
  return t.record(std::move(value), [a, idx](Tape& tape, const Matrix& g) {
    Matrix grad(a.rows, a.cols);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      grad.row(static_cast<int>(i)) = g.row((*idx)[i]);
    }
    tape.accumulate(a.id, grad);
  });
}

Var row_scale(Tape& t, Var m, Var s) {
  require(s.rows == m.rows && s.cols == 1,
          "row_scale: scale must be " + std::to_string(m.rows) + "x1, got " +
              shape_of(s));
  Matrix value =
      (t.value(m).array().colwise() * t.value(s).col(0).array()).matrix();
  return t.record(std::move(value), [m, s](Tape& tape, const Matrix& g) {
    tape.accumulate(
        m.id, (g.array().colwise() * tape.value(s).col(0).array()).matrix());
    tape.accumulate(s.id, g.cwiseProduct(tape.value(m)).rowwise().sum());
  });
}

Var broadcast_rows(Tape& t, Var row, int n) {
  require(row.rows == 1, "broadcast_rows: input must be 1xC, got " + shape_of(row));
  require(n >= 1, "broadcast_rows: target row count must be >= 1");
  Matrix value = t.value(row).replicate(n, 1);
  return t.record(std::move(value), [row](Tape& tape, const Matrix& g) {
    tape.accumulate(row.id, g.colwise().sum());
  });
}

FdReport finite_difference_check(const std::function<double(const ParamMap&)>& loss_fn,
                                 const ParamMap& params, const ParamMap& analytic,
                                 double h, int max_entries_per_tensor,
                                 std::uint64_t seed) {
  FdReport report;
  ParamMap work = params;
  Rng rng(seed);
  for (const auto& [name, tensor] : params) {
    const auto grad_it = analytic.find(name);
    require(grad_it != analytic.end(),
            "finite_difference_check: missing analytic gradient for " + name);
    const long total = tensor.size();
    std::vector<long> entries(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) entries[static_cast<std::size_t>(i)] = i;
    if (total > max_entries_per_tensor) {
      rng.shuffle(entries);
      entries.resize(static_cast<std::size_t>(max_entries_per_tensor));
    }
    Matrix& w = work[name];
    for (long flat : entries) {
      const int r = static_cast<int>(flat % tensor.rows());
      const int c = static_cast<int>(flat / tensor.rows());
      const double saved = w(r, c);
      w(r, c) = saved + h;
      const double up = loss_fn(work);
      w(r, c) = saved - h;
      const double down = loss_fn(work);
      w(r, c) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = grad_it->second(r, c);
      const double rel = std::abs(exact - numeric) /
                         std::max({std::abs(exact), std::abs(numeric), 1e-3});
      ++report.entries_checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = {name, r, c, exact, numeric, rel};
      }
    }
  }
  return report;
}

}  // namespace msgs::ad
