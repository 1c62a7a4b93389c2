#pragma once

#include <string>
#include <vector>

#include "swift/rng.hpp"
#include "swift/types.hpp"

namespace swift {

/**
 * In-memory dataset. class_count == 0 marks regression (real labels);
 * otherwise labels are integers in [0, class_count).
 */
struct Dataset {
  matrix_t features;  // samples x feature dimension
  vector_t labels;
  index_t class_count = 0;

  index_t samples() const { return features.rows(); }
  index_t feature_dim() const { return features.cols(); }
};

// Gaussian features, labels a*x_star + noise*N(0,1) for a hidden x_star.
Dataset make_regression_dataset(index_t samples, index_t feature_dim, scalar_t label_noise,
                                std::uint64_t seed);

// Gaussian mixture: class means drawn from spread*N(0,I), unit within-class
// noise, classes balanced (sample i belongs to class i mod c).
Dataset make_classification_dataset(index_t samples, index_t feature_dim, index_t classes,
                                    scalar_t spread, std::uint64_t seed);

// Comma-separated file, one header row, last column is the label.
Dataset load_csv_dataset(const std::string& path, bool classification);

using Partition = std::vector<std::vector<index_t>>;

// Disjoint random shards of equal size (+-1), deterministic per seed.
Partition partition_iid(const Dataset& ds, index_t n, std::uint64_t seed);

// ceil(c/n) classes per client assigned cyclically; each class fills an equal
// slice of the shard; exhausted classes spill into the next class.
Partition partition_class_cyclic(const Dataset& ds, index_t n);

// Fraction `degree` of client k's shard drawn from label k mod c, remainder
// sampled uniformly from the leftover pool. degree == 0 is exactly the IID split.
Partition partition_degree(const Dataset& ds, index_t n, scalar_t degree, std::uint64_t seed);

enum class ObjectiveKind { least_squares, logistic, mlp };

/**
 * Per-client loss/gradient oracle over a dataset shard, owning its sampler
 * stream. least_squares: l = (a.x - b)^2 / 2. logistic: binary labels {0,1}
 * mapped to +-1, l = log(1 + exp(-y a.x)). mlp: tanh hidden layer (0 units
 * degenerates to linear) into softmax cross-entropy.
 */
class GradientOracle {
 public:
  GradientOracle(ObjectiveKind kind, const Dataset* data, std::vector<index_t> shard,
                 index_t batch_size, Rng rng, index_t hidden_units = 0);

  ObjectiveKind kind() const { return kind_; }
  index_t dim() const { return dim_; }
  index_t batch_size() const { return batch_size_; }
  index_t shard_size() const { return static_cast<index_t>(shard_.size()); }
  const std::vector<index_t>& shard() const { return shard_; }
  const Dataset& data() const { return *data_; }
  index_t hidden_units() const { return hidden_; }

  void reseed(Rng rng) { rng_ = rng; }

  // batch_size indices drawn from the shard uniformly with replacement.
  std::vector<index_t> sample_batch();

  // Mean of per-sample loss gradients over the given dataset rows.
  vector_t gradient(const vector_t& x, const std::vector<index_t>& batch) const;
  scalar_t loss(const vector_t& x, const std::vector<index_t>& batch) const;

  vector_t shard_gradient(const vector_t& x) const;
  scalar_t shard_loss(const vector_t& x) const;

 private:
  void accumulate(const vector_t& x, const std::vector<index_t>& rows, vector_t* grad,
                  scalar_t* loss) const;

  ObjectiveKind kind_;
  const Dataset* data_;
  std::vector<index_t> shard_;
  index_t batch_size_;
  Rng rng_;
  index_t hidden_ = 0;
  index_t dim_ = 0;
};

// Influence-weighted global objective over every client's full shard.
scalar_t global_loss(const std::vector<GradientOracle>& oracles, const vector_t& p,
                     const vector_t& x);
vector_t global_gradient(const std::vector<GradientOracle>& oracles, const vector_t& p,
                         const vector_t& x);

// Smoothness constant: least squares lambda_max(A^T A)/m, logistic a quarter
// of that; mlp has no closed form and is rejected.
scalar_t lipschitz_estimate(const GradientOracle& oracle);
scalar_t lipschitz_estimate(const std::vector<GradientOracle>& oracles);  // max over clients

struct ConvexSolution {
  vector_t x_star;
  scalar_t f_star = 0;
};

// Exact minimizer of the influence-weighted least-squares objective
// (normal equations). Only valid when every oracle is least_squares.
ConvexSolution least_squares_optimum(const std::vector<GradientOracle>& oracles, const vector_t& p);

}  // namespace swift
