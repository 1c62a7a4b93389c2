#include "swift/learning.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace swift {

namespace {
constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kIidStream = 0x11D;
constexpr std::uint64_t kDegreeStream = 0xDE6;

std::vector<index_t> shard_sizes(index_t total, index_t n) {
  std::vector<index_t> sizes(static_cast<std::size_t>(n), total / n);
  for (index_t k = 0; k < total % n; ++k) sizes[static_cast<std::size_t>(k)] += 1;
  return sizes;
}

std::vector<std::vector<index_t>> class_pools(const Dataset& ds) {
  std::vector<std::vector<index_t>> pools(static_cast<std::size_t>(ds.class_count));
  for (index_t i = 0; i < ds.samples(); ++i)
    pools[static_cast<std::size_t>(std::llround(ds.labels(i)))].push_back(i);
  return pools;
}
}  // namespace

Dataset make_regression_dataset(index_t samples, index_t feature_dim, scalar_t label_noise,
                                std::uint64_t seed) {
  if (samples < 1 || feature_dim < 1)
    throw std::invalid_argument("make_regression_dataset: sizes must be >= 1");
  Rng rng(seed, kDataStream);
  vector_t x_star(feature_dim);
  for (index_t j = 0; j < feature_dim; ++j) x_star(j) = rng.normal();
  Dataset ds;
  ds.features.resize(samples, feature_dim);
  ds.labels.resize(samples);
  ds.class_count = 0;
  for (index_t i = 0; i < samples; ++i) {
    for (index_t j = 0; j < feature_dim; ++j) ds.features(i, j) = rng.normal();
    ds.labels(i) = ds.features.row(i).dot(x_star) + label_noise * rng.normal();
  }
  return ds;
}

Dataset make_classification_dataset(index_t samples, index_t feature_dim, index_t classes,
                                    scalar_t spread, std::uint64_t seed) {
  if (samples < 1 || feature_dim < 1 || classes < 2)
    throw std::invalid_argument("make_classification_dataset: need samples, features >= 1 and classes >= 2");
  Rng rng(seed, kDataStream);
  matrix_t means(classes, feature_dim);
  for (index_t k = 0; k < classes; ++k)
    for (index_t j = 0; j < feature_dim; ++j) means(k, j) = spread * rng.normal();
  Dataset ds;
  ds.features.resize(samples, feature_dim);
  ds.labels.resize(samples);
  ds.class_count = classes;
  for (index_t i = 0; i < samples; ++i) {
    index_t k = i % classes;
    for (index_t j = 0; j < feature_dim; ++j) ds.features(i, j) = means(k, j) + rng.normal();
    ds.labels(i) = static_cast<scalar_t>(k);
  }
  return ds;
}

Dataset load_csv_dataset(const std::string& path, bool classification) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("load_csv_dataset: missing header row in " + path);
  std::vector<std::vector<scalar_t>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<scalar_t> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("load_csv_dataset: non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (row.size() < 2)
      throw std::invalid_argument("load_csv_dataset: rows need >= 1 feature and a label");
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("load_csv_dataset: inconsistent column count in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv_dataset: no data rows in " + path);

  const index_t m = static_cast<index_t>(rows.size());
  const index_t f = static_cast<index_t>(rows.front().size()) - 1;
  Dataset ds;
  ds.features.resize(m, f);
  ds.labels.resize(m);
  for (index_t i = 0; i < m; ++i) {
    for (index_t j = 0; j < f; ++j) ds.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    ds.labels(i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
  }
  if (classification) {
    index_t max_label = 0;
    for (index_t i = 0; i < m; ++i) {
      scalar_t v = ds.labels(i);
      if (v < 0 || std::abs(v - std::llround(v)) > 0)
        throw std::invalid_argument("load_csv_dataset: class labels must be non-negative integers");
      max_label = std::max(max_label, static_cast<index_t>(std::llround(v)));
    }
    ds.class_count = max_label + 1;
  }
  return ds;
}

Partition partition_iid(const Dataset& ds, index_t n, std::uint64_t seed) {
  if (n < 1 || ds.samples() < n)
    throw std::invalid_argument("partition_iid: need 1 <= n <= sample count");
  std::vector<index_t> perm(static_cast<std::size_t>(ds.samples()));
  std::iota(perm.begin(), perm.end(), index_t(0));
  Rng rng(seed, kIidStream);
  shuffle_in_place(perm, rng);
  Partition part(static_cast<std::size_t>(n));
  auto sizes = shard_sizes(ds.samples(), n);
  std::size_t at = 0;
  for (index_t k = 0; k < n; ++k) {
    auto& shard = part[static_cast<std::size_t>(k)];
    shard.assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                 perm.begin() + static_cast<std::ptrdiff_t>(at + static_cast<std::size_t>(sizes[static_cast<std::size_t>(k)])));
    at += static_cast<std::size_t>(sizes[static_cast<std::size_t>(k)]);
    std::sort(shard.begin(), shard.end());
  }
  return part;
}

Partition partition_class_cyclic(const Dataset& ds, index_t n) {
  if (ds.class_count < 1)
    throw std::invalid_argument("partition_class_cyclic: dataset has no class labels");
  if (n < 1 || ds.samples() < n)
    throw std::invalid_argument("partition_class_cyclic: need 1 <= n <= sample count");
  const index_t c = ds.class_count;
  const index_t n_c = (c + n - 1) / n;  // classes per client
  auto pools = class_pools(ds);
  std::vector<std::size_t> used(static_cast<std::size_t>(c), 0);
  auto sizes = shard_sizes(ds.samples(), n);

  Partition part(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) {
    auto& shard = part[static_cast<std::size_t>(k)];
    const index_t m_k = sizes[static_cast<std::size_t>(k)];
    for (index_t r = 0; r < n_c; ++r) {
      index_t quota = m_k / n_c + (r < m_k % n_c ? 1 : 0);
      index_t cls = (k * n_c + r) % c;
      // Exhausted classes spill into the next class, wrapping as needed.
      while (quota > 0) {
        auto& pool = pools[static_cast<std::size_t>(cls)];
        auto& at = used[static_cast<std::size_t>(cls)];
        index_t take = std::min<index_t>(quota, static_cast<index_t>(pool.size() - at));
        for (index_t s = 0; s < take; ++s) shard.push_back(pool[at++]);
        quota -= take;
        if (quota > 0) cls = (cls + 1) % c;
      }
    }
    std::sort(shard.begin(), shard.end());
  }
  return part;
}

Partition partition_degree(const Dataset& ds, index_t n, scalar_t degree, std::uint64_t seed) {
  if (!(degree >= 0 && degree <= 1))
    throw std::invalid_argument("partition_degree: degree must lie in [0,1]");
  if (ds.class_count < 1)
    throw std::invalid_argument("partition_degree: dataset has no class labels");
  if (degree == 0) return partition_iid(ds, n, seed);
  if (n < 1 || ds.samples() < n)
    throw std::invalid_argument("partition_degree: need 1 <= n <= sample count");

  const index_t c = ds.class_count;
  Rng rng(seed, kDegreeStream);
  auto pools = class_pools(ds);
  for (auto& pool : pools) shuffle_in_place(pool, rng);
  auto sizes = shard_sizes(ds.samples(), n);

  Partition part(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) {
    const index_t want = static_cast<index_t>(std::llround(degree * static_cast<scalar_t>(sizes[static_cast<std::size_t>(k)])));
    auto& pool = pools[static_cast<std::size_t>(k % c)];
    if (static_cast<index_t>(pool.size()) < want)
      throw std::invalid_argument("partition_degree: label " + std::to_string(k % c) +
                                  " exhausted for client " + std::to_string(k));
    auto& shard = part[static_cast<std::size_t>(k)];
    shard.assign(pool.end() - want, pool.end());
    pool.resize(pool.size() - static_cast<std::size_t>(want));
  }
  std::vector<index_t> leftover;
  for (auto& pool : pools) leftover.insert(leftover.end(), pool.begin(), pool.end());
  shuffle_in_place(leftover, rng);
  std::size_t at = 0;
  for (index_t k = 0; k < n; ++k) {
    auto& shard = part[static_cast<std::size_t>(k)];
    while (static_cast<index_t>(shard.size()) < sizes[static_cast<std::size_t>(k)]) shard.push_back(leftover[at++]);
    std::sort(shard.begin(), shard.end());
  }
  return part;
}

GradientOracle::GradientOracle(ObjectiveKind kind, const Dataset* data, std::vector<index_t> shard,
                               index_t batch_size, Rng rng, index_t hidden_units)
    : kind_(kind), data_(data), shard_(std::move(shard)), batch_size_(batch_size), rng_(rng),
      hidden_(hidden_units) {
  if (data_ == nullptr) throw std::invalid_argument("oracle: dataset is required");
  if (shard_.empty()) throw std::invalid_argument("oracle: shard must be non-empty");
  if (batch_size_ < 1) throw std::invalid_argument("oracle: batch size must be >= 1");
  const index_t f = data_->feature_dim();
  switch (kind_) {
    case ObjectiveKind::least_squares:
      dim_ = f;
      break;
    case ObjectiveKind::logistic:
      if (data_->class_count != 2)
        throw std::invalid_argument("oracle: logistic objective needs exactly 2 classes");
      dim_ = f;
      break;
    case ObjectiveKind::mlp:
      if (data_->class_count < 2)
        throw std::invalid_argument("oracle: mlp objective needs class labels");
      if (hidden_ < 0 || hidden_ > 64)
        throw std::invalid_argument("oracle: hidden units must lie in [0,64]");
      dim_ = hidden_ > 0 ? hidden_ * (f + 1) + data_->class_count * (hidden_ + 1)
                         : data_->class_count * (f + 1);
      break;
  }
}

std::vector<index_t> GradientOracle::sample_batch() {
  std::vector<index_t> batch(static_cast<std::size_t>(batch_size_));
  for (auto& b : batch) b = shard_[rng_.below(shard_.size())];
  return batch;
}

void GradientOracle::accumulate(const vector_t& x, const std::vector<index_t>& rows,
                                vector_t* grad, scalar_t* loss) const {
  if (rows.empty()) throw std::invalid_argument("oracle: empty batch");
  if (x.size() != dim_) throw std::invalid_argument("oracle: parameter dimension mismatch");
  if (grad) grad->setZero(dim_);
  if (loss) *loss = 0;
  const index_t f = data_->feature_dim();
  const index_t c = data_->class_count;

  if (kind_ == ObjectiveKind::least_squares) {
    for (index_t row : rows) {
      auto a = data_->features.row(row);
      scalar_t r = a.dot(x.transpose()) - data_->labels(row);
      if (loss) *loss += scalar_t(0.5) * r * r;
      if (grad) *grad += r * a.transpose();
    }
  } else if (kind_ == ObjectiveKind::logistic) {
    for (index_t row : rows) {
      auto a = data_->features.row(row);
      scalar_t y = data_->labels(row) > 0.5 ? 1 : -1;
      scalar_t z = a.dot(x.transpose());
      scalar_t m = -y * z;
      if (loss) *loss += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      if (grad) *grad += (-y / (1 + std::exp(y * z))) * a.transpose();
    }
  } else {
    const index_t h = hidden_;
    // Parameter layout: [W1 (h x f), b1, W2 (c x h), b2]; with h == 0 just [W, b].
    Eigen::Map<const matrix_t> w1(x.data(), h > 0 ? h : c, f);
    Eigen::Map<const vector_t> b1(x.data() + (h > 0 ? h : c) * f, h > 0 ? h : c);
    const scalar_t* tail = x.data() + (h > 0 ? h * (f + 1) : 0);
    Eigen::Map<const matrix_t> w2(h > 0 ? tail : x.data(), c, h > 0 ? h : 1);
    Eigen::Map<const vector_t> b2(h > 0 ? tail + c * h : x.data(), h > 0 ? c : 1);

    vector_t g1, gb1, gb2;
    matrix_t gw1, gw2;
    if (grad) {
      gw1.setZero(h > 0 ? h : c, f);
      gb1.setZero(h > 0 ? h : c);
      if (h > 0) {
        gw2.setZero(c, h);
        gb2.setZero(c);
      }
    }
    for (index_t row : rows) {
      vector_t a = data_->features.row(row).transpose();
      index_t y = static_cast<index_t>(std::llround(data_->labels(row)));
      vector_t hid, logits;
      if (h > 0) {
        hid = (w1 * a + b1).array().tanh().matrix();
        logits = w2 * hid + b2;
      } else {
        logits = w1 * a + b1;
      }
      scalar_t mx = logits.maxCoeff();
      scalar_t lse = mx + std::log((logits.array() - mx).exp().sum());
      if (loss) *loss += lse - logits(y);
      if (grad) {
        vector_t dlogits = (logits.array() - lse).exp().matrix();
        dlogits(y) -= 1;
        if (h > 0) {
          gw2 += dlogits * hid.transpose();
          gb2 += dlogits;
          vector_t dpre = (w2.transpose() * dlogits).array() * (1 - hid.array().square());
          gw1 += dpre * a.transpose();
          gb1 += dpre;
        } else {
          gw1 += dlogits * a.transpose();
          gb1 += dlogits;
        }
      }
    }
    if (grad) {
      index_t at = 0;
      const index_t r1 = gw1.rows();
      Eigen::Map<matrix_t>(grad->data(), r1, f) = gw1;
      at = r1 * f;
      Eigen::Map<vector_t>(grad->data() + at, r1) = gb1;
      at += r1;
      if (h > 0) {
        Eigen::Map<matrix_t>(grad->data() + at, c, h) = gw2;
        at += c * h;
        Eigen::Map<vector_t>(grad->data() + at, c) = gb2;
      }
    }
  }
  const scalar_t inv = scalar_t(1) / static_cast<scalar_t>(rows.size());
  if (grad) *grad *= inv;
  if (loss) *loss *= inv;
}

vector_t GradientOracle::gradient(const vector_t& x, const std::vector<index_t>& batch) const {
  vector_t g;
  accumulate(x, batch, &g, nullptr);
  return g;
}

scalar_t GradientOracle::loss(const vector_t& x, const std::vector<index_t>& batch) const {
  scalar_t l = 0;
  accumulate(x, batch, nullptr, &l);
  return l;
}

vector_t GradientOracle::shard_gradient(const vector_t& x) const { return gradient(x, shard_); }

scalar_t GradientOracle::shard_loss(const vector_t& x) const { return loss(x, shard_); }

scalar_t global_loss(const std::vector<GradientOracle>& oracles, const vector_t& p,
                     const vector_t& x) {
  if (static_cast<index_t>(oracles.size()) != p.size())
    throw std::invalid_argument("global_loss: oracle count and influence length differ");
  scalar_t total = 0;
  for (std::size_t i = 0; i < oracles.size(); ++i)
    total += p(static_cast<index_t>(i)) * oracles[i].shard_loss(x);
  return total;
}

vector_t global_gradient(const std::vector<GradientOracle>& oracles, const vector_t& p,
                         const vector_t& x) {
  if (static_cast<index_t>(oracles.size()) != p.size())
    throw std::invalid_argument("global_gradient: oracle count and influence length differ");
  vector_t total = vector_t::Zero(x.size());
  for (std::size_t i = 0; i < oracles.size(); ++i)
    total += p(static_cast<index_t>(i)) * oracles[i].shard_gradient(x);
  return total;
}

scalar_t lipschitz_estimate(const GradientOracle& oracle) {
  if (oracle.kind() == ObjectiveKind::mlp)
    throw std::invalid_argument("lipschitz_estimate: no closed form for the mlp objective");
  const auto& shard = oracle.shard();
  const index_t f = oracle.data().feature_dim();
  matrix_t gram = matrix_t::Zero(f, f);
  for (index_t row : shard) {
    auto a = oracle.data().features.row(row);
    gram += a.transpose() * a;
  }
  Eigen::SelfAdjointEigenSolver<matrix_t> es(gram, Eigen::EigenvaluesOnly);
  scalar_t lmax = es.eigenvalues().maxCoeff() / static_cast<scalar_t>(shard.size());
  return oracle.kind() == ObjectiveKind::logistic ? lmax / 4 : lmax;
}

scalar_t lipschitz_estimate(const std::vector<GradientOracle>& oracles) {
  if (oracles.empty()) throw std::invalid_argument("lipschitz_estimate: no oracles");
  scalar_t l = 0;
  for (const auto& o : oracles) l = std::max(l, lipschitz_estimate(o));
  return l;
}

ConvexSolution least_squares_optimum(const std::vector<GradientOracle>& oracles,
                                     const vector_t& p) {
  if (oracles.empty()) throw std::invalid_argument("least_squares_optimum: no oracles");
  if (static_cast<index_t>(oracles.size()) != p.size())
    throw std::invalid_argument("least_squares_optimum: oracle count and influence length differ");
  const index_t f = oracles.front().data().feature_dim();
  matrix_t q = matrix_t::Zero(f, f);
  vector_t r = vector_t::Zero(f);
  scalar_t constant = 0;
  for (std::size_t i = 0; i < oracles.size(); ++i) {
    const auto& o = oracles[i];
    if (o.kind() != ObjectiveKind::least_squares)
      throw std::invalid_argument("least_squares_optimum: all oracles must be least_squares");
    const scalar_t scale = p(static_cast<index_t>(i)) / static_cast<scalar_t>(o.shard_size());
    for (index_t row : o.shard()) {
      auto a = o.data().features.row(row);
      scalar_t b = o.data().labels(row);
      q += scale * (a.transpose() * a);
      r += scale * b * a.transpose();
      constant += scale * scalar_t(0.5) * b * b;
    }
  }
  ConvexSolution s;
  s.x_star = q.ldlt().solve(r);
  s.f_star = scalar_t(0.5) * s.x_star.dot(q * s.x_star) - r.dot(s.x_star) + constant;
  return s;
}

}  // namespace swift
