#include "l2g/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "l2g/checkpoint.hpp"
#include "l2g/decoder.hpp"
#include "l2g/errors.hpp"
#include "l2g/params.hpp"
#include "l2g/training.hpp"

namespace l2g {
namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; results are written by index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void FeatureTable::validate() const {
  if (labels.size() != ids.size() || features.rows() != ids.size())
    throw InvalidInput("feature table: row counts disagree");
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw InvalidInput("feature table: duplicate id '" + id + "'");
}

void check_compatible(const ModelConfig& config, std::size_t points_per_cloud) {
  if (config.num_points != points_per_cloud) {
    throw CheckpointError("checkpoint expects " + describe_dimensions(config) +
                          " but the dataset has N=" + std::to_string(points_per_cloud));
  }
}

Matrix global_feature(const Model& model, const PointCloud& cloud) {
  check_compatible(model.config(), cloud.size());
  const auto sample = prepare(cloud, model.config());
  ad::Tape tape(model.params());
  auto encoded = encode(tape, sample.cloud, sample.pyramid, model);
  return tape.value(encoded.global_feature);
}

FeatureTable extract_features(const Model& model, std::span<const PointCloud> clouds,
                              std::span<const std::string> labels, std::size_t threads) {
  if (clouds.size() != labels.size()) throw InvalidInput("extract_features: labels do not match clouds");
  for (const auto& c : clouds) check_compatible(model.config(), c.size());
  FeatureTable table;
  table.features = Matrix(clouds.size(), model.config().global_dim);
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    table.ids.push_back(clouds[i].id);
    table.labels.push_back(labels[i]);
  }
  parallel_for(clouds.size(), threads, [&](std::size_t i) {
    const Matrix g = global_feature(model, clouds[i]);
    std::copy(g.values().begin(), g.values().end(), table.features.row(i).begin());
  });
  table.validate();
  return table;
}

FeatureTable extract_features(const Model& model, std::span<const DatasetItem* const> items,
                              std::size_t threads) {
  std::vector<PointCloud> clouds;
  std::vector<std::string> labels;
  for (const auto* item : items) {
    clouds.push_back(item->cloud);
    labels.push_back(item->label);
  }
  return extract_features(model, clouds, labels, threads);
}

LinearSvm::LinearSvm(std::vector<std::string> classes, Matrix weights, std::vector<double> mean,
                     std::vector<double> inv_scale)
    : classes_(std::move(classes)),
      weights_(std::move(weights)),
      mean_(std::move(mean)),
      inv_scale_(std::move(inv_scale)) {
  if (weights_.rows() != classes_.size() || weights_.cols() != mean_.size() + 1 ||
      inv_scale_.size() != mean_.size()) {
    throw ShapeError("LinearSvm: inconsistent weight shapes");
  }
}

std::vector<double> LinearSvm::scores(std::span<const double> x) const {
  if (x.size() != mean_.size()) throw ShapeError("LinearSvm: feature width mismatch");
  std::vector<double> out(classes_.size());
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const auto w = weights_.row(c);
    double s = w[mean_.size()];
    for (std::size_t d = 0; d < mean_.size(); ++d) s += w[d] * (x[d] - mean_[d]) * inv_scale_[d];
    out[c] = s;
  }
  return out;
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("argmax of an empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::size_t LinearSvm::predict_index(std::span<const double> x) const {
  return argmax(scores(x));
}

const std::string& LinearSvm::predict(std::span<const double> x) const {
  return classes_[predict_index(x)];
}

LinearSvm train_linear_svm(const FeatureTable& table, const SvmConfig& config) {
  table.validate();
  if (!(config.lambda > 0.0)) throw InvalidInput("svm: lambda must be positive");
  if (config.epochs == 0) throw InvalidInput("svm: epochs must be positive");
  std::vector<std::string> classes(table.labels.begin(), table.labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InvalidInput("svm: need at least two classes");

  const std::size_t n = table.size();
  const std::size_t dim = table.width();
  std::vector<double> mean(dim, 0.0), inv_scale(dim, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += table.features(i, d);
  for (auto& v : mean) v /= double(n);
  for (std::size_t d = 0; d < dim; ++d) {
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = table.features(i, d) - mean[d];
      var += z * z;
    }
    const double sd = std::sqrt(var / double(n));
    inv_scale[d] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  // Standardized rows with a trailing constant 1 for the bias.
  Matrix x(n, dim + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) x(i, d) = (table.features(i, d) - mean[d]) * inv_scale[d];
    x(i, dim) = 1.0;
  }

  Matrix weights(classes.size(), dim + 1);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<double> w(dim + 1, 0.0), avg(dim + 1, 0.0);
    std::vector<std::size_t> order(n);
    std::mt19937_64 rng(derive_seed(config.seed, c));
    std::size_t step = 0, averaged = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        ++step;
        const double eta = 1.0 / (config.lambda * double(step));
        const double y = table.labels[i] == classes[c] ? 1.0 : -1.0;
        const auto row = x.row(i);
        double margin = 0.0;
        for (std::size_t d = 0; d <= dim; ++d) margin += w[d] * row[d];
        margin *= y;
        const double shrink = 1.0 - eta * config.lambda;
        for (auto& v : w) v *= shrink;
        if (margin < 1.0)
          for (std::size_t d = 0; d <= dim; ++d) w[d] += eta * y * row[d];
      }
      // Average the end-of-epoch iterates over the second half of training.
      if (2 * (epoch + 1) > config.epochs) {
        for (std::size_t d = 0; d <= dim; ++d) avg[d] += w[d];
        ++averaged;
      }
    }
    for (std::size_t d = 0; d <= dim; ++d) weights(c, d) = avg[d] / double(averaged);
  }
  return LinearSvm(std::move(classes), std::move(weights), std::move(mean), std::move(inv_scale));
}

ClassificationReport evaluate_classifier(const LinearSvm& svm, const FeatureTable& table) {
  table.validate();
  if (table.size() == 0) throw InvalidInput("evaluate_classifier: empty table");
  ClassificationReport report;
  std::map<std::string, ClassReport> per_class;
  for (const auto& c : svm.classes()) per_class[c].label = c;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& pred = svm.predict(table.features.row(i));
    report.predictions.push_back(pred);
    auto& truth = per_class[table.labels[i]];
    truth.label = table.labels[i];
    ++truth.support;
    ++per_class[pred].predicted;
    if (pred == table.labels[i]) {
      ++truth.correct;
      ++correct;
    }
  }
  report.accuracy = double(correct) / double(table.size());
  for (auto& [_, r] : per_class) report.classes.push_back(r);
  return report;
}

RetrievalResult retrieval_map(const FeatureTable& table) {
  table.validate();
  const std::size_t n = table.size();
  if (n < 2) throw InvalidInput("retrieval_map: need at least two rows");
  RetrievalResult result;
  result.rankings.resize(n);
  result.average_precision.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.pr_curve.assign(n - 1, PrPoint{});

  double ap_sum = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      double d2 = 0.0;
      for (std::size_t d = 0; d < table.width(); ++d) {
        const double z = table.features(q, d) - table.features(j, d);
        d2 += z * z;
      }
      dist.emplace_back(std::sqrt(d2), j);
    }
    std::sort(dist.begin(), dist.end());
    auto& ranking = result.rankings[q];
    for (const auto& [_, j] : dist) ranking.push_back(j);

    const auto relevant = std::size_t(std::count_if(ranking.begin(), ranking.end(), [&](std::size_t j) {
      return table.labels[j] == table.labels[q];
    }));
    if (relevant == 0) continue;
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < ranking.size(); ++k) {
      const bool rel = table.labels[ranking[k]] == table.labels[q];
      if (rel) {
        ++hits;
        ap += double(hits) / double(k + 1);
      }
      result.pr_curve[k].recall += double(hits) / double(relevant);
      result.pr_curve[k].precision += double(hits) / double(k + 1);
    }
    ap /= double(relevant);
    result.average_precision[q] = ap;
    ap_sum += ap;
    ++result.scored_queries;
  }
  if (result.scored_queries > 0) {
    result.mean_average_precision = ap_sum / double(result.scored_queries);
    for (auto& p : result.pr_curve) {
      p.recall /= double(result.scored_queries);
      p.precision /= double(result.scored_queries);
    }
  }
  return result;
}

PointCloud dense_reconstruction(const Model& model, const PointCloud& cloud) {
  const auto rec = reconstruct(model, cloud);
  PointCloud dense;
  dense.id = cloud.id;
  dense.points.reserve(model.config().dense_pool_size());
  const std::size_t regions = model.config().num_regions;
  for (std::size_t m = 0; m < regions; ++m) {
    for (const auto& per_scale : rec.areas) {
      const Matrix& area = per_scale[m];
      for (std::size_t r = 0; r < area.rows(); ++r) dense.points.push_back({area(r, 0), area(r, 1), area(r, 2)});
    }
  }
  return dense;
}

PointCloud upsample(const Model& model, const PointCloud& cloud, std::size_t target_n,
                    std::uint64_t seed) {
  const std::size_t pool = model.config().dense_pool_size();
  if (target_n > pool) {
    throw InvalidInput("upsample: target " + std::to_string(target_n) +
                       " exceeds the dense pool of " + std::to_string(pool) + " points");
  }
  if (target_n == 0) throw InvalidInput("upsample: target must be positive");
  const auto dense = dense_reconstruction(model, cloud);
  const auto keep = farthest_point_sample(dense, target_n, seed);
  PointCloud out;
  out.id = cloud.id;
  out.points.reserve(target_n);
  for (auto idx : keep) out.points.push_back(dense.points[idx]);
  return out;
}

PointCloud random_ball_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto unit = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  PointCloud out;
  out.id = "ball";
  while (out.points.size() < n) {
    const Vec3 p{2 * unit() - 1, 2 * unit() - 1, 2 * unit() - 1};
    if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0) out.points.push_back(p);
  }
  return out;
}

std::vector<double> attention_summary(const Matrix& map) {
  if (map.rows() != map.cols()) {
    throw ShapeError("attention_summary: map is " + std::to_string(map.rows()) + "x" +
                     std::to_string(map.cols()) + ", expected square");
  }
  std::vector<double> out(map.cols(), 0.0);
  for (std::size_t i = 0; i < map.rows(); ++i)
    for (std::size_t j = 0; j < map.cols(); ++j) out[j] += map(i, j);
  return out;
}

Reconstruction reconstruct(const Model& model, const PointCloud& cloud, const LossWeights& weights) {
  check_compatible(model.config(), cloud.size());
  const auto sample = prepare(cloud, model.config());
  ad::Tape tape(model.params());
  auto pass = forward(tape, model, sample, weights, true);
  Reconstruction out;
  out.cloud = PointCloud::from_matrix(tape.value(pass.decoded.cloud), cloud.id);
  out.areas = unpack_areas(tape, pass.decoded);
  out.targets = sample.targets;
  out.loss = breakdown(tape, pass, weights);
  out.attention = std::move(pass.encoded.attention);
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  auto out = open_csv(path);
  out << "id,label";
  for (std::size_t d = 0; d < table.width(); ++d) out << ",f" << d + 1;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids[i] << ',' << table.labels[i];
    for (double v : table.features.row(i)) out << ',' << v;
    out << '\n';
  }
}

void write_pr_csv(const std::filesystem::path& path, std::span<const PrPoint> curve) {
  auto out = open_csv(path);
  out << "recall,precision\n";
  for (const auto& p : curve) out << p.recall << ',' << p.precision << '\n';
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_csv(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

void write_vector_csv(const std::filesystem::path& path, std::span<const double> v) {
  auto out = open_csv(path);
  out << "index,value\n";
  for (std::size_t i = 0; i < v.size(); ++i) out << i << ',' << v[i] << '\n';
}

}  // namespace l2g
