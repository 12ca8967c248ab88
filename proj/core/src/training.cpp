#include "l2g/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "l2g/checkpoint.hpp"
#include "l2g/errors.hpp"

namespace l2g {

PreparedCloud prepare(const PointCloud& cloud, const ModelConfig& config, std::string label) {
  if (cloud.size() != config.num_points) {
    std::ostringstream os;
    os << "cloud '" << cloud.id << "' has " << cloud.size() << " points, model expects "
       << config.num_points;
    throw InvalidInput(os.str());
  }
  PreparedCloud out;
  out.cloud = cloud;
  out.label = std::move(label);
  const auto centroids = farthest_point_sample(cloud, config.num_regions, config.fps_seed);
  out.pyramid = knn_group(cloud, centroids, config.scales);
  for (auto idx : centroids) out.centroids.push_back(cloud.points[idx]);
  out.targets.resize(config.num_scales());
  for (std::size_t t = 0; t < config.num_scales(); ++t) {
    for (std::size_t m = 0; m < config.num_regions; ++m) {
      out.targets[t].push_back(gather_points(cloud, out.pyramid.groups[m][t]));
    }
  }
  out.points = cloud.to_matrix();
  return out;
}

ForwardPass forward(ad::Tape& t, const Model& model, const PreparedCloud& sample,
                    const LossWeights& weights, bool keep_attention) {
  ForwardPass pass;
  pass.encoded = encode(t, sample.cloud, sample.pyramid, model, keep_attention);
  pass.decoded = decode(t, pass.encoded.global_feature, pass.encoded.region_features,
                        sample.centroids, model);
  pass.loss = record_loss(t, pass.decoded, sample.targets, sample.points, weights);
  return pass;
}

LossBreakdown breakdown(const ad::Tape& t, const ForwardPass& pass, const LossWeights& weights) {
  LossBreakdown b;
  b.gamma = weights.gamma;
  b.local_weight = weights.local_weight;
  b.local = t.value(pass.loss.local)(0, 0);
  b.global_ = t.value(pass.loss.global)(0, 0);
  b.total = t.value(pass.loss.total)(0, 0);
  return b;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidInput("train config: " + msg); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be non-negative");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) fail("lr_decay_factor must be in (0, 1]");
  if (batch_size == 0) fail("batch_size must be positive");
  if (lr_decay_every_epochs == 0) fail("lr_decay_every_epochs must be positive");
  if (!(gamma >= 0.0)) fail("gamma must be non-negative");
  if (!use_local_loss && !use_global_loss) fail("at least one loss term must be enabled");
  if (threads == 0) fail("threads must be positive");
}

LossWeights TrainConfig::loss_weights() const {
  return {use_global_loss ? gamma : 0.0, use_local_loss ? 1.0 : 0.0};
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  const auto decays = epoch / lr_decay_every_epochs;
  return learning_rate * std::pow(lr_decay_factor, double(decays));
}

SampleGradient sample_gradient(const Model& model, const PreparedCloud& sample,
                               const LossWeights& weights) {
  ad::Tape tape(model.params());
  auto pass = forward(tape, model, sample, weights);
  SampleGradient out;
  out.loss = breakdown(tape, pass, weights);
  if (!std::isfinite(out.loss.total)) return out;  // caller reports
  tape.backward(pass.loss.total);
  out.grads = tape.take_param_gradients();
  return out;
}

LossBreakdown sample_gradient_into(const Model& model, const PreparedCloud& sample,
                                   const LossWeights& weights, std::span<Matrix> grads) {
  for (auto& g : grads) g.fill(0.0);
  ad::Tape tape(model.params());
  tape.bind_param_gradients(grads);
  auto pass = forward(tape, model, sample, weights);
  const auto loss = breakdown(tape, pass, weights);
  if (std::isfinite(loss.total)) tape.backward(pass.loss.total);
  return loss;
}

namespace {

/// Per-sample gradients of one chunk, each written to its own slot.
std::vector<LossBreakdown> run_chunk(const Model& model, std::span<const PreparedCloud* const> chunk,
                                     const LossWeights& weights, std::vector<std::vector<Matrix>>& slots) {
  std::vector<LossBreakdown> losses(chunk.size());
  auto work = [&](std::size_t i) { losses[i] = sample_gradient_into(model, *chunk[i], weights, slots[i]); };
  if (chunk.size() == 1) {
    work(0);
    return losses;
  }
  std::vector<std::exception_ptr> errors(chunk.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 1; i < chunk.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          work(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    try {
      work(0);
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return losses;
}

}  // namespace

TrainResult train(std::span<const PreparedCloud> data, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  return train(Model(model_config, config.seed), data, config, on_epoch);
}

TrainResult train(Model model, std::span<const PreparedCloud> data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw InvalidInput("train: empty dataset");
  const LossWeights weights = config.loss_weights();
  Adam optimizer(model.params(), config.adam);
  std::mt19937_64 rng(derive_seed(config.seed, 0x5EED));
  std::vector<std::size_t> order(data.size());

  TrainResult result{std::move(model), {}};
  Model& m = result.model;
  // Gradient buffers are allocated once: one per worker slot plus the batch sum.
  std::vector<std::vector<Matrix>> slots(std::min(config.threads, config.batch_size));
  for (auto& s : slots) s = m.params().zeros_like();
  std::vector<Matrix> grads = m.params().zeros_like();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate_at(epoch);

    EpochRecord record;
    record.epoch = epoch + 1;
    record.learning_rate = lr;
    for (std::size_t start = 0, batch_no = 0; start < order.size();
         start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const PreparedCloud*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);

      for (auto& g : grads) g.fill(0.0);
      for (std::size_t c = 0; c < batch.size(); c += slots.size()) {
        const std::size_t c_end = std::min(batch.size(), c + slots.size());
        auto chunk = std::span<const PreparedCloud* const>(batch).subspan(c, c_end - c);
        const auto losses = run_chunk(m, chunk, weights, slots);
        for (std::size_t i = 0; i < losses.size(); ++i) {
          const auto& loss = losses[i];
          if (!std::isfinite(loss.total)) {
            std::ostringstream os;
            os << "non-finite loss at epoch " << epoch + 1 << ", batch " << batch_no
               << " (sample '" << chunk[i]->cloud.id << "')";
            throw NumericalError(os.str());
          }
          record.local += loss.local;
          record.global_ += loss.global_;
          record.total += loss.total;
          for (std::size_t p = 0; p < grads.size(); ++p) add_inplace(grads[p], slots[i][p]);
        }
      }
      const double inv = 1.0 / double(batch.size());
      for (auto& g : grads)
        for (auto& v : g.values()) v *= inv;
      optimizer.step(m.params(), grads, lr);
    }
    const double inv_n = 1.0 / double(data.size());
    record.local *= inv_n;
    record.global_ *= inv_n;
    record.total *= inv_n;
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!config.checkpoint_path.empty() && config.save_every > 0 &&
        (epoch + 1) % config.save_every == 0) {
      save_checkpoint(config.checkpoint_path, m);
    }
  }
  if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path, m);
  return result;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "epoch,local,global,total,lr\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.local << ',' << r.global_ << ',' << r.total << ','
        << r.learning_rate << '\n';
  }
}

}  // namespace l2g
