// Acceptance runner: `l2g_acceptance [criterion...] [--workdir DIR]`.
// Prints one PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "l2g/checkpoint.hpp"
#include "l2g/config.hpp"
#include "l2g/dataset.hpp"
#include "l2g/errors.hpp"
#include "l2g/evaluation.hpp"
#include "l2g/synthetic.hpp"
#include "l2g/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
namespace ad = l2g::ad;
using l2g::Matrix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

fs::path g_workdir = "acceptance_work";

// ---------------------------------------------------------------------------
// 1. Reference oracles

struct OracleTally {
  std::size_t instances = 0;
  double worst = 0.0;
  void add(double e) {
    ++instances;
    worst = std::max(worst, e);
  }
};

Outcome reference_oracles() {
  const auto start = Clock::now();
  constexpr int kInstances = 100;
  std::map<std::string, OracleTally> tally;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> small(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < kInstances; ++k) {
    // Self-attention block.
    {
      const std::size_t rows = 1 + small(rng), width = small(rng), c = 1 + k % 4;
      l2g::ParamStore store;
      l2g::AttentionParams p;
      p.w_f = store.add_value("f", oracle::random_matrix(width, c, rng), {});
      p.w_g = store.add_value("g", oracle::random_matrix(width, c, rng), {});
      p.w_h = store.add_value("h", oracle::random_matrix(width, c, rng), {});
      const auto x = oracle::random_matrix(rows, width, rng, -2.0, 2.0);
      ad::Tape t(store);
      Matrix map;
      const auto y = t.value(l2g::self_attention_block(t, t.constant(x), &p, {c, true}, &map));
      const auto expect = oracle::attention(oracle::rows_of(x), oracle::rows_of(store[p.w_f].value),
                                            oracle::rows_of(store[p.w_g].value),
                                            oracle::rows_of(store[p.w_h].value));
      tally["self_attention_block"].add(std::max(oracle::max_relative_error(oracle::rows_of(y), expect.output),
                                                 oracle::max_relative_error(oracle::rows_of(map.transposed()), expect.beta)));
    }
    // Interpolation, including centroids inside the epsilon clamp.
    {
      const auto g = oracle::random_matrix(1, 1 + small(rng), rng);
      auto cloud = oracle::random_cloud(1 + small(rng), rng);
      if (k % 5 == 0) cloud.points[0] = {1e-8, 0.0, 0.0};
      const l2g::InterpolationConfig cfg{k % 2 ? 1e-10 : unit(rng), k % 3 ? 1e-12 : 1e-4};
      l2g::ParamStore store;
      ad::Tape t(store);
      const auto out = t.value(l2g::interpolate_regions(t, t.constant(g), cloud.points, cfg));
      const auto expect = oracle::interpolate(oracle::rows_of(g)[0], cloud.points, cfg.c, cfg.epsilon);
      tally["interpolate_regions"].add(oracle::max_relative_error(oracle::rows_of(out), expect, 1e-300));
    }
    // Recurrent decoder.
    {
      const std::size_t d = 1 + small(rng), steps = 1 + k % 4;
      l2g::ParamStore store;
      std::uint64_t ordinal = 0;
      const auto lstm = l2g::make_lstm(store, "lstm", d, d, ordinal, k);
      const auto theta = store.add("theta", d, d, {});
      for (auto& prm : store) prm.value = oracle::random_matrix(prm.value.rows(), prm.value.cols(), rng);
      const auto region = oracle::random_matrix(1, d, rng);
      ad::Tape t(store);
      const auto out = t.value(l2g::rnn_decode_region(t, t.constant(region), lstm, theta, steps));
      const auto expect = oracle::lstm_decode(
          oracle::rows_of(region)[0], oracle::rows_of(store[lstm.w_input].value),
          oracle::rows_of(store[lstm.w_hidden].value), oracle::rows_of(store[lstm.bias].value)[0],
          oracle::rows_of(store[theta].value), steps);
      tally["rnn_decode_region"].add(oracle::max_relative_error(oracle::rows_of(out), expect));
    }
    // Per-scale area reconstruction.
    {
      const auto cfg = fixture::micro();
      l2g::Model model(cfg, k);
      fixture::randomize(model, k + 1000);
      const std::size_t s = k % cfg.num_scales();
      const auto feats = oracle::random_matrix(cfg.num_regions, cfg.feature_dim, rng);
      ad::Tape t(model.params());
      const auto out = t.value(l2g::reconstruct_area(t, t.constant(feats), s, model));
      const auto& fc = model.layout().area_fc[s];
      const auto expect = oracle::affine(oracle::rows_of(feats), oracle::rows_of(model.params()[fc.weight].value),
                                         oracle::rows_of(model.params()[fc.bias].value)[0]);
      tally["reconstruct_area"].add(oracle::max_relative_error(oracle::rows_of(out), expect));
    }
    // Chamfer distance.
    {
      const auto a = oracle::random_cloud(1 + small(rng) * 3, rng);
      const auto b = oracle::random_cloud(1 + small(rng) * 3, rng);
      tally["chamfer_distance"].add(
          oracle::relative_error(l2g::chamfer_distance(a, b), oracle::chamfer(a.points, b.points)));
    }
    // Local and total loss on random area sets.
    {
      const std::size_t scales = 1 + k % 3, regions = small(rng);
      l2g::AreaSet target(scales), recon(scales);
      std::vector<std::vector<std::vector<l2g::Vec3>>> target_pts(scales), recon_pts(scales);
      for (std::size_t s = 0; s < scales; ++s) {
        for (std::size_t m = 0; m < regions; ++m) {
          target[s].push_back(oracle::random_matrix(2 + s, 3, rng));
          recon[s].push_back(oracle::random_matrix(2 + s, 3, rng));
          target_pts[s].push_back(oracle::points_of(target[s].back()));
          recon_pts[s].push_back(oracle::points_of(recon[s].back()));
        }
      }
      const double local = oracle::local_loss(target_pts, recon_pts);
      tally["local_loss"].add(oracle::relative_error(l2g::local_loss(target, recon), local));

      const auto p = oracle::random_cloud(8, rng), q = oracle::random_cloud(8, rng);
      const l2g::LossWeights w{unit(rng) * 2.0, k % 7 == 0 ? 0.0 : 1.0};
      const auto total = l2g::total_loss(p, q, target, recon, w);
      tally["total_loss"].add(oracle::relative_error(
          total.total, w.local_weight * local + w.gamma * oracle::chamfer(p.points, q.points)));
    }
    // Recorded (differentiable) total loss of a full forward pass.
    {
      const auto cfg = fixture::micro();
      l2g::Model model(cfg, k);
      fixture::randomize(model, k + 2000, 0.3);
      const auto sample = fixture::prepared(cfg, k + 3000);
      const l2g::LossWeights w{unit(rng), 1.0};
      ad::Tape t(model.params());
      const auto pass = l2g::forward(t, model, sample, w);
      std::vector<std::vector<std::vector<l2g::Vec3>>> target_pts(cfg.num_scales()), recon_pts(cfg.num_scales());
      const auto areas = l2g::unpack_areas(t, pass.decoded);
      for (std::size_t s = 0; s < cfg.num_scales(); ++s)
        for (std::size_t m = 0; m < cfg.num_regions; ++m) {
          target_pts[s].push_back(oracle::points_of(sample.targets[s][m]));
          recon_pts[s].push_back(oracle::points_of(areas[s][m]));
        }
      const double expect = oracle::local_loss(target_pts, recon_pts) +
                            w.gamma * oracle::chamfer(sample.cloud.points,
                                                      oracle::points_of(t.value(pass.decoded.cloud)));
      tally["total_loss"].add(oracle::relative_error(t.value(pass.loss.total)(0, 0), expect));
    }
  }

  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (const auto& [name, t] : tally) {
    const bool ok = t.instances >= 100 && t.worst < 1e-10;
    o.pass = o.pass && ok;
    worst = std::max(worst, t.worst);
    o.details.push_back(name + ": " + std::to_string(t.instances) + " instances, max rel err " + fmt(t.worst, 3) +
                        (ok ? "" : "  <-- exceeds 1e-10"));
  }
  const double secs = seconds_since(start);
  o.pass = o.pass && secs < 60.0;
  o.summary = std::to_string(tally.size()) + " oracles, max rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Gradient check

Outcome gradient_check() {
  const auto start = Clock::now();
  const auto cfg = l2g::ModelConfig::toy();
  Outcome o;
  o.pass = true;
  std::size_t checked = 0, kinks = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    l2g::Model model(cfg, seed);
    const auto sample = l2g::prepare(l2g::make_shape(l2g::ShapeKind(seed % 3), cfg.num_points, seed), cfg);
    gradcheck::Options opt;
    opt.h = 1e-5;
    // Central differences of a loss near 5 carry about 1e-10 of roundoff at this h, so
    // gradients below the floor are compared in absolute terms (1e-4 * floor).
    opt.floor = 1e-5;
    const auto r = gradcheck::check_model(model, sample, {1.0, 1.0}, opt);
    checked += r.checked;
    kinks += r.kinks;
    worst = std::max(worst, r.worst);
    o.details.push_back("seed " + std::to_string(seed) + ": " + std::to_string(r.checked) + " entries checked, " +
                        std::to_string(r.kinks) + " skipped at kinks, worst " + fmt(r.worst, 3) + " at " +
                        r.worst_name + "[" + std::to_string(r.worst_index) + "] (analytic " +
                        fmt(r.worst_analytic, 6) + ", numeric " + fmt(r.worst_numeric, 6) + ")");
  }
  const double secs = seconds_since(start);
  o.pass = worst < 1e-4 && checked > 0 && secs < 300.0;
  o.summary = std::to_string(checked) + " entries, " + std::to_string(kinks) + " kink-excluded, worst rel err " +
              fmt(worst, 3) + " (h 1e-5, floor 1e-5), " + fmt(secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Invariants

Outcome invariants() {
  Outcome o;
  o.pass = true;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    o.pass = o.pass && ok;
    o.details.push_back(std::string(ok ? "ok   " : "FAIL ") + name + ": " + detail);
  };

  const auto cfg = l2g::ModelConfig::toy();

  // Softmax normalization of every attention map.
  {
    double worst = 0.0;
    std::size_t maps = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      l2g::Model model(cfg, seed);
      fixture::randomize(model, seed + 50, 1.0);
      const auto rec = l2g::reconstruct(model, fixture::cloud(cfg.num_points, seed));
      std::vector<Matrix> all = rec.attention.point;
      all.insert(all.end(), rec.attention.scale.begin(), rec.attention.scale.end());
      all.push_back(rec.attention.region);
      for (const auto& m : all) {
        ++maps;
        for (std::size_t j = 0; j < m.cols(); ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j);
          worst = std::max(worst, std::abs(s - 1.0));
        }
      }
    }
    check("softmax normalization", worst <= 1e-12, std::to_string(maps) + " maps, max |sum-1| " + fmt(worst, 3));
  }

  // Scale features are invariant to point order within a group.
  {
    double worst = 0.0;
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      l2g::Model model(cfg, seed);
      fixture::randomize(model, seed + 70);
      const auto sample = fixture::prepared(cfg, seed + 80);
      ad::Tape base(model.params());
      const auto ref = base.value(l2g::encode(base, sample.cloud, sample.pyramid, model).scale_features);
      auto pyramid = sample.pyramid;
      for (auto& region : pyramid.groups)
        for (auto& group : region) std::shuffle(group.begin(), group.end(), rng);
      ad::Tape t(model.params());
      const auto got = t.value(l2g::encode(t, sample.cloud, pyramid, model).scale_features);
      for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::abs(got.values()[i] - ref.values()[i]) /
                                    std::max(1.0, std::abs(ref.values()[i])));
    }
    check("within-group permutation invariance", worst <= 1e-12, "max deviation " + fmt(worst, 3));
  }

  // Chamfer identity, symmetry, translation invariance.
  {
    std::mt19937_64 rng(4);
    bool ok = true;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto a = oracle::random_cloud(5 + k % 7, rng), b = oracle::random_cloud(3 + k % 11, rng);
      ok = ok && l2g::chamfer_distance(a, a) == 0.0;
      worst = std::max(worst, std::abs(l2g::chamfer_distance(a, b) - l2g::chamfer_distance(b, a)));
      auto a2 = a, b2 = b;
      const l2g::Vec3 shift{0.3 * k, -1.7, 4.2};
      for (auto& p : a2.points) for (int d = 0; d < 3; ++d) p[d] += shift[d];
      for (auto& p : b2.points) for (int d = 0; d < 3; ++d) p[d] += shift[d];
      worst = std::max(worst, std::abs(l2g::chamfer_distance(a2, b2) - l2g::chamfer_distance(a, b)));
    }
    check("chamfer identity/symmetry/translation", ok && worst < 1e-12, "max deviation " + fmt(worst, 3));
  }

  // FPS with m = N is a permutation.
  {
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto c = fixture::cloud(40, seed);
      auto idx = l2g::farthest_point_sample(c, c.size(), seed);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i = 0; i < idx.size(); ++i) ok = ok && idx[i] == i;
    }
    check("FPS m=N permutation", ok, "20 clouds");
  }

  // kNN groups are nested prefixes.
  {
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto c = fixture::cloud(64, seed);
      const auto cents = l2g::farthest_point_sample(c, 8, seed);
      const std::vector<std::size_t> scales{2, 5, 9, 30};
      for (auto method : {l2g::KnnMethod::BruteForce, l2g::KnnMethod::Grid}) {
        const auto pyr = l2g::knn_group(c, cents, scales, method);
        for (const auto& region : pyr.groups)
          for (std::size_t t = 1; t < region.size(); ++t)
            ok = ok && std::equal(region[t - 1].begin(), region[t - 1].end(), region[t].begin());
      }
    }
    check("kNN nesting", ok, "20 clouds, brute and grid");
  }

  // Two same-seed training runs are bitwise identical.
  {
    std::vector<l2g::PreparedCloud> data;
    for (std::uint64_t i = 0; i < 4; ++i) data.push_back(fixture::prepared(cfg, i));
    l2g::TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;
    tc.learning_rate = 1e-3;
    const auto a = l2g::train(data, cfg, tc);
    const auto b = l2g::train(data, cfg, tc);
    bool ok = true;
    for (std::size_t p = 0; p < a.model.params().size(); ++p)
      ok = ok && a.model.params()[l2g::ParamId(p)].value == b.model.params()[l2g::ParamId(p)].value;
    for (std::size_t e = 0; e < a.history.size(); ++e) ok = ok && a.history[e].total == b.history[e].total;
    check("bitwise reproducible training", ok, "2 runs x 3 epochs");
  }

  std::size_t passed = 0;
  for (const auto& d : o.details) passed += d.rfind("ok", 0) == 0;
  o.summary = std::to_string(passed) + "/" + std::to_string(o.details.size()) + " invariants hold";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Overfit

std::pair<double, double> overfit_run(const l2g::TrainConfig& tc) {
  const auto cfg = l2g::ModelConfig::toy();
  const std::vector<l2g::PreparedCloud> data{
      l2g::prepare(l2g::make_shape(l2g::ShapeKind::Box, cfg.num_points, 11), cfg, "box")};
  const auto r = l2g::train(data, cfg, tc);
  return {r.history.front().total, r.history.back().total};
}

Outcome overfit() {
  const auto start = Clock::now();
  l2g::TrainConfig tc;
  tc.epochs = 200;
  const auto [first, last] = overfit_run(tc);
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = last < 0.1 * first && secs < 300.0;
  o.summary = "epoch 1 loss " + fmt(first) + ", epoch 200 loss " + fmt(last) + " (ratio " + fmt(last / first, 3) +
              ", need < 0.1), " + fmt(secs, 3) + " s";
  o.details.push_back("defaults: learning_rate " + fmt(tc.learning_rate) + ", batch " + std::to_string(tc.batch_size) +
                      ", decay x" + fmt(tc.lr_decay_factor) + " every " + std::to_string(tc.lr_decay_every_epochs) +
                      " epochs");
  // Informational: the same run without decay at a larger step size.
  l2g::TrainConfig tuned = tc;
  tuned.learning_rate = 3e-3;
  tuned.lr_decay_factor = 1.0;
  const auto [f2, l2] = overfit_run(tuned);
  o.details.push_back("info: learning_rate 3e-3 without decay reaches ratio " + fmt(l2 / f2, 3));
  return o;
}

// ---------------------------------------------------------------------------
// 5/6. Desk-scale end to end

struct DeskData {
  l2g::ModelConfig model = l2g::ModelConfig::desk();
  std::vector<l2g::PreparedCloud> train;
  std::vector<l2g::PreparedCloud> test;
};

DeskData desk_data() {
  DeskData d;
  const auto corpus = l2g::make_corpus(50, 20, d.model.num_points, 2024);
  for (const auto& c : corpus) {
    auto p = l2g::prepare(c.cloud, d.model, c.label);
    (c.split == "train" ? d.train : d.test).push_back(std::move(p));
  }
  return d;
}

fs::path desk_checkpoint() { return g_workdir / "end_to_end.ckpt"; }

l2g::Model desk_model(const DeskData& d, bool* reused, double* train_seconds) {
  if (fs::exists(desk_checkpoint())) {
    try {
      auto m = l2g::load_checkpoint(desk_checkpoint());
      if (m.config() == d.model) {
        if (reused) *reused = true;
        return m;
      }
    } catch (const l2g::Error&) {
    }
  }
  if (reused) *reused = false;
  const auto start = Clock::now();
  l2g::TrainConfig tc;
  tc.epochs = 100;
  auto r = l2g::train(d.train, d.model, tc, [](const l2g::EpochRecord& rec) {
    if (rec.epoch % 10 == 0)
      std::cerr << "  epoch " << rec.epoch << " total " << rec.total << " (local " << rec.local << ", global "
                << rec.global_ << ")\n";
  });
  if (train_seconds) *train_seconds = seconds_since(start);
  fs::create_directories(g_workdir);
  l2g::save_checkpoint(desk_checkpoint(), r.model);
  l2g::write_loss_csv(g_workdir / "end_to_end_loss.csv", r.history);
  return std::move(r.model);
}

l2g::FeatureTable table_for(const l2g::Model& model, const std::vector<l2g::PreparedCloud>& items) {
  std::vector<l2g::PointCloud> clouds;
  std::vector<std::string> labels;
  for (const auto& p : items) {
    clouds.push_back(p.cloud);
    labels.push_back(p.label);
  }
  return l2g::extract_features(model, clouds, labels);
}

Outcome end_to_end() {
  const auto start = Clock::now();
  const auto data = desk_data();
  fs::remove(desk_checkpoint());
  double train_secs = 0.0;
  const auto model = desk_model(data, nullptr, &train_secs);
  const auto train_table = table_for(model, data.train);
  const auto test_table = table_for(model, data.test);
  const auto svm = l2g::train_linear_svm(train_table);
  const auto report = l2g::evaluate_classifier(svm, test_table);
  const auto retrieval = l2g::retrieval_map(test_table);
  const double secs = seconds_since(start);

  Outcome o;
  o.pass = report.accuracy >= 0.90 && retrieval.mean_average_precision >= 0.80 && secs < 1800.0;
  o.summary = "test accuracy " + fmt(report.accuracy) + " (>= 0.90), test mAP " +
              fmt(retrieval.mean_average_precision) + " (>= 0.80), " + fmt(secs, 4) + " s";
  o.details.push_back(l2g::describe_dimensions(data.model) + ", " + std::to_string(data.train.size()) + " train / " +
                      std::to_string(data.test.size()) + " test clouds, training " + fmt(train_secs, 4) + " s");
  for (const auto& c : report.classes)
    o.details.push_back(c.label + ": " + std::to_string(c.correct) + "/" + std::to_string(c.support));
  return o;
}

Outcome upsampling() {
  const auto data = desk_data();
  bool reused = false;
  const auto model = desk_model(data, &reused, nullptr);
  const auto& cfg = model.config();
  const std::size_t target = 4 * cfg.num_points;
  const std::size_t expected_pool = cfg.num_regions * std::accumulate(cfg.scales.begin(), cfg.scales.end(), std::size_t{0});

  Outcome o;
  std::size_t wins = 0;
  bool counts_ok = true, pool_ok = true;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto& input = data.test[trial * data.test.size() / 10].cloud;
    pool_ok = pool_ok && l2g::dense_reconstruction(model, input).size() == expected_pool;
    const auto up = l2g::upsample(model, input, target, trial);
    counts_ok = counts_ok && up.size() == target;
    const auto ball = l2g::random_ball_cloud(target, trial);
    const double cd_up = l2g::chamfer_distance(up, input);
    const double cd_ball = l2g::chamfer_distance(ball, input);
    wins += cd_up < cd_ball;
    o.details.push_back("trial " + std::to_string(trial) + " (" + input.id + "): upsampled " + fmt(cd_up) +
                        " vs random ball " + fmt(cd_ball));
  }
  o.pass = counts_ok && pool_ok && wins >= 9;
  o.summary = std::string("count ") + (counts_ok ? "exact" : "WRONG") + " (" + std::to_string(target) + "), pool " +
              (pool_ok ? "= " : "!= ") + std::to_string(expected_pool) + ", beats random ball in " +
              std::to_string(wins) + "/10" + (reused ? " (model from criterion 5)" : " (model retrained)");
  return o;
}

// ---------------------------------------------------------------------------
// 7. Ablations

constexpr std::size_t kAblationEpochs = 40;

std::vector<l2g::PreparedCloud> toy_corpus() {
  const auto cfg = l2g::ModelConfig::toy();
  std::vector<l2g::PreparedCloud> out;
  for (const auto& c : l2g::make_corpus(4, 0, cfg.num_points, 77)) out.push_back(l2g::prepare(c.cloud, cfg, c.label));
  return out;
}

Outcome ablations() {
  const auto start = Clock::now();
  const auto data = toy_corpus();
  Outcome o;
  bool all_trained = true;

  auto final_loss = [&](l2g::ModelConfig mc, l2g::TrainConfig tc, std::string* error) -> double {
    tc.epochs = kAblationEpochs;
    try {
      return l2g::train(data, mc, tc).history.back().total;
    } catch (const l2g::NumericalError& e) {
      if (error) *error = e.what();
      return std::nan("");
    }
  };

  using A = l2g::AttentionAblation;
  using L = l2g::LossAblation;
  for (auto a : {A::PL, A::AL, A::RL, A::NSA, A::ASA}) {
    auto mc = l2g::ModelConfig::toy();
    l2g::apply(a, mc);
    std::string err;
    const double loss = final_loss(mc, {}, &err);
    const bool ok = std::isfinite(loss);
    all_trained = all_trained && ok;
    o.details.push_back(l2g::to_string(a) + ": " + (ok ? "final loss " + fmt(loss) : "ABORT " + err));
  }
  for (auto l : {L::Local, L::Global, L::LocalGlobal}) {
    l2g::TrainConfig tc;
    l2g::apply(l, tc);
    std::string err;
    const double loss = final_loss(l2g::ModelConfig::toy(), tc, &err);
    const bool ok = std::isfinite(loss);
    all_trained = all_trained && ok;
    o.details.push_back(l2g::to_string(l) + ": " + (ok ? "final loss " + fmt(loss) : "ABORT " + err));
  }

  std::size_t asa_wins = 0;
  std::ostringstream pairs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    l2g::TrainConfig tc;
    tc.seed = seed;
    auto asa = l2g::ModelConfig::toy(), nsa = l2g::ModelConfig::toy();
    l2g::apply(A::ASA, asa);
    l2g::apply(A::NSA, nsa);
    const double la = final_loss(asa, tc, nullptr), ln = final_loss(nsa, tc, nullptr);
    asa_wins += la <= ln;
    pairs << (seed ? " " : "") << fmt(la, 3) << "/" << fmt(ln, 3);
  }
  o.details.push_back("ASA/NSA final loss per seed: " + pairs.str());
  o.pass = all_trained && asa_wins >= 7;
  o.summary = std::string(all_trained ? "8/8 configurations trained" : "numerical abort") + ", ASA <= NSA in " +
              std::to_string(asa_wins) + "/10 seeds (" + std::to_string(kAblationEpochs) + " epochs, " +
              std::to_string(data.size()) + " clouds), " + fmt(seconds_since(start), 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 8. Attention summaries

Outcome attention_summaries() {
  const auto data = desk_data();
  bool reused = false;
  l2g::Model model = fs::exists(desk_checkpoint()) ? desk_model(data, &reused, nullptr) : l2g::Model(data.model, 0);
  Outcome o;
  o.pass = true;
  std::size_t summaries = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto rec = l2g::reconstruct(model, data.test[k * 12].cloud);
    std::vector<Matrix> maps = rec.attention.point;
    maps.insert(maps.end(), rec.attention.scale.begin(), rec.attention.scale.end());
    maps.push_back(rec.attention.region);
    for (const auto& stored : maps) {
      // Summaries are taken over the exported layout (row = output location).
      const auto s = l2g::attention_summary(stored.transposed());
      const double d1 = double(stored.rows());
      double total = 0.0;
      bool nonneg = true;
      for (double v : s) {
        nonneg = nonneg && v >= 0.0;
        total += v;
      }
      worst = std::max(worst, std::abs(total - d1));
      o.pass = o.pass && s.size() == stored.rows() && nonneg && std::abs(total - d1) <= 1e-9;
      ++summaries;
    }
  }
  o.summary = std::to_string(summaries) + " summaries, max |sum - D1| " + fmt(worst, 3) +
              (reused ? " (trained model)" : " (fresh model)");
  return o;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "reference_oracles", reference_oracles}, {2, "gradient_check", gradient_check},
      {3, "invariants", invariants},             {4, "overfit", overfit},
      {5, "end_to_end", end_to_end},             {6, "upsampling", upsampling},
      {7, "ablations", ablations},               {8, "attention_summaries", attention_summaries},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      g_workdir = argv[++i];
    } else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: l2g_acceptance [1-8 ...] [--workdir DIR]\n";
      return 0;
    } else {
      try {
        selected.push_back(std::stoi(arg));
      } catch (const std::exception&) {
        std::cerr << "unknown argument '" << arg << "'\n";
        return 2;
      }
    }
  }
  if (selected.empty())
    for (const auto& c : all) selected.push_back(c.number);
  fs::create_directories(g_workdir);

  int failures = 0;
  for (int n : selected) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.number == n; });
    if (it == all.end()) {
      std::cerr << "no criterion " << n << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = it->run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << it->number << " " << it->name << ": " << o.summary << "\n";
    for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
