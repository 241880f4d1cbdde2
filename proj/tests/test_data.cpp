// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "reno/data.hpp"
#include "reno/errors.hpp"
#include "support.hpp"

using namespace reno;
using namespace reno::data;
namespace fs = std::filesystem;

namespace {

std::vector<ManifestRow> manifest_rows(std::size_t n, std::size_t classes) {
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({"utt" + std::to_string(i), "c" + std::to_string(i % classes), "spk" + std::to_string(i % 4), "toy"});
  return rows;
}

EmbeddingMatrix ramp_matrix(std::size_t count, std::size_t dim) {
  EmbeddingMatrix m{dim, count, std::vector<float>(count * dim)};
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = 0.001f * static_cast<float>(i) - 3.0f;
  return m;
}

// Per-class counts of every fold, [fold][class].
std::vector<std::vector<std::size_t>> fold_class_counts(const FoldPlan& plan, std::span<const int> labels,
                                                        std::size_t classes) {
  std::vector<std::vector<std::size_t>> counts(plan.k, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[plan.assignments[i]][labels[i]];
  return counts;
}

// Nearest class mean, with means taken from `fit` rows and accuracy measured on `score` rows.
double nearest_centroid_accuracy(const EmbeddingDataset& ds, const std::vector<std::size_t>& fit,
                                 const std::vector<std::size_t>& score) {
  const std::size_t c = ds.num_classes();
  std::vector<std::vector<double>> means(c, std::vector<double>(ds.dim, 0.0));
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t i : fit) {
    ++counts[ds.labels[i]];
    for (std::size_t d = 0; d < ds.dim; ++d) means[ds.labels[i]][d] += ds.row(i)[d];
  }
  for (std::size_t k = 0; k < c; ++k)
    for (double& v : means[k]) v /= static_cast<double>(counts[k]);
  std::size_t correct = 0;
  for (std::size_t i : score) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      double dist = 0.0;
      for (std::size_t d = 0; d < ds.dim; ++d) dist += std::pow(ds.row(i)[d] - means[k][d], 2);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    correct += static_cast<int>(best) == ds.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(score.size());
}

}  // namespace

TEST_CASE("embedding file round trip") {
  const auto dir = reno::testing::scratch_dir("embeddings");
  auto m = ramp_matrix(420, 768);
  write_embeddings(dir / "wavlm.nveb", m);
  auto back = read_embeddings(dir / "wavlm.nveb");
  CHECK(back.dim == 768);
  CHECK(back.count == 420);
  CHECK(back.values == m.values);
  CHECK(fs::file_size(dir / "wavlm.nveb") == 16 + 420 * 768 * 4);

  write_manifest(dir / "manifest.csv", manifest_rows(420, 10));
  auto ds = load_dataset(dir / "wavlm.nveb", dir / "manifest.csv");
  CHECK(ds.size() == 420);
  CHECK(ds.fm_name == "wavlm");
  CHECK(ds.dim == 768);
  CHECK(ds.num_classes() == 10);
  CHECK(ds.dataset_name == "toy");
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("header bytes are little-endian") {
  const auto dir = reno::testing::scratch_dir("header");
  write_embeddings(dir / "h.nveb", ramp_matrix(3, 2));
  std::ifstream is(dir / "h.nveb", std::ios::binary);
  std::vector<unsigned char> bytes(16);
  is.read(reinterpret_cast<char*>(bytes.data()), 16);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NVEB");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 3);
}

TEST_CASE("malformed inputs") {
  const auto dir = reno::testing::scratch_dir("malformed");
  std::ofstream(dir / "empty.nveb").close();
  CHECK_THROWS_AS(read_embeddings(dir / "empty.nveb"), FormatError);
  std::ofstream(dir / "magic.nveb") << "XXXXsomething longer than a header";
  CHECK_THROWS_AS(read_embeddings(dir / "magic.nveb"), FormatError);
  CHECK_THROWS_AS(read_embeddings(dir / "absent.nveb"), DataError);

  auto m = ramp_matrix(420, 8);
  write_embeddings(dir / "x.nveb", m);
  write_manifest(dir / "short.csv", manifest_rows(419, 3));
  try {
    load_dataset(dir / "x.nveb", dir / "short.csv");
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("419") != std::string::npos);
    CHECK(msg.find("420") != std::string::npos);
  }

  {
    // Truncated payload.
    std::ifstream in(dir / "x.nveb", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "cut.nveb", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    CHECK_THROWS_AS(read_embeddings(dir / "cut.nveb"), FormatError);
  }

  m.values[3 * 8 + 2] = std::numeric_limits<float>::infinity();
  write_embeddings(dir / "inf.nveb", m);
  try {
    read_embeddings(dir / "inf.nveb");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  std::ofstream(dir / "header.csv") << "id,label,speaker,dataset\na,b,c,d\n";
  CHECK_THROWS_AS(read_manifest(dir / "header.csv"), FormatError);
  std::ofstream(dir / "fields.csv") << "sample_id,label,speaker,dataset\na,b,c\n";
  CHECK_THROWS_AS(read_manifest(dir / "fields.csv"), FormatError);

  write_manifest(dir / "ok.csv", manifest_rows(420, 3));
  const std::vector<std::string> vocab{"c0", "c1"};
  CHECK_THROWS_AS(load_dataset(dir / "x.nveb", dir / "ok.csv", vocab), LabelError);
}

TEST_CASE("label vocabulary fixes class ids") {
  const auto dir = reno::testing::scratch_dir("vocab");
  const std::vector<std::string> vocab{"c2", "c0", "c1", "unused"};
  write_label_vocabulary(dir / "labels.txt", vocab);
  CHECK(read_label_vocabulary(dir / "labels.txt") == vocab);
  write_embeddings(dir / "e.nveb", ramp_matrix(6, 4));
  write_manifest(dir / "m.csv", manifest_rows(6, 3));
  auto ds = load_dataset(dir / "e.nveb", dir / "m.csv", vocab);
  CHECK(ds.labels == std::vector<int>{1, 2, 0, 1, 2, 0});
  CHECK(ds.num_classes() == 4);
  // Without a vocabulary the sorted distinct labels are used.
  CHECK(load_dataset(dir / "e.nveb", dir / "m.csv").labels == std::vector<int>{0, 1, 2, 0, 1, 2});
}

TEST_CASE("dataset save and reload is bit-identical") {
  const auto dir = reno::testing::scratch_dir("dataset");
  const std::vector<std::size_t> dims{24};
  auto ds = synth_generate(4, 10, dims, 3.0, 5).at(0);
  save_dataset(ds, dir / "view0.nveb", dir / "manifest.csv");
  write_label_vocabulary(dir / "labels.txt", ds.label_names);
  auto back = load_dataset(dir / "view0.nveb", dir / "manifest.csv", read_label_vocabulary(dir / "labels.txt"));
  CHECK(back.vectors == ds.vectors);
  CHECK(back.sample_ids == ds.sample_ids);
  CHECK(back.labels == ds.labels);
  CHECK(back.label_names == ds.label_names);
  CHECK(back.dim == ds.dim);
}

TEST_CASE("dataset validation") {
  EmbeddingDataset ds;
  ds.dim = 2;
  ds.vectors = {1, 2, 3, 4};
  ds.sample_ids = {"a", "b"};
  ds.labels = {0, 1};
  ds.label_names = {"x", "y"};
  CHECK_NOTHROW(ds.validate());
  ds.labels[1] = 2;
  CHECK_THROWS_AS(ds.validate(), LabelError);
  ds.labels[1] = 1;
  ds.sample_ids.pop_back();
  CHECK_THROWS_AS(ds.validate(), AlignmentError);
}

TEST_CASE("stratified folds on a balanced corpus") {
  std::vector<int> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = static_cast<int>(i % 2);
  auto plan = stratified_kfold(labels, 2, 5, 42);
  for (const auto& fold : fold_class_counts(plan, labels, 2)) CHECK(fold == std::vector<std::size_t>{10, 10});
  CHECK(stratified_kfold(labels, 2, 5, 42).assignments == plan.assignments);
  CHECK_FALSE(stratified_kfold(labels, 2, 5, 43).assignments == plan.assignments);
}

TEST_CASE("stratified folds with an uneven class") {
  std::vector<int> labels(103, 1);
  for (std::size_t i = 0; i < 53; ++i) labels[i * 103 / 53] = 0;
  REQUIRE(std::count(labels.begin(), labels.end(), 0) == 53);
  auto plan = stratified_kfold(labels, 2, 5, 7);
  for (const auto& fold : fold_class_counts(plan, labels, 2)) {
    CHECK((fold[0] == 10 || fold[0] == 11));
    CHECK(fold[1] == 10);
  }
}

TEST_CASE("fold plan partitions the samples") {
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 1, 1};
  auto plan = stratified_kfold(labels, 3, 5, 3);
  std::vector<int> seen(labels.size(), 0);
  for (std::size_t f = 0; f < 5; ++f) {
    auto test = plan.test_indices(f);
    auto train = plan.train_indices(f);
    CHECK_FALSE(test.empty());
    CHECK(test.size() + train.size() == labels.size());
    for (std::size_t i : test) ++seen[i];
    for (std::size_t i : train) CHECK(plan.assignments[i] != f);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));

  nlohmann::json j = plan;
  CHECK(j.at("k") == 5);
  CHECK(j.at("seed") == 3);
  CHECK(j.at("assignments").size() == labels.size());
  CHECK(j.get<FoldPlan>().assignments == plan.assignments);
}

TEST_CASE("classes smaller than k are rejected by name") {
  const std::vector<std::size_t> dims{4};
  auto ds = synth_generate(3, 6, dims, 1.0, 1).at(0);
  ds.labels.back() = 2;
  ds.label_names = {"laugh", "cry", "scream"};
  // Leave "scream" with four members.
  for (std::size_t i = 0, moved = 0; i < ds.size() && moved < 3; ++i) {
    if (ds.labels[i] == 2 && i + 1 < ds.size()) {
      ds.labels[i] = 0;
      ++moved;
    }
  }
  const auto scream = std::count(ds.labels.begin(), ds.labels.end(), 2);
  REQUIRE(scream < 5);
  try {
    stratified_kfold(ds, 5, 1);
    FAIL("expected StratificationError");
  } catch (const StratificationError& e) {
    CHECK(std::string(e.what()).find("scream") != std::string::npos);
  }
}

TEST_CASE("stratified holdout") {
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < 200; ++i) labels[i] = static_cast<int>(i % 4);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < 200; i += 1)
    if (i % 5 != 0) pool.push_back(i);
  auto [train, val] = stratified_holdout(pool, labels, 0.1, 9);
  CHECK(train.size() + val.size() == pool.size());
  std::vector<std::size_t> held(4, 0);
  for (std::size_t i : val) ++held[labels[i]];
  for (std::size_t c = 0; c < 4; ++c) CHECK(held[c] == 4);
  std::vector<std::size_t> all = train;
  all.insert(all.end(), val.begin(), val.end());
  std::sort(all.begin(), all.end());
  CHECK(all == pool);
  CHECK(stratified_holdout(pool, labels, 0.1, 9).second == val);
}

TEST_CASE("synthetic views") {
  const std::vector<std::size_t> dims{64, 96};
  auto views = synth_generate(6, 50, dims, 8.0, 7);
  REQUIRE(views.size() == 2);
  CHECK(views[0].size() == 300);
  CHECK(views[1].dim == 96);
  CHECK(views[0].labels == views[1].labels);
  CHECK(views[0].sample_ids == views[1].sample_ids);
  CHECK_NOTHROW(check_aligned(views));

  auto again = synth_generate(6, 50, dims, 8.0, 7);
  CHECK(again[0].vectors == views[0].vectors);
  CHECK(again[1].vectors == views[1].vectors);

  std::vector<std::size_t> all(300);
  std::iota(all.begin(), all.end(), 0);
  for (const auto& v : views) CHECK(nearest_centroid_accuracy(v, all, all) >= 0.99);

  auto shuffled = views;
  std::swap(shuffled[1].labels[0], shuffled[1].labels[1]);
  CHECK_THROWS_AS(check_aligned(shuffled), AlignmentError);
}

TEST_CASE("zero separation leaves the classes indistinguishable") {
  const std::vector<std::size_t> dims{16};
  auto ds = synth_generate(6, 400, dims, 0.0, 11).at(0);
  std::vector<std::size_t> fit, score;
  for (std::size_t i = 0; i < ds.size(); ++i) ((i / 6) % 2 == 0 ? fit : score).push_back(i);
  const double acc = nearest_centroid_accuracy(ds, fit, score);
  MESSAGE("nearest-centroid accuracy at separation 0: " << acc);
  CHECK(acc < 0.25);
}

TEST_CASE("row gathering") {
  const std::vector<std::size_t> dims{3};
  auto ds = synth_generate(2, 3, dims, 1.0, 2).at(0);
  const std::vector<std::size_t> idx{4, 1};
  auto t = gather_rows<float>(ds, idx);
  CHECK(t.shape() == nn::Shape{2, 3});
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(t[d] == ds.row(4)[d]);
    CHECK(t[3 + d] == ds.row(1)[d]);
  }
  CHECK(gather_labels(ds, idx) == std::vector<int>{ds.labels[4], ds.labels[1]});
}
