// SPDX-License-Identifier: Apache-2.0
#include "reno/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "reno/errors.hpp"
#include "reno/nn/rng.hpp"

namespace reno::data {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'N', 'V', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kManifestHeader = "sample_id,label,speaker,dataset";

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void EmbeddingDataset::validate() const {
  const std::size_t count = labels.size();
  if (dim == 0) throw DataError(fm_name + ": embedding dimension is zero");
  if (vectors.size() != count * dim || sample_ids.size() != count || (!speakers.empty() && speakers.size() != count)) {
    throw AlignmentError(fm_name + ": " + std::to_string(vectors.size() / dim) + " vectors vs " +
                         std::to_string(count) + " labels vs " + std::to_string(sample_ids.size()) + " ids");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= label_names.size()) {
      throw LabelError(fm_name + ": label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(label_names.size()) + ")");
    }
  }
}

void write_embeddings(const fs::path& path, const EmbeddingMatrix& matrix) {
  if (matrix.values.size() != matrix.dim * matrix.count) {
    throw AlignmentError("embedding matrix holds " + std::to_string(matrix.values.size()) + " values, expected " +
                         std::to_string(matrix.dim) + "x" + std::to_string(matrix.count));
  }
  std::vector<char> bytes(kMagic.begin(), kMagic.end());
  put_u32(bytes, kVersion);
  put_u32(bytes, static_cast<std::uint32_t>(matrix.dim));
  put_u32(bytes, static_cast<std::uint32_t>(matrix.count));
  bytes.reserve(bytes.size() + matrix.values.size() * 4);
  for (float v : matrix.values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(bytes, bits);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing " + path.string());
}

EmbeddingMatrix read_embeddings(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                                            [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw FormatError(path.string() + ": missing NVEB header");
  }
  if (const auto version = get_u32(&bytes[4]); version != kVersion) {
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(version));
  }
  EmbeddingMatrix m;
  m.dim = get_u32(&bytes[8]);
  m.count = get_u32(&bytes[12]);
  if (m.dim == 0) throw FormatError(path.string() + ": zero embedding dimension");
  const std::size_t expected = kHeader + m.dim * m.count * 4;
  if (bytes.size() != expected) {
    throw FormatError(path.string() + ": header announces " + std::to_string(m.count) + "x" + std::to_string(m.dim) +
                      " values (" + std::to_string(expected) + " bytes), file has " + std::to_string(bytes.size()));
  }
  m.values.resize(m.dim * m.count);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const std::uint32_t bits = get_u32(&bytes[kHeader + 4 * i]);
    std::memcpy(&m.values[i], &bits, sizeof bits);
    if (!std::isfinite(m.values[i])) {
      throw DataError(path.string() + ": non-finite value in row " + std::to_string(i / m.dim));
    }
  }
  return m;
}

void write_manifest(const fs::path& path, std::span<const ManifestRow> rows) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << kManifestHeader << '\n';
  for (const auto& r : rows) {
    os << csv_field(r.sample_id) << ',' << csv_field(r.label) << ',' << csv_field(r.speaker) << ','
       << csv_field(r.dataset) << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kManifestHeader) {
    throw FormatError(path.string() + ": manifest header must be exactly '" + kManifestHeader + "'");
  }
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                        std::to_string(fields.size()));
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]), std::move(fields[3])});
  }
  return rows;
}

void write_label_vocabulary(const fs::path& path, std::span<const std::string> names) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& n : names) os << n << '\n';
}

std::vector<std::string> read_label_vocabulary(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(is, line)) {
    line = strip_cr(line);
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty()) throw FormatError(path.string() + ": empty label vocabulary");
  return names;
}

EmbeddingDataset load_dataset(const fs::path& embeddings_path, const fs::path& manifest_path,
                              const std::optional<std::vector<std::string>>& vocabulary) {
  EmbeddingMatrix matrix = read_embeddings(embeddings_path);
  const auto rows = read_manifest(manifest_path);
  if (rows.size() != matrix.count) {
    throw AlignmentError("manifest " + manifest_path.string() + " has " + std::to_string(rows.size()) +
                         " rows but " + embeddings_path.string() + " has " + std::to_string(matrix.count) +
                         " vectors");
  }
  EmbeddingDataset ds;
  ds.fm_name = embeddings_path.stem().string();
  ds.dim = matrix.dim;
  ds.vectors = std::move(matrix.values);
  if (vocabulary) {
    ds.label_names = *vocabulary;
  } else {
    std::set<std::string> distinct;
    for (const auto& r : rows) distinct.insert(r.label);
    ds.label_names.assign(distinct.begin(), distinct.end());
  }
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < ds.label_names.size(); ++i) ids.emplace(ds.label_names[i], static_cast<int>(i));
  bool any_speaker = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto it = ids.find(rows[i].label);
    if (it == ids.end()) {
      throw LabelError(manifest_path.string() + ": label '" + rows[i].label + "' at row " + std::to_string(i) +
                       " is not in the vocabulary");
    }
    ds.sample_ids.push_back(rows[i].sample_id);
    ds.labels.push_back(it->second);
    ds.speakers.push_back(rows[i].speaker);
    any_speaker = any_speaker || !rows[i].speaker.empty();
  }
  if (!any_speaker) ds.speakers.clear();
  if (!rows.empty()) ds.dataset_name = rows.front().dataset;
  ds.validate();
  return ds;
}

void save_dataset(const EmbeddingDataset& dataset, const fs::path& embeddings_path, const fs::path& manifest_path) {
  dataset.validate();
  write_embeddings(embeddings_path, {dataset.dim, dataset.size(), dataset.vectors});
  std::vector<ManifestRow> rows;
  rows.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    rows.push_back({dataset.sample_ids[i], dataset.label_names[static_cast<std::size_t>(dataset.labels[i])],
                    dataset.speakers.empty() ? std::string() : dataset.speakers[i], dataset.dataset_name});
  }
  write_manifest(manifest_path, rows);
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

void to_json(nlohmann::json& j, const FoldPlan& plan) {
  j = nlohmann::json{{"seed", plan.seed}, {"k", plan.k}, {"assignments", plan.assignments}};
}

void from_json(const nlohmann::json& j, FoldPlan& plan) {
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.k = j.at("k").get<std::size_t>();
  plan.assignments = j.at("assignments").get<std::vector<std::size_t>>();
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t num_classes, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2, got " + std::to_string(k));
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw LabelError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!members[c].empty() && members[c].size() < k) {
      throw StratificationError("class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                                " samples, fewer than k = " + std::to_string(k));
    }
  }
  FoldPlan plan{k, seed, std::vector<std::size_t>(labels.size())};
  nn::Rng rng(seed);
  std::size_t next = 0;
  for (auto& m : members) {
    rng.shuffle(std::span<std::size_t>(m));
    for (std::size_t idx : m) {
      plan.assignments[idx] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

FoldPlan stratified_kfold(const EmbeddingDataset& dataset, std::size_t k, std::uint64_t seed) {
  try {
    return stratified_kfold(dataset.labels, dataset.num_classes(), k, seed);
  } catch (const StratificationError& e) {
    // Re-raise with the class name attached.
    std::string msg = e.what();
    for (std::size_t c = 0; c < dataset.label_names.size(); ++c) {
      const std::string tag = "class " + std::to_string(c) + " ";
      if (msg.starts_with(tag)) {
        msg = "class '" + dataset.label_names[c] + "' (" + std::to_string(c) + ") " + msg.substr(tag.size());
        break;
      }
    }
    throw StratificationError(msg);
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const std::size_t> indices,
                                                                               std::span<const int> labels,
                                                                               double fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : indices) by_class[labels[idx]].push_back(idx);
  nn::Rng rng(seed);
  std::vector<std::size_t> train, val;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    auto held = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    if (held == 0 && members.size() >= 2 && fraction > 0.0) held = 1;
    val.insert(val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(held));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(held), members.end());
  }
  std::ranges::sort(train);
  std::ranges::sort(val);
  return {std::move(train), std::move(val)};
}

std::vector<EmbeddingDataset> synth_generate(std::size_t num_classes, std::size_t per_class,
                                             std::span<const std::size_t> dims, double separation,
                                             std::uint64_t seed) {
  if (num_classes == 0 || per_class == 0 || dims.empty()) {
    throw ConfigError("synthetic data needs at least one class, sample and view");
  }
  const std::size_t count = num_classes * per_class;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < num_classes; ++c) names.push_back("class" + std::to_string(c));
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream id;
    id << "s" << std::setw(6) << std::setfill('0') << i;
    ids.push_back(id.str());
    labels.push_back(static_cast<int>(i % num_classes));
  }

  std::vector<EmbeddingDataset> views;
  for (std::size_t v = 0; v < dims.size(); ++v) {
    const std::size_t dim = dims[v];
    if (dim == 0) throw ConfigError("synthetic view dimensions must be positive");
    nn::Rng rng(nn::derive_seed(seed, v));
    std::vector<double> centers(num_classes * dim);
    for (std::size_t c = 0; c < num_classes; ++c) {
      double norm = 0.0;
      double* u = centers.data() + c * dim;
      do {
        norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          u[j] = rng.normal();
          norm += u[j] * u[j];
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < dim; ++j) u[j] = separation * u[j] / norm;
    }
    EmbeddingDataset ds;
    ds.fm_name = "view" + std::to_string(v);
    ds.dim = dim;
    ds.dataset_name = "synthetic";
    ds.sample_ids = ids;
    ds.labels = labels;
    ds.label_names = names;
    ds.vectors.resize(count * dim);
    for (std::size_t i = 0; i < count; ++i) {
      const double* u = centers.data() + static_cast<std::size_t>(labels[i]) * dim;
      for (std::size_t j = 0; j < dim; ++j) ds.vectors[i * dim + j] = static_cast<float>(u[j] + rng.normal());
    }
    views.push_back(std::move(ds));
  }
  return views;
}

template <typename Scalar>
nn::Tensor<Scalar> gather_rows(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  nn::Tensor<Scalar> out({indices.size(), dataset.dim});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto row = dataset.row(indices[r]);
    std::copy(row.begin(), row.end(), out.ptr() + r * dataset.dim);
  }
  return out;
}

template nn::Tensor<float> gather_rows<float>(const EmbeddingDataset&, std::span<const std::size_t>);
template nn::Tensor<double> gather_rows<double>(const EmbeddingDataset&, std::span<const std::size_t>);

std::vector<int> gather_labels(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(dataset.labels[i]);
  return out;
}

void check_aligned(std::span<const EmbeddingDataset> views) {
  for (std::size_t v = 1; v < views.size(); ++v) {
    if (views[v].size() != views[0].size()) {
      throw AlignmentError("view " + std::to_string(v) + " has " + std::to_string(views[v].size()) +
                           " samples, view 0 has " + std::to_string(views[0].size()));
    }
    if (views[v].labels != views[0].labels || views[v].sample_ids != views[0].sample_ids) {
      throw AlignmentError("view " + std::to_string(v) + " is not aligned with view 0 (ids or labels differ)");
    }
  }
}

}  // namespace reno::data
