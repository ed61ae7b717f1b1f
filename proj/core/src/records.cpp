#include "shiftcp/records.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "shiftcp/errors.hpp"
#include "shiftcp/random.hpp"

namespace shiftcp {

using nlohmann::json;

std::string_view to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::cluster_split: return "cluster-split";
    case DatasetRole::calibration: return "calibration";
    case DatasetRole::test: return "test";
  }
  return "unknown";
}

DatasetRole parse_dataset_role(std::string_view text) {
  if (text == "cluster-split") return DatasetRole::cluster_split;
  if (text == "calibration") return DatasetRole::calibration;
  if (text == "test") return DatasetRole::test;
  throw ConfigError("unknown dataset role '" + std::string(text) + "'");
}

namespace {

std::string record_label(std::size_t index, const QuestionRecord& r) {
  return "record " + std::to_string(index + 1) + " (id '" + r.id + "')";
}

}  // namespace

Dataset::Dataset(std::vector<QuestionRecord> records, DatasetRole role)
    : records_(std::move(records)), role_(role) {
  if (records_.empty()) return;

  m_ = records_.front().samples.size();
  if (m_ < 2) {
    throw DataError(record_label(0, records_.front()) + ": at least 2 samples per question required, got " +
                    std::to_string(m_));
  }

  std::unordered_set<std::string_view> seen;
  seen.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.id.empty()) throw DataError(record_label(i, r) + ": empty id");
    if (!seen.insert(r.id).second) throw DataError(record_label(i, r) + ": duplicate id");
    if (r.ground_truths.empty()) throw DataError(record_label(i, r) + ": ground_truths is empty");
    if (r.samples.size() != m_) {
      throw DataError(record_label(i, r) + ": has " + std::to_string(r.samples.size()) +
                      " samples, dataset has M=" + std::to_string(m_));
    }
    if (r.embedding) {
      const auto& e = *r.embedding;
      if (!d_) {
        if (e.size() < 2) {
          throw DataError(record_label(i, r) + ": embedding dimension must be at least 2");
        }
        d_ = e.size();
      } else if (e.size() != *d_) {
        throw DataError(record_label(i, r) + ": embedding has dimension " + std::to_string(e.size()) +
                        ", dataset has d=" + std::to_string(*d_));
      }
      if (!std::all_of(e.begin(), e.end(), [](double v) { return std::isfinite(v); })) {
        throw DataError(record_label(i, r) + ": embedding contains non-finite values");
      }
    }
  }
}

bool Dataset::all_embedded() const noexcept {
  return std::all_of(records_.begin(), records_.end(), [](const auto& r) { return r.embedding.has_value(); });
}

bool Dataset::all_labelled() const noexcept {
  return std::all_of(records_.begin(), records_.end(), [](const auto& r) { return r.domain.has_value(); });
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].id == id) return i;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> string_array(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError("line " + std::to_string(line) + ": missing key '" + key + "'");
  if (!it->is_array()) throw DataError("line " + std::to_string(line) + ": '" + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw DataError("line " + std::to_string(line) + ": '" + key + "' must contain only strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError("line " + std::to_string(line) + ": missing key '" + key + "'");
  if (!it->is_string()) throw DataError("line " + std::to_string(line) + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

QuestionRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw DataError("line " + std::to_string(line) + ": record must be a JSON object");
  QuestionRecord r;
  r.id = string_field(j, "id", line);
  r.question = string_field(j, "question", line);
  r.ground_truths = string_array(j, "ground_truths", line);
  r.samples = string_array(j, "samples", line);
  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError("line " + std::to_string(line) + ": 'embedding' must be an array");
    std::vector<double> e;
    e.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) {
        throw DataError("line " + std::to_string(line) + ": 'embedding' must contain only numbers");
      }
      e.push_back(v.get<double>());
    }
    r.embedding = std::move(e);
  }
  if (auto it = j.find("domain"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("line " + std::to_string(line) + ": 'domain' must be a string");
    r.domain = it->get<std::string>();
  }
  return r;
}

json record_to_json(const QuestionRecord& r) {
  json j;
  j["id"] = r.id;
  j["question"] = r.question;
  j["ground_truths"] = r.ground_truths;
  j["samples"] = r.samples;
  if (r.embedding) j["embedding"] = *r.embedding;
  if (r.domain) j["domain"] = *r.domain;
  return j;
}

}  // namespace

Dataset parse_dataset(std::istream& in, DatasetRole role) {
  std::vector<QuestionRecord> records;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    records.push_back(record_from_json(j, line_no));
    line_of.push_back(line_no);
  }
  if (records.empty()) throw DataError("empty dataset");
  try {
    return Dataset(std::move(records), role);
  } catch (const DataError& e) {
    // Re-locate "record N" messages onto source line numbers for the caller.
    std::string msg = e.what();
    if (msg.rfind("record ", 0) == 0) {
      std::size_t idx = std::stoul(msg.substr(7)) - 1;
      if (idx < line_of.size()) msg = "line " + std::to_string(line_of[idx]) + ": " + msg;
    }
    throw DataError(msg);
  }
}

Dataset load_dataset(const std::filesystem::path& path, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, role);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& r : dataset.records()) out << record_to_json(r).dump() << '\n';
}

std::string serialize_dataset(const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  return out.str();
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, dataset);
}

std::pair<Dataset, Dataset> split_buffer(const Dataset& buffer, std::size_t n_cluster, std::size_t n_cal,
                                         std::uint64_t seed) {
  if (n_cluster + n_cal > buffer.size()) {
    throw DataError("split_buffer: requested " + std::to_string(n_cluster) + " + " + std::to_string(n_cal) +
                    " records but buffer has " + std::to_string(buffer.size()));
  }
  if (!buffer.all_labelled()) throw DataError("split_buffer: every buffer record needs a domain label");

  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<QuestionRecord> cluster, cal;
  cluster.reserve(n_cluster);
  cal.reserve(n_cal);
  for (std::size_t i = 0; i < n_cluster; ++i) cluster.push_back(buffer[order[i]]);
  for (std::size_t i = n_cluster; i < n_cluster + n_cal; ++i) cal.push_back(buffer[order[i]]);
  return {Dataset(std::move(cluster), DatasetRole::cluster_split), Dataset(std::move(cal), DatasetRole::calibration)};
}

}  // namespace shiftcp
