#pragma once

// Dataset contract: one QuestionRecord per question, carrying the M sampled
// answers, reference answers, and (optionally) the question embedding and its
// true domain.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace shiftcp {

using RecordId = std::string;
using DomainId = std::string;

struct QuestionRecord {
  RecordId id;
  std::string question;
  std::vector<std::string> ground_truths;
  std::vector<std::string> samples;
  std::optional<std::vector<double>> embedding;
  std::optional<DomainId> domain;

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

enum class DatasetRole { cluster_split, calibration, test };

std::string_view to_string(DatasetRole role);
DatasetRole parse_dataset_role(std::string_view text);

// Immutable after construction; every record shares the sample count and every
// embedded record shares the embedding dimension.
class Dataset {
 public:
  Dataset() = default;

  // Validates the records; throws DataError on any invariant violation.
  Dataset(std::vector<QuestionRecord> records, DatasetRole role);

  const std::vector<QuestionRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const QuestionRecord& operator[](std::size_t i) const { return records_[i]; }

  std::size_t samples_per_question() const noexcept { return m_; }
  std::optional<std::size_t> embedding_dim() const noexcept { return d_; }
  DatasetRole role() const noexcept { return role_; }

  bool all_embedded() const noexcept;
  bool all_labelled() const noexcept;

  // Index of the record with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<QuestionRecord> records_;
  std::size_t m_ = 0;
  std::optional<std::size_t> d_;
  DatasetRole role_ = DatasetRole::calibration;
};

// Parses newline-delimited JSON records. M and d are taken from the first
// record; errors name the offending line.
Dataset parse_dataset(std::istream& in, DatasetRole role = DatasetRole::calibration);
Dataset load_dataset(const std::filesystem::path& path, DatasetRole role = DatasetRole::calibration);

void write_dataset(std::ostream& out, const Dataset& dataset);
std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

// Disjoint uniform-random split of a labelled buffer into a cluster split of
// n_cluster records and a calibration set of n_cal records.
std::pair<Dataset, Dataset> split_buffer(const Dataset& buffer, std::size_t n_cluster,
                                         std::size_t n_cal, std::uint64_t seed);

}  // namespace shiftcp
