#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lltensor/greedy_parafac.hpp"
#include "lltensor/network_builder.hpp"

namespace lltensor::cli {

/// Failure in one pipeline stage; the message starts with the stage name.
class StageError : public std::runtime_error {
public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

// File names inside the directories the commands write.
inline constexpr const char* kTensorFile = "tensor.txt";
inline constexpr const char* kMatrixFile = "matrix.csv";
inline constexpr const char* kTimingFile = "timings.json";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kReportJson = "report.json";

std::string model_file_name(std::size_t rank);

struct SynthConfig {
  SyntheticParams params;
  std::filesystem::path out;  // CSV file
};

struct BuildConfig {
  std::filesystem::path input;  // CSV file
  std::optional<std::filesystem::path> stoplist;
  std::size_t min_blogs = kDefaultMinBlogs;
  std::filesystem::path out;  // directory
};

struct BuildSummary {
  std::size_t n_blogs = 0;
  std::size_t n_words = 0;
  std::size_t nnz = 0;
};

struct DecomposeConfig {
  std::filesystem::path input;  // tensor text file
  std::vector<std::size_t> ranks{2, 4, 6, 8, 10, 12, 14};
  DecomposeOptions options;
  std::filesystem::path out;  // directory
};

struct DecomposeRun {
  std::size_t rank = 0;
  std::filesystem::path file;
  double fit_error = 0.0;
};

enum class ListingFormat { Text, Csv, Json };

struct RankConfig {
  std::filesystem::path model;
  std::filesystem::path matrix;
  std::size_t group = 1;
  std::size_t top_k = 10;
  ListingFormat format = ListingFormat::Text;
};

struct EvalConfig {
  std::filesystem::path input;   // filtered matrix CSV
  std::filesystem::path models;  // directory of model_R*.json
  bool lambda_weighted = false;
  std::filesystem::path out;  // directory
};

/// Ranks must be positive and strictly increasing.
void validate_ranks(const std::vector<std::size_t>& ranks);

void cmd_synth(const SynthConfig& cfg, std::ostream& log);
BuildSummary cmd_build(const BuildConfig& cfg, std::ostream& log);
std::vector<DecomposeRun> cmd_decompose(const DecomposeConfig& cfg, std::ostream& log);
void cmd_rank(const RankConfig& cfg, std::ostream& out);
void cmd_eval(const EvalConfig& cfg, std::ostream& log);

/// Parses argv and dispatches. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lltensor::cli
