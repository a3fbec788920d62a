#pragma once

#include <stdexcept>
#include <string>

namespace chronofuse {

// Every failure carries a stable machine-parsable category; the CLI prints
// it as `error category=<cat> ...` and maps it to a nonzero exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& m) : Error("index", m) {}
};
struct VocabularyError : Error {
  explicit VocabularyError(const std::string& m) : Error("vocabulary", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};
struct FitError : Error {
  explicit FitError(const std::string& m) : Error("fit", m) {}
};
struct SchemeError : Error {
  explicit SchemeError(const std::string& m) : Error("scheme", m) {}
};
struct SplitError : Error {
  explicit SplitError(const std::string& m) : Error("split", m) {}
};
struct LeakError : Error {
  explicit LeakError(const std::string& m) : Error("leak", m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};
struct MigrationError : Error {
  explicit MigrationError(const std::string& m) : Error("migration", m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};
struct MetricError : Error {
  explicit MetricError(const std::string& m) : Error("undefined-metric", m) {}
};
struct DegenerateTestError : Error {
  explicit DegenerateTestError(const std::string& m) : Error("degenerate-test", m) {}
};
struct DeterminismError : Error {
  explicit DeterminismError(const std::string& m) : Error("determinism", m) {}
};
struct PretrainError : Error {
  explicit PretrainError(const std::string& m) : Error("pretrain", m) {}
};

}  // namespace chronofuse
