#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofuse/tensor.hpp"

namespace chronofuse {

/// One irregular observation of a named item (lab or similar source).
/// Timestamps are minutes on the cohort clock (admission = 0). A value is
/// either numeric or categorical (a small nonnegative token id).
struct TimedObservation {
  std::string subject_id;
  std::string item_id;
  double timestamp = 0.0;
  double value = 0.0;
  bool categorical = false;
  int category = 0;

  bool operator==(const TimedObservation&) const = default;
};

/// One signal record: fixed-shape multichannel waveform plus derived scalar
/// features and a bag of vocabulary term ids, taken at `timestamp` minutes.
struct EcgRecord {
  Tensor signal;  // [leads x samples]
  std::vector<double> features;
  std::vector<int> text_tokens;
  double timestamp = 0.0;

  bool operator==(const EcgRecord&) const = default;
};

/// Regular-grid multichannel series with an observed/missing mask.
/// Point j of item i sits at start_minute + j * step_minute.
struct VitalsGrid {
  std::vector<std::string> items;
  double start_minute = 0.0;
  double step_minute = 60.0;
  std::vector<std::vector<double>> values;      // [item][time]
  std::vector<std::vector<std::uint8_t>> mask;  // 1 = observed

  int n_items() const { return static_cast<int>(items.size()); }
  int n_points() const {
    return values.empty() ? 0 : static_cast<int>(values.front().size());
  }
  double horizon_minutes() const { return n_points() * step_minute; }

  bool operator==(const VitalsGrid&) const = default;
};

struct SlidingWindowConfig {
  int window_minutes = 240;
  int step_minutes = 120;
  double t0 = 0.0;
};

enum class TaskKind { kMulticlass4, kBinary, kRegression };

std::string task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

struct Label {
  TaskKind kind = TaskKind::kBinary;
  int cls = 0;       // classification tasks
  double value = 0;  // regression task

  bool operator==(const Label&) const = default;
};

/// Everything model-visible about one subject.
struct SubjectData {
  std::string subject_id;
  std::vector<double> static_features;
  std::vector<TimedObservation> labs;
  VitalsGrid vitals;
  std::vector<EcgRecord> ecg;
  Label label;
  double horizon_minutes = 1440.0;  // observation horizon from admission

  bool operator==(const SubjectData&) const = default;
};

}  // namespace chronofuse
