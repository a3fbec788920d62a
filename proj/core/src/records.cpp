#include "chronofuse/records.hpp"

#include "chronofuse/errors.hpp"

namespace chronofuse {

std::string task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::kMulticlass4: return "multiclass";
    case TaskKind::kBinary: return "binary";
    case TaskKind::kRegression: return "regression";
  }
  throw ContractError("unknown task kind");
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "multiclass") return TaskKind::kMulticlass4;
  if (name == "binary") return TaskKind::kBinary;
  if (name == "regression") return TaskKind::kRegression;
  throw ConfigError("unknown task '" + name +
                    "' (expected multiclass|binary|regression)");
}

}  // namespace chronofuse
