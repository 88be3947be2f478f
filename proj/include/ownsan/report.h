// SPDX-License-Identifier: Apache-2.0
//
// JSON views of analyses and executions. Every document carries "schema": 1.

#ifndef OWNSAN_REPORT_H
#define OWNSAN_REPORT_H

#include <json.hpp>

#include "ownsan/analysis.h"
#include "ownsan/runtime.h"

namespace ownsan {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const PointerRef &r);
nlohmann::json plan_json(const InstrumentationPlan &plan);
nlohmann::json analysis_json(const Analysis &a);
nlohmann::json report_json(const ExecutionReport &r);

} // namespace ownsan

#endif // OWNSAN_REPORT_H
