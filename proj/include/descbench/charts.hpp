// Copyright 2026 The descbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DESCBENCH_CHARTS_HPP_
#define DESCBENCH_CHARTS_HPP_

#include <span>
#include <string>

#include "descbench/analysis.hpp"

namespace descbench {

// Static SVG renderings of the report tables.

std::string correlation_chart_svg(std::span<const CorrelationCell> cells);
std::string pass_rate_chart_svg(std::span<const PassRateRow> rows);
std::string cross_metric_chart_svg(const CrossMetricMatrix& matrix);
std::string avg_scores_chart_svg(std::span<const AvgScoreRow> rows);

}  // namespace descbench

#endif  // DESCBENCH_CHARTS_HPP_
