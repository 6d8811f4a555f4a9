/*
 * Copyright 2026 The xmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <string>
#include <vector>

#include "xmpc/forensics.hpp"
#include "xmpc/hypothesis.hpp"
#include "xmpc/knowledge_graph.hpp"
#include "xmpc/metrics.hpp"
#include "xmpc/ocp.hpp"
#include "xmpc/suite.hpp"
#include "xmpc/temporal.hpp"

namespace xmpc {

// File formats. Structured documents are JSON (UTF-8 key-value trees with
// a "schema" marker); flat parameter files are "key = value" text with a
// versioned header line; time series are delimited text with an ISO-8601
// timestamp column.

/// Scenario document: measured state, forecast matrix with declared
/// columns and units, optional recent disturbance history, timestamps.
struct ScenarioDocument {
    std::string model = "greenhouse";
    int horizon = 16;
    std::string timestamp;
    std::map<std::string, double> x_meas;          // state name -> value
    std::vector<std::string> forecast_columns;
    std::map<std::string, std::string> units;      // column -> unit label
    Mat forecast;
    Mat history;  // optional; 0 x 0 when absent
};

std::string write_scenario(const ScenarioDocument& doc);
ScenarioDocument read_scenario(const std::string& text);

DecisionContext scenario_to_context(const ScenarioDocument& doc,
                                    const OcpSpec& spec);

/// Flat key-value parameter file with a "# <name> v1" header.
std::string write_params(const std::string& name,
                         const std::map<std::string, double>& kv);
std::map<std::string, double> read_params(const std::string& text,
                                          std::string* name_out = nullptr);

/// Threshold tables persist in the parameter-file format.
std::string write_thresholds(const ThresholdTable& table,
                             const CostThresholds& costs);
void read_thresholds(const std::string& text, ThresholdTable* table,
                     CostThresholds* costs);

/// Knowledge-graph document: nodes (name, role) and edges (src, dst,
/// sign, optional condition). Round-trips losslessly.
std::string write_graph(const SignedKnowledgeGraph& g);
SignedKnowledgeGraph read_graph(const std::string& text);

/// Lagged causal graph plus its lag baselines in one document.
std::string write_causal(const LaggedCausalGraph& g, const LagBaseline& b);
void read_causal(const std::string& text, LaggedCausalGraph* g, LagBaseline* b);

/// Delimited time-series text: first row variable names, first column an
/// ISO-8601 timestamp, fixed sampling interval verified on load. Missing
/// cells are interpolated via the gap policy. Parse errors name the
/// offending column.
std::string write_timeseries(const TimeSeriesTable& t,
                             const std::string& start_iso = "2011-05-01T00:00:00");
TimeSeriesTable read_timeseries(const std::string& text);

/// Explanation record as a machine-readable document (with the rendered
/// narrative and the tagged statements).
std::string write_explanation(const ExplanationRecord& rec);

/// Metric report as a delimited table plus a structured document.
std::string report_to_table(const MetricReport& report);
std::string report_to_json(const MetricReport& report);

/// Run manifest: command, arguments, seeds, inputs, outputs, tool
/// version. Re-running the recorded argv reproduces the outputs byte for
/// byte.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::map<std::string, std::string> config_paths;
    std::vector<unsigned> seeds;
    std::string output_dir;
    std::string tool_version;
    std::vector<std::string> outputs;
};

std::string write_manifest(const RunManifest& m);
RunManifest read_manifest(const std::string& text);

/// Whole-file helpers; throw std::runtime_error with the path on failure.
std::string slurp(const std::string& path);
void spit(const std::string& path, const std::string& content);

}  // namespace xmpc
