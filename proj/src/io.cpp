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

#include "xmpc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace xmpc {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& rows) {
    if (!rows.is_array()) throw std::invalid_argument("expected a matrix array");
    const int r = static_cast<int>(rows.size());
    if (r == 0) return Mat(0, 0);
    const int c = static_cast<int>(rows[0].size());
    Mat m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c)
            throw std::invalid_argument("ragged matrix rows");
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

NodeRole role_from_string(const std::string& s) {
    if (s == "state") return NodeRole::State;
    if (s == "input") return NodeRole::Input;
    if (s == "disturbance") return NodeRole::Disturbance;
    throw std::invalid_argument("unknown node role \"" + s + "\"");
}

EdgeSign sign_from_string(const std::string& s) {
    if (s == "+") return EdgeSign::Positive;
    if (s == "-") return EdgeSign::Negative;
    if (s == "conditional") return EdgeSign::Conditional;
    throw std::invalid_argument("unknown edge sign \"" + s + "\"");
}

// Fixed-format doubles keep reports byte-stable.
std::string fixed6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string write_scenario(const ScenarioDocument& doc) {
    json j;
    j["schema"] = "xmpc-scenario-v1";
    j["model"] = doc.model;
    j["horizon"] = doc.horizon;
    j["timestamp"] = doc.timestamp;
    j["x_meas"] = doc.x_meas;
    j["forecast_columns"] = doc.forecast_columns;
    j["units"] = doc.units;
    j["forecast"] = matrix_to_json(doc.forecast);
    if (doc.history.size() > 0) j["history"] = matrix_to_json(doc.history);
    return j.dump(2) + "\n";
}

ScenarioDocument read_scenario(const std::string& text) {
    json j = json::parse(text);
    if (j.value("schema", "") != "xmpc-scenario-v1")
        throw std::invalid_argument("scenario: missing or wrong schema marker");
    ScenarioDocument doc;
    doc.model = j.value("model", "greenhouse");
    doc.horizon = j.at("horizon").get<int>();
    doc.timestamp = j.value("timestamp", "");
    doc.x_meas = j.at("x_meas").get<std::map<std::string, double>>();
    doc.forecast_columns =
        j.at("forecast_columns").get<std::vector<std::string>>();
    if (j.contains("units"))
        doc.units = j.at("units").get<std::map<std::string, std::string>>();
    doc.forecast = matrix_from_json(j.at("forecast"));
    if (j.contains("history")) doc.history = matrix_from_json(j.at("history"));
    if (doc.forecast.rows() != doc.horizon)
        throw std::invalid_argument("scenario: forecast row count differs from horizon");
    if (doc.forecast.cols() != static_cast<int>(doc.forecast_columns.size()))
        throw std::invalid_argument("scenario: forecast column count mismatch");
    return doc;
}

DecisionContext scenario_to_context(const ScenarioDocument& doc,
                                    const OcpSpec& spec) {
    DecisionContext ctx;
    ctx.timestamp = doc.timestamp;
    ctx.measured_state = Vec(spec.state_dim);
    for (int i = 0; i < spec.state_dim; ++i) {
        const std::string& name = spec.state_names.at(i);
        auto it = doc.x_meas.find(name);
        if (it == doc.x_meas.end())
            throw std::invalid_argument("scenario: x_meas lacks state \"" + name +
                                        "\"");
        ctx.measured_state(i) = it->second;
    }
    // Forecast columns may be permuted relative to the model's order.
    std::vector<int> order(spec.disturbance_dim, -1);
    for (int j = 0; j < spec.disturbance_dim; ++j) {
        const std::string& name = spec.disturbance_names.at(j);
        for (size_t c = 0; c < doc.forecast_columns.size(); ++c)
            if (doc.forecast_columns[c] == name) order[j] = static_cast<int>(c);
        if (order[j] < 0)
            throw std::invalid_argument("scenario: forecast lacks column \"" +
                                        name + "\"");
    }
    ctx.disturbance_forecast = Mat(doc.forecast.rows(), spec.disturbance_dim);
    for (int k = 0; k < doc.forecast.rows(); ++k)
        for (int j = 0; j < spec.disturbance_dim; ++j)
            ctx.disturbance_forecast(k, j) = doc.forecast(k, order[j]);
    if (doc.history.size() > 0) {
        ctx.disturbance_history = Mat(doc.history.rows(), spec.disturbance_dim);
        for (int k = 0; k < doc.history.rows(); ++k)
            for (int j = 0; j < spec.disturbance_dim; ++j)
                ctx.disturbance_history(k, j) = doc.history(k, order[j]);
    }
    return ctx;
}

std::string write_params(const std::string& name,
                         const std::map<std::string, double>& kv) {
    std::ostringstream out;
    out << "# " << name << " v1\n";
    for (const auto& [key, value] : kv) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        out << key << " = " << buf << "\n";
    }
    return out.str();
}

std::map<std::string, double> read_params(const std::string& text,
                                          std::string* name_out) {
    std::map<std::string, double> kv;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!header_seen && name_out) {
                std::string h = line.substr(1);
                size_t a = h.find_first_not_of(' ');
                size_t b = h.rfind(" v");
                if (a != std::string::npos && b != std::string::npos && b > a)
                    *name_out = h.substr(a, b - a);
            }
            header_seen = true;
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("params: malformed line \"" + line + "\"");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(' ') + 1);
        key.erase(0, key.find_first_not_of(' '));
        kv[key] = std::stod(line.substr(eq + 1));
    }
    if (!header_seen)
        throw std::invalid_argument("params: missing versioned header line");
    return kv;
}

std::string write_thresholds(const ThresholdTable& table,
                             const CostThresholds& costs) {
    std::map<std::string, double> kv;
    for (const auto& [id, e] : table.by_id) {
        kv["tau_lambda.id." + id] = e.tau;
        kv["provenance.id." + id] =
            e.provenance == ThresholdTable::Provenance::Calibrated ? 1.0 : 0.0;
    }
    for (const auto& [family, e] : table.by_family) {
        kv["tau_lambda.family." + family] = e.tau;
        kv["provenance.family." + family] =
            e.provenance == ThresholdTable::Provenance::Calibrated ? 1.0 : 0.0;
    }
    kv["tau_lambda.default"] = table.default_tau;
    kv["tau_cost"] = costs.tau_cost;
    kv["epsilon_j"] = costs.epsilon_j;
    return write_params("xmpc-thresholds", kv);
}

void read_thresholds(const std::string& text, ThresholdTable* table,
                     CostThresholds* costs) {
    auto kv = read_params(text);
    *table = ThresholdTable{};
    for (const auto& [key, value] : kv) {
        auto prov = [&](const std::string& pkey) {
            auto it = kv.find(pkey);
            return it != kv.end() && it->second > 0.5
                       ? ThresholdTable::Provenance::Calibrated
                       : ThresholdTable::Provenance::Default;
        };
        if (key.rfind("tau_lambda.id.", 0) == 0) {
            std::string id = key.substr(14);
            table->by_id[id] = {value, prov("provenance.id." + id)};
        } else if (key.rfind("tau_lambda.family.", 0) == 0) {
            std::string fam = key.substr(18);
            table->by_family[fam] = {value, prov("provenance.family." + fam)};
        } else if (key == "tau_lambda.default") {
            table->default_tau = value;
        } else if (key == "tau_cost") {
            costs->tau_cost = value;
        } else if (key == "epsilon_j") {
            costs->epsilon_j = value;
        }
    }
}

std::string write_graph(const SignedKnowledgeGraph& g) {
    json j;
    j["schema"] = "xmpc-graph-v1";
    json nodes = json::array();
    for (const auto& n : g.nodes())
        nodes.push_back({{"name", n.name}, {"role", to_string(n.role)}});
    json edges = json::array();
    for (const auto& e : g.edges()) {
        json je = {{"src", e.src}, {"dst", e.dst}, {"sign", to_string(e.sign)}};
        if (e.sign == EdgeSign::Conditional) {
            je["condition"] = e.condition;
            je["negative_when_true"] = e.negative_when_true;
        }
        edges.push_back(std::move(je));
    }
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    return j.dump(2) + "\n";
}

SignedKnowledgeGraph read_graph(const std::string& text) {
    json j = json::parse(text);
    if (j.value("schema", "") != "xmpc-graph-v1")
        throw std::invalid_argument("graph: missing or wrong schema marker");
    std::vector<KgNode> nodes;
    for (const auto& n : j.at("nodes"))
        nodes.push_back({n.at("name").get<std::string>(),
                         role_from_string(n.at("role").get<std::string>())});
    std::vector<KgEdge> edges;
    for (const auto& e : j.at("edges")) {
        KgEdge edge;
        edge.src = e.at("src").get<std::string>();
        edge.dst = e.at("dst").get<std::string>();
        edge.sign = sign_from_string(e.at("sign").get<std::string>());
        if (edge.sign == EdgeSign::Conditional) {
            edge.condition = e.at("condition").get<std::string>();
            edge.negative_when_true = e.value("negative_when_true", true);
        }
        edges.push_back(std::move(edge));
    }
    return SignedKnowledgeGraph(std::move(nodes), std::move(edges));
}

std::string write_causal(const LaggedCausalGraph& g, const LagBaseline& b) {
    json j;
    j["schema"] = "xmpc-causal-v1";
    j["tau_max"] = g.tau_max;
    j["alpha"] = g.alpha;
    j["variables"] = g.variables;
    j["warnings"] = g.warnings;
    json edges = json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"src", e.source},
                         {"dst", e.target},
                         {"lag", e.lag},
                         {"p_value", e.p_value},
                         {"partial_correlation", e.partial_correlation}});
    j["edges"] = std::move(edges);
    json baselines;
    baselines["variables"] = b.variables;
    baselines["tau_max"] = b.tau_max;
    baselines["mu"] = matrix_to_json(b.mu);
    baselines["sigma"] = matrix_to_json(b.sigma);
    j["baselines"] = std::move(baselines);
    return j.dump(2) + "\n";
}

void read_causal(const std::string& text, LaggedCausalGraph* g, LagBaseline* b) {
    json j = json::parse(text);
    if (j.value("schema", "") != "xmpc-causal-v1")
        throw std::invalid_argument("causal: missing or wrong schema marker");
    *g = LaggedCausalGraph{};
    g->tau_max = j.at("tau_max").get<int>();
    g->alpha = j.at("alpha").get<double>();
    g->variables = j.at("variables").get<std::vector<std::string>>();
    if (j.contains("warnings"))
        g->warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
        LaggedEdge le;
        le.source = e.at("src").get<std::string>();
        le.target = e.at("dst").get<std::string>();
        le.lag = e.at("lag").get<int>();
        le.p_value = e.at("p_value").get<double>();
        le.partial_correlation = e.at("partial_correlation").get<double>();
        g->edges.push_back(std::move(le));
    }
    *b = LagBaseline{};
    const auto& jb = j.at("baselines");
    b->variables = jb.at("variables").get<std::vector<std::string>>();
    b->tau_max = jb.at("tau_max").get<int>();
    b->mu = matrix_from_json(jb.at("mu"));
    b->sigma = matrix_from_json(jb.at("sigma"));
}

std::string write_timeseries(const TimeSeriesTable& t,
                             const std::string& start_iso) {
    std::ostringstream out;
    out << "timestamp";
    for (const auto& v : t.variables) out << "," << v;
    out << "\n";
    // Render timestamps at the fixed sampling interval from the start tag.
    int year, mon, day, hh, mm, ss;
    if (std::sscanf(start_iso.c_str(), "%d-%d-%dT%d:%d:%d", &year, &mon, &day,
                    &hh, &mm, &ss) != 6)
        throw std::invalid_argument("timeseries: bad start timestamp");
    std::tm tm = {};
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hh;
    tm.tm_min = mm;
    tm.tm_sec = ss;
    std::time_t t0 = timegm(&tm);
    for (int i = 0; i < t.samples.rows(); ++i) {
        std::time_t ti = t0 + static_cast<std::time_t>(
                                  std::llround(i * t.sampling_minutes * 60.0));
        std::tm out_tm;
        gmtime_r(&ti, &out_tm);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d",
                      out_tm.tm_year + 1900, out_tm.tm_mon + 1, out_tm.tm_mday,
                      out_tm.tm_hour, out_tm.tm_min, out_tm.tm_sec);
        out << buf;
        for (int j = 0; j < t.samples.cols(); ++j) {
            if (std::isnan(t.samples(i, j))) out << ",";
            else out << "," << fixed6(t.samples(i, j));
        }
        out << "\n";
    }
    return out.str();
}

TimeSeriesTable read_timeseries(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("timeseries: empty file");
    TimeSeriesTable t;
    {
        std::istringstream hdr(line);
        std::string col;
        bool first = true;
        while (std::getline(hdr, col, ',')) {
            if (first) {
                if (col != "timestamp")
                    throw std::invalid_argument(
                        "timeseries: first column must be \"timestamp\", got \"" +
                        col + "\"");
                first = false;
            } else {
                if (col.empty())
                    throw std::invalid_argument("timeseries: empty column name");
                t.variables.push_back(col);
            }
        }
        if (first)
            throw std::invalid_argument("timeseries: missing header row");
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::time_t> stamps;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        {
            size_t start = 0;
            while (true) {
                size_t comma = line.find(',', start);
                fields.push_back(line.substr(
                    start, comma == std::string::npos ? std::string::npos
                                                      : comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        const std::string& stamp_cell = fields[0];
        int year, mon, day, hh, mm, ss;
        if (std::sscanf(stamp_cell.c_str(), "%d-%d-%dT%d:%d:%d", &year, &mon,
                        &day, &hh, &mm, &ss) != 6)
            throw std::invalid_argument(
                "timeseries: column \"timestamp\" is not ISO-8601 at line " +
                std::to_string(line_no));
        std::tm tm = {};
        tm.tm_year = year - 1900;
        tm.tm_mon = mon - 1;
        tm.tm_mday = day;
        tm.tm_hour = hh;
        tm.tm_min = mm;
        tm.tm_sec = ss;
        stamps.push_back(timegm(&tm));
        if (fields.size() - 1 != t.variables.size())
            throw std::invalid_argument(
                "timeseries: expected " + std::to_string(t.variables.size()) +
                " value cells at line " + std::to_string(line_no));
        std::vector<double> row;
        for (size_t c = 1; c < fields.size(); ++c) {
            const std::string& cell = fields[c];
            if (cell.empty()) {
                row.push_back(NAN);
                continue;
            }
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                throw std::invalid_argument(
                    "timeseries: column \"" + t.variables[c - 1] +
                    "\" is not numeric at line " + std::to_string(line_no));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw std::invalid_argument("timeseries: need at least two samples");
    const double interval = static_cast<double>(stamps[1] - stamps[0]);
    if (!(interval > 0))
        throw std::invalid_argument("timeseries: non-increasing timestamps");
    for (size_t i = 2; i < stamps.size(); ++i)
        if (static_cast<double>(stamps[i] - stamps[i - 1]) != interval)
            throw std::invalid_argument(
                "timeseries: column \"timestamp\" is not uniformly sampled at "
                "line " + std::to_string(i + 2));
    t.sampling_minutes = interval / 60.0;
    t.samples = Mat(static_cast<int>(rows.size()),
                    static_cast<int>(t.variables.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            t.samples(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    apply_missing_policy(t);
    return t;
}

std::string write_explanation(const ExplanationRecord& rec) {
    json j;
    j["schema"] = "xmpc-explanation-v1";
    j["scenario_ref"] = rec.scenario_ref;
    j["selected"] = rec.selected ? to_string(*rec.selected) : "none";
    j["confidence"] = rec.confidence;
    j["degraded_mode"] = rec.degraded_mode;
    j["evidence_tags"] = rec.evidence.evidence_tags;
    j["uncertainty_flags"] = rec.evidence.uncertainty_flags;
    if (rec.evidence.kkt_primary) {
        j["kkt_primary"] = {{"id", rec.evidence.kkt_primary->id},
                            {"stage", rec.evidence.kkt_primary->stage},
                            {"lambda", rec.evidence.kkt_primary->lambda}};
    }
    if (rec.evidence.counterfactual) {
        const auto& cf = *rec.evidence.counterfactual;
        json jc = {{"constraint", cf.constraint},
                   {"u_changed", cf.u_changed},
                   {"violation_found", cf.violation_found},
                   {"delta_j", cf.delta_j},
                   {"violation_cost", cf.violation_cost},
                   {"classification", to_string(cf.classification)}};
        if (cf.violation_stage) jc["violation_stage"] = *cf.violation_stage;
        j["counterfactual"] = std::move(jc);
    }
    if (rec.evidence.prevented)
        j["prevented"] = {{"id", rec.evidence.prevented->id},
                          {"stage", rec.evidence.prevented->stage},
                          {"value", rec.evidence.prevented->value}};
    if (rec.evidence.economics)
        j["economics"] = {{"j_star", rec.evidence.economics->j_star},
                          {"j_zero", rec.evidence.economics->j_zero},
                          {"saving_fraction", rec.evidence.economics->saving_fraction}};
    json flags = json::array();
    for (const auto& f : rec.evidence.pcmci_flags) {
        double z = f.z_score;
        if (std::isinf(z)) z = z > 0 ? 1e308 : -1e308;
        flags.push_back({{"source", f.source},
                         {"lag", f.lag},
                         {"active", f.active},
                         {"z", z}});
    }
    j["pcmci_flags"] = std::move(flags);
    json chains = json::array();
    for (const auto& c : rec.supporting_context)
        chains.push_back(
            {{"path", c.path}, {"sign", to_string(c.composite_sign)}});
    j["supporting_context"] = std::move(chains);
    j["predicted_factors"] = rec.predicted_factors;
    json stmts = json::array();
    for (const auto& s : rec.statements)
        stmts.push_back({{"text", s.text}, {"tag", to_string(s.tag)}});
    j["statements"] = std::move(stmts);
    j["narrative"] = rec.narrative;
    return j.dump(2) + "\n";
}

std::string report_to_table(const MetricReport& report) {
    std::ostringstream out;
    out << "# suite=" << report.domain << " tag=" << report.tag
        << " seed=" << report.seed << "\n";
    out << "scenario\tselected\tconfidence\tp@1\tp@3\tp@5\tr@5\tf1@5\tmrr\t"
           "ndcg@5\trouge_l\tfaithfulness\tdegraded\tfailure\n";
    for (const auto& r : report.rows) {
        out << r.id << "\t" << r.selected << "\t" << fixed6(r.confidence) << "\t"
            << fixed6(r.scores.p_at_1) << "\t" << fixed6(r.scores.p_at_3) << "\t"
            << fixed6(r.scores.p_at_5) << "\t" << fixed6(r.scores.r_at_5) << "\t"
            << fixed6(r.scores.f1_at_5) << "\t" << fixed6(r.scores.mrr) << "\t"
            << fixed6(r.scores.ndcg_at_5) << "\t" << fixed6(r.rouge) << "\t"
            << fixed6(r.faith) << "\t" << (r.degraded ? 1 : 0) << "\t"
            << to_string(r.failure) << "\n";
    }
    out << "aggregate\t-\t-\t" << fixed6(report.aggregate.p_at_1) << "\t"
        << fixed6(report.aggregate.p_at_3) << "\t"
        << fixed6(report.aggregate.p_at_5) << "\t"
        << fixed6(report.aggregate.r_at_5) << "\t"
        << fixed6(report.aggregate.f1_at_5) << "\t"
        << fixed6(report.aggregate.mrr) << "\t"
        << fixed6(report.aggregate.ndcg_at_5) << "\t" << fixed6(report.rouge)
        << "\t" << fixed6(report.faith) << "\t-\t-\n";
    return out.str();
}

std::string report_to_json(const MetricReport& report) {
    json j;
    j["schema"] = "xmpc-report-v1";
    j["tag"] = report.tag;
    j["domain"] = report.domain;
    j["seed"] = report.seed;
    j["failures"] = report.failures;
    auto scores_json = [](const RankingScores& s) {
        return json{{"p_at_1", s.p_at_1},   {"p_at_3", s.p_at_3},
                    {"p_at_5", s.p_at_5},   {"r_at_1", s.r_at_1},
                    {"r_at_3", s.r_at_3},   {"r_at_5", s.r_at_5},
                    {"f1_at_1", s.f1_at_1}, {"f1_at_3", s.f1_at_3},
                    {"f1_at_5", s.f1_at_5}, {"mrr", s.mrr},
                    {"ndcg_at_5", s.ndcg_at_5}};
    };
    j["aggregate"] = scores_json(report.aggregate);
    j["rouge_l"] = report.rouge;
    j["faithfulness"] = report.faith;
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row = {{"id", r.id},
                    {"selected", r.selected},
                    {"confidence", r.confidence},
                    {"degraded", r.degraded},
                    {"rouge_l", r.rouge},
                    {"faithfulness", r.faith},
                    {"failure", to_string(r.failure)},
                    {"scores", scores_json(r.scores)}};
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string write_manifest(const RunManifest& m) {
    json j;
    j["schema"] = "xmpc-manifest-v1";
    j["command"] = m.command;
    j["argv"] = m.argv;
    j["config_paths"] = m.config_paths;
    j["seeds"] = m.seeds;
    j["output_dir"] = m.output_dir;
    j["tool_version"] = m.tool_version;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

RunManifest read_manifest(const std::string& text) {
    json j = json::parse(text);
    if (j.value("schema", "") != "xmpc-manifest-v1")
        throw std::invalid_argument("manifest: missing or wrong schema marker");
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    if (j.contains("config_paths"))
        m.config_paths =
            j.at("config_paths").get<std::map<std::string, std::string>>();
    if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<unsigned>>();
    m.output_dir = j.value("output_dir", "");
    m.tool_version = j.value("tool_version", "");
    if (j.contains("outputs"))
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << content;
}

}  // namespace xmpc
