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

// Command-line entry point: discover (lagged causal graph from history),
// explain (per-decision narratives), calibrate (multiplier and cost
// thresholds), eval (suite metrics with ablations and perturbations), and
// demo (cold-night walkthrough). Every run writes a manifest that
// reproduces it bit for bit.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xmpc/greenhouse.hpp"
#include "xmpc/io.hpp"
#include "xmpc/suite.hpp"

namespace fs = std::filesystem;
using namespace xmpc;

namespace {

constexpr const char* kVersion = "0.1.0";

RunManifest make_manifest(const std::string& command, int argc, char** argv,
                          const std::string& out_dir) {
    RunManifest m;
    m.command = command;
    for (int i = 0; i < argc; ++i) m.argv.push_back(argv[i]);
    m.output_dir = out_dir;
    m.tool_version = kVersion;
    return m;
}

void finish_manifest(RunManifest m, const std::string& out_dir) {
    spit((fs::path(out_dir) / "manifest.json").string(), write_manifest(m));
}

int cmd_discover(const std::string& data_path, int tau_max, double alpha,
                 const std::string& out_dir, int argc, char** argv) {
    TimeSeriesTable data = read_timeseries(slurp(data_path));
    LaggedCausalGraph graph = fit_pcmci(data, tau_max, alpha);
    LagBaseline baselines = compute_baselines(data, tau_max);
    fs::create_directories(out_dir);
    RunManifest m = make_manifest("discover", argc, argv, out_dir);
    m.config_paths["data"] = data_path;
    const std::string causal_path =
        (fs::path(out_dir) / "causal_graph.json").string();
    spit(causal_path, write_causal(graph, baselines));
    m.outputs.push_back(causal_path);
    finish_manifest(std::move(m), out_dir);
    std::cout << "discovered " << graph.edges.size() << " lagged edge(s) over "
              << graph.variables.size() << " variable(s)\n";
    for (const auto& w : graph.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_explain(const std::vector<std::string>& scenario_paths,
                const std::string& params_path, const std::string& kg_path,
                const std::string& causal_path, const std::string& thresholds_path,
                bool degraded_ok, const std::string& out_dir, int argc,
                char** argv) {
    GreenhouseParams params;
    if (!params_path.empty())
        params = GreenhouseParams::from_map(read_params(slurp(params_path)));

    SignedKnowledgeGraph kg;
    bool have_kg = false;
    if (!kg_path.empty()) {
        kg = read_graph(slurp(kg_path));
        have_kg = true;
    }
    LaggedCausalGraph causal;
    LagBaseline baselines;
    bool have_causal = false;
    if (!causal_path.empty()) {
        read_causal(slurp(causal_path), &causal, &baselines);
        have_causal = true;
    }
    PipelineArtifacts art;
    if (have_kg) art.kg = &kg;
    if (have_causal) {
        art.causal = &causal;
        art.baselines = &baselines;
    }
    if (!thresholds_path.empty())
        read_thresholds(slurp(thresholds_path), &art.thresholds, &art.costs);

    if (!have_kg || !have_causal) {
        std::cerr << "note: optional artifacts missing ("
                  << (have_kg ? "" : "knowledge graph ")
                  << (have_causal ? "" : "causal graph") << "); "
                  << "explanations run in degraded mode\n";
        if (!degraded_ok)
            std::cerr << "      (pass --degraded-ok to silence this note)\n";
    }

    fs::create_directories(out_dir);
    RunManifest m = make_manifest("explain", argc, argv, out_dir);
    if (!params_path.empty()) m.config_paths["model-params"] = params_path;
    if (!kg_path.empty()) m.config_paths["kg"] = kg_path;
    if (!causal_path.empty()) m.config_paths["causal-graph"] = causal_path;
    if (!thresholds_path.empty()) m.config_paths["thresholds"] = thresholds_path;

    const SolverConfig cfg = pipeline_solver_config();
    int index = 0;
    for (const auto& path : scenario_paths) {
        ScenarioDocument doc = read_scenario(slurp(path));
        OcpSpec spec = build_greenhouse_ocp(params, doc.horizon);
        DecisionContext ctx = scenario_to_context(doc, spec);
        OcpSolution sol = solve(spec, ctx, cfg);
        std::string ref = fs::path(path).stem().string();
        ExplanationRecord rec = generate_explanation(spec, ctx, sol, art, cfg, ref);

        ++index;
        const std::string rec_path =
            (fs::path(out_dir) / ("explanation_" + ref + ".json")).string();
        const std::string text_path =
            (fs::path(out_dir) / ("narrative_" + ref + ".txt")).string();
        spit(rec_path, write_explanation(rec));
        spit(text_path, rec.narrative);
        m.outputs.push_back(rec_path);
        m.outputs.push_back(text_path);
        std::cout << rec.narrative << "\n";
    }
    finish_manifest(std::move(m), out_dir);
    return 0;
}

int cmd_calibrate(const std::string& multipliers_path,
                  const std::string& costs_path, double calib_frac,
                  double test_frac, const std::string& out_dir, int argc,
                  char** argv) {
    if (calib_frac + test_frac > 1.0)
        throw CLI::ValidationError("split fractions must not sum above 1");

    // family,lambda,is_active per row.
    std::vector<std::pair<double, bool>> labeled;
    std::map<std::string, std::vector<std::pair<double, bool>>> by_family;
    {
        std::istringstream in(slurp(multipliers_path));
        std::string line;
        if (!std::getline(in, line) || line != "family,lambda,is_active")
            throw std::invalid_argument(
                "multipliers: expected header \"family,lambda,is_active\"");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream cells(line);
            std::string family, lambda, active;
            std::getline(cells, family, ',');
            std::getline(cells, lambda, ',');
            std::getline(cells, active, ',');
            std::pair<double, bool> sample{std::stod(lambda), active == "1"};
            labeled.push_back(sample);
            by_family[family].push_back(sample);
        }
    }

    ThresholdTable table = ThresholdTable::with_family_defaults();
    std::ostringstream report;
    report << "calibration report\n";
    report << "family\tthreshold\tcalibration_acc\tholdout_acc\tsamples\n";
    for (const auto& [family, samples] : by_family) {
        auto rep = calibrate_kkt_thresholds(samples, calib_frac, test_frac);
        table.by_family[family] = {rep.threshold,
                                   ThresholdTable::Provenance::Calibrated};
        char line[256];
        std::snprintf(line, sizeof(line), "%s\t%.6e\t%.4f\t%.4f\t%zu\n",
                      family.c_str(), rep.threshold, rep.calibration_accuracy,
                      rep.holdout_accuracy, samples.size());
        report << line;
    }

    CostThresholds costs;
    if (!costs_path.empty()) {
        std::vector<double> stage_costs, deltas;
        std::istringstream in(slurp(costs_path));
        std::string line;
        if (!std::getline(in, line) || line != "stage_cost,delta_j")
            throw std::invalid_argument(
                "costs: expected header \"stage_cost,delta_j\"");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            size_t comma = line.find(',');
            std::string a = line.substr(0, comma);
            std::string b = comma == std::string::npos ? "" : line.substr(comma + 1);
            if (!a.empty()) stage_costs.push_back(std::stod(a));
            if (!b.empty()) deltas.push_back(std::stod(b));
        }
        costs = calibrate_cost_thresholds(stage_costs, deltas);
        char line2[128];
        std::snprintf(line2, sizeof(line2), "tau_cost\t%.6e\nepsilon_j\t%.6e\n",
                      costs.tau_cost, costs.epsilon_j);
        report << line2;
    }

    fs::create_directories(out_dir);
    RunManifest m = make_manifest("calibrate", argc, argv, out_dir);
    m.config_paths["multipliers"] = multipliers_path;
    if (!costs_path.empty()) m.config_paths["costs"] = costs_path;
    const std::string thr_path = (fs::path(out_dir) / "thresholds.params").string();
    const std::string rep_path =
        (fs::path(out_dir) / "calibration_report.txt").string();
    spit(thr_path, write_thresholds(table, costs));
    spit(rep_path, report.str());
    m.outputs.push_back(thr_path);
    m.outputs.push_back(rep_path);
    finish_manifest(std::move(m), out_dir);
    std::cout << report.str();
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& suite,
             unsigned seed, bool ablations, const std::vector<double>& kg_remove,
             unsigned kg_seed, const std::vector<double>& threshold_scales,
             const std::string& out_dir, int argc, char** argv) {
    SuiteConfig base;
    base.domain = suite;
    base.seed = seed;
    bool config_ablations = ablations;
    std::vector<double> removes = kg_remove;
    std::vector<double> scales = threshold_scales;
    if (!config_path.empty()) {
        auto j = nlohmann::json::parse(slurp(config_path));
        base.domain = j.value("suite", base.domain);
        base.seed = j.value("seed", base.seed);
        config_ablations = j.value("ablations", config_ablations);
        if (j.contains("kg_remove"))
            removes = j.at("kg_remove").get<std::vector<double>>();
        if (j.contains("kg_seed")) kg_seed = j.at("kg_seed").get<unsigned>();
        if (j.contains("threshold_scales"))
            scales = j.at("threshold_scales").get<std::vector<double>>();
    }

    std::vector<SuiteConfig> cells;
    base.tag = "full";
    cells.push_back(base);
    if (config_ablations) {
        SuiteConfig c = base;
        c.drop_kg = true;
        c.tag = "drop-kg";
        cells.push_back(c);
        c = base;
        c.drop_pcmci = true;
        c.tag = "drop-pcmci";
        cells.push_back(c);
        c = base;
        c.drop_kkt = true;
        c.tag = "drop-kkt";
        cells.push_back(c);
    }
    for (double p : removes) {
        SuiteConfig c = base;
        c.kg_perturb = KgPerturbation{PerturbOp::RemoveFraction, p, kg_seed};
        char tag[64];
        std::snprintf(tag, sizeof(tag), "kg-remove-%.2f", p);
        c.tag = tag;
        cells.push_back(c);
    }
    for (double s : scales) {
        SuiteConfig c = base;
        c.threshold_scale = s;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "threshold-x%.2f", s);
        c.tag = tag;
        cells.push_back(c);
    }

    fs::create_directories(out_dir);
    RunManifest m = make_manifest("eval", argc, argv, out_dir);
    if (!config_path.empty()) m.config_paths["config"] = config_path;
    m.seeds = {base.seed, kg_seed};
    for (const auto& cell : cells) {
        MetricReport report = run_suite(cell);
        const std::string tsv =
            (fs::path(out_dir) / ("report_" + cell.tag + ".tsv")).string();
        const std::string jsn =
            (fs::path(out_dir) / ("report_" + cell.tag + ".json")).string();
        spit(tsv, report_to_table(report));
        spit(jsn, report_to_json(report));
        m.outputs.push_back(tsv);
        m.outputs.push_back(jsn);
        std::cout << cell.tag << ": P@1=" << report.aggregate.p_at_1
                  << " MRR=" << report.aggregate.mrr
                  << " failures=" << report.failures << "\n";
    }
    finish_manifest(std::move(m), out_dir);
    return 0;
}

int cmd_demo(const std::string& out_dir, int argc, char** argv) {
    fs::create_directories(out_dir);
    RunManifest m = make_manifest("demo", argc, argv, out_dir);

    // Offline artifacts: physics graph, discovered causal graph, baselines.
    SuiteArtifacts art = build_suite_artifacts("greenhouse", 1);
    const std::string kg_path = (fs::path(out_dir) / "greenhouse_kg.json").string();
    const std::string causal_path =
        (fs::path(out_dir) / "causal_graph.json").string();
    spit(kg_path, write_graph(art.kg));
    spit(causal_path, write_causal(art.causal, art.baselines));

    // The cold-night decision instant.
    const int horizon = 16;
    GreenhouseParams params;
    ScenarioDocument doc;
    doc.model = "greenhouse";
    doc.horizon = horizon;
    doc.timestamp = "2011-05-12T07:45:00";
    doc.x_meas = {{"T", 21.9}, {"C", 680.0}, {"Hm", 75.0}, {"B", 1.0}};
    doc.forecast_columns = {"T_out", "C_out", "H_out", "Q_rad"};
    doc.units = {{"T_out", "degC"},
                 {"C_out", "ppm"},
                 {"H_out", "%"},
                 {"Q_rad", "W/m^2"}};
    doc.forecast = synth_disturbances(DisturbanceProfile::ColdNight, horizon, 11);
    {
        Mat h(14, 4);
        for (int i = 0; i < 14; ++i) h.row(i) << 12.0, 420.0, 70.0, 0.0;
        for (int i = 3; i < 9; ++i) h(i, 0) = 12.0 - 2.6 * 3.0;
        doc.history = h;
    }
    const std::string scenario_path =
        (fs::path(out_dir) / "cold_night_scenario.json").string();
    spit(scenario_path, write_scenario(doc));
    const std::string params_path =
        (fs::path(out_dir) / "greenhouse.params").string();
    spit(params_path, write_params("greenhouse-params", params.to_map()));

    OcpSpec spec = build_greenhouse_ocp(params, horizon);
    DecisionContext ctx = scenario_to_context(doc, spec);
    const SolverConfig cfg = pipeline_solver_config();
    OcpSolution sol = solve(spec, ctx, cfg);

    PipelineArtifacts pa;
    pa.kg = &art.kg;
    pa.causal = &art.causal;
    pa.baselines = &art.baselines;
    ExplanationRecord rec =
        generate_explanation(spec, ctx, sol, pa, cfg, "cold-night-demo");

    const std::string rec_path =
        (fs::path(out_dir) / "explanation_cold_night.json").string();
    const std::string text_path =
        (fs::path(out_dir) / "narrative_cold_night.txt").string();
    spit(rec_path, write_explanation(rec));
    spit(text_path, rec.narrative);
    for (const std::string& p :
         {kg_path, causal_path, scenario_path, params_path, rec_path, text_path})
        m.outputs.push_back(p);
    finish_manifest(std::move(m), out_dir);

    std::cout << "first input (u_V, u_C, u_Qh, u_Qc): " << sol.inputs.row(0)
              << "\n\n"
              << rec.narrative << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explainable model predictive control toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // discover
    auto* discover = app.add_subcommand(
        "discover", "fit a lagged causal graph and baselines from history");
    std::string data_path, out_dir = "out";
    int tau_max = 48;
    double alpha = 0.05;
    discover->add_option("--data", data_path, "delimited time-series file")
        ->required();
    discover->add_option("--tau-max", tau_max, "maximum lag in samples");
    discover->add_option("--alpha", alpha, "significance level");
    discover->add_option("--out", out_dir, "output directory");

    // explain
    auto* explain = app.add_subcommand(
        "explain", "generate explanations for scenario decision instants");
    std::vector<std::string> scenario_paths;
    std::string params_path, kg_path, causal_path, thresholds_path;
    bool degraded_ok = false;
    explain->add_option("--scenario", scenario_paths, "scenario document(s)")
        ->required();
    explain->add_option("--model-params", params_path, "model parameter file");
    explain->add_option("--kg", kg_path, "knowledge-graph document");
    explain->add_option("--causal-graph", causal_path, "lagged causal graph");
    explain->add_option("--thresholds", thresholds_path, "threshold table");
    explain->add_flag("--degraded-ok", degraded_ok,
                      "quietly allow missing optional artifacts");
    explain->add_option("--out", out_dir, "output directory");

    // calibrate
    auto* calibrate = app.add_subcommand(
        "calibrate", "calibrate multiplier and cost thresholds");
    std::string multipliers_path, costs_path;
    double calib_frac = 0.125, test_frac = 0.125;
    calibrate
        ->add_option("--multipliers", multipliers_path,
                     "labeled multipliers (family,lambda,is_active)")
        ->required();
    calibrate->add_option("--costs", costs_path,
                          "cost samples (stage_cost,delta_j)");
    calibrate->add_option("--calib-frac", calib_frac, "calibration fraction");
    calibrate->add_option("--test-frac", test_frac, "held-out fraction");
    calibrate->add_option("--out", out_dir, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "run an annotated scenario suite");
    std::string suite = "greenhouse", config_path;
    unsigned seed = 0, kg_seed = 1;
    bool ablations = false;
    std::vector<double> kg_remove, threshold_scales;
    eval->add_option("--config", config_path, "suite-config document");
    eval->add_option("--suite", suite, "greenhouse | thermal | reactor");
    eval->add_option("--seed", seed, "scenario generation seed")->required();
    eval->add_flag("--ablations", ablations,
                   "also run drop-kg / drop-pcmci / drop-kkt cells");
    eval->add_option("--kg-remove", kg_remove,
                     "edge-removal fractions, one report each");
    eval->add_option("--kg-seed", kg_seed, "perturbation seed");
    eval->add_option("--threshold-scales", threshold_scales,
                     "threshold scale factors, one report each");
    eval->add_option("--out", out_dir, "output directory");

    // demo
    auto* demo = app.add_subcommand(
        "demo", "run the cold-night walkthrough end to end");
    demo->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (discover->parsed())
            return cmd_discover(data_path, tau_max, alpha, out_dir, argc, argv);
        if (explain->parsed())
            return cmd_explain(scenario_paths, params_path, kg_path, causal_path,
                               thresholds_path, degraded_ok, out_dir, argc, argv);
        if (calibrate->parsed())
            return cmd_calibrate(multipliers_path, costs_path, calib_frac,
                                 test_frac, out_dir, argc, argv);
        if (eval->parsed())
            return cmd_eval(config_path, suite, seed, ablations, kg_remove,
                            kg_seed, threshold_scales, out_dir, argc, argv);
        if (demo->parsed()) return cmd_demo(out_dir, argc, argv);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
