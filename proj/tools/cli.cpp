// tethernet command-line driver: catalog inspection, capture simulation,
// dataset generation, recommender training, optimization, and report plots.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"
#include "tethernet/graphspace.hpp"
#include "tethernet/navco.hpp"
#include "tethernet/netsim.hpp"
#include "tethernet/optimizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tethernet;

namespace {

struct CliConfig {
    SimConfig sim;
    int p_sg = 100;
    int n_sn = 30;
    std::uint64_t seed = 1;
    ModelConfig model;
    SwarmConfig swarm;
    std::string output_dir = "out";
};

json config_to_json(const CliConfig& c) {
    return json{
        {"simulation",
         {{"dt", c.sim.dt},
          {"t_thrust", c.sim.t_thrust},
          {"t_end", c.sim.t_end},
          {"k_contact", c.sim.k_contact},
          {"c_contact", c.sim.c_contact},
          {"c_tangent", c.sim.c_tangent},
          {"stiffness_scale", c.sim.stiffness_scale},
          {"closing_stiffness_boost", c.sim.closing_stiffness_boost},
          {"target_position", {c.sim.scenario.target_position.x(),
                               c.sim.scenario.target_position.y(),
                               c.sim.scenario.target_position.z()}}}},
        {"dataset", {{"p_sg", c.p_sg}, {"n_sn", c.n_sn}, {"seed", c.seed}}},
        {"model",
         {{"lambda_cycle", c.model.lambda_cycle},
          {"dropout", c.model.dropout},
          {"learning_rate", c.model.learning_rate},
          {"max_epochs", c.model.max_epochs},
          {"patience", c.model.patience},
          {"seed", c.model.seed}}},
        {"swarm",
         {{"population", c.swarm.population},
          {"max_iterations", c.swarm.max_iterations},
          {"seed", c.swarm.seed},
          {"jobs", c.swarm.jobs}}},
        {"output_dir", c.output_dir},
    };
}

void apply_config_json(const json& j, CliConfig& c) {
    if (j.contains("simulation")) {
        const auto& s = j["simulation"];
        if (s.contains("dt")) c.sim.dt = s["dt"].get<double>();
        if (s.contains("t_thrust")) c.sim.t_thrust = s["t_thrust"].get<double>();
        if (s.contains("t_end")) c.sim.t_end = s["t_end"].get<double>();
        if (s.contains("k_contact")) c.sim.k_contact = s["k_contact"].get<double>();
        if (s.contains("c_contact")) c.sim.c_contact = s["c_contact"].get<double>();
        if (s.contains("c_tangent")) c.sim.c_tangent = s["c_tangent"].get<double>();
        if (s.contains("stiffness_scale")) c.sim.stiffness_scale = s["stiffness_scale"].get<double>();
        if (s.contains("closing_stiffness_boost"))
            c.sim.closing_stiffness_boost = s["closing_stiffness_boost"].get<double>();
        if (s.contains("target_position")) {
            const auto v = s["target_position"].get<std::vector<double>>();
            if (v.size() != 3) throw ConfigError("target_position needs 3 entries");
            c.sim.scenario.target_position = Vec3(v[0], v[1], v[2]);
        }
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("p_sg")) c.p_sg = d["p_sg"].get<int>();
        if (d.contains("n_sn")) c.n_sn = d["n_sn"].get<int>();
        if (d.contains("seed")) c.seed = d["seed"].get<std::uint64_t>();
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.contains("lambda_cycle")) c.model.lambda_cycle = m["lambda_cycle"].get<double>();
        if (m.contains("dropout")) c.model.dropout = m["dropout"].get<double>();
        if (m.contains("learning_rate")) c.model.learning_rate = m["learning_rate"].get<double>();
        if (m.contains("max_epochs")) c.model.max_epochs = m["max_epochs"].get<int>();
        if (m.contains("patience")) c.model.patience = m["patience"].get<int>();
        if (m.contains("seed")) c.model.seed = m["seed"].get<std::uint64_t>();
    }
    if (j.contains("swarm")) {
        const auto& s = j["swarm"];
        if (s.contains("population")) c.swarm.population = s["population"].get<int>();
        if (s.contains("max_iterations")) c.swarm.max_iterations = s["max_iterations"].get<int>();
        if (s.contains("seed")) c.swarm.seed = s["seed"].get<std::uint64_t>();
        if (s.contains("jobs")) c.swarm.jobs = s["jobs"].get<int>();
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
}

CliConfig load_config(const std::string& explicit_path) {
    CliConfig c;
    std::string path = explicit_path;
    if (path.empty()) {
        if (const char* env = std::getenv("TETHERNET_CONFIG")) path = env;
    }
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file: " + path);
        json j;
        is >> j;
        apply_config_json(j, c);
    }
    return c;
}

std::uint64_t config_hash(const CliConfig& c) { return fnv1a(config_to_json(c).dump()); }

std::string artifact_header(const CliConfig& c, std::uint64_t seed) {
    std::ostringstream os;
    os << "# config_hash=" << hash_hex(config_hash(c)) << " seed=" << seed << "\n";
    return os.str();
}

DesignPoint load_design(const Catalog& catalog, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open design file: " + path);
    json j;
    is >> j;
    DesignPoint d;
    d.comb = catalog.node(j.at("comb").get<int>());
    std::array<double, ContinuousVector::kDim> x{};
    const auto& cont = j.at("cont");
    for (int i = 0; i < 4; ++i) x[static_cast<std::size_t>(i)] = cont.at("dx")[static_cast<std::size_t>(i)].get<double>();
    for (int i = 0; i < 4; ++i) x[static_cast<std::size_t>(4 + i)] = cont.at("dy")[static_cast<std::size_t>(i)].get<double>();
    for (int i = 0; i < 4; ++i) x[static_cast<std::size_t>(8 + i)] = cont.at("v")[static_cast<std::size_t>(i)].get<double>();
    x[12] = cont.at("m_mu").get<double>();
    x[13] = cont.at("r_thread").get<double>();
    x[14] = cont.at("r_corner").get<double>();
    x[15] = cont.at("l_net").get<double>();
    x[16] = cont.at("l_ct").get<double>();
    d.cont = catalog.validate_continuous(x);
    return d;
}

void save_design(const DesignPoint& d, const std::string& path) {
    json j;
    j["comb"] = d.comb.index;
    j["cont"] = {{"dx", d.cont.dx}, {"dy", d.cont.dy}, {"v", d.cont.v},
                 {"m_mu", d.cont.m_mu}, {"r_thread", d.cont.r_thread},
                 {"r_corner", d.cont.r_corner}, {"l_net", d.cont.l_net},
                 {"l_ct", d.cont.l_ct}};
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write design file: " + path);
    os << j.dump(2) << "\n";
}

// Minimal SVG line plot from (x, y) series.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<std::vector<std::pair<double, double>>>& series) {
    const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s) {
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write plot file: " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
       << "</text>\n";
    os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
       << "' stroke='black'/>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        os << "<polyline fill='none' stroke='" << colors[si % 4] << "' stroke-width='1.5' points='";
        for (const auto& [x, y] : series[si]) os << px(x) << "," << py(y) << " ";
        os << "'/>\n";
    }
    os << "</svg>\n";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open CSV: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

int cmd_catalog(const CliConfig&) {
    Catalog cat;
    std::cout << "id,thrust_N,isp_s,thruster_kg,E_Pa,rho_kgm3,n_k,k_cls\n";
    for (const auto& n : cat.nodes()) {
        std::cout << n.index << "," << n.thruster.f_t_max << "," << n.thruster.i_sp << ","
                  << n.thruster.m_t << "," << n.material.e_n << "," << n.material.rho_n << ","
                  << n.shape.n_k << "," << n.shape.k_cls << "\n";
    }
    std::cout << "# total " << cat.nodes().size() << " combinations, catalog_hash="
              << hash_hex(cat.hash()) << "\n";
    return 0;
}

int cmd_simulate(const CliConfig& cfg, const std::string& design_path, const std::string& out_dir) {
    Catalog cat;
    const DesignPoint design = load_design(cat, design_path);
    fs::create_directories(out_dir);
    NetSimulation sim(design, cfg.sim);
    const SimOutcome out = sim.run();

    std::ofstream os(fs::path(out_dir) / "outcome.txt");
    os << artifact_header(cfg, cfg.seed);
    os << "comb " << design.comb.index << "\n"
       << "cqi_final " << out.cqi_final << "\n"
       << "n_locked " << out.n_locked << "\n"
       << "m_prop " << out.m_prop << "\n"
       << "tension_failed " << (out.tension_failed ? 1 : 0) << "\n"
       << "success " << (out.success ? 1 : 0) << "\n";
    for (int m = 0; m < 4; ++m) {
        std::ofstream cs(fs::path(out_dir) / ("mu" + std::to_string(m) + "_trajectory.csv"));
        cs << artifact_header(cfg, cfg.seed);
        cs << "t,x,y,z,vx,vy,vz,Fx,Fy,Fz\n";
        cs.precision(12);
        for (const auto& rec : sim.mu_records()[static_cast<std::size_t>(m)]) {
            cs << rec.t << "," << rec.position.x() << "," << rec.position.y() << ","
               << rec.position.z() << "," << rec.velocity.x() << "," << rec.velocity.y() << ","
               << rec.velocity.z() << "," << rec.force.x() << "," << rec.force.y() << ","
               << rec.force.z() << "\n";
        }
    }
    std::cout << "cqi=" << out.cqi_final << " locked=" << out.n_locked << " m_prop=" << out.m_prop
              << " success=" << (out.success ? 1 : 0) << "\n";
    return 0;
}

int cmd_dataset(const CliConfig& cfg, const std::string& out_path) {
    Catalog cat;
    Rng rng(cfg.seed);
    SimConfig sim_cfg = cfg.sim;
    const auto evaluator = [&](const DesignPoint& d) { return run_capture(d, sim_cfg); };
    int last_pct = -1;
    Dataset ds = generate_dataset(cat, cfg.p_sg, cfg.n_sn, evaluator, rng, std::nullopt,
                                  [&](int done, int total) {
                                      const int pct = done * 100 / total;
                                      if (pct / 10 != last_pct / 10) {
                                          std::cerr << "dataset: " << pct << "%\n";
                                          last_pct = pct;
                                      }
                                  });
    ds.seed = cfg.seed;
    ds.config_hash = config_hash(cfg);
    if (const auto dir = fs::path(out_path).parent_path(); !dir.empty()) fs::create_directories(dir);
    save_dataset(ds, out_path);
    int n_success = 0, n_total = 0;
    for (const auto& r : ds.records)
        for (char s : r.success) { n_total++; n_success += s; }
    std::cout << "dataset: " << ds.records.size() << " subgraphs, " << n_total
              << " evaluations, " << n_success << " successful captures, beta=" << ds.beta << "\n";
    return 0;
}

int cmd_train(const CliConfig& cfg, const std::string& data_path, const std::string& out_path,
              const std::string& report_path) {
    Catalog cat;
    const Dataset ds = load_dataset(data_path, cat.hash());
    Rng split_rng(cfg.seed);
    auto [train_recs, val_recs] = split_dataset(ds.records, 0.8, split_rng);

    std::ofstream report;
    if (!report_path.empty()) {
        report.open(report_path);
        report << artifact_header(cfg, cfg.model.seed);
        report << "epoch,train_edge,val_edge,cycle,sign_acc\n";
        report.precision(10);
    }
    auto [model, tr] = train(cat, train_recs, val_recs, cfg.model, [&](const EpochStats& e) {
        std::cerr << "epoch " << e.epoch << " train_edge=" << e.train_edge
                  << " val_edge=" << e.val_edge << " sign_acc=" << e.sign_acc << "\n";
        if (report)
            report << e.epoch << "," << e.train_edge << "," << e.val_edge << "," << e.cycle << ","
                   << e.sign_acc << "\n";
    });
    if (tr.aborted_nan) std::cerr << "warning: non-finite loss, kept last finite checkpoint\n";
    if (const auto dir = fs::path(out_path).parent_path(); !dir.empty()) fs::create_directories(dir);
    save_checkpoint(model, out_path);
    std::cout << "best epoch " << tr.best_epoch << " val_edge=" << tr.best_val_edge << "\n";
    return 0;
}

int cmd_optimize(const CliConfig& cfg, const std::string& method, const std::string& model_path,
                 const std::string& out_dir) {
    Catalog cat;
    SimConfig sim_cfg = cfg.sim;
    // Penalized objective around the simulator; beta from a fixed conservative
    // default when no dataset calibration is available.
    ObjectiveConfig obj;
    obj.beta = 1.5;
    const DesignEvaluator evaluate = [&](const DesignPoint& d) {
        return evaluate_objective(run_capture(d, sim_cfg), obj);
    };

    OptimizeResult result;
    if (method == "gnn") {
        if (model_path.empty()) throw ConfigError("--model is required for --method gnn");
        EdgeFlowModel model = load_checkpoint(model_path, cat.hash());
        result = gnn_aided_optimize(cat, model, evaluate, cfg.swarm);
    } else if (method == "plain") {
        result = baseline_optimize(cat, evaluate, cfg.swarm);
    } else {
        throw ConfigError("unknown method: " + method + " (expected gnn or plain)");
    }

    fs::create_directories(out_dir);
    {
        std::ofstream cs(fs::path(out_dir) / "convergence.csv");
        cs << artifact_header(cfg, cfg.swarm.seed);
        cs << "iteration,evals,best_f,feasible\n";
        cs.precision(12);
        for (const auto& it : result.history.iterations)
            cs << it.iteration << "," << it.cumulative_evaluations << "," << it.best_f << ","
               << (it.feasible ? 1 : 0) << "\n";
    }
    save_design(result.best_design, (fs::path(out_dir) / "best_design.json").string());
    {
        std::ofstream os(fs::path(out_dir) / "summary.txt");
        os << artifact_header(cfg, cfg.swarm.seed);
        os << "method " << method << "\n"
           << "best_f " << result.best_f << "\n"
           << "best_comb " << result.best_design.comb.index << "\n"
           << "evaluations " << result.history.total_evaluations << "\n"
           << "iterations " << result.history.iterations.size() << "\n"
           << "converged_iteration " << detect_convergence(result.history) << "\n"
           << "stopped_by_stagnation " << (result.stopped_by_stagnation ? 1 : 0) << "\n";
    }
    std::cout << "best_f=" << result.best_f << " comb=" << result.best_design.comb.index
              << " evals=" << result.history.total_evaluations << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    int produced = 0;
    const fs::path conv = fs::path(run_dir) / "convergence.csv";
    if (fs::exists(conv)) {
        const auto rows = read_csv(conv.string());
        std::vector<std::pair<double, double>> pts;
        for (std::size_t r = 1; r < rows.size(); ++r)
            pts.emplace_back(std::stod(rows[r][1]), std::stod(rows[r][2]));
        write_svg_plot((fs::path(run_dir) / "convergence.svg").string(),
                       "best objective vs evaluations", {pts});
        ++produced;
    }
    std::vector<std::vector<std::pair<double, double>>> traj;
    for (int m = 0; m < 4; ++m) {
        const fs::path p = fs::path(run_dir) / ("mu" + std::to_string(m) + "_trajectory.csv");
        if (!fs::exists(p)) continue;
        const auto rows = read_csv(p.string());
        std::vector<std::pair<double, double>> pts;
        for (std::size_t r = 1; r < rows.size(); ++r)
            pts.emplace_back(std::stod(rows[r][0]), std::stod(rows[r][3]));
        traj.push_back(std::move(pts));
    }
    if (!traj.empty()) {
        write_svg_plot((fs::path(run_dir) / "trajectory.svg").string(), "MU altitude vs time", traj);
        ++produced;
    }
    if (produced == 0) throw ConfigError("no plottable CSVs in " + run_dir);
    std::cout << "wrote " << produced << " plot(s) to " << run_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tether-net capture co-design toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "config file (or TETHERNET_CONFIG env)");

    auto* c_catalog = app.add_subcommand("catalog", "list the combinatorial catalog");
    c_catalog->add_subcommand("list", "print all combinations as CSV");

    std::string design_path, out_path = "out";
    auto* c_sim = app.add_subcommand("simulate", "run one capture simulation");
    c_sim->add_option("--design", design_path, "design JSON file")->required();
    c_sim->add_option("--out", out_path, "output directory");
    double dt_override = 0.0;
    c_sim->add_option("--dt", dt_override, "integrator step override");

    auto* c_data = app.add_subcommand("dataset", "dataset commands");
    auto* c_gen = c_data->add_subcommand("generate", "generate a training dataset");
    int p_sg = 0, n_sn = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string data_out = "dataset.jsonl";
    c_gen->add_option("--subgraphs", p_sg, "number of subgraphs");
    c_gen->add_option("--nodes", n_sn, "nodes per subgraph");
    c_gen->add_option("--seed", seed, "rng seed")->each([&](const std::string&) { seed_set = true; });
    c_gen->add_option("--out", data_out, "output dataset file");
    c_gen->add_option("--dt", dt_override, "integrator step override");

    auto* c_train = app.add_subcommand("train", "train the edge-flow recommender");
    std::string train_data, ckpt_out = "model.ckpt", report_csv;
    double lambda_cycle = -1.0;
    int epochs = 0;
    c_train->add_option("--data", train_data, "dataset file")->required();
    c_train->add_option("--out", ckpt_out, "checkpoint output path");
    c_train->add_option("--report", report_csv, "per-epoch CSV output path");
    c_train->add_option("--lambda-cycle", lambda_cycle, "cycle-consistency weight");
    c_train->add_option("--epochs", epochs, "max training epochs");
    c_train->add_option("--seed", seed, "rng seed")->each([&](const std::string&) { seed_set = true; });

    auto* c_opt = app.add_subcommand("optimize", "run the mixed-discrete optimizer");
    std::string method = "gnn", model_path;
    int pop = 0, max_iter = 0, jobs = 0;
    c_opt->add_option("--method", method, "gnn or plain")->required();
    c_opt->add_option("--model", model_path, "trained checkpoint (gnn mode)");
    c_opt->add_option("--out", out_path, "output directory");
    c_opt->add_option("--pop", pop, "swarm population");
    c_opt->add_option("--max-iter", max_iter, "iteration cap");
    c_opt->add_option("--seed", seed, "rng seed")->each([&](const std::string&) { seed_set = true; });
    c_opt->add_option("--jobs", jobs, "parallel evaluation workers");
    c_opt->add_option("--dt", dt_override, "integrator step override");

    auto* c_rep = app.add_subcommand("report", "render SVG plots from run CSVs");
    std::string run_dir = "out";
    c_rep->add_option("--run", run_dir, "run directory with CSV artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        CliConfig cfg = load_config(config_path);
        if (dt_override > 0.0) cfg.sim.dt = dt_override;
        if (p_sg > 0) cfg.p_sg = p_sg;
        if (n_sn > 0) cfg.n_sn = n_sn;
        if (seed_set) {
            cfg.seed = seed;
            cfg.model.seed = seed;
            cfg.swarm.seed = seed;
        }
        if (lambda_cycle >= 0.0) cfg.model.lambda_cycle = lambda_cycle;
        if (epochs > 0) cfg.model.max_epochs = epochs;
        if (pop > 0) cfg.swarm.population = pop;
        if (max_iter > 0) cfg.swarm.max_iterations = max_iter;
        cfg.swarm.jobs = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());

        if (*c_catalog) return cmd_catalog(cfg);
        if (*c_sim) return cmd_simulate(cfg, design_path, out_path);
        if (*c_gen) return cmd_dataset(cfg, data_out);
        if (*c_train) return cmd_train(cfg, train_data, ckpt_out, report_csv);
        if (*c_opt) return cmd_optimize(cfg, method, model_path, out_path);
        if (*c_rep) return cmd_report(run_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
