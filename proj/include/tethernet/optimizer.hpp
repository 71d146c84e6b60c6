#ifndef TETHERNET_OPTIMIZER_HPP
#define TETHERNET_OPTIMIZER_HPP

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"
#include "tethernet/graphspace.hpp"
#include "tethernet/navco.hpp"

namespace tethernet {

/// Objective callback: full design -> scalar penalized cost. Throwing is
/// treated as an invalid design for the current iteration (cost = +inf).
using DesignEvaluator = std::function<double(const DesignPoint&)>;

/// Discrete recommendation callback: subgraph node ids + continuous context ->
/// chosen node id. The edge-flow model is the production implementation; an
/// exhaustive oracle is the benchmark upper bound.
using NodeRecommender = std::function<int(const std::vector<int>&, const ContinuousVector&)>;

struct SwarmConfig {
    int population = 100;
    int max_iterations = 200;
    double inertia = 0.729;
    double c_personal = 1.49445;
    double c_social = 1.49445;
    int stagnation_window = 15;
    double stagnation_tol = 1e-5;
    int personal_stagnation = 10;  // iterations before discrete re-draw (gnn mode subgraph refresh)
    int subgraph_nodes = 30;       // n_sn for the per-particle recommendation
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct IterationStats {
    int iteration = 0;
    long cumulative_evaluations = 0;
    double best_f = std::numeric_limits<double>::infinity();
    int best_node_id = 0;
    bool feasible = false;  // best so far came from a successful capture region
};

struct ConvergenceHistory {
    std::vector<IterationStats> iterations;
    long total_evaluations = 0;
};

struct OptimizeResult {
    DesignPoint best_design;
    double best_f = std::numeric_limits<double>::infinity();
    ConvergenceHistory history;
    bool stopped_by_stagnation = false;
};

/// First index at which the best-so-far value enters the lower 0.5% band of
/// the overall descent, i.e. best_f <= f_final + 0.005 * (f_initial - f_final).
inline int detect_convergence(const std::vector<double>& best_f, double band = 0.005) {
    if (best_f.empty()) return -1;
    const double threshold = best_f.back() + band * (best_f.front() - best_f.back());
    for (std::size_t i = 0; i < best_f.size(); ++i)
        if (best_f[i] <= threshold) return static_cast<int>(i);
    return static_cast<int>(best_f.size()) - 1;
}

inline int detect_convergence(const ConvergenceHistory& history, double band = 0.005) {
    std::vector<double> best;
    best.reserve(history.iterations.size());
    for (const auto& it : history.iterations) best.push_back(it.best_f);
    const int idx = detect_convergence(best, band);
    return idx < 0 ? -1 : history.iterations[static_cast<std::size_t>(idx)].iteration;
}

namespace optimizer_detail {

struct Particle {
    std::array<double, ContinuousVector::kDim> x{};
    std::array<double, ContinuousVector::kDim> v{};
    std::array<double, ContinuousVector::kDim> best_x{};
    double best_f = std::numeric_limits<double>::infinity();
    int best_node = 0;
    int node_id = 0;          // current discrete choice
    double x_int = 1.0;       // baseline mode only: continuous relaxation of node id
    double v_int = 0.0;
    double best_x_int = 1.0;
    int since_improved = 0;
    Rng rng{0};
};

/// Initial positions/velocities shared between modes: with the same seed the
/// continuous state of particle p is identical in gnn and baseline runs.
inline std::vector<Particle> init_swarm(const SwarmConfig& cfg, int n_nodes, Rng& rng) {
    std::vector<Particle> swarm(static_cast<std::size_t>(cfg.population));
    for (auto& p : swarm) {
        for (int d = 0; d < ContinuousVector::kDim; ++d) {
            p.x[static_cast<std::size_t>(d)] = rng.uniform();
            p.v[static_cast<std::size_t>(d)] = rng.uniform(-0.1, 0.1);
        }
        p.best_x = p.x;
        p.x_int = rng.uniform(1.0, static_cast<double>(n_nodes));
        p.v_int = rng.uniform(-0.1, 0.1) * n_nodes;
        p.best_x_int = p.x_int;
        p.rng = rng.spawn();
    }
    return swarm;
}

inline int round_node(double x_int, int n_nodes) {
    const auto id = static_cast<int>(std::lround(x_int));
    return std::min(n_nodes, std::max(1, id));
}

/// Evaluate a batch of designs, optionally across threads (shared-nothing:
/// each worker owns its slice; the evaluator must be re-entrant).
inline std::vector<double> evaluate_batch(const std::vector<DesignPoint>& designs,
                                          const DesignEvaluator& evaluate, int jobs) {
    std::vector<double> out(designs.size(), std::numeric_limits<double>::infinity());
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                const double f = evaluate(designs[i]);
                out[i] = std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
            } catch (const std::exception&) {
                // invalid design this iteration; keep +inf
            }
        }
    };
    const int n_jobs = std::max(1, jobs);
    if (n_jobs == 1 || designs.size() < 2) {
        work(0, designs.size());
        return out;
    }
    std::vector<std::thread> threads;
    const std::size_t chunk = (designs.size() + static_cast<std::size_t>(n_jobs) - 1) /
                              static_cast<std::size_t>(n_jobs);
    for (int t = 0; t < n_jobs; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(designs.size(), lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back(work, lo, hi);
    }
    for (auto& th : threads) th.join();
    return out;
}

enum class Mode { recommender, baseline };

inline OptimizeResult run_swarm(const Catalog& catalog, const DesignEvaluator& evaluate,
                                const SwarmConfig& cfg, Mode mode,
                                const NodeRecommender& recommend_node) {
    if (cfg.population < 1 || cfg.max_iterations < 1)
        throw ConfigError("swarm: population and max_iterations must be >= 1");
    if (mode == Mode::recommender && !recommend_node)
        throw ConfigError("recommender mode requires a recommendation callback");
    FullGraph graph(catalog);
    const int n_nodes = graph.size();
    Rng rng(cfg.seed);
    auto swarm = init_swarm(cfg, n_nodes, rng);

    OptimizeResult result;
    double global_f = std::numeric_limits<double>::infinity();
    std::array<double, ContinuousVector::kDim> global_x{};
    double global_x_int = 1.0;
    int global_node = 0;
    long evals = 0;

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        // Discrete choice per particle. Iteration 0 always evaluates the
        // shared random initialization (identical across modes for one seed);
        // the recommender takes over from iteration 1.
        std::vector<DesignPoint> designs(swarm.size());
        for (std::size_t pi = 0; pi < swarm.size(); ++pi) {
            auto& p = swarm[pi];
            const ContinuousVector cont = catalog.denormalize_cont(p.x);
            if (mode == Mode::recommender && iter > 0) {
                // Fresh subgraph each iteration, anchored at the particle's
                // previous choice so good regions persist; a stagnating
                // particle drops its anchor to re-diversify.
                std::optional<int> anchor =
                    (p.node_id >= 1 && p.since_improved < cfg.personal_stagnation)
                        ? std::optional<int>(p.node_id)
                        : std::nullopt;
                if (!anchor) p.since_improved = 0;
                const auto ids = sample_subgraph(graph, cfg.subgraph_nodes, p.rng, anchor);
                p.node_id = recommend_node(ids, cont);
            } else if (mode == Mode::baseline || iter == 0) {
                p.node_id = round_node(p.x_int, n_nodes);
                if (mode == Mode::baseline && p.since_improved >= cfg.personal_stagnation) {
                    p.x_int = p.rng.uniform(1.0, static_cast<double>(n_nodes));
                    p.v_int = 0.0;
                    p.node_id = round_node(p.x_int, n_nodes);
                    p.since_improved = 0;
                }
            }
            designs[pi] = DesignPoint{catalog.node(p.node_id), cont};
        }

        const auto f_vals = evaluate_batch(designs, evaluate, cfg.jobs);
        evals += static_cast<long>(designs.size());

        for (std::size_t pi = 0; pi < swarm.size(); ++pi) {
            auto& p = swarm[pi];
            const double f = f_vals[pi];
            if (f < p.best_f) {
                p.best_f = f;
                p.best_x = p.x;
                p.best_x_int = p.x_int;
                p.best_node = p.node_id;
                p.since_improved = 0;
            } else {
                ++p.since_improved;
            }
            if (f < global_f) {
                global_f = f;
                global_x = p.x;
                global_x_int = p.x_int;
                global_node = p.node_id;
                result.best_design = designs[pi];
            }
        }

        IterationStats stats;
        stats.iteration = iter;
        stats.cumulative_evaluations = evals;
        stats.best_f = global_f;
        stats.best_node_id = global_node;
        stats.feasible = std::isfinite(global_f);
        result.history.iterations.push_back(stats);

        // Stagnation stop over the trailing window.
        if (static_cast<int>(result.history.iterations.size()) > cfg.stagnation_window) {
            const auto& hist = result.history.iterations;
            const double past =
                hist[hist.size() - 1 - static_cast<std::size_t>(cfg.stagnation_window)].best_f;
            if (std::isfinite(past) && past - global_f < cfg.stagnation_tol) {
                result.stopped_by_stagnation = true;
                break;
            }
        }

        // Velocity/position update (constriction-style weights, clamped box).
        for (auto& p : swarm) {
            for (int d = 0; d < ContinuousVector::kDim; ++d) {
                const auto sd = static_cast<std::size_t>(d);
                const double r1 = p.rng.uniform();
                const double r2 = p.rng.uniform();
                p.v[sd] = cfg.inertia * p.v[sd] +
                          cfg.c_personal * r1 * (p.best_x[sd] - p.x[sd]) +
                          cfg.c_social * r2 * (global_x[sd] - p.x[sd]);
                p.v[sd] = std::clamp(p.v[sd], -0.5, 0.5);
                p.x[sd] = std::clamp(p.x[sd] + p.v[sd], 0.0, 1.0);
            }
            if (mode == Mode::baseline) {
                const double r1 = p.rng.uniform();
                const double r2 = p.rng.uniform();
                p.v_int = cfg.inertia * p.v_int +
                          cfg.c_personal * r1 * (p.best_x_int - p.x_int) +
                          cfg.c_social * r2 * (global_x_int - p.x_int);
                p.v_int = std::clamp(p.v_int, -0.5 * n_nodes, 0.5 * n_nodes);
                p.x_int = std::clamp(p.x_int + p.v_int, 1.0, static_cast<double>(n_nodes));
            }
        }
    }

    result.best_f = global_f;
    result.history.total_evaluations = evals;
    if (!std::isfinite(global_f)) throw SimError("swarm: no finite objective value found");
    return result;
}

}  // namespace optimizer_detail

/// Bounded pattern search on the 17 continuous variables with the discrete
/// choice frozen: coordinate probes at a shrinking step (5% of range down to
/// 0.1%), capped at max_evals objective calls.
inline OptimizeResult polish_continuous(const Catalog& catalog, const DesignEvaluator& evaluate,
                                        const DesignPoint& start, double start_f,
                                        int max_evals = 200) {
    OptimizeResult out;
    out.best_design = start;
    out.best_f = start_f;
    auto u = catalog.normalize_cont(start.cont);
    double step = 0.05;
    int evals = 0;
    while (step >= 0.001 && evals < max_evals) {
        bool improved = false;
        for (int d = 0; d < ContinuousVector::kDim && evals < max_evals; ++d) {
            for (const double dir : {+1.0, -1.0}) {
                if (evals >= max_evals) break;
                auto trial = u;
                const auto sd = static_cast<std::size_t>(d);
                trial[sd] = std::clamp(trial[sd] + dir * step, 0.0, 1.0);
                if (trial[sd] == u[sd]) continue;
                DesignPoint candidate{start.comb, catalog.denormalize_cont(trial)};
                double f = std::numeric_limits<double>::infinity();
                try {
                    f = evaluate(candidate);
                    ++evals;
                } catch (const std::exception&) {
                    ++evals;
                }
                if (f < out.best_f) {
                    out.best_f = f;
                    out.best_design = candidate;
                    u = trial;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    out.history.total_evaluations = evals;
    return out;
}

/// PSO over the continuous context with an injected discrete recommender; each
/// particle's choice comes from the callback evaluated on a freshly sampled
/// subgraph conditioned on that particle's context.
inline OptimizeResult recommender_optimize(const Catalog& catalog,
                                           const NodeRecommender& recommender,
                                           const DesignEvaluator& evaluate,
                                           const SwarmConfig& cfg) {
    return optimizer_detail::run_swarm(catalog, evaluate, cfg,
                                       optimizer_detail::Mode::recommender, recommender);
}

/// Production mode: the edge-flow model supplies the discrete choice.
inline OptimizeResult gnn_aided_optimize(const Catalog& catalog, EdgeFlowModel& model,
                                         const DesignEvaluator& evaluate, const SwarmConfig& cfg) {
    return recommender_optimize(
        catalog,
        [&](const std::vector<int>& ids, const ContinuousVector& cont) {
            return recommend(model, catalog, ids, cont);
        },
        evaluate, cfg);
}

/// Baseline: the discrete choice is an 18th particle dimension in [1, 180],
/// rounded to the nearest node id at evaluation time.
inline OptimizeResult baseline_optimize(const Catalog& catalog, const DesignEvaluator& evaluate,
                                        const SwarmConfig& cfg) {
    return optimizer_detail::run_swarm(catalog, evaluate, cfg, optimizer_detail::Mode::baseline,
                                       nullptr);
}

}  // namespace tethernet

#endif  // TETHERNET_OPTIMIZER_HPP
