#ifndef TETHERNET_GRAPHSPACE_HPP
#define TETHERNET_GRAPHSPACE_HPP

#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"
#include "tethernet/metrics.hpp"

namespace tethernet {

/// The combinatorial space as a complete graph over the 180 nodes.
struct FullGraph {
    const Catalog* catalog = nullptr;

    explicit FullGraph(const Catalog& cat) : catalog(&cat) {}
    int size() const { return static_cast<int>(catalog->nodes().size()); }
};

/// n_sn sampled nodes sharing one continuous context; edge ground truth is the
/// pairwise objective difference d_ij = f_i - f_j.
struct Subgraph {
    std::vector<int> node_ids;  // 1-based catalog ids
    ContinuousVector context;
    std::vector<double> f_values;

    double edge_diff(std::size_t i, std::size_t j) const { return f_values[i] - f_values[j]; }

    MatX edge_matrix() const {
        const auto n = static_cast<Eigen::Index>(f_values.size());
        MatX d(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                d(i, j) = f_values[static_cast<std::size_t>(i)] - f_values[static_cast<std::size_t>(j)];
        return d;
    }
};

struct DatasetRecord {
    int subgraph_id = 0;
    std::vector<int> node_ids;
    std::array<double, ContinuousVector::kDim> normalized_context{};
    std::vector<double> f_values;
    std::vector<char> success;
    std::vector<double> m_prop;
    bool valid = true;
};

struct Dataset {
    std::uint64_t catalog_hash = 0;
    std::uint64_t config_hash = 0;
    int p_sg = 0;
    int n_sn = 0;
    std::uint64_t seed = 0;
    double beta = 1.0;
    std::vector<DatasetRecord> records;
};

/// Draw n_sn distinct node ids uniformly without replacement; if an anchor is
/// given it is always included.
inline std::vector<int> sample_subgraph(const FullGraph& graph, int n_sn, Rng& rng,
                                        std::optional<int> anchor = std::nullopt) {
    const int n_tot = graph.size();
    if (n_sn < 2 || n_sn > n_tot)
        throw ConfigError("subgraph size out of range: " + std::to_string(n_sn));
    std::vector<int> pool(static_cast<std::size_t>(n_tot));
    for (int i = 0; i < n_tot; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n_sn));
    if (anchor) {
        if (*anchor < 1 || *anchor > n_tot) throw ConfigError("anchor node id out of range");
        out.push_back(*anchor);
        pool.erase(pool.begin() + (*anchor - 1));
    }
    // Partial Fisher-Yates over the remainder.
    while (static_cast<int>(out.size()) < n_sn) {
        const std::size_t pick = rng.index(pool.size());
        out.push_back(pool[pick]);
        pool[pick] = pool.back();
        pool.pop_back();
    }
    return out;
}

/// Latin-hypercube contexts over the 17-dim unit box: per coordinate, exactly
/// one sample falls in each of the p_sg strata.
inline std::vector<std::array<double, ContinuousVector::kDim>> latin_hypercube(int p_sg, Rng& rng) {
    std::vector<std::array<double, ContinuousVector::kDim>> pts(static_cast<std::size_t>(p_sg));
    for (int dim = 0; dim < ContinuousVector::kDim; ++dim) {
        std::vector<int> perm(static_cast<std::size_t>(p_sg));
        for (int q = 0; q < p_sg; ++q) perm[static_cast<std::size_t>(q)] = q;
        rng.shuffle(perm);
        for (int q = 0; q < p_sg; ++q)
            pts[static_cast<std::size_t>(q)][dim] =
                (perm[static_cast<std::size_t>(q)] + rng.uniform()) / p_sg;
    }
    return pts;
}

using OutcomeEvaluator = std::function<SimOutcome(const DesignPoint&)>;

/// p_sg subgraphs x n_sn evaluations sharing a Latin-hypercube context each.
/// beta is calibrated as 1.5x the maximum fuel cost observed in a successful
/// capture unless fixed up front; f values are the penalized objective.
inline Dataset generate_dataset(const Catalog& catalog, int p_sg, int n_sn,
                                const OutcomeEvaluator& evaluator, Rng& rng,
                                std::optional<double> fixed_beta = std::nullopt,
                                std::function<void(int, int)> progress = nullptr) {
    FullGraph graph(catalog);
    Dataset ds;
    ds.catalog_hash = catalog.hash();
    ds.p_sg = p_sg;
    ds.n_sn = n_sn;
    const auto contexts = latin_hypercube(p_sg, rng);

    struct RawRecord {
        std::vector<int> node_ids;
        std::array<double, ContinuousVector::kDim> u_context{};
        std::vector<SimOutcome> outcomes;
        bool valid = true;
    };
    std::vector<RawRecord> raw(static_cast<std::size_t>(p_sg));
    for (int q = 0; q < p_sg; ++q) {
        auto& r = raw[static_cast<std::size_t>(q)];
        r.node_ids = sample_subgraph(graph, n_sn, rng);
        r.u_context = contexts[static_cast<std::size_t>(q)];
        const ContinuousVector cont = catalog.denormalize_cont(r.u_context);
        for (int i = 0; i < n_sn; ++i) {
            DesignPoint design{catalog.node(r.node_ids[static_cast<std::size_t>(i)]), cont};
            try {
                r.outcomes.push_back(evaluator(design));
            } catch (const std::exception&) {
                r.valid = false;  // excluded from training
                break;
            }
            if (progress) progress(q * n_sn + i + 1, p_sg * n_sn);
        }
    }

    double max_success_fuel = 0.0;
    bool any_success = false;
    for (const auto& r : raw) {
        if (!r.valid) continue;
        for (const auto& o : r.outcomes)
            if (o.success) {
                any_success = true;
                max_success_fuel = std::max(max_success_fuel, o.m_prop);
            }
    }
    ds.beta = fixed_beta ? *fixed_beta : (any_success ? 1.5 * max_success_fuel : 1.0);

    ObjectiveConfig obj;
    obj.beta = ds.beta;
    for (int q = 0; q < p_sg; ++q) {
        const auto& r = raw[static_cast<std::size_t>(q)];
        DatasetRecord rec;
        rec.subgraph_id = q;
        rec.node_ids = r.node_ids;
        rec.normalized_context = r.u_context;
        rec.valid = r.valid;
        if (r.valid) {
            for (const auto& o : r.outcomes) {
                rec.f_values.push_back(evaluate_objective(o, obj));
                rec.success.push_back(o.success ? 1 : 0);
                rec.m_prop.push_back(o.m_prop);
            }
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

/// Split whole subgraphs (never within one) into train/validation, seeded.
inline std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split_dataset(
    const std::vector<DatasetRecord>& records, double train_ratio, Rng& rng) {
    if (records.size() < 2) throw ConfigError("split_dataset needs at least 2 records");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::lround(train_ratio * records.size()));
    std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(records[order[i]]);
    }
    return out;
}

// --- persistence: line-delimited JSON with a header block ---

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write dataset file: " + path);
    nlohmann::json header = {
        {"format", "tethernet-dataset"},
        {"version", 1},
        {"catalog_hash", hash_hex(ds.catalog_hash)},
        {"config_hash", hash_hex(ds.config_hash)},
        {"p_sg", ds.p_sg},
        {"n_sn", ds.n_sn},
        {"seed", ds.seed},
        {"beta", ds.beta},
    };
    os << header.dump() << "\n";
    for (const auto& r : ds.records) {
        nlohmann::json j = {
            {"subgraph_id", r.subgraph_id}, {"node_ids", r.node_ids},
            {"context", r.normalized_context}, {"f", r.f_values},
            {"success", r.success},           {"m_prop", r.m_prop},
            {"valid", r.valid},
        };
        os << j.dump() << "\n";
    }
}

inline Dataset load_dataset(const std::string& path,
                            std::optional<std::uint64_t> expect_catalog_hash = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty dataset file: " + path);
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "tethernet-dataset")
        throw ConfigError("not a dataset file: " + path);
    Dataset ds;
    ds.catalog_hash = std::stoull(header.at("catalog_hash").get<std::string>(), nullptr, 16);
    ds.config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
    ds.p_sg = header.at("p_sg").get<int>();
    ds.n_sn = header.at("n_sn").get<int>();
    ds.seed = header.at("seed").get<std::uint64_t>();
    ds.beta = header.at("beta").get<double>();
    if (expect_catalog_hash && *expect_catalog_hash != ds.catalog_hash)
        throw ConfigError("dataset catalog hash mismatch: file " + hash_hex(ds.catalog_hash) +
                          " vs current " + hash_hex(*expect_catalog_hash));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        DatasetRecord r;
        r.subgraph_id = j.at("subgraph_id").get<int>();
        r.node_ids = j.at("node_ids").get<std::vector<int>>();
        const auto ctx = j.at("context").get<std::vector<double>>();
        std::copy(ctx.begin(), ctx.end(), r.normalized_context.begin());
        r.f_values = j.at("f").get<std::vector<double>>();
        r.success = j.at("success").get<std::vector<char>>();
        r.m_prop = j.at("m_prop").get<std::vector<double>>();
        r.valid = j.at("valid").get<bool>();
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace tethernet

#endif  // TETHERNET_GRAPHSPACE_HPP
