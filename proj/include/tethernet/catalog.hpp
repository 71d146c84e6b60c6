#ifndef TETHERNET_CATALOG_HPP
#define TETHERNET_CATALOG_HPP

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tethernet/common.hpp"

namespace tethernet {

struct ThrusterSpec {
    double f_t_max;  // max total thrust magnitude [N]
    double i_sp;     // specific impulse [s]
    double m_t;      // thruster dry mass [kg]
};

struct MaterialSpec {
    double e_n;              // Young's modulus [Pa]
    double rho_n;            // density [kg/m^3]
    double ultimate_stress;  // stand-in thread strength [Pa]; tension limit = sigma * A
    double poisson;          // unconfirmed, exposed as config
};

struct NetShapeSpec {
    int n_k;    // knots per net side, one of {9, 11, 13}
    int k_cls;  // closing-node index; higher = closer to edge center
};

/// One of the 180 combinatorial configurations, a node of the full graph.
struct CombNode {
    ThrusterSpec thruster;
    MaterialSpec material;
    NetShapeSpec shape;
    int index = 0;  // dense id in [1, 180]

    std::array<double, 7> feature() const {
        return {thruster.f_t_max, thruster.i_sp,  thruster.m_t,
                material.e_n,     material.rho_n, static_cast<double>(shape.n_k),
                static_cast<double>(shape.k_cls)};
    }
};

/// The 17 continuous design/control variables.
struct ContinuousVector {
    std::array<double, 4> dx{};  // aiming x offsets [m]
    std::array<double, 4> dy{};  // aiming y offsets [m]
    std::array<double, 4> v{};   // final-speed deltas [m/s]
    double m_mu = 2.0;           // MU body mass [kg]
    double r_thread = 1e-3;      // net thread radius [m]
    double r_corner = 1e-3;      // corner thread radius [m]
    double l_net = 22.0;         // net side length [m]
    double l_ct = 1.0;           // corner thread length [m]

    static constexpr int kDim = 17;

    std::array<double, kDim> flat() const {
        return {dx[0], dx[1], dx[2], dx[3], dy[0], dy[1], dy[2], dy[3],
                v[0],  v[1],  v[2],  v[3],  m_mu,  r_thread, r_corner, l_net, l_ct};
    }

    static ContinuousVector from_flat(const std::array<double, kDim>& x) {
        ContinuousVector c;
        for (int i = 0; i < 4; ++i) c.dx[i] = x[i];
        for (int i = 0; i < 4; ++i) c.dy[i] = x[4 + i];
        for (int i = 0; i < 4; ++i) c.v[i] = x[8 + i];
        c.m_mu = x[12];
        c.r_thread = x[13];
        c.r_corner = x[14];
        c.l_net = x[15];
        c.l_ct = x[16];
        return c;
    }
};

struct DesignPoint {
    CombNode comb;
    ContinuousVector cont;
};

struct Bounds {
    double lo;
    double hi;
};

class Catalog {
public:
    Catalog()
        : thrusters_{{{8.9, 60.0, 0.37},
                      {3.6, 57.0, 0.023},
                      {6.1, 277.0, 0.6},
                      {5.5, 253.0, 0.48},
                      {6.0, 250.0, 0.25}}},
          materials_{{{70.0e9, 1390.0, 3.0e9, 0.3},
                      {70.5e9, 1440.0, 3.0e9, 0.3},
                      {112.4e9, 1440.0, 3.0e9, 0.3}}} {
        build_shapes();
        build_nodes();
    }

    Catalog(std::vector<ThrusterSpec> thrusters, std::vector<MaterialSpec> materials)
        : thrusters_(std::move(thrusters)), materials_(std::move(materials)) {
        build_shapes();
        build_nodes();
    }

    const std::vector<ThrusterSpec>& thrusters() const { return thrusters_; }
    const std::vector<MaterialSpec>& materials() const { return materials_; }
    const std::vector<NetShapeSpec>& shapes() const { return shapes_; }

    /// All valid combinations in deterministic thruster-major order.
    const std::vector<CombNode>& nodes() const { return nodes_; }

    const CombNode& node(int index) const {
        if (index < 1 || index > static_cast<int>(nodes_.size()))
            throw ConfigError("combination id out of range: " + std::to_string(index));
        return nodes_[static_cast<std::size_t>(index - 1)];
    }

    static int k_cls_min(int n_k) {
        switch (n_k) {
            case 9: return -2;
            case 11: return -2;
            case 13: return -3;
            default: throw ConfigError("unsupported N_k: " + std::to_string(n_k));
        }
    }
    static int k_cls_max(int n_k) {
        switch (n_k) {
            case 9: return 0;
            case 11: return 1;
            case 13: return 1;
            default: throw ConfigError("unsupported N_k: " + std::to_string(n_k));
        }
    }

    static const std::array<Bounds, ContinuousVector::kDim>& continuous_bounds() {
        static const std::array<Bounds, ContinuousVector::kDim> b = {{
            {-5, 5}, {-5, 5}, {-5, 5}, {-5, 5},          // dx
            {-5, 5}, {-5, 5}, {-5, 5}, {-5, 5},          // dy
            {-1, 4}, {-1, 4}, {-1, 4}, {-1, 4},          // v
            {2, 3},                                      // m_mu
            {5e-4, 1.5e-3},                              // r_thread
            {1e-4, 1.5e-3},                              // r_corner
            {19, 25},                                    // l_net
            {0.5, 2},                                    // l_ct
        }};
        return b;
    }

    static const char* continuous_name(int i) {
        static const char* names[ContinuousVector::kDim] = {
            "dx[0]", "dx[1]", "dx[2]", "dx[3]", "dy[0]", "dy[1]", "dy[2]", "dy[3]",
            "v[0]",  "v[1]",  "v[2]",  "v[3]",  "m_mu",  "r_thread", "r_corner",
            "l_net", "l_ct"};
        return names[i];
    }

    ContinuousVector validate_continuous(const std::array<double, ContinuousVector::kDim>& x) const {
        const auto& b = continuous_bounds();
        for (int i = 0; i < ContinuousVector::kDim; ++i) {
            if (x[i] < b[i].lo) {
                std::ostringstream os;
                os << continuous_name(i) << " below " << b[i].lo << " (got " << x[i] << ")";
                throw ConfigError(os.str());
            }
            if (x[i] > b[i].hi) {
                std::ostringstream os;
                os << continuous_name(i) << " exceeds " << b[i].hi << " (got " << x[i] << ")";
                throw ConfigError(os.str());
            }
        }
        return ContinuousVector::from_flat(x);
    }

    /// Min-max normalization to [0,1]; combinatorial features use the min/max
    /// over all 180 nodes.
    std::array<double, 7> normalize_comb(const CombNode& node) const {
        auto f = node.feature();
        std::array<double, 7> out{};
        for (int j = 0; j < 7; ++j) {
            const double span = comb_hi_[j] - comb_lo_[j];
            out[j] = span > 0 ? (f[j] - comb_lo_[j]) / span : 0.5;
        }
        return out;
    }

    std::array<double, ContinuousVector::kDim> normalize_cont(const ContinuousVector& c) const {
        auto x = c.flat();
        const auto& b = continuous_bounds();
        std::array<double, ContinuousVector::kDim> out{};
        for (int i = 0; i < ContinuousVector::kDim; ++i)
            out[i] = (x[i] - b[i].lo) / (b[i].hi - b[i].lo);
        return out;
    }

    ContinuousVector denormalize_cont(const std::array<double, ContinuousVector::kDim>& u) const {
        const auto& b = continuous_bounds();
        std::array<double, ContinuousVector::kDim> x{};
        for (int i = 0; i < ContinuousVector::kDim; ++i)
            x[i] = b[i].lo + u[i] * (b[i].hi - b[i].lo);
        return ContinuousVector::from_flat(x);
    }

    /// Fingerprint of the option tables; stored in datasets and checkpoints.
    std::uint64_t hash() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& t : thrusters_) os << t.f_t_max << "," << t.i_sp << "," << t.m_t << ";";
        for (const auto& m : materials_)
            os << m.e_n << "," << m.rho_n << "," << m.ultimate_stress << "," << m.poisson << ";";
        for (const auto& s : shapes_) os << s.n_k << "," << s.k_cls << ";";
        return fnv1a(os.str());
    }

private:
    void build_shapes() {
        shapes_.clear();
        for (int n_k : {9, 11, 13}) {
            for (int k = k_cls_min(n_k); k <= k_cls_max(n_k); ++k)
                shapes_.push_back({n_k, k});
        }
    }

    void build_nodes() {
        nodes_.clear();
        int id = 1;
        for (const auto& t : thrusters_)
            for (const auto& m : materials_)
                for (const auto& s : shapes_) nodes_.push_back({t, m, s, id++});
        for (int j = 0; j < 7; ++j) {
            comb_lo_[j] = nodes_.front().feature()[j];
            comb_hi_[j] = comb_lo_[j];
        }
        for (const auto& n : nodes_) {
            auto f = n.feature();
            for (int j = 0; j < 7; ++j) {
                comb_lo_[j] = std::min(comb_lo_[j], f[j]);
                comb_hi_[j] = std::max(comb_hi_[j], f[j]);
            }
        }
    }

    std::vector<ThrusterSpec> thrusters_;
    std::vector<MaterialSpec> materials_;
    std::vector<NetShapeSpec> shapes_;
    std::vector<CombNode> nodes_;
    std::array<double, 7> comb_lo_{};
    std::array<double, 7> comb_hi_{};
};

}  // namespace tethernet

#endif  // TETHERNET_CATALOG_HPP
