#ifndef TETHERNET_AUTODIFF_HPP
#define TETHERNET_AUTODIFF_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "tethernet/common.hpp"

namespace tethernet {

/// Minimal reverse-mode tape over dense matrices. Each op records a backward
/// closure; backward() replays them in reverse. Gradients accumulate only into
/// nodes marked as requiring grad (parameters and anything downstream).
class Tape {
public:
    struct Node {
        MatX value;
        MatX grad;
        bool needs_grad = false;
        std::function<void()> backward;
    };

    int constant(MatX v) { return push(std::move(v), false); }

    int param(const MatX& v) { return push(v, true); }

    const MatX& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const MatX& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    int matmul(int a, int b) {
        int out = push(value(a) * value(b), needs(a) || needs(b));
        set_backward(out, [this, a, b, out] {
            if (needs(a)) grad_ref(a).noalias() += grad(out) * value(b).transpose();
            if (needs(b)) grad_ref(b).noalias() += value(a).transpose() * grad(out);
        });
        return out;
    }

    int add(int a, int b) {
        int out = push(value(a) + value(b), needs(a) || needs(b));
        set_backward(out, [this, a, b, out] {
            if (needs(a)) grad_ref(a) += grad(out);
            if (needs(b)) grad_ref(b) += grad(out);
        });
        return out;
    }

    int sub(int a, int b) {
        int out = push(value(a) - value(b), needs(a) || needs(b));
        set_backward(out, [this, a, b, out] {
            if (needs(a)) grad_ref(a) += grad(out);
            if (needs(b)) grad_ref(b) -= grad(out);
        });
        return out;
    }

    /// A (n x d) + broadcast row vector b (1 x d).
    int add_bias(int a, int b) {
        MatX v = value(a);
        v.rowwise() += Eigen::RowVectorXd(value(b).row(0));
        int out = push(std::move(v), needs(a) || needs(b));
        set_backward(out, [this, a, b, out] {
            if (needs(a)) grad_ref(a) += grad(out);
            if (needs(b)) grad_ref(b).row(0) += grad(out).colwise().sum();
        });
        return out;
    }

    int tanh_op(int a) {
        int out = push(value(a).array().tanh().matrix(), needs(a));
        set_backward(out, [this, a, out] {
            if (needs(a))
                grad_ref(a).array() += grad(out).array() * (1.0 - value(out).array().square());
        });
        return out;
    }

    /// Elementwise product with a fixed mask (dropout).
    int mask(int a, MatX m) {
        int mc = constant(std::move(m));
        int out = push((value(a).array() * value(mc).array()).matrix(), needs(a));
        set_backward(out, [this, a, mc, out] {
            if (needs(a)) grad_ref(a).array() += grad(out).array() * value(mc).array();
        });
        return out;
    }

    int concat_cols(int a, int b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        const Eigen::Index ca = va.cols();  // before push: it may reallocate the node store
        MatX v(va.rows(), va.cols() + vb.cols());
        v << va, vb;
        int out = push(std::move(v), needs(a) || needs(b));
        set_backward(out, [this, a, b, out, ca] {
            const auto& g = grad(out);
            if (needs(a)) grad_ref(a) += g.leftCols(ca);
            if (needs(b)) grad_ref(b) += g.rightCols(g.cols() - ca);
        });
        return out;
    }

    int gather_rows(int a, std::vector<int> idx) {
        const auto& va = value(a);
        MatX v(static_cast<Eigen::Index>(idx.size()), va.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = va.row(idx[r]);
        int out = push(std::move(v), needs(a));
        set_backward(out, [this, a, out, idx = std::move(idx)] {
            if (!needs(a)) return;
            auto& g = grad_ref(a);
            const auto& go = grad(out);
            for (std::size_t r = 0; r < idx.size(); ++r)
                g.row(idx[r]) += go.row(static_cast<Eigen::Index>(r));
        });
        return out;
    }

    /// Mean Huber loss of (a - target), elementwise; scalar output.
    int huber_mean(int a, MatX target, double delta) {
        const MatX diff = value(a) - target;
        const auto abs = diff.array().abs();
        const double m = static_cast<double>(diff.size());
        const double loss =
            ((abs <= delta).select(0.5 * diff.array().square(), delta * (abs - 0.5 * delta)))
                .sum() /
            m;
        int out = push(MatX::Constant(1, 1, loss), needs(a));
        set_backward(out, [this, a, out, diff, delta, m] {
            if (!needs(a)) return;
            const double g = grad(out)(0, 0);
            grad_ref(a).array() +=
                g / m * diff.array().max(-delta).min(delta);
        });
        return out;
    }

    /// Mean of squares; scalar output.
    int mean_square(int a) {
        const double m = static_cast<double>(value(a).size());
        int out = push(MatX::Constant(1, 1, value(a).array().square().sum() / m), needs(a));
        set_backward(out, [this, a, out, m] {
            if (needs(a)) grad_ref(a) += grad(out)(0, 0) * 2.0 / m * value(a);
        });
        return out;
    }

    int scale(int a, double s) {
        int out = push(value(a) * s, needs(a));
        set_backward(out, [this, a, out, s] {
            if (needs(a)) grad_ref(a) += s * grad(out);
        });
        return out;
    }

    /// Seed d(loss)/d(loss) = 1 and replay the tape.
    void backward(int loss_id) {
        for (auto& n : nodes_) n.grad = MatX::Zero(n.value.rows(), n.value.cols());
        nodes_[static_cast<std::size_t>(loss_id)].grad(0, 0) = 1.0;
        for (int i = loss_id; i >= 0; --i) {
            auto& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backward && n.needs_grad) n.backward();
        }
    }

private:
    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    MatX& grad_ref(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    int push(MatX v, bool needs_grad) {
        Node n;
        n.value = std::move(v);
        n.needs_grad = needs_grad;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_backward(int id, std::function<void()> fn) {
        nodes_[static_cast<std::size_t>(id)].backward = std::move(fn);
    }

    std::vector<Node> nodes_;
};

}  // namespace tethernet

#endif  // TETHERNET_AUTODIFF_HPP
