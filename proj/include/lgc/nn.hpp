#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lgc/util.hpp"

namespace lgc::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contiguous view over one parameter tensor; the flat parameter list is
// the canonical order for the optimizer, checkpoints, and FD probes.
struct ParamSpan {
    double* data;
    Eigen::Index size;
};

inline void check_in(Eigen::Index got, Eigen::Index want, const char* where) {
    if (got != want)
        throw ShapeMismatch(std::string(where) + ": got " + std::to_string(got) + ", want " +
                            std::to_string(want));
}

struct Linear {
    Mat W;
    Vec b;

    void init(int out, int in, Rng& rng) {
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        W = Mat::NullaryExpr(out, in, [&]() { return rng.uniform(-s, s); });
        b = Vec::Zero(out);
    }
    Vec forward(const Vec& x) const {
        check_in(x.size(), W.cols(), "Linear");
        return W * x + b;
    }
    void spans(std::vector<ParamSpan>& out) {
        out.push_back({W.data(), W.size()});
        out.push_back({b.data(), b.size()});
    }
};

// z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br)
// c = tanh(Wh x + Uh (r.h) + bh); h' = (1-z).h + z.c
struct GruCell {
    Mat Wz, Uz, Wr, Ur, Wh, Uh;
    Vec bz, br, bh;

    void init(int hidden, int in, Rng& rng) {
        const double si = 1.0 / std::sqrt(static_cast<double>(in));
        const double sh = 1.0 / std::sqrt(static_cast<double>(hidden));
        auto mk_i = [&]() { return Mat::NullaryExpr(hidden, in, [&]() { return rng.uniform(-si, si); }); };
        auto mk_h = [&]() { return Mat::NullaryExpr(hidden, hidden, [&]() { return rng.uniform(-sh, sh); }); };
        Wz = mk_i(); Wr = mk_i(); Wh = mk_i();
        Uz = mk_h(); Ur = mk_h(); Uh = mk_h();
        bz = Vec::Zero(hidden); br = Vec::Zero(hidden); bh = Vec::Zero(hidden);
    }

    struct Cache {
        Vec x, h_prev, z, r, c;
    };

    static Vec sigmoid(const Vec& v) {
        return v.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
    }

    Vec forward(const Vec& x, const Vec& h_prev, Cache* cache = nullptr) const {
        check_in(x.size(), Wz.cols(), "GruCell.x");
        check_in(h_prev.size(), Uz.cols(), "GruCell.h");
        Vec z = sigmoid(Wz * x + Uz * h_prev + bz);
        Vec r = sigmoid(Wr * x + Ur * h_prev + br);
        Vec c = (Wh * x + Uh * (r.cwiseProduct(h_prev)) + bh).array().tanh();
        Vec h = (Vec::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(c);
        if (cache) *cache = {x, h_prev, z, r, c};
        return h;
    }

    // Accumulates parameter grads into `g`; returns (dx, dh_prev).
    std::pair<Vec, Vec> backward(const Cache& k, const Vec& dh, GruCell& g) const {
        const Vec one = Vec::Ones(dh.size());
        Vec dz = dh.cwiseProduct(k.c - k.h_prev);
        Vec dc = dh.cwiseProduct(k.z);
        Vec dh_prev = dh.cwiseProduct(one - k.z);

        Vec da_c = dc.cwiseProduct(one - k.c.cwiseProduct(k.c));
        g.Wh.noalias() += da_c * k.x.transpose();
        g.Uh.noalias() += da_c * (k.r.cwiseProduct(k.h_prev)).transpose();
        g.bh += da_c;
        Vec drh = Uh.transpose() * da_c;
        Vec dr = drh.cwiseProduct(k.h_prev);
        dh_prev += drh.cwiseProduct(k.r);

        Vec da_z = dz.cwiseProduct(k.z).cwiseProduct(one - k.z);
        g.Wz.noalias() += da_z * k.x.transpose();
        g.Uz.noalias() += da_z * k.h_prev.transpose();
        g.bz += da_z;
        dh_prev += Uz.transpose() * da_z;

        Vec da_r = dr.cwiseProduct(k.r).cwiseProduct(one - k.r);
        g.Wr.noalias() += da_r * k.x.transpose();
        g.Ur.noalias() += da_r * k.h_prev.transpose();
        g.br += da_r;
        dh_prev += Ur.transpose() * da_r;

        Vec dx = Wz.transpose() * da_z + Wr.transpose() * da_r + Wh.transpose() * da_c;
        return {dx, dh_prev};
    }

    void spans(std::vector<ParamSpan>& out) {
        for (Mat* m : {&Wz, &Uz, &Wr, &Ur, &Wh, &Uh}) out.push_back({m->data(), m->size()});
        for (Vec* v : {&bz, &br, &bh}) out.push_back({v->data(), v->size()});
    }
};

// tanh(W1 x) -> GRU -> linear head. The shared trunk for actors
// (head = action logits) and critics (head = scalar q).
struct RecurrentNet {
    Linear in;
    GruCell gru;
    Linear head;
    int hidden = 0;

    void init(int in_dim, int hidden_dim, int out_dim, Rng& rng) {
        hidden = hidden_dim;
        in.init(hidden_dim, in_dim, rng);
        gru.init(hidden_dim, hidden_dim, rng);
        head.init(out_dim, hidden_dim, rng);
    }

    static RecurrentNet zeros_like(const RecurrentNet& o) {
        RecurrentNet g = o;
        g.for_each([](ParamSpan s) {
            for (Eigen::Index i = 0; i < s.size; ++i) s.data[i] = 0.0;
        });
        return g;
    }

    struct Cache {
        Vec x, e;
        GruCell::Cache gru;
        Vec h_next;
    };

    std::pair<Vec, Vec> forward(const Vec& x, const Vec& h_prev, Cache* cache = nullptr) const {
        Vec e = in.forward(x).array().tanh();
        GruCell::Cache gk;
        Vec h = gru.forward(e, h_prev, cache ? &gk : nullptr);
        Vec out = head.forward(h);
        if (cache) *cache = {x, e, gk, h};
        return {out, h};
    }

    // dout: grad wrt head output; dh_next: grad flowing back into h from
    // the future. Accumulates into `g`; returns (dx, dh_prev).
    std::pair<Vec, Vec> backward(const Cache& k, const Vec& dout, const Vec& dh_next,
                                 RecurrentNet& g) const {
        g.head.W.noalias() += dout * k.h_next.transpose();
        g.head.b += dout;
        Vec dh = head.W.transpose() * dout + dh_next;
        auto [de, dh_prev] = gru.backward(k.gru, dh, g.gru);
        Vec da_e = de.cwiseProduct(Vec::Ones(de.size()) - k.e.cwiseProduct(k.e));
        g.in.W.noalias() += da_e * k.x.transpose();
        g.in.b += da_e;
        Vec dx = in.W.transpose() * da_e;
        return {dx, dh_prev};
    }

    void spans(std::vector<ParamSpan>& out) {
        in.spans(out);
        gru.spans(out);
        head.spans(out);
    }
    void for_each(const std::function<void(ParamSpan)>& fn) {
        std::vector<ParamSpan> s;
        spans(s);
        for (auto& p : s) fn(p);
    }
    Eigen::Index param_count() {
        Eigen::Index n = 0;
        for_each([&](ParamSpan s) { n += s.size; });
        return n;
    }
};

inline Vec softmax(const Vec& logits) {
    Vec s = (logits.array() - logits.maxCoeff()).exp();
    return s / s.sum();
}
inline Vec log_softmax(const Vec& logits) {
    double m = logits.maxCoeff();
    double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

// Adam over an ordered flat list of parameter spans.
class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
         double clip_norm = 1.0)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), clip_(clip_norm) {}

    void step(const std::vector<ParamSpan>& params, const std::vector<ParamSpan>& grads) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.push_back(Vec::Zero(p.size));
                v_.push_back(Vec::Zero(p.size));
            }
        }
        if (params.size() != grads.size()) throw ShapeMismatch("Adam: span count mismatch");
        double sq = 0.0;
        for (const auto& g : grads)
            sq += Eigen::Map<const Vec>(g.data, g.size).squaredNorm();
        double scale = 1.0;
        double norm = std::sqrt(sq);
        if (clip_ > 0.0 && norm > clip_) scale = clip_ / norm;

        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Eigen::Map<Vec> p(params[i].data, params[i].size);
            Eigen::Map<const Vec> g(grads[i].data, grads[i].size);
            Vec gs = g * scale;
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * gs;
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * gs.cwiseProduct(gs);
            Vec mhat = m_[i] / bc1;
            Vec vhat = v_[i] / bc2;
            Vec denom = (vhat.cwiseSqrt().array() + eps_).matrix();
            p -= lr_ * mhat.cwiseQuotient(denom);
        }
    }

    long t() const { return t_; }
    double lr() const { return lr_; }
    std::vector<Vec>& m() { return m_; }
    std::vector<Vec>& v() { return v_; }
    void set_t(long t) { t_ = t; }

private:
    double lr_, b1_, b2_, eps_, clip_;
    long t_ = 0;
    std::vector<Vec> m_, v_;
};

}  // namespace lgc::nn
