#include "hmoe/routing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmoe/model.hpp"
#include "hmoe/rng.hpp"

namespace hmoe {

void TokenBatch::validate() const {
    if (batch < 1 || seq_len < 1 || dim() < 1)
        throw InvalidInput("token batch: B, N, D must be >= 1");
    if (tokens() != batch * seq_len)
        throw InvalidInput("token batch: row count != B*N");
    if (!data.allFinite()) throw InvalidInput("token batch: non-finite data");
}

void RouteConfig::validate() const {
    if (e_outer < 1 || e_inner < 1) throw InvalidInput("expert counts >= 1");
    if (topk_outer < 1 || topk_outer > e_outer ||
        topk_inner < 1 || topk_inner > e_inner)
        throw InvalidInput("topk must be in [1, expert count]");
    if (cap_outer < 0 || cap_inner < 0) throw InvalidInput("capacities >= 0");
}

DispatchPlan gate(const GateParams& params, const Eigen::MatrixXd& tokens,
                  GateKind kind, int topk, int capacity,
                  bool renormalize_topk) {
    const int n = static_cast<int>(tokens.rows());
    const int experts = static_cast<int>(params.w.rows());
    if (params.w.cols() != tokens.cols() || params.bias.size() != experts)
        throw InvalidInput("gate: parameter shape mismatch");
    if (topk < 1 || topk > experts) throw InvalidInput("gate: bad topk");

    DispatchPlan plan;
    plan.n_tokens = n;
    plan.n_experts = experts;
    plan.capacity = capacity;

    Eigen::VectorXd mean_prob = Eigen::VectorXd::Zero(experts);
    Eigen::VectorXd top1_frac = Eigen::VectorXd::Zero(experts);
    std::vector<int> fill(experts, 0);

    for (int t = 0; t < n; ++t) {
        const Eigen::VectorXd x = tokens.row(t);
        Eigen::VectorXd logits(experts);
        for (int e = 0; e < experts; ++e) {
            logits[e] = kind == GateKind::Laplace
                            ? -(params.w.row(e).transpose() - x).norm() +
                                  params.bias[e]
                            : params.w.row(e).dot(x) + params.bias[e];
        }
        if (!logits.allFinite()) throw InvalidInput("gate: non-finite logits");
        const Eigen::VectorXd probs = softmax(logits);
        mean_prob += probs;

        // selection order: descending prob, ties to lower expert index
        std::vector<int> order(experts);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return probs[a] > probs[b];
        });
        top1_frac[order[0]] += 1.0;

        double selected_mass = 0.0;
        for (int k = 0; k < topk; ++k) selected_mass += probs[order[k]];
        for (int k = 0; k < topk; ++k) {
            const int e = order[k];
            const double w =
                renormalize_topk ? probs[e] / selected_mass : probs[e];
            if (fill[e] < capacity) {
                plan.routes.push_back({t, e, fill[e]++, w});
            } else {
                plan.dropped.emplace_back(t, e);
            }
        }
    }

    if (n > 0) {
        mean_prob /= n;
        top1_frac /= n;
        plan.gate_loss = experts * top1_frac.dot(mean_prob);
    }
    return plan;
}

std::vector<Eigen::MatrixXd> dispatch(const DispatchPlan& plan,
                                      const Eigen::MatrixXd& tokens) {
    if (static_cast<int>(tokens.rows()) != plan.n_tokens)
        throw InvalidInput("dispatch: token count mismatch");
    std::vector<Eigen::MatrixXd> grouped(
        plan.n_experts,
        Eigen::MatrixXd::Zero(plan.capacity, tokens.cols()));
    for (const auto& r : plan.routes)
        grouped[r.expert].row(r.slot) = tokens.row(r.token);
    return grouped;
}

Eigen::MatrixXd combine(const DispatchPlan& plan,
                        const std::vector<Eigen::MatrixXd>& expert_outputs,
                        int out_dim) {
    if (static_cast<int>(expert_outputs.size()) != plan.n_experts)
        throw InvalidInput("combine: expert count mismatch");
    for (const auto& m : expert_outputs)
        if (m.rows() != plan.capacity || m.cols() != out_dim)
            throw InvalidInput("combine: grouped tensor shape mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(plan.n_tokens, out_dim);
    for (const auto& r : plan.routes)
        out.row(r.token) += r.weight * expert_outputs[r.expert].row(r.slot);
    return out;
}

RouterParams make_router_params(const RouteConfig& cfg, int dim) {
    Rng rng(cfg.seed);
    auto make_gate = [&](Rng g, int experts) {
        GateParams p;
        p.w.resize(experts, dim);
        p.bias = Eigen::VectorXd::Zero(experts);
        for (int e = 0; e < experts; ++e)
            for (int j = 0; j < dim; ++j)
                p.w(e, j) = g.uniform(-1.0, 1.0) / std::sqrt(double(dim));
        return p;
    };
    RouterParams params;
    params.outer = make_gate(rng.split(0), cfg.e_outer);
    for (int eo = 0; eo < cfg.e_outer; ++eo)
        params.inner.push_back(make_gate(rng.split(1 + eo), cfg.e_inner));
    return params;
}

ForwardResult hmoe_forward(const TokenBatch& tokens, const RouteConfig& cfg,
                           const RouterParams& params,
                           const std::vector<std::vector<ExpertFn>>& experts) {
    tokens.validate();
    cfg.validate();
    if (static_cast<int>(experts.size()) != cfg.e_outer)
        throw InvalidInput("expert bank: outer size mismatch");
    for (const auto& row : experts)
        if (static_cast<int>(row.size()) != cfg.e_inner)
            throw InvalidInput("expert bank: inner size mismatch");

    const int dim = tokens.dim();
    const DispatchPlan outer_plan =
        gate(params.outer, tokens.data, cfg.gate_outer_kind, cfg.topk_outer,
             cfg.cap_outer, cfg.renormalize_topk);
    const auto grouped = dispatch(outer_plan, tokens.data);

    // Which outer slots actually hold a token (per expert group).
    std::vector<std::vector<bool>> filled(
        cfg.e_outer, std::vector<bool>(cfg.cap_outer, false));
    for (const auto& r : outer_plan.routes) filled[r.expert][r.slot] = true;

    std::vector<Eigen::MatrixXd> group_out(
        cfg.e_outer, Eigen::MatrixXd::Zero(cfg.cap_outer, dim));
    double inner_loss_weighted = 0.0;
    int inner_tokens = 0;

    for (int eo = 0; eo < cfg.e_outer; ++eo) {
        // Inner routing sees only the real tokens, in slot order.
        std::vector<int> slots;
        for (int c = 0; c < cfg.cap_outer; ++c)
            if (filled[eo][c]) slots.push_back(c);
        if (slots.empty()) continue;
        Eigen::MatrixXd sub(static_cast<int>(slots.size()), dim);
        for (std::size_t i = 0; i < slots.size(); ++i)
            sub.row(static_cast<int>(i)) = grouped[eo].row(slots[i]);

        const DispatchPlan inner_plan =
            gate(params.inner[eo], sub, cfg.gate_inner_kind, cfg.topk_inner,
                 cfg.cap_inner, cfg.renormalize_topk);
        auto inner_grouped = dispatch(inner_plan, sub);
        for (int ei = 0; ei < cfg.e_inner; ++ei) {
            std::vector<bool> used(cfg.cap_inner, false);
            for (const auto& r : inner_plan.routes)
                if (r.expert == ei) used[r.slot] = true;
            for (int c = 0; c < cfg.cap_inner; ++c)
                if (used[c])
                    inner_grouped[ei].row(c) =
                        experts[eo][ei](inner_grouped[ei].row(c).transpose())
                            .transpose();
        }
        const Eigen::MatrixXd sub_out = combine(inner_plan, inner_grouped, dim);
        for (std::size_t i = 0; i < slots.size(); ++i)
            group_out[eo].row(slots[i]) = sub_out.row(static_cast<int>(i));

        inner_loss_weighted += inner_plan.gate_loss * sub.rows();
        inner_tokens += static_cast<int>(sub.rows());
    }

    ForwardResult result;
    result.output.batch = tokens.batch;
    result.output.seq_len = tokens.seq_len;
    result.output.data = combine(outer_plan, group_out, dim);
    result.outer_loss = outer_plan.gate_loss;
    result.inner_loss =
        inner_tokens > 0 ? inner_loss_weighted / inner_tokens : 0.0;
    result.total_loss = cfg.loss_scale * (result.outer_loss + result.inner_loss);
    result.outer_plan = outer_plan;
    return result;
}

ForwardResult hmoe_forward(const TokenBatch& tokens, const RouteConfig& cfg,
                           const std::vector<std::vector<ExpertFn>>& experts) {
    return hmoe_forward(tokens, cfg, make_router_params(cfg, tokens.dim()),
                        experts);
}

}  // namespace hmoe
