#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmoe/errors.hpp"

namespace hmoe {

/// B x N x D token tensor, stored row-major as (B*N) x D.
struct TokenBatch {
    int batch = 1;
    int seq_len = 1;
    Eigen::MatrixXd data;  // (batch * seq_len) x dim

    int tokens() const { return static_cast<int>(data.rows()); }
    int dim() const { return static_cast<int>(data.cols()); }
    void validate() const;
};

enum class GateKind { SoftmaxLinear, Laplace };

struct RouteConfig {
    int e_outer = 2;
    int e_inner = 2;
    int cap_outer = 0;  // slots per outer expert
    int cap_inner = 0;
    int topk_outer = 1;
    int topk_inner = 1;
    GateKind gate_outer_kind = GateKind::SoftmaxLinear;
    GateKind gate_inner_kind = GateKind::SoftmaxLinear;
    double loss_scale = 1.0;
    bool renormalize_topk = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GateParams {
    Eigen::MatrixXd w;     // experts x dim
    Eigen::VectorXd bias;  // experts
};

struct Route {
    int token = 0;
    int expert = 0;
    int slot = 0;
    double weight = 0.0;  // combine weight (gate prob, maybe renormalized)
};

/// Sparse dispatch/combine assignment for one gating level.
struct DispatchPlan {
    int n_tokens = 0;
    int n_experts = 0;
    int capacity = 0;
    std::vector<Route> routes;
    std::vector<std::pair<int, int>> dropped;  // (token, expert) over capacity
    double gate_loss = 0.0;  // E * sum_e f_e * p_e (GShard-style aux loss)
};

/// Top-k gating with capacity-constrained slot assignment. Logits are
/// w_e'x + b_e (softmax-linear) or -||w_e - x|| + b_e (laplace). Slots fill
/// in token order; overflow lands in `dropped`.
DispatchPlan gate(const GateParams& params, const Eigen::MatrixXd& tokens,
                  GateKind kind, int topk, int capacity,
                  bool renormalize_topk = true);

/// Grouped tensor: one capacity x dim block per expert; unfilled slots zero.
std::vector<Eigen::MatrixXd> dispatch(const DispatchPlan& plan,
                                      const Eigen::MatrixXd& tokens);

/// Weighted re-aggregation of expert outputs back onto tokens.
Eigen::MatrixXd combine(const DispatchPlan& plan,
                        const std::vector<Eigen::MatrixXd>& expert_outputs,
                        int out_dim);

using ExpertFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct RouterParams {
    GateParams outer;
    std::vector<GateParams> inner;  // one per outer expert group
};

/// Random gate initialization derived from cfg.seed.
RouterParams make_router_params(const RouteConfig& cfg, int dim);

struct ForwardResult {
    TokenBatch output;
    double total_loss = 0.0;  // loss_scale * (outer + inner gate loss)
    double outer_loss = 0.0;
    double inner_loss = 0.0;
    DispatchPlan outer_plan;
};

/// Two-level forward pass: outer gate -> dispatch -> per-group inner gate ->
/// dispatch -> experts(e_o, e_i) -> inner combine -> outer combine.
/// Tokens dropped at either level contribute zero on that route.
ForwardResult hmoe_forward(const TokenBatch& tokens, const RouteConfig& cfg,
                           const RouterParams& params,
                           const std::vector<std::vector<ExpertFn>>& experts);

/// Convenience overload with gates initialized from cfg.seed.
ForwardResult hmoe_forward(const TokenBatch& tokens, const RouteConfig& cfg,
                           const std::vector<std::vector<ExpertFn>>& experts);

}  // namespace hmoe
