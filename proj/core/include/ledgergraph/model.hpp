#pragma once

// The graph autoencoder.
//
// Encoder: L rounds of message passing over the weighted directed graph,
//   h_v^(l+1) = sigma( W^(l) h_v^(l)  +  sum_{u in N(v)} w_uv U^(l) h_u^(l) )
// with the activation applied to hidden layers and identity on the final
// layer.  Decoder: edge probability sigmoid(z_u . z_v).  Loss: binary
// cross-entropy over observed edges (positives) and uniformly sampled
// absent ordered pairs (negatives).
//
// Backpropagation is derived by hand in matrix form (see model.cpp) and
// verified against central finite differences; no autodiff framework is
// involved.  Eigen supplies the dense/sparse linear algebra only.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ledgergraph/features.hpp"
#include "ledgergraph/graph.hpp"
#include "ledgergraph/rng.hpp"

namespace ledgergraph::model {

enum class Activation { relu, tanh };
enum class NeighborPolicy { in, out, both };

std::string_view activation_name(Activation a);
std::optional<Activation> parse_activation(std::string_view name);
std::string_view policy_name(NeighborPolicy p);
std::optional<NeighborPolicy> parse_policy(std::string_view name);

struct ModelConfig {
    int layers = 2;
    // Layer widths d_0..d_L; dims[0] must equal the feature count.
    std::vector<int> dims = {7, 64, 32};
    Activation activation = Activation::relu;
    double learning_rate = 0.01;
    int epochs = 200;
    double negative_ratio = 1.0;  // negatives per positive, resampled each epoch
    std::uint64_t seed = 0;
    NeighborPolicy neighbor_policy = NeighborPolicy::in;

    // Throws ConfigError on inconsistent shapes or non-positive
    // hyperparameters.
    void validate(int feature_dim) const;
};

struct ModelParameters {
    // Per layer l: W[l] (self transform) and U[l] (neighbor transform),
    // both d_{l+1} x d_l.
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::MatrixXd> U;
};

// Encoder output with everything the backward pass needs cached: the layer
// activations h[0..L] (h[0] = features, h[L] = z), the pre-activation
// inputs to each sigma, and the message matrix.
struct EmbeddingMatrix {
    Eigen::MatrixXd z;                    // node_count x d_L
    std::vector<Eigen::MatrixXd> h;       // L+1 entries
    std::vector<Eigen::MatrixXd> pre;     // L entries: pre[l] feeds layer l's sigma
    Eigen::SparseMatrix<double> message;  // row v holds the weights of v's neighbors
};

struct TrainTrace {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
    // Set when the loss leaves the finite range or the forward pass
    // produces non-finite activations; training stops at that epoch and
    // the last finite parameters are returned.
    bool diverged = false;
    int diverged_epoch = -1;
};

// --- Operations ---------------------------------------------------------

// Scaled uniform initialization: each matrix i.i.d. uniform on [-a, a],
// a = sqrt(6 / (fan_in + fan_out)), drawn from Rng(cfg.seed).
ModelParameters init_params(const ModelConfig& cfg);

// Message matrix per neighbor policy: entry (v, u) accumulates the stored
// weight of edge u->v under "in", of edge v->u under "out", and the sum of
// both under "both".
Eigen::SparseMatrix<double> message_matrix(const graph::AccountGraph& g, NeighborPolicy policy);

// Forward pass; throws NumericError naming the first layer whose output is
// not finite.
EmbeddingMatrix encode(const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
                       const ModelParameters& p, const ModelConfig& cfg);

// Overflow-free logistic function, exact at 0.5 for x = 0.
double stable_sigmoid(double x);

// sigmoid(z_u . z_v), in [0, 1]: saturates exactly at the limits once the
// dot product leaves exp()'s range.  The loss clamp, not the decoder,
// protects the log terms.
double decode_edge(const Eigen::Ref<const Eigen::VectorXd>& zu,
                   const Eigen::Ref<const Eigen::VectorXd>& zv);

// `count` ordered pairs (u, v), u != v, (u,v) not an edge, uniform with
// rejection; duplicates across draws allowed.  Throws PipelineError when the
// graph has no absent ordered pair.
std::vector<std::pair<graph::NodeId, graph::NodeId>> sample_negatives(
    const graph::AccountGraph& g, std::size_t count, Rng& rng);

struct LossGrad {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> grad_W;
    std::vector<Eigen::MatrixXd> grad_U;
};

// Binary cross-entropy over edges + negatives and its exact gradient with
// respect to every parameter matrix, by reverse-mode chain rule through the
// decoder, the layer stack, and the weighted neighbor aggregation.
// Probabilities are clamped to [1e-12, 1-1e-12] inside the log terms only;
// the gradient is the derivative of that clamped objective, so an example
// saturated past the clamp contributes exactly zero.
LossGrad loss_and_grad(const graph::AccountGraph& g, const EmbeddingMatrix& emb,
                       const std::vector<std::pair<graph::NodeId, graph::NodeId>>& negatives,
                       const ModelParameters& p, const ModelConfig& cfg);

struct TrainResult {
    ModelParameters params;
    EmbeddingMatrix embeddings;  // from the final parameters
    TrainTrace trace;
};

// Full training loop: per epoch resample negatives (negative_ratio x |E|),
// encode, loss_and_grad, Adam update (beta1 0.9, beta2 0.999, eps 1e-8).
// Deterministic given cfg.seed.  Requires >= 1 edge and >= 1 absent pair.
TrainResult train(const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
                  const ModelConfig& cfg);

// --- Checkpoint ---------------------------------------------------------

// JSON document carrying config, shapes, and row-major matrix entries;
// doubles are written shortest-round-trip so load(save(p)) is bit-exact.
void save_checkpoint(std::ostream& out, const ModelParameters& p, const ModelConfig& cfg);

struct Checkpoint {
    ModelParameters params;
    ModelConfig config;
};

Checkpoint load_checkpoint(std::istream& in);

// --- Verification -------------------------------------------------------

struct GradCheckResult {
    // max over parameter entries of |analytic - fd| / max(|analytic|, |fd|, 1e-3)
    double max_rel_error = 0.0;
    // Smallest |pre-activation| seen at the unperturbed point.  A value
    // below the finite-difference step signals a ReLU kink too close to the
    // evaluation point for the central difference to be trustworthy; callers
    // regenerate such instances.
    double min_abs_preact = 0.0;
    // Smallest logit distance of any example to the loss clamp boundary,
    // where the objective kinks flat.  Same caveat and remedy as
    // min_abs_preact.
    double min_clamp_margin = 0.0;
};

// Central finite differences (f(θ+ε) - f(θ-ε)) / 2ε over every entry of
// every W/U, against the analytic gradient, reusing one fixed negative
// sample for both.
GradCheckResult finite_difference_check(
    const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
    const ModelParameters& p, const ModelConfig& cfg,
    const std::vector<std::pair<graph::NodeId, graph::NodeId>>& negatives, double step = 1e-5);

}  // namespace ledgergraph::model
