#include "ledgergraph/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ledgergraph/errors.hpp"

namespace ledgergraph::model {
namespace {

using json = nlohmann::ordered_json;

constexpr double kLogClamp = 1e-12;  // probability clamp inside log terms

// Logit at which a probability reaches the clamp: sigmoid(x) = 1 - eps.
// Terms are exactly flat beyond |t| >= kSatLogit.
const double kSatLogit = std::log((1.0 - kLogClamp) / kLogClamp);

// Decorrelates the negative-sampling stream from the init stream; both are
// seeded from the same config value.
constexpr std::uint64_t kSamplerSalt = 0x9e3779b97f4a7c15ULL;

std::uint64_t pair_key(graph::NodeId u, graph::NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Loss only — shared by loss_and_grad and the finite-difference probe so
// both routes measure the identical function.  Each log term uses the
// probability clamped to [eps, 1-eps], which bounds the term and makes
// the objective exactly flat once an example saturates past the clamp.
//
// The terms are evaluated in logit space: -log(sigmoid(t)) == softplus(-t)
// and -log(1 - sigmoid(t)) == softplus(t), identities that sidestep the
// catastrophic cancellation of forming 1 - p near saturation.  In p space
// a term near the clamp carries absolute noise ~ulp(1)/(1-p), which a
// central-difference probe would amplify by 1/(2*step) into garbage.
double loss_of(const graph::AccountGraph& g, const Eigen::MatrixXd& z,
               const std::vector<std::pair<graph::NodeId, graph::NodeId>>& negatives) {
    const double lo = -std::log1p(-kLogClamp);  // term value at the favorable clamp
    const double hi = -std::log(kLogClamp);     // term value at the adverse clamp
    double loss = 0.0;
    for (const auto& e : g.edges) {
        const double t = z.row(e.src).dot(z.row(e.dst));
        loss += std::clamp(softplus(-t), lo, hi);
    }
    for (const auto& [u, v] : negatives) {
        const double t = z.row(u).dot(z.row(v));
        loss += std::clamp(softplus(t), lo, hi);
    }
    return loss;
}

}  // namespace

std::string_view activation_name(Activation a) {
    return a == Activation::relu ? std::string_view("relu") : std::string_view("tanh");
}

std::optional<Activation> parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    return std::nullopt;
}

std::string_view policy_name(NeighborPolicy p) {
    switch (p) {
        case NeighborPolicy::in: return "in";
        case NeighborPolicy::out: return "out";
        default: return "both";
    }
}

std::optional<NeighborPolicy> parse_policy(std::string_view name) {
    if (name == "in") return NeighborPolicy::in;
    if (name == "out") return NeighborPolicy::out;
    if (name == "both") return NeighborPolicy::both;
    return std::nullopt;
}

void ModelConfig::validate(int feature_dim) const {
    if (layers < 1) throw ConfigError("model needs at least one layer");
    if (dims.size() != static_cast<std::size_t>(layers) + 1) {
        throw ConfigError("dims must list layers+1 widths, got " + std::to_string(dims.size()));
    }
    for (const int d : dims) {
        if (d <= 0) throw ConfigError("layer widths must be positive");
    }
    if (dims[0] != feature_dim) {
        throw ConfigError("dims[0]=" + std::to_string(dims[0]) +
                          " does not match the feature count " + std::to_string(feature_dim));
    }
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(negative_ratio > 0.0)) throw ConfigError("negative_ratio must be positive");
}

ModelParameters init_params(const ModelConfig& cfg) {
    ModelParameters p;
    Rng rng(cfg.seed);
    p.W.reserve(cfg.layers);
    p.U.reserve(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        const int fan_in = cfg.dims[l];
        const int fan_out = cfg.dims[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        // Row-major fill order pins the draw sequence independent of
        // Eigen's storage layout.
        auto fill = [&](Eigen::MatrixXd& m) {
            m.resize(fan_out, fan_in);
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    m(r, c) = (rng.uniform01() * 2.0 - 1.0) * a;
                }
            }
        };
        fill(p.W.emplace_back());
        fill(p.U.emplace_back());
    }
    return p;
}

Eigen::SparseMatrix<double> message_matrix(const graph::AccountGraph& g, NeighborPolicy policy) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(g.edges.size() * (policy == NeighborPolicy::both ? 2 : 1));
    for (const auto& e : g.edges) {
        // Row v of M holds the weights with which v's neighbors reach v.
        if (policy == NeighborPolicy::in || policy == NeighborPolicy::both) {
            triplets.emplace_back(e.dst, e.src, e.weight);
        }
        if (policy == NeighborPolicy::out || policy == NeighborPolicy::both) {
            triplets.emplace_back(e.src, e.dst, e.weight);
        }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

EmbeddingMatrix encode(const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
                       const ModelParameters& p, const ModelConfig& cfg) {
    cfg.validate(static_cast<int>(x.values.cols()));
    if (static_cast<std::size_t>(x.values.rows()) != g.node_count()) {
        throw PipelineError("feature rows (" + std::to_string(x.values.rows()) +
                            ") do not match graph nodes (" + std::to_string(g.node_count()) +
                            ")");
    }

    EmbeddingMatrix emb;
    emb.message = message_matrix(g, cfg.neighbor_policy);
    emb.h.reserve(cfg.layers + 1);
    emb.pre.reserve(cfg.layers);
    emb.h.push_back(x.values);

    for (int l = 0; l < cfg.layers; ++l) {
        const Eigen::MatrixXd& h = emb.h.back();
        // A = H W^T + (M H) U^T : self transform plus weighted neighbor sum.
        Eigen::MatrixXd a = h * p.W[l].transpose() +
                            (emb.message * h) * p.U[l].transpose();
        Eigen::MatrixXd next;
        if (l + 1 < cfg.layers) {
            next = cfg.activation == Activation::relu
                       ? a.cwiseMax(0.0).eval()
                       : a.array().tanh().matrix().eval();
        } else {
            next = a;  // identity on the final layer
        }
        if (!next.allFinite()) {
            throw NumericError("non-finite activations in layer " + std::to_string(l));
        }
        emb.pre.push_back(std::move(a));
        emb.h.push_back(std::move(next));
    }
    emb.z = emb.h.back();
    return emb;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double decode_edge(const Eigen::Ref<const Eigen::VectorXd>& zu,
                   const Eigen::Ref<const Eigen::VectorXd>& zv) {
    assert(zu.size() == zv.size() && "embedding width mismatch");
    return stable_sigmoid(zu.dot(zv));
}

std::vector<std::pair<graph::NodeId, graph::NodeId>> sample_negatives(
    const graph::AccountGraph& g, std::size_t count, Rng& rng) {
    const std::uint64_t n = g.node_count();
    if (n < 2 || g.edge_count() >= n * (n - 1)) {
        throw PipelineError("graph has no absent ordered pair to sample");
    }
    std::unordered_set<std::uint64_t> present;
    present.reserve(g.edges.size() * 2);
    for (const auto& e : g.edges) present.insert(pair_key(e.src, e.dst));

    std::vector<std::pair<graph::NodeId, graph::NodeId>> out;
    out.reserve(count);
    while (out.size() < count) {
        const auto u = static_cast<graph::NodeId>(rng.uniform_int(n));
        const auto v = static_cast<graph::NodeId>(rng.uniform_int(n));
        if (u == v || present.count(pair_key(u, v)) > 0) continue;
        out.emplace_back(u, v);
    }
    return out;
}

LossGrad loss_and_grad(const graph::AccountGraph& g, const EmbeddingMatrix& emb,
                       const std::vector<std::pair<graph::NodeId, graph::NodeId>>& negatives,
                       const ModelParameters& p, const ModelConfig& cfg) {
    LossGrad out;
    out.loss = loss_of(g, emb.z, negatives);

    // Decoder gradient.  For t = z_u . z_v and p = sigmoid(t):
    //   d(-log p)/dt     = p - 1 = -sigmoid(-t)   (positive examples)
    //   d(-log(1-p))/dt  = p     =  sigmoid(t)    (negative examples)
    // and dt/dz_u = z_v, dt/dz_v = z_u.  Past |t| >= kSatLogit the clamp in
    // loss_of pins the term to a constant, so the derivative of the loss
    // actually being minimized is zero there — emitting the unclamped value
    // instead would disagree with any finite-difference probe of loss_of on
    // saturated examples.
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(emb.z.rows(), emb.z.cols());
    auto accumulate = [&](graph::NodeId u, graph::NodeId v, bool positive) {
        const double t = emb.z.row(u).dot(emb.z.row(v));
        if (std::abs(t) >= kSatLogit) return;
        const double g_dot = positive ? -stable_sigmoid(-t) : stable_sigmoid(t);
        grad.row(u) += g_dot * emb.z.row(v);
        grad.row(v) += g_dot * emb.z.row(u);
    };
    for (const auto& e : g.edges) accumulate(e.src, e.dst, true);
    for (const auto& [u, v] : negatives) accumulate(u, v, false);

    // Reverse through the layer stack.  With A = H W^T + (M H) U^T and
    // D = dLoss/dA:
    //   dLoss/dW = D^T H
    //   dLoss/dU = D^T (M H)
    //   dLoss/dH = D W + M^T (D U)
    out.grad_W.resize(cfg.layers);
    out.grad_U.resize(cfg.layers);
    for (int l = cfg.layers - 1; l >= 0; --l) {
        Eigen::MatrixXd d;
        if (l + 1 < cfg.layers) {
            if (cfg.activation == Activation::relu) {
                d = grad.cwiseProduct(
                    (emb.pre[l].array() > 0.0).cast<double>().matrix());
            } else {
                // tanh' = 1 - tanh^2; h[l+1] caches tanh(pre[l]).
                d = grad.cwiseProduct(
                    (1.0 - emb.h[l + 1].array().square()).matrix());
            }
        } else {
            d = std::move(grad);  // identity final layer
        }
        const Eigen::MatrixXd mh = emb.message * emb.h[l];
        out.grad_W[l] = d.transpose() * emb.h[l];
        out.grad_U[l] = d.transpose() * mh;
        if (l > 0) {
            grad = d * p.W[l] + emb.message.transpose() * (d * p.U[l]);
        }
    }
    return out;
}

TrainResult train(const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
                  const ModelConfig& cfg) {
    cfg.validate(static_cast<int>(x.values.cols()));
    if (g.edges.empty()) {
        throw PipelineError("cannot train on a graph with no edges");
    }

    TrainResult result;
    result.params = init_params(cfg);
    Rng sampler(cfg.seed ^ kSamplerSalt);
    const auto neg_count = static_cast<std::size_t>(
        std::llround(cfg.negative_ratio * static_cast<double>(g.edge_count())));

    // Adam state.
    constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    std::vector<Eigen::MatrixXd> mW(cfg.layers), vW(cfg.layers), mU(cfg.layers), vU(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        mW[l] = Eigen::MatrixXd::Zero(cfg.dims[l + 1], cfg.dims[l]);
        vW[l] = mW[l];
        mU[l] = mW[l];
        vU[l] = mW[l];
    }

    ModelParameters last_finite = result.params;
    int t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto negatives = sample_negatives(g, neg_count, sampler);
        EmbeddingMatrix emb;
        try {
            emb = encode(g, x, result.params, cfg);
        } catch (const NumericError&) {
            // With the loss bounded by its clamp, a weight blow-up surfaces
            // first as non-finite activations.  Same contract as a
            // non-finite loss: stop here, keep the last usable parameters.
            result.trace.diverged = true;
            result.trace.diverged_epoch = epoch;
            result.params = last_finite;
            break;
        }
        const LossGrad lg = loss_and_grad(g, emb, negatives, result.params, cfg);
        result.trace.epoch_loss.push_back(lg.loss);
        if (!std::isfinite(lg.loss)) {
            result.trace.diverged = true;
            result.trace.diverged_epoch = epoch;
            result.params = last_finite;
            break;
        }
        last_finite = result.params;

        ++t;
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);
        auto adam = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
                        Eigen::MatrixXd& v) {
            m = b1 * m + (1.0 - b1) * grad;
            v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
            theta.array() -=
                cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam_eps);
        };
        for (int l = 0; l < cfg.layers; ++l) {
            adam(result.params.W[l], lg.grad_W[l], mW[l], vW[l]);
            adam(result.params.U[l], lg.grad_U[l], mU[l], vU[l]);
        }
    }

    if (!result.trace.epoch_loss.empty()) {
        result.trace.final_loss = result.trace.epoch_loss.back();
    }
    result.embeddings = encode(g, x, result.params, cfg);
    return result;
}

// --- Checkpoint ----------------------------------------------------------

void save_checkpoint(std::ostream& out, const ModelParameters& p, const ModelConfig& cfg) {
    json doc;
    doc["format_version"] = 1;
    json jc;
    jc["layers"] = cfg.layers;
    jc["dims"] = cfg.dims;
    jc["activation"] = std::string(activation_name(cfg.activation));
    jc["learning_rate"] = cfg.learning_rate;
    jc["epochs"] = cfg.epochs;
    jc["negative_ratio"] = cfg.negative_ratio;
    jc["seed"] = cfg.seed;
    jc["neighbor_policy"] = std::string(policy_name(cfg.neighbor_policy));
    doc["config"] = std::move(jc);

    json layers = json::array();
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        json jl;
        jl["layer"] = l;
        jl["rows"] = p.W[l].rows();
        jl["cols"] = p.W[l].cols();
        auto dump = [](const Eigen::MatrixXd& m) {
            json arr = json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
            }
            return arr;
        };
        jl["W"] = dump(p.W[l]);
        jl["U"] = dump(p.U[l]);
        layers.push_back(std::move(jl));
    }
    doc["matrices"] = std::move(layers);
    out << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw PipelineError(std::string("unreadable checkpoint: ") + e.what());
    }
    try {
        Checkpoint ck;
        const auto& jc = doc.at("config");
        ck.config.layers = jc.at("layers").get<int>();
        ck.config.dims = jc.at("dims").get<std::vector<int>>();
        const auto act = parse_activation(jc.at("activation").get<std::string>());
        const auto pol = parse_policy(jc.at("neighbor_policy").get<std::string>());
        if (!act || !pol) throw PipelineError("checkpoint names an unknown enum value");
        ck.config.activation = *act;
        ck.config.neighbor_policy = *pol;
        ck.config.learning_rate = jc.at("learning_rate").get<double>();
        ck.config.epochs = jc.at("epochs").get<int>();
        ck.config.negative_ratio = jc.at("negative_ratio").get<double>();
        ck.config.seed = jc.at("seed").get<std::uint64_t>();

        for (const auto& jl : doc.at("matrices")) {
            const auto rows = jl.at("rows").get<Eigen::Index>();
            const auto cols = jl.at("cols").get<Eigen::Index>();
            auto parse_matrix = [&](const json& arr) {
                if (static_cast<Eigen::Index>(arr.size()) != rows * cols) {
                    throw PipelineError("checkpoint matrix size mismatch");
                }
                Eigen::MatrixXd m(rows, cols);
                Eigen::Index i = 0;
                for (Eigen::Index r = 0; r < rows; ++r) {
                    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
                }
                return m;
            };
            ck.params.W.push_back(parse_matrix(jl.at("W")));
            ck.params.U.push_back(parse_matrix(jl.at("U")));
        }
        if (ck.params.W.size() != static_cast<std::size_t>(ck.config.layers)) {
            throw PipelineError("checkpoint layer count mismatch");
        }
        return ck;
    } catch (const json::exception& e) {
        throw PipelineError(std::string("malformed checkpoint: ") + e.what());
    }
}

// --- Verification --------------------------------------------------------

GradCheckResult finite_difference_check(
    const graph::AccountGraph& g, const features::NodeFeatureMatrix& x,
    const ModelParameters& p, const ModelConfig& cfg,
    const std::vector<std::pair<graph::NodeId, graph::NodeId>>& negatives, double step) {
    GradCheckResult res;
    const EmbeddingMatrix emb = encode(g, x, p, cfg);
    const LossGrad analytic = loss_and_grad(g, emb, negatives, p, cfg);

    res.min_abs_preact = std::numeric_limits<double>::infinity();
    for (int l = 0; l + 1 < cfg.layers; ++l) {
        res.min_abs_preact = std::min(res.min_abs_preact, emb.pre[l].cwiseAbs().minCoeff());
    }

    // Logit distance from each example to the loss clamp (|t| = kSatLogit
    // saturates the term flat).  An example sitting on that boundary makes the
    // central difference straddle a kink, just like a ReLU pre-activation at 0.
    res.min_clamp_margin = std::numeric_limits<double>::infinity();
    auto clamp_margin = [&](graph::NodeId u, graph::NodeId v) {
        const double t = emb.z.row(u).dot(emb.z.row(v));
        res.min_clamp_margin =
            std::min(res.min_clamp_margin, std::abs(std::abs(t) - kSatLogit));
    };
    for (const auto& e : g.edges) clamp_margin(e.src, e.dst);
    for (const auto& [u, v] : negatives) clamp_margin(u, v);

    ModelParameters probe = p;
    auto eval = [&] {
        return loss_of(g, encode(g, x, probe, cfg).z, negatives);
    };
    auto check_matrix = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad) {
        for (Eigen::Index r = 0; r < theta.rows(); ++r) {
            for (Eigen::Index c = 0; c < theta.cols(); ++c) {
                const double saved = theta(r, c);
                theta(r, c) = saved + step;
                const double up = eval();
                theta(r, c) = saved - step;
                const double down = eval();
                theta(r, c) = saved;
                const double fd = (up - down) / (2.0 * step);
                const double a = grad(r, c);
                const double rel =
                    std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
                res.max_rel_error = std::max(res.max_rel_error, rel);
            }
        }
    };
    for (int l = 0; l < cfg.layers; ++l) {
        check_matrix(probe.W[l], analytic.grad_W[l]);
        check_matrix(probe.U[l], analytic.grad_U[l]);
    }
    return res;
}

}  // namespace ledgergraph::model
