#include "kabp/rw_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kabp {

namespace {
constexpr double kTanhCap = 1.0 - kTanhCapEps;

double capped_atanh_product(double p) {
    if (p > kTanhCap) p = kTanhCap;
    if (p < -kTanhCap) p = -kTanhCap;
    return clip_llr(2.0 * std::atanh(p));
}
}  // namespace

void ReweightVector::validate(int M) const {
    if (static_cast<int>(rho.size()) != M)
        throw std::invalid_argument("reweighting vector length must equal check count");
    for (double r : rho)
        if (!(r > 0.0) || r > 1.0)
            throw std::invalid_argument("reweighting factors must lie in (0, 1]");
}

double variable_to_check(double lambda_in,
                         const std::vector<std::pair<int, double>>& incoming,
                         const ReweightVector& rho, int target_check) {
    double acc = lambda_in;
    bool found = false;
    double target_msg = 0.0;
    for (const auto& [check, msg] : incoming) {
        if (check < 0 || check >= rho.size())
            throw std::invalid_argument("check index outside reweighting vector");
        if (check == target_check) {
            found = true;
            target_msg = msg;
        } else {
            acc += rho.rho[check] * msg;
        }
    }
    if (!found)
        throw std::invalid_argument("target check has no incoming message");
    acc -= (1.0 - rho.rho[target_check]) * target_msg;
    return clip_llr(acc);
}

double check_to_variable(const std::vector<std::pair<int, double>>& incoming,
                         int target_var) {
    double p = 1.0;
    bool found = false, empty = true;
    for (const auto& [var, msg] : incoming) {
        if (var == target_var) {
            found = true;
            continue;
        }
        empty = false;
        p *= std::tanh(0.5 * clip_llr(msg));
    }
    if (!found)
        throw std::invalid_argument("target variable not a neighbor of this check");
    if (empty) return kLlrClip;  // degree-1 check asserts known parity
    return capped_atanh_product(p);
}

double compute_belief(double lambda_in,
                      const std::vector<std::pair<int, double>>& incoming,
                      const ReweightVector& rho) {
    double acc = lambda_in;
    for (const auto& [check, msg] : incoming) {
        if (check < 0 || check >= rho.size())
            throw std::invalid_argument("check index outside reweighting vector");
        acc += rho.rho[check] * msg;
    }
    return clip_llr(acc);
}

RwDecoder::RwDecoder(const ParityCheckMatrix& H) : H_(&H) {
    check_edges_.resize(H.M);
    var_edges_.resize(H.N);
    for (int i = 0; i < H.M; ++i) {
        if (H.rows[i].size() < 2)
            throw std::invalid_argument("decoder requires check degree >= 2");
        for (int j : H.rows[i]) {
            const int e = static_cast<int>(edge_check_.size());
            edge_check_.push_back(i);
            edge_var_.push_back(j);
            check_edges_[i].push_back(e);
            var_edges_[j].push_back(e);
        }
    }
    psi_.resize(edge_check_.size());
    lambda_.resize(edge_check_.size());
    tanh_buf_.resize(edge_check_.size());
}

void RwDecoder::start(const ReweightVector& rho, const LlrSequence& llr_in) {
    rho.validate(H_->M);
    if (static_cast<int>(llr_in.size()) != H_->N)
        throw std::invalid_argument("LLR input length must equal N");
    rho_store_ = rho.rho;
    rho_ = rho_store_.data();
    llr_in_.resize(H_->N);
    belief_.resize(H_->N);
    for (int j = 0; j < H_->N; ++j) {
        llr_in_[j] = clip_llr(llr_in[j]);
        belief_[j] = llr_in_[j];
    }
    std::fill(lambda_.begin(), lambda_.end(), 0.0);
    for (std::size_t e = 0; e < psi_.size(); ++e) psi_[e] = llr_in_[edge_var_[e]];
}

void RwDecoder::check_pass() {
    for (std::size_t e = 0; e < psi_.size(); ++e)
        tanh_buf_[e] = std::tanh(0.5 * psi_[e]);
    for (const auto& edges : check_edges_) {
        for (std::size_t t = 0; t < edges.size(); ++t) {
            double p = 1.0;
            for (std::size_t u = 0; u < edges.size(); ++u) {
                if (u != t) p *= tanh_buf_[edges[u]];
            }
            lambda_[edges[t]] = capped_atanh_product(p);
        }
    }
}

double RwDecoder::variable_pass() {
    double delta = 0.0;
    for (int j = 0; j < H_->N; ++j) {
        const auto& edges = var_edges_[j];
        double b = llr_in_[j];
        for (int e : edges) b += rho_[edge_check_[e]] * lambda_[e];
        belief_[j] = clip_llr(b);
        for (std::size_t t = 0; t < edges.size(); ++t) {
            double acc = llr_in_[j];
            for (std::size_t u = 0; u < edges.size(); ++u) {
                if (u == t) continue;
                acc += rho_[edge_check_[edges[u]]] * lambda_[edges[u]];
            }
            acc -= (1.0 - rho_[edge_check_[edges[t]]]) * lambda_[edges[t]];
            acc = clip_llr(acc);
            delta = std::max(delta, std::abs(acc - psi_[edges[t]]));
            psi_[edges[t]] = acc;
        }
    }
    return delta;
}

double RwDecoder::iterate() {
    check_pass();
    return variable_pass();
}

std::vector<std::uint8_t> RwDecoder::hard_decision() const {
    std::vector<std::uint8_t> bits(H_->N);
    for (int j = 0; j < H_->N; ++j) bits[j] = belief_[j] >= 0.0 ? 0 : 1;
    return bits;
}

bool RwDecoder::syndrome_ok() const {
    for (const auto& edges : check_edges_) {
        unsigned acc = 0;
        for (int e : edges) acc ^= belief_[edge_var_[e]] < 0.0 ? 1u : 0u;
        if (acc & 1) return false;
    }
    return true;
}

DecodeResult RwDecoder::decode(const ReweightVector& rho, const LlrSequence& llr_in,
                               int max_iters) {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    start(rho, llr_in);
    DecodeResult res;
    for (int t = 1; t <= max_iters; ++t) {
        iterate();
        res.iterations_used = t;
        if (syndrome_ok()) {
            res.converged = true;
            break;
        }
    }
    res.hard_bits = hard_decision();
    res.beliefs = belief_;
    return res;
}

LlrSequence extrinsic_output(const DecodeResult& result, const LlrSequence& llr_in) {
    if (result.beliefs.size() != llr_in.size())
        throw std::invalid_argument("belief/input length mismatch");
    LlrSequence ext(llr_in.size());
    for (std::size_t j = 0; j < llr_in.size(); ++j)
        ext[j] = clip_llr(result.beliefs[j] - clip_llr(llr_in[j]));
    return ext;
}

}  // namespace kabp
