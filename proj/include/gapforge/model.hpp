#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "gapforge/encoder.hpp"
#include "gapforge/errors.hpp"
#include "gapforge/spans.hpp"

namespace gapforge {

// log-sum-exp-stable sigmoid
template <typename Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

template <typename Scalar>
struct SpanScore {
    Span span;
    Scalar probability;
};

// Span representation head: FFNN over (h_start, h_end, width embedding) with
// a single ReLU hidden layer of size k, plus the linear gap-probability head
// (coefficient vector w, bias b).
template <typename Scalar>
class SpanScorer {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    SpanScorer(int k, int d_w, int max_width, std::uint64_t seed)
        : k_(k), d_w_(d_w), max_width_(max_width), hidden_(k) {
        std::mt19937_64 rng(seed);
        const int in = 2 * k_ + d_w_;
        w1_ = Mat(in, hidden_);
        fill_uniform(w1_, rng, std::sqrt(1.0 / in));
        b1_ = Vec::Zero(hidden_);
        w2_ = Mat(hidden_, k_);
        fill_uniform(w2_, rng, std::sqrt(1.0 / hidden_));
        b2_ = Vec::Zero(k_);
        width_emb_ = Mat(max_width_, d_w_);
        fill_uniform(width_emb_, rng, std::sqrt(1.0 / d_w_));
        w_ = Vec(k_);
        fill_uniform(w_, rng, std::sqrt(1.0 / k_));
        b_ = Vec::Zero(1);
        zero_grads();
    }

    int k() const { return k_; }
    int d_w() const { return d_w_; }
    int max_width() const { return max_width_; }
    const Vec& w() const { return w_; }
    Scalar bias() const { return b_[0]; }
    Vec& mutable_w() { return w_; }
    Scalar& mutable_bias() { return b_[0]; }
    Mat& mutable_width_emb() { return width_emb_; }

    struct RepCache {
        Vec x, z, h;
    };

    // h_span = FFNN(h_start (+) h_end (+) width_embedding)
    Vec span_representation(const EncodedSequence<Scalar>& enc, Span span,
                            RepCache* cache = nullptr) const {
        if (span.start < 0 || span.end < span.start ||
            span.end >= enc.token_vectors.rows())
            throw SpanOutOfBounds("span [" + std::to_string(span.start) + "," +
                                  std::to_string(span.end) + "] outside sequence of " +
                                  std::to_string(enc.token_vectors.rows()) + " tokens");
        if (span.width() > max_width_)
            throw SpanOutOfBounds("span width " + std::to_string(span.width()) +
                                  " exceeds max_width " + std::to_string(max_width_));
        Vec x(2 * k_ + d_w_);
        x.head(k_) = enc.token_vectors.row(span.start).transpose();
        x.segment(k_, k_) = enc.token_vectors.row(span.end).transpose();
        x.tail(d_w_) = width_emb_.row(span.width() - 1).transpose();
        Vec z = w1_.transpose() * x + b1_;
        Vec h = z.cwiseMax(Scalar(0));
        if (cache) {
            cache->x = x;
            cache->z = z;
            cache->h = h;
        }
        return w2_.transpose() * h + b2_;
    }

    // Accumulates gradients for d(loss)/d(h_span); returns gradient
    // contributions to the two endpoint token vectors via d_token_vectors.
    void backward_representation(Span span, const RepCache& cache, const Vec& d_rep,
                                 Mat& d_token_vectors) {
        g_b2_ += d_rep;
        g_w2_ += cache.h * d_rep.transpose();
        Vec d_hidden = w2_ * d_rep;
        Vec d_z =
            d_hidden.cwiseProduct((cache.z.array() > Scalar(0)).template cast<Scalar>().matrix());
        g_w1_ += cache.x * d_z.transpose();
        g_b1_ += d_z;
        Vec d_x = w1_ * d_z;
        d_token_vectors.row(span.start) += d_x.head(k_).transpose();
        d_token_vectors.row(span.end) += d_x.segment(k_, k_).transpose();
        g_width_emb_.row(span.width() - 1) += d_x.tail(d_w_).transpose();
    }

    Scalar logit_baseline(const Vec& h_span) const { return w_.dot(h_span) + b_[0]; }

    Scalar logit_example_aware(const Vec& h_span, const Vec& h_exemplar) const {
        if (h_exemplar.size() != h_span.size())
            throw DimensionMismatch("exemplar vector dimension " +
                                    std::to_string(h_exemplar.size()) + " != span dimension " +
                                    std::to_string(h_span.size()));
        return h_span.dot(w_) + h_span.dot(h_exemplar) + b_[0];
    }

    // d(loss)/d(logit) -> gradients on w, b; returns d(loss)/d(h_span) and
    // accumulates d(loss)/d(h_exemplar) when given.
    Vec backward_logit(Scalar d_logit, const Vec& h_span, const Vec* h_exemplar,
                       Vec* d_exemplar) {
        g_w_ += d_logit * h_span;
        g_b_[0] += d_logit;
        Vec d_h = d_logit * w_;
        if (h_exemplar) {
            d_h += d_logit * (*h_exemplar);
            if (d_exemplar) *d_exemplar += d_logit * h_span;
        }
        return d_h;
    }

    template <typename F>
    void visit_params(F&& f) {
        f("ffnn.w1", w1_, g_w1_);
        f("ffnn.b1", b1_, g_b1_);
        f("ffnn.w2", w2_, g_w2_);
        f("ffnn.b2", b2_, g_b2_);
        f("width_emb", width_emb_, g_width_emb_);
        f("head.w", w_, g_w_);
        f("head.b", b_, g_b_);
    }

    void zero_grads() {
        g_w1_ = Mat::Zero(w1_.rows(), w1_.cols());
        g_b1_ = Vec::Zero(b1_.size());
        g_w2_ = Mat::Zero(w2_.rows(), w2_.cols());
        g_b2_ = Vec::Zero(b2_.size());
        g_width_emb_ = Mat::Zero(width_emb_.rows(), width_emb_.cols());
        g_w_ = Vec::Zero(w_.size());
        g_b_ = Vec::Zero(1);
    }

private:
    template <typename M>
    static void fill_uniform(M& m, std::mt19937_64& rng, double a) {
        std::uniform_real_distribution<double> dist(-a, a);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = Scalar(dist(rng));
    }

    int k_, d_w_, max_width_, hidden_;
    Mat w1_, w2_, width_emb_;
    Vec b1_, b2_, w_, b_;
    Mat g_w1_, g_w2_, g_width_emb_;
    Vec g_b1_, g_b2_, g_w_, g_b_;
};

template <typename Scalar>
Scalar score_baseline(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& h_span,
                      const SpanScorer<Scalar>& scorer) {
    return sigmoid(scorer.logit_baseline(h_span));
}

template <typename Scalar>
Scalar score_example_aware(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& h_span,
                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& h_exemplar,
                           const SpanScorer<Scalar>& scorer) {
    return sigmoid(scorer.logit_example_aware(h_span, h_exemplar));
}

// Mean binary cross entropy; probabilities clipped to [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar bce_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& probabilities,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& labels) {
    if (probabilities.size() != labels.size())
        throw LengthMismatch("probabilities and labels differ in length");
    if (probabilities.size() == 0) return Scalar(0);
    constexpr Scalar eps = Scalar(1e-7);
    Scalar total = 0;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        const Scalar p = std::min(Scalar(1) - eps, std::max(eps, probabilities[i]));
        const Scalar y = labels[i];
        total += -(y * std::log(p) + (Scalar(1) - y) * std::log(Scalar(1) - p));
    }
    return total / Scalar(probabilities.size());
}

// Tokenizes a marked exemplar; when too long, whole trailing sentences are
// dropped first, then a balance-preserving hard truncation as a last resort.
TokenizedText exemplar_tokens(const std::string& marked, const Vocabulary& vocab,
                              int max_len);

// The exemplar representation: CLS-role output of the encoded marked text.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> encode_exemplar(
    const std::string& marked, const TinyEncoder<Scalar>& encoder) {
    const TokenizedText tok =
        exemplar_tokens(marked, encoder.vocab(), encoder.config().max_len);
    return encoder.encode(tok).sequence_vector;
}

template <typename Scalar>
std::vector<SpanScore<Scalar>> score_spans(
    const EncodedSequence<Scalar>& enc, const SpanScorer<Scalar>& scorer,
    const std::vector<Span>& candidates,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* h_exemplar) {
    std::vector<SpanScore<Scalar>> out;
    out.reserve(candidates.size());
    for (const Span& s : candidates) {
        const auto rep = scorer.span_representation(enc, s);
        const Scalar p = h_exemplar ? score_example_aware(rep, *h_exemplar, scorer)
                                    : score_baseline(rep, scorer);
        out.push_back({s, p});
    }
    return out;
}

// Spans with probability >= threshold (boundary included).
template <typename Scalar>
std::set<Span> predict(const TokenizedText& input,
                       const std::optional<std::string>& exemplar_marked,
                       const TinyEncoder<Scalar>& encoder, const SpanScorer<Scalar>& scorer,
                       Scalar threshold = Scalar(0.5)) {
    const auto enc = encoder.encode(input);
    const auto candidates = enumerate_spans(input.size(), scorer.max_width());
    std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> hex;
    if (exemplar_marked) hex = encode_exemplar(*exemplar_marked, encoder);
    const auto scores = score_spans(enc, scorer, candidates, hex ? &*hex : nullptr);
    std::set<Span> out;
    for (const auto& s : scores)
        if (s.probability >= threshold) out.insert(s.span);
    return out;
}

// Greedy disjoint selection for rendering: descending probability, ties by
// earlier start then shorter span.
template <typename Scalar>
std::vector<SpanScore<Scalar>> resolve_overlaps(std::vector<SpanScore<Scalar>> scores) {
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        if (a.span.start != b.span.start) return a.span.start < b.span.start;
        return a.span.width() < b.span.width();
    });
    std::vector<SpanScore<Scalar>> kept;
    for (const auto& s : scores) {
        bool clashes = false;
        for (const auto& k : kept)
            if (s.span.start <= k.span.end && k.span.start <= s.span.end) {
                clashes = true;
                break;
            }
        if (!clashes) kept.push_back(s);
    }
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.span < b.span; });
    return kept;
}

}  // namespace gapforge
