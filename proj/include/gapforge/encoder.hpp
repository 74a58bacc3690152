#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "gapforge/errors.hpp"
#include "gapforge/spans.hpp"
#include "gapforge/tensor_io.hpp"
#include "gapforge/vocab.hpp"
#include "json.hpp"

namespace gapforge {

struct EncoderConfig {
    int k = 32;
    int max_len = 256;
    Vocabulary vocab;
    std::uint64_t seed = 0;
};

// The marker tokens are reserved by Vocabulary construction; this keeps the
// setup step explicit and idempotent.
inline EncoderConfig& register_markers(EncoderConfig& config) {
    config.vocab.add(Vocabulary::kOpen);
    config.vocab.add(Vocabulary::kClose);
    return config;
}

template <typename Scalar>
struct EncodedSequence {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    Mat token_vectors;    // N x k
    Vec sequence_vector;  // k, CLS-role output at the prepended start token
};

// Small trainable encoder: embedding table plus two self-attention mixing
// layers (single head, residual, pointwise ReLU block). A start token is
// prepended internally; its output plays the CLS role.
template <typename Scalar>
class TinyEncoder {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Layer {
        Mat wq, wk, wv;  // k x k
        Mat w1, w2;      // k x k pointwise block
        Vec b1, b2;
        Mat g_wq, g_wk, g_wv, g_w1, g_w2;
        Vec g_b1, g_b2;
    };

    struct LayerCache {
        Mat x, q, k, v, a, h, z;
    };

    struct Cache {
        std::vector<int> ids;  // with CLS at position 0
        Mat x0;                // embedding rows
        std::array<LayerCache, 2> layers;
        Mat y;
    };

    explicit TinyEncoder(EncoderConfig config) : cfg_(std::move(config)) {
        register_markers(cfg_);
        const int k = cfg_.k;
        const auto v = static_cast<Eigen::Index>(cfg_.vocab.size());
        std::mt19937_64 rng(cfg_.seed);
        embed_ = Mat(v, k);
        fill_uniform(embed_, rng, std::sqrt(1.0 / k));
        pos_ = Mat(cfg_.max_len, k);
        fill_uniform(pos_, rng, std::sqrt(1.0 / k));
        for (auto& layer : layers_) {
            layer.wq = Mat(k, k);
            layer.wk = Mat(k, k);
            layer.wv = Mat(k, k);
            layer.w1 = Mat(k, k);
            layer.w2 = Mat(k, k);
            const double a = std::sqrt(1.0 / k);
            fill_uniform(layer.wq, rng, a);
            fill_uniform(layer.wk, rng, a);
            fill_uniform(layer.wv, rng, a);
            fill_uniform(layer.w1, rng, a);
            fill_uniform(layer.w2, rng, a);
            layer.b1 = Vec::Zero(k);
            layer.b2 = Vec::Zero(k);
        }
        zero_grads();
    }

    const EncoderConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return cfg_.vocab; }

    EncodedSequence<Scalar> encode(const TokenizedText& tok) const {
        Cache cache;
        return forward(tok, cache);
    }

    EncodedSequence<Scalar> forward(const TokenizedText& tok, Cache& cache) const {
        if (tok.size() + 1 > cfg_.max_len)
            throw SequenceTooLong("input of " + std::to_string(tok.size()) +
                                  " tokens exceeds max_len " + std::to_string(cfg_.max_len));
        const int k = cfg_.k;
        const int n = tok.size() + 1;
        cache.ids.clear();
        cache.ids.reserve(static_cast<std::size_t>(n));
        cache.ids.push_back(cfg_.vocab.cls_id());
        for (int id : tok.ids) cache.ids.push_back(id);
        cache.x0 = Mat(n, k);
        for (int i = 0; i < n; ++i)
            cache.x0.row(i) =
                embed_.row(cache.ids[static_cast<std::size_t>(i)]) + pos_.row(i);

        Mat x = cache.x0;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            LayerCache& lc = cache.layers[l];
            const Layer& p = layers_[l];
            lc.x = x;
            lc.q = x * p.wq;
            lc.k = x * p.wk;
            lc.v = x * p.wv;
            Mat scores = lc.q * lc.k.transpose() / std::sqrt(Scalar(k));
            lc.a = row_softmax(scores);
            lc.h = x + lc.a * lc.v;
            lc.z = (lc.h * p.w1).rowwise() + p.b1.transpose();
            Mat r = lc.z.cwiseMax(Scalar(0));
            x = lc.h + ((r * p.w2).rowwise() + p.b2.transpose());
        }
        cache.y = x;

        EncodedSequence<Scalar> out;
        out.sequence_vector = x.row(0).transpose();
        out.token_vectors = x.bottomRows(n - 1);
        return out;
    }

    // Accumulates parameter gradients from upstream gradients on the outputs.
    // d_tokens may be empty (zero) and d_seq may be empty (zero).
    void backward(const Cache& cache, const Mat& d_tokens, const Vec& d_seq) {
        const int k = cfg_.k;
        const int n = static_cast<int>(cache.ids.size());
        Mat dy = Mat::Zero(n, k);
        if (d_seq.size() > 0) dy.row(0) = d_seq.transpose();
        if (d_tokens.size() > 0) dy.bottomRows(n - 1) = d_tokens;

        for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
            const LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
            Layer& p = layers_[static_cast<std::size_t>(l)];

            // pointwise block: y = h + relu(h*w1 + b1)*w2 + b2
            Mat r = lc.z.cwiseMax(Scalar(0));
            Mat dr = dy * p.w2.transpose();
            p.g_w2 += r.transpose() * dy;
            p.g_b2 += dy.colwise().sum().transpose();
            Mat dz = dr.cwiseProduct((lc.z.array() > Scalar(0)).template cast<Scalar>().matrix());
            p.g_w1 += lc.h.transpose() * dz;
            p.g_b1 += dz.colwise().sum().transpose();
            Mat dh = dy + dz * p.w1.transpose();

            // attention: h = x + softmax(q*k^T/sqrt(k)) * v
            Mat dx = dh;
            Mat dc = dh;
            Mat da = dc * lc.v.transpose();
            Mat dv = lc.a.transpose() * dc;
            p.g_wv += lc.x.transpose() * dv;
            dx += dv * p.wv.transpose();
            Mat ds(n, n);
            for (int i = 0; i < n; ++i) {
                const auto a = lc.a.row(i);
                const Scalar dot = da.row(i).dot(a);
                ds.row(i) = a.cwiseProduct((da.row(i).array() - dot).matrix());
            }
            ds /= std::sqrt(Scalar(k));
            Mat dq = ds * lc.k;
            Mat dk = ds.transpose() * lc.q;
            p.g_wq += lc.x.transpose() * dq;
            dx += dq * p.wq.transpose();
            p.g_wk += lc.x.transpose() * dk;
            dx += dk * p.wk.transpose();

            dy = std::move(dx);
        }
        for (int i = 0; i < n; ++i) {
            g_embed_.row(cache.ids[static_cast<std::size_t>(i)]) += dy.row(i);
            g_pos_.row(i) += dy.row(i);
        }
    }

    template <typename F>
    void visit_params(F&& f) {
        f("embed", embed_, g_embed_);
        f("pos", pos_, g_pos_);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const std::string p = "l" + std::to_string(l) + ".";
            f(p + "wq", layers_[l].wq, layers_[l].g_wq);
            f(p + "wk", layers_[l].wk, layers_[l].g_wk);
            f(p + "wv", layers_[l].wv, layers_[l].g_wv);
            f(p + "w1", layers_[l].w1, layers_[l].g_w1);
            f(p + "w2", layers_[l].w2, layers_[l].g_w2);
            f(p + "b1", layers_[l].b1, layers_[l].g_b1);
            f(p + "b2", layers_[l].b2, layers_[l].g_b2);
        }
    }

    void zero_grads() {
        g_embed_ = Mat::Zero(embed_.rows(), embed_.cols());
        g_pos_ = Mat::Zero(pos_.rows(), pos_.cols());
        for (auto& layer : layers_) {
            layer.g_wq = Mat::Zero(cfg_.k, cfg_.k);
            layer.g_wk = Mat::Zero(cfg_.k, cfg_.k);
            layer.g_wv = Mat::Zero(cfg_.k, cfg_.k);
            layer.g_w1 = Mat::Zero(cfg_.k, cfg_.k);
            layer.g_w2 = Mat::Zero(cfg_.k, cfg_.k);
            layer.g_b1 = Vec::Zero(cfg_.k);
            layer.g_b2 = Vec::Zero(cfg_.k);
        }
    }

    void save(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
        const_cast<TinyEncoder*>(this)->visit_params(
            [&](const std::string& name, const auto& value, const auto&) {
                tensors.emplace_back(name, value.template cast<double>());
            });
        write_tensor_blob(dir + "/params.bin", tensors);
        cfg_.vocab.save(dir + "/vocab.txt");
        nlohmann::json j;
        j["k"] = cfg_.k;
        j["max_len"] = cfg_.max_len;
        j["vocab_hash"] = cfg_.vocab.hash();
        j["seed"] = cfg_.seed;
        std::ofstream out(dir + "/config.json");
        if (!out) throw IoFailure("cannot write encoder config: " + dir);
        out << j.dump(2) << "\n";
    }

    static TinyEncoder load(const std::string& dir) {
        std::ifstream in(dir + "/config.json");
        if (!in) throw IoFailure("cannot open encoder config: " + dir);
        nlohmann::json j;
        in >> j;
        EncoderConfig cfg;
        cfg.k = j.at("k").get<int>();
        cfg.max_len = j.at("max_len").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.vocab = Vocabulary::load(dir + "/vocab.txt");
        if (cfg.vocab.hash() != j.at("vocab_hash").get<std::uint64_t>())
            throw CheckpointMismatch("vocab hash mismatch in " + dir);
        TinyEncoder enc(cfg);
        auto tensors = read_tensor_blob(dir + "/params.bin");
        enc.visit_params([&](const std::string& name, auto& value, auto&) {
            auto it = tensors.find(name);
            if (it == tensors.end())
                throw CheckpointMismatch("missing tensor '" + name + "' in " + dir);
            if (it->second.rows() != value.rows() || it->second.cols() != value.cols())
                throw CheckpointMismatch("shape mismatch for tensor '" + name + "' in " + dir);
            value = it->second.template cast<Scalar>();
        });
        return enc;
    }

private:
    static Mat row_softmax(const Mat& scores) {
        Mat out(scores.rows(), scores.cols());
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            const Scalar mx = scores.row(i).maxCoeff();
            Eigen::Array<Scalar, 1, Eigen::Dynamic> e =
                (scores.row(i).array() - mx).exp();
            out.row(i) = (e / e.sum()).matrix();
        }
        return out;
    }

    template <typename M>
    static void fill_uniform(M& m, std::mt19937_64& rng, double a) {
        std::uniform_real_distribution<double> dist(-a, a);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = Scalar(dist(rng));
    }

    EncoderConfig cfg_;
    Mat embed_;
    Mat pos_;  // learned absolute positional embeddings, one row per slot
    Mat g_embed_;
    Mat g_pos_;
    std::array<Layer, 2> layers_;
};

using TinyEncoderD = TinyEncoder<double>;

}  // namespace gapforge
