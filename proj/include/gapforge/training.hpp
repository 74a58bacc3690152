#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gapforge/checkpoint.hpp"
#include "gapforge/corpus.hpp"
#include "gapforge/encoder.hpp"
#include "gapforge/model.hpp"

namespace gapforge {

struct TrainingPair {
    ExerciseDocument input;  // one sentence, gap offsets local to it
    std::string exemplar;    // 1..m marked sentences, document order
    bool negative = false;
};

struct TrainConfig {
    double learning_rate = 2e-5;
    int batch_size = 16;
    int epochs = 30;
    int max_span_width = 12;
    int m = 3;  // max sentences per exemplar
    std::vector<double> neg_ratio_candidates = {0.5, 1.0, 2.0, 4.0};
    std::uint64_t seed = 0;
    double neg_ratio = 1.0;
    int k = 32;
    int max_len = 256;
    int d_w = 20;
    double threshold = 0.5;
};

// deterministic, implementation-independent helpers
inline std::size_t rand_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Input sentence at input_idx, exemplar from 1..m of the other sentences.
TrainingPair make_positive_pair(const std::vector<ExerciseDocument>& sentences,
                                std::size_t input_idx, int m, std::mt19937_64& rng);

// Samples the input sentence uniformly. Throws TooFewSentences.
TrainingPair make_positive_pair(const ExerciseDocument& doc, int m, std::mt19937_64& rng);

// Input from input_doc, exemplar (markers included) from exemplar_doc,
// labels forced to zero. Throws SameDocument.
TrainingPair make_negative_pair(const ExerciseDocument& input_doc,
                                const ExerciseDocument& exemplar_doc, int m,
                                std::mt19937_64& rng);

// One positive per (document, sentence) slot, floor(neg_ratio * positives)
// negatives, shuffled. Throws EmptyCorpus.
std::vector<TrainingPair> build_epoch(const std::vector<ExerciseDocument>& corpus,
                                      double neg_ratio, int m, std::mt19937_64& rng);

// Zero everywhere for negatives; gold span projection otherwise.
Eigen::VectorXd make_labels(const TrainingPair& pair, const TokenizedText& tok,
                            const std::vector<Span>& candidates, int max_width);

class Adam {
public:
    explicit Adam(double lr) : lr_(lr) {}

    void begin_step() {
        ++t_;
        cursor_ = 0;
    }

    template <typename M>
    void update(M& value, M& grad) {
        if (cursor_ >= m_.size()) {
            m_.push_back(Eigen::ArrayXXd::Zero(value.rows(), value.cols()));
            v_.push_back(Eigen::ArrayXXd::Zero(value.rows(), value.cols()));
        }
        auto& m = m_[cursor_];
        auto& v = v_[cursor_];
        const Eigen::ArrayXXd g = grad.array();
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.square();
        const double bc1 = 1.0 - std::pow(beta1_, double(t_));
        const double bc2 = 1.0 - std::pow(beta2_, double(t_));
        value.array() -= lr_ * (m / bc1) / ((v / bc2).sqrt() + eps_);
        ++cursor_;
    }

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::size_t cursor_ = 0;
    std::vector<Eigen::ArrayXXd> m_, v_;
};

struct EpochLog {
    int epoch = 0;
    double loss = 0;        // mean batch loss
    double probe_loss = 0;  // fixed probe batch, forward only
};

struct TrainResult {
    ModelCheckpoint checkpoint;
    std::vector<EpochLog> log;
    double initial_probe_loss = 0;
    double final_probe_loss = 0;
};

// Mini-batch Adam over config.epochs epochs; pairs rebuilt each epoch from a
// seed-derived stream. Throws NonFiniteLoss with diagnostics.
TrainResult train(const std::vector<ExerciseDocument>& corpus, const TrainConfig& config,
                  const TinyEncoderD& encoder_init, const std::string& model_kind);

// One training run per candidate ratio, scored by dev macro F1 under the
// typed-exemplar disentangling protocol; ties go to the smaller ratio.
// Throws NoAnnotatedDev.
double tune_negative_ratio(const std::vector<ExerciseDocument>& train_split,
                           const std::vector<ExerciseDocument>& dev_split,
                           const TrainConfig& config, const TinyEncoderD& encoder_init,
                           const std::string& model_kind = kModelExampleAware,
                           std::vector<std::pair<double, double>>* ratio_scores = nullptr);

TrainResult final_train(const std::vector<ExerciseDocument>& train_split,
                        const std::vector<ExerciseDocument>& dev_split, double best_ratio,
                        const TrainConfig& config, const TinyEncoderD& encoder_init,
                        const std::string& model_kind);

}  // namespace gapforge
