#include "gapforge/training.hpp"

#include <algorithm>
#include <cmath>

#include "gapforge/evaluation.hpp"

namespace gapforge {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

// j ~ U{1..min(m, pool)} sentences without replacement, document order kept.
std::string sample_exemplar(const std::vector<ExerciseDocument>& sentences,
                            long exclude_idx, int m, std::mt19937_64& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < sentences.size(); ++i)
        if (static_cast<long>(i) != exclude_idx) pool.push_back(i);
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(m), pool.size());
    const std::size_t j = 1 + rand_below(rng, limit);
    // partial Fisher-Yates, then restore document order
    for (std::size_t i = 0; i < j; ++i) {
        const std::size_t pick = i + rand_below(rng, pool.size() - i);
        std::swap(pool[i], pool[pick]);
    }
    pool.resize(j);
    std::sort(pool.begin(), pool.end());
    std::string out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i > 0) out += " ";
        out += render_marked_text(sentences[pool[i]]);
    }
    return out;
}

void shuffle_pairs(std::vector<TrainingPair>& pairs, std::mt19937_64& rng) {
    for (std::size_t i = pairs.size(); i > 1; --i)
        std::swap(pairs[i - 1], pairs[rand_below(rng, i)]);
}

}  // namespace

TrainingPair make_positive_pair(const std::vector<ExerciseDocument>& sentences,
                                std::size_t input_idx, int m, std::mt19937_64& rng) {
    if (sentences.size() < 2)
        throw TooFewSentences("positive pair needs at least two sentences");
    TrainingPair pair;
    pair.input = sentences[input_idx];
    pair.exemplar = sample_exemplar(sentences, static_cast<long>(input_idx), m, rng);
    pair.negative = false;
    return pair;
}

TrainingPair make_positive_pair(const ExerciseDocument& doc, int m, std::mt19937_64& rng) {
    const auto sentences = sentence_split(doc);
    if (sentences.size() < 2)
        throw TooFewSentences("document '" + doc.id + "' has fewer than two sentences");
    const std::size_t idx = rand_below(rng, sentences.size());
    return make_positive_pair(sentences, idx, m, rng);
}

TrainingPair make_negative_pair(const ExerciseDocument& input_doc,
                                const ExerciseDocument& exemplar_doc, int m,
                                std::mt19937_64& rng) {
    if (input_doc.id == exemplar_doc.id)
        throw SameDocument("negative exemplar must come from a different document");
    const auto input_sents = sentence_split(input_doc);
    const auto exemplar_sents = sentence_split(exemplar_doc);
    TrainingPair pair;
    pair.input = input_sents[rand_below(rng, input_sents.size())];
    pair.exemplar = sample_exemplar(exemplar_sents, -1, m, rng);
    pair.negative = true;
    return pair;
}

std::vector<TrainingPair> build_epoch(const std::vector<ExerciseDocument>& corpus,
                                      double neg_ratio, int m, std::mt19937_64& rng) {
    if (corpus.empty()) throw EmptyCorpus("cannot build an epoch from an empty corpus");
    std::vector<std::vector<ExerciseDocument>> sentences;
    sentences.reserve(corpus.size());
    for (const auto& doc : corpus) sentences.push_back(sentence_split(doc));

    std::vector<TrainingPair> pairs;
    for (const auto& sents : sentences) {
        if (sents.size() < 2) continue;  // no exemplar source inside the document
        for (std::size_t i = 0; i < sents.size(); ++i)
            pairs.push_back(make_positive_pair(sents, i, m, rng));
    }
    const auto n_pos = static_cast<long>(pairs.size());
    const long n_neg = static_cast<long>(std::floor(neg_ratio * double(n_pos)));
    if (corpus.size() >= 2) {
        for (long i = 0; i < n_neg; ++i) {
            const std::size_t in_idx = rand_below(rng, corpus.size());
            std::size_t ex_idx = rand_below(rng, corpus.size() - 1);
            if (ex_idx >= in_idx) ++ex_idx;
            TrainingPair pair;
            pair.input = sentences[in_idx][rand_below(rng, sentences[in_idx].size())];
            pair.exemplar = sample_exemplar(sentences[ex_idx], -1, m, rng);
            pair.negative = true;
            pairs.push_back(std::move(pair));
        }
    }
    shuffle_pairs(pairs, rng);
    return pairs;
}

Eigen::VectorXd make_labels(const TrainingPair& pair, const TokenizedText& tok,
                            const std::vector<Span>& candidates, int max_width) {
    if (pair.negative)
        return Eigen::VectorXd::Zero(static_cast<long>(candidates.size()));
    const auto proj = project_gaps(tok, pair.input.gaps, max_width);
    return label_spans(candidates, proj.spans);
}

namespace {

struct PairWork {
    double loss = 0;  // per-pair mean BCE
    long n_spans = 0;
};

// Forward (and optionally backward) for one pair. grad_scale multiplies the
// per-span logit gradient; pass 0 for evaluation-only.
PairWork process_pair(const TrainingPair& pair, TinyEncoderD& encoder,
                      SpanScorer<double>& scorer, bool example_aware,
                      double grad_scale) {
    PairWork work;
    const auto& cfg = encoder.config();
    TokenizedText tok = tokenize(cfg.vocab, pair.input.text);
    if (tok.size() + 1 > cfg.max_len) {
        tok.ids.resize(static_cast<std::size_t>(cfg.max_len - 1));
        tok.offsets.resize(static_cast<std::size_t>(cfg.max_len - 1));
    }
    if (tok.size() == 0) return work;
    const auto candidates = enumerate_spans(tok.size(), scorer.max_width());
    const Eigen::VectorXd labels = make_labels(pair, tok, candidates, scorer.max_width());
    work.n_spans = static_cast<long>(candidates.size());

    TinyEncoderD::Cache in_cache;
    const auto enc = encoder.forward(tok, in_cache);

    TinyEncoderD::Cache ex_cache;
    Eigen::VectorXd hex;
    bool have_exemplar = false;
    if (example_aware && !pair.exemplar.empty()) {
        const TokenizedText ex_tok = exemplar_tokens(pair.exemplar, cfg.vocab, cfg.max_len);
        hex = encoder.forward(ex_tok, ex_cache).sequence_vector;
        have_exemplar = true;
    }

    const int k = cfg.k;
    Eigen::MatrixXd d_tokens = Eigen::MatrixXd::Zero(tok.size(), k);
    Eigen::VectorXd d_hex = Eigen::VectorXd::Zero(k);
    constexpr double eps = 1e-7;
    const double per_span = 1.0 / double(candidates.size());

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        SpanScorer<double>::RepCache rc;
        const Eigen::VectorXd rep = scorer.span_representation(enc, candidates[i], &rc);
        const double logit = have_exemplar ? scorer.logit_example_aware(rep, hex)
                                           : scorer.logit_baseline(rep);
        const double p = sigmoid(logit);
        const double y = labels[static_cast<long>(i)];
        const double pc = std::min(1.0 - eps, std::max(eps, p));
        work.loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) * per_span;
        if (grad_scale != 0.0) {
            const double d_logit = (p - y) * per_span * grad_scale;
            const Eigen::VectorXd d_rep = scorer.backward_logit(
                d_logit, rep, have_exemplar ? &hex : nullptr,
                have_exemplar ? &d_hex : nullptr);
            scorer.backward_representation(candidates[i], rc, d_rep, d_tokens);
        }
    }
    if (grad_scale != 0.0) {
        encoder.backward(in_cache, d_tokens, Eigen::VectorXd());
        if (have_exemplar) encoder.backward(ex_cache, Eigen::MatrixXd(), d_hex);
    }
    return work;
}

double probe_loss(const std::vector<TrainingPair>& probe, TinyEncoderD& encoder,
                  SpanScorer<double>& scorer, bool example_aware) {
    if (probe.empty()) return 0;
    double total = 0;
    for (const auto& pair : probe)
        total += process_pair(pair, encoder, scorer, example_aware, 0.0).loss;
    return total / double(probe.size());
}

}  // namespace

TrainResult train(const std::vector<ExerciseDocument>& corpus, const TrainConfig& config,
                  const TinyEncoderD& encoder_init, const std::string& model_kind) {
    if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
    const bool example_aware = model_kind == kModelExampleAware;

    TinyEncoderD encoder = encoder_init;
    SpanScorer<double> scorer(encoder.config().k, config.d_w, config.max_span_width,
                              mix_seed(config.seed, 0x5c02e5));
    Adam opt(config.learning_rate);

    std::mt19937_64 probe_rng(mix_seed(config.seed, 0x9806e));
    std::vector<TrainingPair> probe =
        build_epoch(corpus, config.neg_ratio, config.m, probe_rng);
    if (probe.size() > static_cast<std::size_t>(config.batch_size))
        probe.resize(static_cast<std::size_t>(config.batch_size));

    TrainResult result{ModelCheckpoint{encoder, scorer, model_kind, config.threshold},
                       {},
                       0,
                       0};
    result.initial_probe_loss = probe_loss(probe, encoder, scorer, example_aware);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        const auto pairs = build_epoch(corpus, config.neg_ratio, config.m, rng);
        double loss_sum = 0;
        long n_batches = 0;
        for (std::size_t begin = 0; begin < pairs.size();
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(pairs.size(), begin + static_cast<std::size_t>(config.batch_size));
            const double grad_scale = 1.0 / double(end - begin);
            encoder.zero_grads();
            scorer.zero_grads();
            double batch_loss = 0;
            for (std::size_t i = begin; i < end; ++i)
                batch_loss +=
                    process_pair(pairs[i], encoder, scorer, example_aware, grad_scale).loss;
            batch_loss /= double(end - begin);
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(n_batches) +
                                    " (lr=" + std::to_string(config.learning_rate) + ")");
            opt.begin_step();
            encoder.visit_params(
                [&](const std::string&, auto& value, auto& grad) { opt.update(value, grad); });
            scorer.visit_params(
                [&](const std::string&, auto& value, auto& grad) { opt.update(value, grad); });
            loss_sum += batch_loss;
            ++n_batches;
        }
        EpochLog log;
        log.epoch = epoch;
        log.loss = n_batches > 0 ? loss_sum / double(n_batches) : 0;
        log.probe_loss = probe_loss(probe, encoder, scorer, example_aware);
        result.log.push_back(log);
    }

    result.final_probe_loss =
        result.log.empty() ? result.initial_probe_loss : result.log.back().probe_loss;
    result.checkpoint = ModelCheckpoint{std::move(encoder), std::move(scorer), model_kind,
                                        config.threshold};
    return result;
}

double tune_negative_ratio(const std::vector<ExerciseDocument>& train_split,
                           const std::vector<ExerciseDocument>& dev_split,
                           const TrainConfig& config, const TinyEncoderD& encoder_init,
                           const std::string& model_kind,
                           std::vector<std::pair<double, double>>* ratio_scores) {
    std::vector<std::string> labels;
    for (const auto& doc : dev_split)
        for (const auto& g : doc.gaps)
            if (g.gap_type &&
                std::find(labels.begin(), labels.end(), *g.gap_type) == labels.end())
                labels.push_back(*g.gap_type);
    if (labels.empty())
        throw NoAnnotatedDev("dev split carries no gap_type annotations");
    std::sort(labels.begin(), labels.end());

    const auto selection = build_type_exemplars(dev_split, labels);
    const auto dev_eval = remove_documents(dev_split, selection.removed_ids);

    std::vector<double> candidates = config.neg_ratio_candidates;
    std::sort(candidates.begin(), candidates.end());

    double best_ratio = candidates.front();
    double best_f1 = -1;
    for (double ratio : candidates) {
        TrainConfig cfg = config;
        cfg.neg_ratio = ratio;
        const TrainResult result = train(train_split, cfg, encoder_init, model_kind);
        const ModelPredictor predictor(result.checkpoint);
        const EvalReport report = disentangle_eval(predictor, dev_eval, selection.exemplars);
        const double macro = report.macro_f1.value_or(0.0);
        if (ratio_scores) ratio_scores->emplace_back(ratio, macro);
        if (macro > best_f1) {  // strict: ties keep the smaller ratio
            best_f1 = macro;
            best_ratio = ratio;
        }
    }
    return best_ratio;
}

TrainResult final_train(const std::vector<ExerciseDocument>& train_split,
                        const std::vector<ExerciseDocument>& dev_split, double best_ratio,
                        const TrainConfig& config, const TinyEncoderD& encoder_init,
                        const std::string& model_kind) {
    std::vector<ExerciseDocument> corpus = train_split;
    corpus.insert(corpus.end(), dev_split.begin(), dev_split.end());
    TrainConfig cfg = config;
    cfg.neg_ratio = best_ratio;
    return train(corpus, cfg, encoder_init, model_kind);
}

}  // namespace gapforge
