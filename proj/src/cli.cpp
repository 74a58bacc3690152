#include "gapforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gapforge/evaluation.hpp"
#include "gapforge/unicode.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace gapforge::cli {

namespace {

nlohmann::json load_config_json(const std::string& config_path) {
    if (config_path.empty()) return nlohmann::json::object();
    std::ifstream in(config_path);
    if (!in) throw IoFailure("cannot open config file: " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation("invalid config file " + config_path + ": " + e.what());
    }
    return j;
}

nlohmann::json config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["max_span_width"] = c.max_span_width;
    j["m"] = c.m;
    j["neg_ratio_candidates"] = c.neg_ratio_candidates;
    j["seed"] = c.seed;
    j["neg_ratio"] = c.neg_ratio;
    j["k"] = c.k;
    j["max_len"] = c.max_len;
    j["d_w"] = c.d_w;
    j["threshold"] = c.threshold;
    return j;
}

void write_manifest(const std::string& path, const std::string& command,
                    const TrainConfig* config, std::uint64_t seed,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_paths,
                    const nlohmann::json& extra = {}) {
    nlohmann::json j;
    j["command"] = command;
    if (config) j["config"] = config_to_json(*config);
    j["seed"] = seed;
    nlohmann::json inputs;
    for (const auto& p : input_paths) {
        std::ostringstream hex;
        hex << std::hex << hash_file(p);
        inputs[p] = hex.str();
    }
    j["inputs"] = std::move(inputs);
    j["outputs"] = output_paths;
    if (!extra.is_null() && !extra.empty())
        for (auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

Vocabulary build_vocab(const std::vector<ExerciseDocument>& docs) {
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(d.text);
    return Vocabulary::build(texts);
}

// Reuses a cached encoder init from $GAPFORGE_CACHE when available.
TinyEncoderD make_encoder(const TrainConfig& config, Vocabulary vocab) {
    EncoderConfig ec;
    ec.k = config.k;
    ec.max_len = config.max_len;
    ec.vocab = std::move(vocab);
    ec.seed = config.seed;

    const char* cache = std::getenv("GAPFORGE_CACHE");
    if (cache && *cache) {
        std::ostringstream key;
        key << "encoder-" << std::hex << ec.vocab.hash() << "-k" << std::dec << ec.k
            << "-l" << ec.max_len << "-s" << ec.seed;
        const fs::path dir = fs::path(cache) / key.str();
        if (fs::exists(dir / "config.json")) return TinyEncoderD::load(dir.string());
        TinyEncoderD enc(ec);
        std::error_code ignore;
        fs::create_directories(fs::path(cache), ignore);
        enc.save(dir.string());
        return enc;
    }
    return TinyEncoderD(ec);
}

void print_stats(const CorpusStats& stats) {
    auto row = [](const std::string& name, long a, long b, long c) {
        std::cout << name << "\t" << a << "\t" << b << "\t" << c << "\n";
    };
    std::cout << "\tTrain\tDev\tTest\n";
    row("# Documents", stats.train.n_documents, stats.dev.n_documents,
        stats.test.n_documents);
    row("# Sentences", stats.train.n_sentences, stats.dev.n_sentences,
        stats.test.n_sentences);
    row("# Gaps", stats.train.n_gaps, stats.dev.n_gaps, stats.test.n_gaps);
    for (TenseLabel t : kAllTenses) {
        const std::string& ab = tense_abbrev(t);
        auto count = [&](const SplitStats& s) {
            auto it = s.per_tense.find(ab);
            return it == s.per_tense.end() ? 0L : it->second;
        };
        std::cout << tense_full_name(t) << " (" << ab << ")\tUNK\t" << count(stats.dev)
                  << "\t" << count(stats.test) << "\n";
    }
}

std::vector<ExerciseDocument> training_documents(
    const std::vector<ExerciseDocument>& corpus) {
    std::vector<ExerciseDocument> docs;
    for (const auto& d : corpus)
        if (d.split == Split::Train || d.split == Split::Dev) docs.push_back(d);
    if (docs.empty()) docs = corpus;
    return docs;
}

void write_run_log(const std::string& path, const TrainResult& result) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write run log: " + path);
    for (const auto& e : result.log) {
        nlohmann::json j;
        j["epoch"] = e.epoch;
        j["loss"] = e.loss;
        j["probe_loss"] = e.probe_loss;
        out << j.dump() << "\n";
    }
}

}  // namespace

TrainConfig resolve_config(const std::string& config_path, const Overrides& o) {
    const nlohmann::json j = load_config_json(config_path);
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.max_span_width = j.value("max_span_width", c.max_span_width);
    c.m = j.value("m", c.m);
    if (j.contains("neg_ratio_candidates"))
        c.neg_ratio_candidates = j.at("neg_ratio_candidates").get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.neg_ratio = j.value("neg_ratio", c.neg_ratio);
    c.k = j.value("k", c.k);
    c.max_len = j.value("max_len", c.max_len);
    c.d_w = j.value("d_w", c.d_w);
    c.threshold = j.value("threshold", c.threshold);
    if (o.seed) c.seed = *o.seed;
    if (o.threshold) c.threshold = *o.threshold;
    if (o.max_width) c.max_span_width = *o.max_width;
    if (o.neg_ratio) c.neg_ratio = *o.neg_ratio;
    if (o.learning_rate) c.learning_rate = *o.learning_rate;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.k) c.k = *o.k;
    return c;
}

std::string resolve_model_kind(const std::string& config_path, const Overrides& o) {
    if (o.model) return *o.model;
    const nlohmann::json j = load_config_json(config_path);
    return j.value("model_kind", std::string(kModelExampleAware));
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

void run_prepare(const std::string& raw_dir, const std::string& out_corpus,
                 std::uint64_t seed) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(raw_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<ExerciseDocument> corpus;
    for (const auto& file : files) {
        const std::string ext = file.extension().string();
        if (ext == ".txt") {
            std::ifstream in(file);
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                corpus.push_back(parse_marked_text(strip_markup(ss.str()),
                                                   file.stem().string()));
            } catch (const Error& e) {
                throw UnbalancedMarkers(file.string() + ": " + e.what());
            }
        } else if (ext == ".jsonl") {
            auto docs = load_corpus(file.string());
            corpus.insert(corpus.end(), docs.begin(), docs.end());
        }
    }
    if (corpus.empty())
        throw EmptyCorpus("no exercise documents found in " + raw_dir);

    // assign splits in the 618/50/100 proportions when unassigned
    std::vector<std::size_t> unassigned;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].split == Split::Unassigned) unassigned.push_back(i);
    if (!unassigned.empty()) {
        std::mt19937_64 rng(seed);
        for (std::size_t i = unassigned.size(); i > 1; --i)
            std::swap(unassigned[i - 1], unassigned[rand_below(rng, i)]);
        const auto n = unassigned.size();
        const auto n_train = static_cast<std::size_t>(std::llround(double(n) * 618.0 / 768.0));
        const auto n_dev = static_cast<std::size_t>(std::llround(double(n) * 50.0 / 768.0));
        for (std::size_t i = 0; i < n; ++i) {
            Split s = i < n_train              ? Split::Train
                      : i < n_train + n_dev    ? Split::Dev
                                               : Split::Test;
            corpus[unassigned[i]].split = s;
        }
    }

    for (const auto& d : corpus) validate_document(d);
    save_corpus(corpus, out_corpus);
    print_stats(compute_stats(corpus));
    write_manifest(out_corpus + ".manifest.json", "prepare", nullptr, seed,
                   {}, {out_corpus});
}

void run_train(const std::string& corpus_path, const TrainConfig& config,
               const std::string& model_kind, const std::string& out_dir) {
    const auto corpus = load_corpus(corpus_path);
    const auto docs = training_documents(corpus);
    TinyEncoderD encoder = make_encoder(config, build_vocab(docs));
    const TrainResult result = train(docs, config, encoder, model_kind);

    fs::create_directories(out_dir);
    result.checkpoint.save((fs::path(out_dir) / "checkpoint").string());
    write_run_log((fs::path(out_dir) / "train_log.jsonl").string(), result);
    nlohmann::json extra;
    extra["model_kind"] = model_kind;
    extra["initial_probe_loss"] = result.initial_probe_loss;
    extra["final_probe_loss"] = result.final_probe_loss;
    write_manifest((fs::path(out_dir) / "manifest.json").string(), "train", &config,
                   config.seed, {corpus_path},
                   {(fs::path(out_dir) / "checkpoint").string()}, extra);
}

void run_tune(const std::string& corpus_path, const TrainConfig& config,
              const std::string& out_dir) {
    const auto corpus = load_corpus(corpus_path);
    const auto train_split = corpus_split(corpus, Split::Train);
    const auto dev_split = corpus_split(corpus, Split::Dev);
    TinyEncoderD encoder = make_encoder(config, build_vocab(training_documents(corpus)));

    std::vector<std::pair<double, double>> scores;
    const double best =
        tune_negative_ratio(train_split, dev_split, config, encoder,
                            kModelExampleAware, &scores);

    fs::create_directories(out_dir);
    nlohmann::json extra;
    extra["best_ratio"] = best;
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [ratio, f1] : scores)
        grid.push_back({{"neg_ratio", ratio}, {"dev_macro_f1", f1}});
    extra["grid"] = std::move(grid);
    write_manifest((fs::path(out_dir) / "manifest.json").string(), "tune", &config,
                   config.seed, {corpus_path}, {}, extra);
    std::cout << "best negative ratio: " << best << "\n";
}

void run_eval(const std::string& checkpoint_dir, const std::string& corpus_path,
              const std::string& protocol, const std::string& out_report) {
    const ModelCheckpoint ckpt = ModelCheckpoint::load(checkpoint_dir);
    const ModelPredictor predictor(ckpt);
    const auto corpus = load_corpus(corpus_path);
    auto test_split = corpus_split(corpus, Split::Test);
    if (test_split.empty()) test_split = corpus;

    EvalReport report;
    if (protocol == "binary") {
        std::ofstream dump(out_report + ".predictions.jsonl");
        report = binary_eval(predictor, test_split, dump ? &dump : nullptr);
    } else if (protocol == "disentangle") {
        const auto selection = build_tense_exemplars(corpus);
        report = disentangle_eval(predictor, remove_documents(test_split, selection.removed_ids),
                                  selection.exemplars);
    } else {
        throw std::invalid_argument("unknown protocol: " + protocol);
    }

    nlohmann::json j = report_to_json(report);
    j["config"] = {{"model_kind", ckpt.model_kind},
                   {"threshold", ckpt.threshold},
                   {"max_width", ckpt.scorer.max_width()},
                   {"k", ckpt.scorer.k()},
                   {"vocab_hash", ckpt.encoder.vocab().hash()},
                   {"protocol", protocol}};
    std::ofstream out(out_report);
    if (!out) throw IoFailure("cannot write report: " + out_report);
    out << j.dump(2) << "\n";
    std::cout << "P=" << report.precision << " R=" << report.recall << " F1=" << report.f1;
    if (report.macro_f1) std::cout << " macroF1=" << *report.macro_f1;
    std::cout << "\n";
}

void run_generate(const std::string& checkpoint_dir, const std::string& exemplar_file,
                  const std::string& input_file, const std::string& out_file,
                  const std::string& format, bool with_scores) {
    const ModelCheckpoint ckpt = ModelCheckpoint::load(checkpoint_dir);
    const ModelPredictor predictor(ckpt);

    auto read_file = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoFailure("cannot open file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string exemplar = strip_markup(read_file(exemplar_file));
    parse_marked_text(exemplar, "exemplar");  // balance check up front

    ExerciseDocument input;
    input.id = "input";
    input.text = strip_markup(read_file(input_file));
    const auto sentences = sentence_split(input);

    std::ofstream scores_out;
    if (with_scores) scores_out.open(out_file + ".scores.jsonl");

    ExerciseDocument result;
    result.id = "generated";
    std::size_t offset = 0;
    for (std::size_t si = 0; si < sentences.size(); ++si) {
        const auto& sent = sentences[si];
        if (si > 0) {
            result.text += " ";
            offset += 1;
        }
        try {
            const auto tok = predictor.tokenize_input(sent.text);
            std::vector<SpanScore<double>> kept;
            for (const auto& [span, p] : predictor.score(tok, exemplar)) {
                if (with_scores) {
                    nlohmann::json j;
                    j["sentence"] = si;
                    j["start"] = span.start;
                    j["end"] = span.end;
                    j["probability"] = p;
                    scores_out << j.dump() << "\n";
                }
                if (p >= predictor.threshold()) kept.push_back({span, p});
            }
            for (const auto& s : resolve_overlaps(std::move(kept))) {
                GapAnnotation g;
                g.start_char = offset + tok.offsets[static_cast<std::size_t>(s.span.start)].first;
                g.end_char = offset + tok.offsets[static_cast<std::size_t>(s.span.end)].second;
                result.gaps.push_back(std::move(g));
            }
        } catch (const SequenceTooLong& e) {
            throw SequenceTooLong("sentence " + std::to_string(si) + ": " + e.what());
        }
        result.text += sent.text;
        offset += utf8_length(sent.text);
    }
    for (auto& g : result.gaps)
        g.answer = utf8_slice(result.text, g.start_char, g.end_char);
    validate_document(result);

    std::ofstream out(out_file);
    if (!out) throw IoFailure("cannot write output: " + out_file);
    out << (format == "blanks" ? render_student_view(result, "____")
                               : render_marked_text(result))
        << "\n";
}

}  // namespace gapforge::cli
