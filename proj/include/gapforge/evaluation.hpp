#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gapforge/corpus.hpp"
#include "gapforge/spans.hpp"
#include "json.hpp"

namespace gapforge {

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Zero-division convention: a zero denominator yields 0.
Prf prf(long tp, long fp, long fn);

struct TypeMetrics {
    long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
    long support = 0;
};

struct EvalReport {
    long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
    std::map<std::string, TypeMetrics> per_type;
    std::optional<double> macro_f1;
    long skipped_documents = 0;  // one-sentence documents excluded from binary eval
    long skipped_gaps = 0;
    long overflow_gaps = 0;  // gold gaps wider than max_width, counted as FN
};

// Anything that can tokenize an input sentence and score its candidate
// spans, optionally conditioned on a marked exemplar. Implemented by the
// trained models and by deterministic stubs in tests.
class GapPredictor {
public:
    virtual ~GapPredictor() = default;
    virtual TokenizedText tokenize_input(const std::string& text) const = 0;
    // exemplar_marked empty means no exemplar (baseline path)
    virtual std::vector<std::pair<Span, double>> score(
        const TokenizedText& input, const std::string& exemplar_marked) const = 0;
    virtual int max_width() const = 0;
    virtual double threshold() const { return 0.5; }
};

std::set<Span> predict_spans(const GapPredictor& predictor, const TokenizedText& input,
                             const std::string& exemplar_marked);

// Sentence-count halving, ceiling to the first part. Throws SingleSentence.
std::pair<ExerciseDocument, ExerciseDocument> halve_document(const ExerciseDocument& doc);

// Half-split protocol with role exchange; exact span match; micro counts.
// One-sentence documents are skipped and censused in the report.
EvalReport binary_eval(const GapPredictor& predictor,
                       const std::vector<ExerciseDocument>& test_corpus,
                       std::ostream* prediction_dump = nullptr);

struct TypeExemplar {
    std::string gap_type;
    std::string marked_text;
};

struct ExemplarSelection {
    std::vector<TypeExemplar> exemplars;
    std::vector<std::string> removed_ids;  // source documents to drop from all splits
};

// One homogeneous exemplar per requested label, each from a distinct
// document whose typed gaps all carry that label.
ExemplarSelection build_type_exemplars(const std::vector<ExerciseDocument>& corpus,
                                       const std::vector<std::string>& labels);

// The 12 fixed verb-tense exemplars. Throws MissingTense.
ExemplarSelection build_tense_exemplars(const std::vector<ExerciseDocument>& corpus);

std::vector<ExerciseDocument> remove_documents(const std::vector<ExerciseDocument>& corpus,
                                               const std::vector<std::string>& ids);

// Prompt every sentence with each fixed exemplar; per-type exact-match
// counts plus the unweighted macro F1 over all exemplar labels.
EvalReport disentangle_eval(const GapPredictor& predictor,
                            const std::vector<ExerciseDocument>& test_corpus,
                            const std::vector<TypeExemplar>& exemplars);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace gapforge
