#include "gapforge/evaluation.hpp"

#include <algorithm>

#include "gapforge/errors.hpp"
#include "gapforge/unicode.hpp"

namespace gapforge {

Prf prf(long tp, long fp, long fn) {
    Prf out;
    out.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

std::set<Span> predict_spans(const GapPredictor& predictor, const TokenizedText& input,
                             const std::string& exemplar_marked) {
    std::set<Span> out;
    for (const auto& [span, p] : predictor.score(input, exemplar_marked))
        if (p >= predictor.threshold()) out.insert(span);
    return out;
}

namespace {

// Re-joins a run of sentence sub-documents into one document, gaps re-offset.
ExerciseDocument join_sentences(const std::vector<ExerciseDocument>& sents,
                                std::size_t begin, std::size_t end,
                                const std::string& id) {
    ExerciseDocument out;
    out.id = id;
    if (begin < sents.size()) out.split = sents[begin].split;
    std::size_t offset = 0;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) {
            out.text += " ";
            offset += 1;
        }
        for (const auto& g : sents[i].gaps) {
            GapAnnotation local = g;
            local.start_char += offset;
            local.end_char += offset;
            out.gaps.push_back(std::move(local));
        }
        out.text += sents[i].text;
        offset += utf8_length(sents[i].text);
    }
    return out;
}

std::string marked_join(const std::vector<ExerciseDocument>& sents, std::size_t begin,
                        std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out += " ";
        out += render_marked_text(sents[i]);
    }
    return out;
}

void finalize(EvalReport& report) {
    const Prf p = prf(report.tp, report.fp, report.fn);
    report.precision = p.precision;
    report.recall = p.recall;
    report.f1 = p.f1;
}

nlohmann::json spans_to_json(const std::set<Span>& spans) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : spans) arr.push_back({{"start", s.start}, {"end", s.end}});
    return arr;
}

}  // namespace

std::pair<ExerciseDocument, ExerciseDocument> halve_document(const ExerciseDocument& doc) {
    const auto sents = sentence_split(doc);
    if (sents.size() < 2)
        throw SingleSentence("document '" + doc.id + "' has fewer than two sentences");
    const std::size_t cut = (sents.size() + 1) / 2;
    return {join_sentences(sents, 0, cut, doc.id + "/a"),
            join_sentences(sents, cut, sents.size(), doc.id + "/b")};
}

EvalReport binary_eval(const GapPredictor& predictor,
                       const std::vector<ExerciseDocument>& test_corpus,
                       std::ostream* prediction_dump) {
    EvalReport report;
    for (const auto& doc : test_corpus) {
        const auto sents = sentence_split(doc);
        if (sents.size() < 2) {
            report.skipped_documents += 1;
            report.skipped_gaps += static_cast<long>(doc.gaps.size());
            continue;
        }
        const std::size_t cut = (sents.size() + 1) / 2;
        for (int direction = 0; direction < 2; ++direction) {
            const std::size_t ex_begin = direction == 0 ? 0 : cut;
            const std::size_t ex_end = direction == 0 ? cut : sents.size();
            const std::size_t in_begin = direction == 0 ? cut : 0;
            const std::size_t in_end = direction == 0 ? sents.size() : cut;
            const std::string exemplar = marked_join(sents, ex_begin, ex_end);
            for (std::size_t i = in_begin; i < in_end; ++i) {
                const auto tok = predictor.tokenize_input(sents[i].text);
                const auto proj = project_gaps(tok, sents[i].gaps, predictor.max_width());
                const auto predicted = predict_spans(predictor, tok, exemplar);
                long tp = 0;
                for (const auto& s : predicted)
                    if (proj.spans.count(s)) ++tp;
                report.tp += tp;
                report.fp += static_cast<long>(predicted.size()) - tp;
                report.fn += static_cast<long>(proj.spans.size()) - tp;
                // gold gaps the candidate set cannot express are misses
                report.fn += proj.overflow_count + proj.unaligned_count;
                report.overflow_gaps += proj.overflow_count;
                if (prediction_dump) {
                    nlohmann::json j;
                    j["doc_id"] = doc.id;
                    j["direction"] = direction == 0 ? "a->b" : "b->a";
                    j["sentence"] = sents[i].id;
                    nlohmann::json preds = nlohmann::json::array();
                    for (const auto& [span, p] : predictor.score(tok, exemplar))
                        if (p >= predictor.threshold())
                            preds.push_back({{"start", span.start},
                                             {"end", span.end},
                                             {"probability", p}});
                    j["predicted"] = std::move(preds);
                    j["gold"] = spans_to_json(proj.spans);
                    *prediction_dump << j.dump() << "\n";
                }
            }
        }
    }
    finalize(report);
    return report;
}

ExemplarSelection build_type_exemplars(const std::vector<ExerciseDocument>& corpus,
                                       const std::vector<std::string>& labels) {
    ExemplarSelection selection;
    std::set<std::string> used;
    for (const auto& label : labels) {
        const ExerciseDocument* chosen = nullptr;
        for (const auto& doc : corpus) {
            if (used.count(doc.id) || doc.gaps.empty()) continue;
            bool homogeneous = true;
            for (const auto& g : doc.gaps)
                if (!g.gap_type || *g.gap_type != label) {
                    homogeneous = false;
                    break;
                }
            if (homogeneous) {
                chosen = &doc;
                break;
            }
        }
        if (!chosen) {
            selection.exemplars.push_back({label, ""});
            continue;
        }
        used.insert(chosen->id);
        selection.exemplars.push_back({label, render_marked_text(*chosen)});
        selection.removed_ids.push_back(chosen->id);
    }
    return selection;
}

ExemplarSelection build_tense_exemplars(const std::vector<ExerciseDocument>& corpus) {
    std::vector<std::string> labels;
    for (TenseLabel t : kAllTenses) labels.push_back(tense_abbrev(t));
    ExemplarSelection selection = build_type_exemplars(corpus, labels);
    for (const auto& ex : selection.exemplars)
        if (ex.marked_text.empty())
            throw MissingTense("no homogeneous document available for tense " + ex.gap_type);
    return selection;
}

std::vector<ExerciseDocument> remove_documents(const std::vector<ExerciseDocument>& corpus,
                                               const std::vector<std::string>& ids) {
    std::set<std::string> drop(ids.begin(), ids.end());
    std::vector<ExerciseDocument> out;
    for (const auto& d : corpus)
        if (!drop.count(d.id)) out.push_back(d);
    return out;
}

EvalReport disentangle_eval(const GapPredictor& predictor,
                            const std::vector<ExerciseDocument>& test_corpus,
                            const std::vector<TypeExemplar>& exemplars) {
    EvalReport report;
    // sentence-level inputs, shared across all exemplar prompts
    std::vector<ExerciseDocument> sentences;
    for (const auto& doc : test_corpus)
        for (auto& s : sentence_split(doc)) sentences.push_back(std::move(s));

    struct SentenceView {
        TokenizedText tok;
        std::map<Span, std::set<std::string>> typed_gold;  // projected typed gaps
        std::map<std::string, long> overflow_by_type;
    };
    std::vector<SentenceView> views;
    views.reserve(sentences.size());
    for (const auto& s : sentences) {
        SentenceView v;
        v.tok = predictor.tokenize_input(s.text);
        for (const auto& g : s.gaps) {
            if (!g.gap_type) continue;  // untyped gaps are out of protocol scope
            const auto proj = project_gaps(v.tok, {g}, predictor.max_width());
            if (!proj.spans.empty())
                v.typed_gold[*proj.spans.begin()].insert(*g.gap_type);
            else
                v.overflow_by_type[*g.gap_type] += 1;
        }
        views.push_back(std::move(v));
    }

    double f1_sum = 0;
    for (const auto& ex : exemplars) {
        TypeMetrics m;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            const auto& v = views[i];
            const auto predicted =
                ex.marked_text.empty()
                    ? std::set<Span>{}
                    : predict_spans(predictor, v.tok, ex.marked_text);
            long gold_here = 0;
            for (const auto& [span, types] : v.typed_gold)
                if (types.count(ex.gap_type)) ++gold_here;
            long tp = 0;
            for (const auto& s : predicted) {
                auto it = v.typed_gold.find(s);
                if (it != v.typed_gold.end() && it->second.count(ex.gap_type)) ++tp;
            }
            m.tp += tp;
            m.fp += static_cast<long>(predicted.size()) - tp;
            m.fn += gold_here - tp;
            auto ov = v.overflow_by_type.find(ex.gap_type);
            if (ov != v.overflow_by_type.end()) {
                m.fn += ov->second;
                report.overflow_gaps += ov->second;
            }
        }
        m.support = m.tp + m.fn;
        const Prf p = prf(m.tp, m.fp, m.fn);
        m.precision = p.precision;
        m.recall = p.recall;
        m.f1 = p.f1;
        f1_sum += m.f1;
        report.tp += m.tp;
        report.fp += m.fp;
        report.fn += m.fn;
        report.per_type[ex.gap_type] = m;
    }
    if (!exemplars.empty()) report.macro_f1 = f1_sum / double(exemplars.size());
    finalize(report);
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["tp"] = report.tp;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["skipped_documents"] = report.skipped_documents;
    j["skipped_gaps"] = report.skipped_gaps;
    j["overflow_gaps"] = report.overflow_gaps;
    if (report.macro_f1) j["macro_f1"] = *report.macro_f1;
    if (!report.per_type.empty()) {
        nlohmann::json types;
        for (const auto& [label, m] : report.per_type) {
            types[label] = {{"tp", m.tp},           {"fp", m.fp},
                            {"fn", m.fn},           {"precision", m.precision},
                            {"recall", m.recall},   {"f1", m.f1},
                            {"support", m.support}};
        }
        j["per_type"] = std::move(types);
    }
    return j;
}

}  // namespace gapforge
