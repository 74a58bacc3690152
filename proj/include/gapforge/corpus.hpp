#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gapforge {

// One annotated gap. Offsets count Unicode scalar values into the owning
// document's text; [start_char, end_char) is the removed answer span.
struct GapAnnotation {
    std::size_t start_char = 0;
    std::size_t end_char = 0;
    std::string answer;
    std::optional<std::string> gap_type;  // tense abbreviation or word class; unknown on train
};

// The 12 key French verb tenses used as gap types.
enum class TenseLabel { SPR, PCP, PC, IM, CPR, PR, FP, FS, IP, CPA, IMP, PQ };

inline constexpr std::array<TenseLabel, 12> kAllTenses = {
    TenseLabel::SPR, TenseLabel::PCP, TenseLabel::PC,  TenseLabel::IM,
    TenseLabel::CPR, TenseLabel::PR,  TenseLabel::FP,  TenseLabel::FS,
    TenseLabel::IP,  TenseLabel::CPA, TenseLabel::IMP, TenseLabel::PQ};

const std::string& tense_abbrev(TenseLabel t);
const std::string& tense_full_name(TenseLabel t);
std::optional<TenseLabel> tense_from_abbrev(const std::string& abbrev);

enum class Split { Train, Dev, Test, Unassigned };

const std::string& split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

struct ExerciseDocument {
    std::string id;
    std::string text;                  // flat, markup-free, UTF-8
    std::vector<GapAnnotation> gaps;   // sorted by start_char, non-overlapping
    Split split = Split::Unassigned;
};

struct SplitStats {
    long n_documents = 0;
    long n_sentences = 0;
    long n_gaps = 0;
    std::map<std::string, long> per_tense;  // only filled for dev/test
};

struct CorpusStats {
    SplitStats train, dev, test, unassigned;
    SplitStats& for_split(Split s);
    const SplitStats& for_split(Split s) const;
};

// Throws SchemaViolation if any gap invariant is broken.
void validate_document(const ExerciseDocument& doc);

// "Je [[suis]] content." -> text without markers + one gap per marked region.
// Throws UnbalancedMarkers / NestedMarkers / EmptyGap.
ExerciseDocument parse_marked_text(const std::string& marked, const std::string& id);

// Inverse of parse_marked_text; round-trips text and offsets exactly.
std::string render_marked_text(const ExerciseDocument& doc);

// Every gap replaced by `blank`, everything else untouched.
std::string render_student_view(const ExerciseDocument& doc, const std::string& blank);

// Best-effort HTML cleanup: tags dropped, entities decoded, whitespace runs
// collapsed to single spaces. Gap markers pass through untouched.
std::string strip_markup(const std::string& raw);

// Rule-based splitting on [.?!…] + whitespace + uppercase/quote, with a French
// abbreviation stoplist. A boundary that would bisect a gap is suppressed.
std::vector<ExerciseDocument> sentence_split(const ExerciseDocument& doc);

CorpusStats compute_stats(const std::vector<ExerciseDocument>& corpus);

// JSONL, one document per line. Documents are validated on load.
std::vector<ExerciseDocument> load_corpus(const std::string& path);
void save_corpus(const std::vector<ExerciseDocument>& corpus, const std::string& path);

std::vector<ExerciseDocument> corpus_split(const std::vector<ExerciseDocument>& corpus, Split s);

}  // namespace gapforge
