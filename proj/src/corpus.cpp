#include "gapforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "gapforge/errors.hpp"
#include "gapforge/unicode.hpp"
#include "json.hpp"

namespace gapforge {

namespace {

const std::array<std::string, 12> kTenseAbbrev = {"SPR", "PCP", "PC", "IM",
                                                  "CPR", "PR",  "FP", "FS",
                                                  "IP",  "CPA", "IMP", "PQ"};
const std::array<std::string, 12> kTenseFull = {
    "Subjonctif Présent",
    "Passé Composé (participe passé)",
    "Passé Composé",
    "Imparfait",
    "Conditionnel Présent",
    "Passé Récent",
    "Futur Proche",
    "Futur Simple",
    "Indicatif Présent",
    "Conditionnel Passé",
    "Impératif",
    "Plus-que-parfait"};

const std::array<std::string, 4> kSplitNames = {"train", "dev", "test", "unassigned"};

}  // namespace

const std::string& tense_abbrev(TenseLabel t) {
    return kTenseAbbrev[static_cast<std::size_t>(t)];
}

const std::string& tense_full_name(TenseLabel t) {
    return kTenseFull[static_cast<std::size_t>(t)];
}

std::optional<TenseLabel> tense_from_abbrev(const std::string& abbrev) {
    for (std::size_t i = 0; i < kTenseAbbrev.size(); ++i)
        if (kTenseAbbrev[i] == abbrev) return static_cast<TenseLabel>(i);
    return std::nullopt;
}

const std::string& split_name(Split s) {
    return kSplitNames[static_cast<std::size_t>(s)];
}

std::optional<Split> split_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kSplitNames.size(); ++i)
        if (kSplitNames[i] == name) return static_cast<Split>(i);
    return std::nullopt;
}

SplitStats& CorpusStats::for_split(Split s) {
    switch (s) {
        case Split::Train: return train;
        case Split::Dev: return dev;
        case Split::Test: return test;
        default: return unassigned;
    }
}

const SplitStats& CorpusStats::for_split(Split s) const {
    return const_cast<CorpusStats*>(this)->for_split(s);
}

void validate_document(const ExerciseDocument& doc) {
    const std::size_t len = utf8_length(doc.text);
    std::size_t prev_end = 0;
    bool first = true;
    for (const auto& g : doc.gaps) {
        if (g.start_char >= g.end_char || g.end_char > len)
            throw SchemaViolation("document '" + doc.id + "': gap offsets [" +
                                  std::to_string(g.start_char) + "," +
                                  std::to_string(g.end_char) + ") out of range (field: gaps)");
        if (!first && g.start_char < prev_end)
            throw SchemaViolation("document '" + doc.id +
                                  "': overlapping or unsorted gaps (field: gaps)");
        if (utf8_slice(doc.text, g.start_char, g.end_char) != g.answer)
            throw SchemaViolation("document '" + doc.id +
                                  "': answer does not match text slice (field: answer)");
        prev_end = g.end_char;
        first = false;
    }
}

ExerciseDocument parse_marked_text(const std::string& marked, const std::string& id) {
    const std::u32string in = utf8_decode(marked);
    std::u32string out;
    out.reserve(in.size());
    ExerciseDocument doc;
    doc.id = id;
    bool in_gap = false;
    std::size_t gap_start = 0;
    for (std::size_t i = 0; i < in.size();) {
        if (i + 1 < in.size() && in[i] == U'[' && in[i + 1] == U'[') {
            if (in_gap) throw NestedMarkers("nested '[[' in document '" + id + "'");
            in_gap = true;
            gap_start = out.size();
            i += 2;
        } else if (i + 1 < in.size() && in[i] == U']' && in[i + 1] == U']') {
            if (!in_gap) throw UnbalancedMarkers("dangling ']]' in document '" + id + "'");
            if (out.size() == gap_start)
                throw EmptyGap("empty gap in document '" + id + "'");
            GapAnnotation g;
            g.start_char = gap_start;
            g.end_char = out.size();
            g.answer = utf8_encode(
                std::u32string_view(out).substr(gap_start, out.size() - gap_start));
            doc.gaps.push_back(std::move(g));
            in_gap = false;
            i += 2;
        } else {
            out.push_back(in[i]);
            ++i;
        }
    }
    if (in_gap) throw UnbalancedMarkers("dangling '[[' in document '" + id + "'");
    doc.text = utf8_encode(out);
    return doc;
}

std::string render_marked_text(const ExerciseDocument& doc) {
    const std::u32string text = utf8_decode(doc.text);
    std::u32string out;
    out.reserve(text.size() + 4 * doc.gaps.size());
    std::size_t pos = 0;
    for (const auto& g : doc.gaps) {
        out.append(text, pos, g.start_char - pos);
        out += U"[[";
        out.append(text, g.start_char, g.end_char - g.start_char);
        out += U"]]";
        pos = g.end_char;
    }
    out.append(text, pos, text.size() - pos);
    return utf8_encode(out);
}

std::string render_student_view(const ExerciseDocument& doc, const std::string& blank) {
    if (blank.empty() || blank.find("[[") != std::string::npos ||
        blank.find("]]") != std::string::npos)
        throw std::invalid_argument("blank must be non-empty and marker-free");
    const std::u32string text = utf8_decode(doc.text);
    const std::u32string blank32 = utf8_decode(blank);
    std::u32string out;
    std::size_t pos = 0;
    for (const auto& g : doc.gaps) {
        out.append(text, pos, g.start_char - pos);
        out += blank32;
        pos = g.end_char;
    }
    out.append(text, pos, text.size() - pos);
    return utf8_encode(out);
}

namespace {

bool decode_entity(const std::u32string& in, std::size_t i, char32_t* cp, std::size_t* len) {
    // i points at '&'; entity must terminate with ';' within 10 chars
    std::size_t semi = in.find(U';', i + 1);
    if (semi == std::u32string::npos || semi - i > 10) return false;
    std::u32string name32 = in.substr(i + 1, semi - i - 1);
    std::string name = utf8_encode(name32);
    *len = semi - i + 1;
    if (name == "amp") { *cp = U'&'; return true; }
    if (name == "lt") { *cp = U'<'; return true; }
    if (name == "gt") { *cp = U'>'; return true; }
    if (name == "quot") { *cp = U'"'; return true; }
    if (name == "apos") { *cp = U'\''; return true; }
    if (name == "nbsp") { *cp = U' '; return true; }
    if (name.size() > 1 && name[0] == '#') {
        try {
            unsigned long v = (name[1] == 'x' || name[1] == 'X')
                                  ? std::stoul(name.substr(2), nullptr, 16)
                                  : std::stoul(name.substr(1), nullptr, 10);
            if (v > 0 && v <= 0x10FFFF) {
                *cp = static_cast<char32_t>(v);
                return true;
            }
        } catch (...) {
        }
    }
    return false;
}

}  // namespace

std::string strip_markup(const std::string& raw) {
    const std::u32string in = utf8_decode(raw);
    std::u32string no_tags;
    no_tags.reserve(in.size());
    for (std::size_t i = 0; i < in.size();) {
        if (in[i] == U'<') {
            std::size_t close = in.find(U'>', i + 1);
            if (close == std::u32string::npos) break;  // truncated tag, drop rest
            no_tags.push_back(U' ');
            i = close + 1;
        } else if (in[i] == U'&') {
            char32_t cp;
            std::size_t len;
            if (decode_entity(in, i, &cp, &len)) {
                no_tags.push_back(cp);
                i += len;
            } else {
                no_tags.push_back(in[i]);
                ++i;
            }
        } else {
            no_tags.push_back(in[i]);
            ++i;
        }
    }
    // collapse whitespace runs, trim
    std::u32string out;
    out.reserve(no_tags.size());
    bool pending_space = false;
    for (char32_t c : no_tags) {
        if (is_space_cp(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(U' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return utf8_encode(out);
}

namespace {

// Abbreviations that end with '.' but do not close a French sentence.
const std::set<std::u32string>& abbreviation_stoplist() {
    static const std::set<std::u32string> list = {
        U"M",   U"MM",  U"Mme", U"Mmes", U"Mlle", U"Dr", U"Pr", U"St", U"Ste",
        U"etc", U"cf",  U"ex",  U"p",    U"pp",   U"art", U"av", U"env", U"vol",
        U"no",  U"chap"};
    return list;
}

bool is_closing_quote(char32_t c) {
    return c == U'"' || c == U'\'' || c == 0x00BB /* » */ || c == 0x201D /* ” */ ||
           c == 0x2019 /* ’ */ || c == U')' || c == U']';
}

bool is_opening_quote(char32_t c) {
    return c == U'"' || c == U'\'' || c == 0x00AB /* « */ || c == 0x201C /* “ */ ||
           c == 0x2018 /* ‘ */;
}

struct Segment {
    std::size_t begin;
    std::size_t end;  // exclusive
};

std::vector<Segment> sentence_segments(const std::u32string& cps,
                                       const std::vector<GapAnnotation>& gaps) {
    const std::size_t n = cps.size();
    std::vector<Segment> segs;
    std::size_t begin = 0;
    while (begin < n && is_space_cp(cps[begin])) ++begin;
    std::size_t i = begin;
    while (i < n) {
        char32_t c = cps[i];
        if (c == U'.' || c == U'?' || c == U'!' || c == 0x2026 /* … */) {
            if (c == U'.') {
                // abbreviation check: word immediately before the period
                std::size_t b = i;
                while (b > 0 && is_letter_cp(cps[b - 1])) --b;
                if (abbreviation_stoplist().count(cps.substr(b, i - b))) {
                    ++i;
                    continue;
                }
            }
            std::size_t j = i + 1;
            while (j < n && is_closing_quote(cps[j])) ++j;
            std::size_t k = j;
            while (k < n && is_space_cp(cps[k])) ++k;
            if (k > j && k < n && (is_upper_cp(cps[k]) || is_opening_quote(cps[k]))) {
                segs.push_back({begin, j});
                begin = k;
                i = k;
                continue;
            }
        }
        ++i;
    }
    if (begin < n) {
        std::size_t end = n;
        while (end > begin && is_space_cp(cps[end - 1])) --end;
        if (end > begin) segs.push_back({begin, end});
    }
    // merge segments whenever a gap would be bisected
    for (const auto& g : gaps) {
        std::size_t first = segs.size(), last = 0;
        for (std::size_t s = 0; s < segs.size(); ++s) {
            if (segs[s].end > g.start_char && segs[s].begin < g.end_char) {
                first = std::min(first, s);
                last = std::max(last, s);
            }
        }
        if (first < segs.size() && last > first) {
            segs[first].end = segs[last].end;
            segs.erase(segs.begin() + first + 1, segs.begin() + last + 1);
        }
    }
    return segs;
}

}  // namespace

std::vector<ExerciseDocument> sentence_split(const ExerciseDocument& doc) {
    const std::u32string cps = utf8_decode(doc.text);
    const auto segs = sentence_segments(cps, doc.gaps);
    std::vector<ExerciseDocument> out;
    out.reserve(segs.size());
    for (std::size_t s = 0; s < segs.size(); ++s) {
        ExerciseDocument sub;
        sub.id = doc.id + "#" + std::to_string(s);
        sub.split = doc.split;
        sub.text = utf8_encode(
            std::u32string_view(cps).substr(segs[s].begin, segs[s].end - segs[s].begin));
        for (const auto& g : doc.gaps) {
            if (g.start_char >= segs[s].begin && g.end_char <= segs[s].end) {
                GapAnnotation local = g;
                local.start_char -= segs[s].begin;
                local.end_char -= segs[s].begin;
                sub.gaps.push_back(std::move(local));
            }
        }
        out.push_back(std::move(sub));
    }
    return out;
}

CorpusStats compute_stats(const std::vector<ExerciseDocument>& corpus) {
    CorpusStats stats;
    for (const auto& doc : corpus) {
        SplitStats& s = stats.for_split(doc.split);
        s.n_documents += 1;
        s.n_sentences += static_cast<long>(sentence_split(doc).size());
        s.n_gaps += static_cast<long>(doc.gaps.size());
        if (doc.split == Split::Dev || doc.split == Split::Test) {
            for (const auto& g : doc.gaps)
                if (g.gap_type) s.per_tense[*g.gap_type] += 1;
        }
    }
    return stats;
}

std::vector<ExerciseDocument> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open corpus file: " + path);
    std::vector<ExerciseDocument> corpus;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolation(path + ":" + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
        }
        ExerciseDocument doc;
        try {
            doc.id = j.at("id").get<std::string>();
            doc.text = j.at("text").get<std::string>();
            const std::string split = j.value("split", std::string("unassigned"));
            auto sp = split_from_name(split);
            if (!sp)
                throw SchemaViolation("document '" + doc.id +
                                      "': unknown split '" + split + "' (field: split)");
            doc.split = *sp;
            for (const auto& gj : j.at("gaps")) {
                GapAnnotation g;
                long start = gj.at("start").get<long>();
                long end = gj.at("end").get<long>();
                if (start < 0 || end < 0)
                    throw SchemaViolation("document '" + doc.id +
                                          "': negative gap offset (field: gaps)");
                g.start_char = static_cast<std::size_t>(start);
                g.end_char = static_cast<std::size_t>(end);
                g.answer = gj.at("answer").get<std::string>();
                if (gj.contains("gap_type") && !gj.at("gap_type").is_null())
                    g.gap_type = gj.at("gap_type").get<std::string>();
                doc.gaps.push_back(std::move(g));
            }
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolation(path + ":" + std::to_string(line_no) +
                                  ": missing or mistyped field: " + e.what());
        }
        validate_document(doc);
        if (!seen_ids.insert(doc.id).second)
            throw SchemaViolation("duplicate document id '" + doc.id + "' (field: id)");
        corpus.push_back(std::move(doc));
    }
    return corpus;
}

void save_corpus(const std::vector<ExerciseDocument>& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write corpus file: " + path);
    for (const auto& doc : corpus) {
        nlohmann::json gaps = nlohmann::json::array();
        for (const auto& g : doc.gaps) {
            nlohmann::json gj;
            gj["start"] = g.start_char;
            gj["end"] = g.end_char;
            gj["answer"] = g.answer;
            gj["gap_type"] = g.gap_type ? nlohmann::json(*g.gap_type) : nlohmann::json(nullptr);
            gaps.push_back(std::move(gj));
        }
        nlohmann::json j;
        j["id"] = doc.id;
        j["text"] = doc.text;
        j["split"] = split_name(doc.split);
        j["gaps"] = std::move(gaps);
        out << j.dump() << "\n";
    }
    if (!out) throw IoFailure("write failed: " + path);
}

std::vector<ExerciseDocument> corpus_split(const std::vector<ExerciseDocument>& corpus,
                                           Split s) {
    std::vector<ExerciseDocument> out;
    for (const auto& d : corpus)
        if (d.split == s) out.push_back(d);
    return out;
}

}  // namespace gapforge
