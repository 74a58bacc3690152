#pragma once

#include <Eigen/Core>
#include <compare>
#include <set>
#include <vector>

#include "gapforge/corpus.hpp"

namespace gapforge {

// Contiguous token interval, endpoints inclusive.
struct Span {
    int start = 0;
    int end = 0;
    auto operator<=>(const Span&) const = default;
    int width() const { return end - start + 1; }
};

// A tokenized text with per-token codepoint offsets back into the source.
struct TokenizedText {
    std::vector<int> ids;
    std::vector<std::pair<std::size_t, std::size_t>> offsets;  // [start_char, end_char)
    int size() const { return static_cast<int>(ids.size()); }
};

// All candidate spans up to max_width, ordered by (start, width).
std::vector<Span> enumerate_spans(int n_tokens, int max_width);

struct GapProjection {
    std::set<Span> spans;
    int overflow_count = 0;   // minimal covering span wider than max_width
    int unaligned_count = 0;  // gap intersects no token
};

// Minimal token span covering each gap's character interval.
GapProjection project_gaps(const TokenizedText& tok,
                           const std::vector<GapAnnotation>& gaps, int max_width);

// 1 exactly at candidates present in gold.
Eigen::VectorXd label_spans(const std::vector<Span>& candidates,
                            const std::set<Span>& gold);

}  // namespace gapforge
