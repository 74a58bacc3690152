#include "gapforge/spans.hpp"

namespace gapforge {

std::vector<Span> enumerate_spans(int n_tokens, int max_width) {
    std::vector<Span> out;
    if (n_tokens <= 0) return out;
    for (int start = 0; start < n_tokens; ++start)
        for (int w = 1; w <= max_width && start + w <= n_tokens; ++w)
            out.push_back({start, start + w - 1});
    return out;
}

GapProjection project_gaps(const TokenizedText& tok,
                           const std::vector<GapAnnotation>& gaps, int max_width) {
    GapProjection proj;
    for (const auto& g : gaps) {
        int first = -1, last = -1;
        for (int t = 0; t < tok.size(); ++t) {
            const auto& [ts, te] = tok.offsets[t];
            if (te > g.start_char && ts < g.end_char) {  // token intersects gap
                if (first < 0) first = t;
                last = t;
            }
        }
        if (first < 0) {
            ++proj.unaligned_count;
            continue;
        }
        if (last - first + 1 > max_width) {
            ++proj.overflow_count;
            continue;
        }
        proj.spans.insert({first, last});
    }
    return proj;
}

Eigen::VectorXd label_spans(const std::vector<Span>& candidates,
                            const std::set<Span>& gold) {
    Eigen::VectorXd labels = Eigen::VectorXd::Zero(static_cast<long>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (gold.count(candidates[i])) labels[static_cast<long>(i)] = 1.0;
    return labels;
}

}  // namespace gapforge
