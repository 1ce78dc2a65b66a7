#include "lexiport/synth.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexiport/embed_io.hpp"
#include "lexiport/error.hpp"
#include "lexiport/utf8.hpp"

namespace lexiport {

std::vector<std::string> extract_ngrams(std::string_view token, std::size_t n_min, std::size_t n_max,
                                        std::string_view continuation_prefix, bool markers) {
    std::vector<std::string> out;
    if (token.empty() || n_min == 0 || n_min > n_max) return out;
    const bool continuation = !continuation_prefix.empty() &&
                              token.size() > continuation_prefix.size() &&
                              token.starts_with(continuation_prefix);
    const std::string_view body = continuation ? token.substr(continuation_prefix.size()) : token;

    std::vector<std::string> chars;
    if (markers && !continuation) chars.emplace_back("<");
    for (auto& c : utf8::characters(body)) chars.push_back(std::move(c));
    if (markers) chars.emplace_back(">");

    std::unordered_set<std::string> seen;
    for (std::size_t start = 0; start < chars.size(); ++start) {
        std::string gram;
        for (std::size_t n = 1; n <= n_max && start + n <= chars.size(); ++n) {
            gram += chars[start + n - 1];
            if (n < n_min) continue;
            if (seen.insert(gram).second) out.push_back(gram);
        }
    }
    return out;
}

std::size_t VocabEmbeddingTable::live_count() const noexcept {
    return static_cast<std::size_t>(std::count(zero_mask.begin(), zero_mask.end(), 0));
}

std::vector<float> synthesize_embedding(std::string_view token, const VectorLookup& model,
                                        const SynthConfig& config) {
    const std::size_t d = model.dim();
    std::string_view word = token;
    const auto& prefix = config.continuation_prefix;
    if (!prefix.empty() && word.size() > prefix.size() && word.starts_with(prefix))
        word.remove_prefix(prefix.size());

    if (auto v = model.word_vector(word); !v.empty()) return {v.begin(), v.end()};

    std::vector<double> acc(d, 0.0);
    std::size_t hits = 0;
    for (const auto& g : extract_ngrams(token, config.n_min, config.n_max, prefix, config.markers)) {
        auto v = model.has_ngram_buckets() ? model.ngram_vector(g) : model.word_vector(g);
        if (v.empty()) continue;
        ++hits;
        for (std::size_t j = 0; j < d; ++j) acc[j] += v[j];
    }
    std::vector<float> out(d, 0.0f);
    if (hits == 0) return out;
    const double scale = config.ngram_mean ? 1.0 / static_cast<double>(hits) : 1.0;
    for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j] * scale);
    return out;
}

namespace {

void fill_row(const std::string& token, const VectorLookup& model, const SynthConfig& config,
              std::span<float> row, std::uint8_t& mask) {
    if (is_special_token(token)) {
        std::fill(row.begin(), row.end(), 0.0f);
        mask = 1;
        return;
    }
    const auto v = synthesize_embedding(token, model, config);
    std::copy(v.begin(), v.end(), row.begin());
    mask = std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; }) ? 1 : 0;
}

}  // namespace

VocabEmbeddingTable build_table(const std::vector<std::string>& tokens, const VectorLookup& model,
                                const SynthConfig& config, kernels::Exec exec) {
    VocabEmbeddingTable table;
    table.tokens = tokens;
    table.vectors = Matrix(tokens.size(), model.dim());
    table.zero_mask.assign(tokens.size(), 0);
    const auto n = static_cast<std::ptrdiff_t>(tokens.size());
    if (exec == kernels::Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            fill_row(tokens[i], model, config, table.vectors.row(i), table.zero_mask[i]);
        return table;
    }
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        fill_row(tokens[i], model, config, table.vectors.row(i), table.zero_mask[i]);
    return table;
}

VocabEmbeddingTable build_table(const Vocabulary& vocab, const VectorLookup& model,
                                const SynthConfig& config, kernels::Exec exec) {
    SynthConfig c = config;
    c.continuation_prefix = vocab.continuation_prefix();
    return build_table(vocab.tokens(), model, c, exec);
}

void save_table(const VocabEmbeddingTable& table, const std::filesystem::path& path) {
    save_vec(VectorTable(table.tokens, table.vectors), path);
}

VocabEmbeddingTable load_table(const std::filesystem::path& path) {
    const VectorTable vt = load_vec(path);
    VocabEmbeddingTable table;
    table.tokens = vt.tokens();
    table.vectors = vt.vectors();
    table.zero_mask.resize(table.tokens.size());
    for (std::size_t i = 0; i < table.tokens.size(); ++i) {
        const auto r = table.vectors.row(i);
        table.zero_mask[i] = std::all_of(r.begin(), r.end(), [](float x) { return x == 0.0f; }) ? 1 : 0;
    }
    return table;
}

}  // namespace lexiport
