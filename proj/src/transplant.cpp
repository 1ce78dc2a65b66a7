#include "lexiport/transplant.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <optional>

#include "lexiport/error.hpp"
#include "lexiport/rng.hpp"
#include "lexiport/version.hpp"

namespace lexiport {

void TransplantConfig::validate() const {
    if (k < 1) throw ConfigError("transplant.k must be >= 1");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("transplant.tau must be a finite value > 0");
}

SimilarityView top_k_similar(const VocabEmbeddingTable& source, const VocabEmbeddingTable& target,
                             std::size_t k, kernels::Exec exec) {
    if (source.dim() != target.dim())
        throw DimensionError("source table dim " + std::to_string(source.dim()) +
                             " vs target table dim " + std::to_string(target.dim()));
    const std::size_t live = source.live_count();
    if (live == 0) throw TransplantError("source table has no non-zero rows");
    if (k > live)
        throw TransplantError("k=" + std::to_string(k) + " exceeds the " + std::to_string(live) +
                              " non-zero source rows");
    return {kernels::topk_cosine(target.vectors, target.zero_mask, source.vectors, source.zero_mask,
                                 k, exec)};
}

std::vector<double> softmax_weights(std::span<const double> similarities, double tau) {
    if (similarities.empty()) throw ContractError("softmax over an empty neighbour list");
    if (!(tau > 0.0)) throw ContractError("tau must be > 0");
    const double top = *std::max_element(similarities.begin(), similarities.end());
    std::vector<double> w(similarities.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp((similarities[i] - top) / tau);
        z += w[i];
    }
    for (double& x : w) x /= z;
    return w;
}

WeightedRow weighted_init(std::span<const double> similarities,
                          const std::vector<std::span<const float>>& rows, double tau) {
    if (similarities.empty() || rows.empty())
        throw ContractError("weighted_init needs a non-empty neighbour list");
    if (similarities.size() != rows.size())
        throw ContractError("similarity count differs from row count");
    const std::size_t d = rows.front().size();
    WeightedRow out;
    out.weights = softmax_weights(similarities, tau);
    std::vector<double> acc(d, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw DimensionError("neighbour rows differ in width");
        for (std::size_t j = 0; j < d; ++j) acc[j] += out.weights[i] * rows[i][j];
    }
    out.vector.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.vector[j] = static_cast<float>(acc[j]);
    return out;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::weighted: return "weighted";
        case Provenance::fallback_sampled: return "fallback_sampled";
        case Provenance::overlap_copied: return "overlap_copied";
    }
    return "unknown";
}

namespace {

Provenance provenance_from(std::string_view s) {
    if (s == "weighted") return Provenance::weighted;
    if (s == "fallback_sampled") return Provenance::fallback_sampled;
    if (s == "overlap_copied") return Provenance::overlap_copied;
    throw ContractError("unknown provenance '" + std::string(s) + "'");
}

}  // namespace

TransplantResult run_transplant(const Vocabulary& base_vocab, const Matrix& base_matrix,
                                const SourceVocabSet& source_set,
                                const VocabEmbeddingTable& source_table,
                                const VocabEmbeddingTable& target_table, const Vocabulary& new_vocab,
                                const TransplantConfig& config, kernels::Exec exec) {
    config.validate();
    if (base_matrix.rows() != base_vocab.size())
        throw ContractError("base matrix rows != base vocabulary size");
    if (source_set.rows.rows() != source_set.tokens.size())
        throw ContractError("source set rows != source set tokens");
    if (source_set.rows.cols() != base_matrix.cols())
        throw ContractError("source rows and base matrix differ in width");
    if (source_table.tokens != source_set.tokens)
        throw ContractError("source table tokens do not correspond to the screened source set");
    if (target_table.tokens != new_vocab.tokens())
        throw ContractError("target table tokens do not correspond to the new vocabulary");

    MergeResult merge = merge_vocab(base_vocab, new_vocab);
    TransplantResult result;
    result.merged_vocab = std::move(merge.merged);
    const std::size_t base_n = base_vocab.size();
    const std::size_t d = base_matrix.cols();

    // Target rows that need neighbours: appended and unmasked.
    std::vector<std::size_t> appended_rows;  // index into target table
    std::vector<std::uint8_t> skip(target_table.size(), 1);
    for (std::size_t i = 0; i < new_vocab.size(); ++i) {
        if (base_vocab.contains(new_vocab.token(i))) {
            result.overlap.push_back({new_vocab.token(i), *base_vocab.id_of(new_vocab.token(i)),
                                      Provenance::overlap_copied, {}});
            continue;
        }
        appended_rows.push_back(i);
        skip[i] = target_table.zero_mask[i];
    }

    const std::size_t live = source_table.live_count();
    const bool any_weighted = std::any_of(skip.begin(), skip.end(), [](auto s) { return s == 0; });
    if (any_weighted && live == 0) throw TransplantError("source table has no non-zero rows");
    const std::size_t k = std::min(config.k, live);

    std::vector<std::vector<kernels::Neighbor>> lists(target_table.size());
    if (any_weighted)
        lists = kernels::topk_cosine(target_table.vectors, skip, source_table.vectors,
                                     source_table.zero_mask, k, exec);

    std::optional<GaussianInit> gaussian;
    if (source_set.rows.rows() >= 2) gaussian = fit_gaussian(source_set.rows);

    const std::size_t n_app = appended_rows.size();
    {
        std::vector<float> data = base_matrix.data();
        data.resize((base_n + n_app) * d, 0.0f);
        result.matrix = Matrix(base_n + n_app, d, std::move(data));
    }
    result.provenance.resize(n_app);
    std::atomic<bool> missing_gaussian{false};

    auto one = [&](std::size_t a) {
        const std::size_t t = appended_rows[a];
        const std::string& token = new_vocab.token(t);
        ProvenanceRecord rec{token, base_n + a, Provenance::weighted, {}};
        auto out = result.matrix.row(base_n + a);
        bool fallback = lists[t].empty();
        if (!fallback) {
            std::vector<double> sims;
            std::vector<std::span<const float>> rows;
            for (const auto& nb : lists[t]) {
                sims.push_back(nb.cosine);
                rows.push_back(source_set.rows.row(nb.index));
            }
            WeightedRow w = weighted_init(sims, rows, config.tau);
            if (std::all_of(w.vector.begin(), w.vector.end(), [](float x) { return x == 0.0f; })) {
                fallback = true;
            } else {
                std::copy(w.vector.begin(), w.vector.end(), out.begin());
                for (std::size_t i = 0; i < sims.size(); ++i)
                    rec.neighbors.push_back({source_set.tokens[lists[t][i].index], sims[i], w.weights[i]});
            }
        }
        if (fallback) {
            rec.kind = Provenance::fallback_sampled;
            if (!gaussian) {
                missing_gaussian = true;
            } else {
                Rng rng(keyed_seed(config.seed, token));
                const auto v = sample_gaussian(*gaussian, rng);
                std::copy(v.begin(), v.end(), out.begin());
            }
        }
        result.provenance[a] = std::move(rec);
    };

    const auto n = static_cast<std::ptrdiff_t>(n_app);
    if (exec == kernels::Exec::serial) {
        for (std::ptrdiff_t a = 0; a < n; ++a) one(static_cast<std::size_t>(a));
    } else {
#pragma omp parallel for schedule(dynamic, 32)
        for (std::ptrdiff_t a = 0; a < n; ++a) one(static_cast<std::size_t>(a));
    }
    if (missing_gaussian)
        throw EstimationError("fallback sampling needs at least 2 source rows, have " +
                              std::to_string(source_set.rows.rows()));

    result.manifest = {{"tool_version", kToolVersion},
                       {"transplant", {{"k", config.k}, {"tau", config.tau}, {"seed", config.seed}}},
                       {"effective_k", k},
                       {"base_tokens", base_n},
                       {"appended_tokens", n_app},
                       {"overlap_tokens", result.overlap.size()},
                       {"source_tokens", source_set.tokens.size()}};
    return result;
}

nlohmann::json provenance_json(const ProvenanceRecord& r) {
    nlohmann::json nb = nlohmann::json::array();
    for (const auto& n : r.neighbors) nb.push_back({{"src", n.source_token}, {"sim", n.similarity}, {"weight", n.weight}});
    return {{"token", r.token}, {"id", r.id}, {"provenance", to_string(r.kind)}, {"neighbors", nb}};
}

void export_result(const TransplantResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw WriteError("cannot create " + out_dir.string() + ": " + ec.message());
    save_vocab_txt(result.merged_vocab, out_dir / "vocab.txt");
    save_matrix(result.matrix, out_dir / "matrix.bin");
    {
        std::ofstream out(out_dir / "provenance.jsonl", std::ios::binary | std::ios::trunc);
        if (!out) throw WriteError("cannot create provenance.jsonl");
        for (const auto& r : result.provenance) out << provenance_json(r).dump() << '\n';
        if (!out.flush()) throw WriteError("write failed for provenance.jsonl");
    }
    nlohmann::json manifest = result.manifest;
    if (!manifest.contains("tool_version")) manifest["tool_version"] = kToolVersion;
    std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot create manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out.flush()) throw WriteError("write failed for manifest.json");
}

TransplantResult load_result(const std::filesystem::path& dir) {
    TransplantResult r;
    r.merged_vocab = load_vocab_txt(dir / "vocab.txt");
    r.matrix = load_matrix(dir / "matrix.bin");
    if (r.matrix.rows() != r.merged_vocab.size())
        throw FormatError((dir / "matrix.bin").string(), 0, "row count differs from vocab.txt");
    const auto prov_path = dir / "provenance.jsonl";
    std::ifstream in(prov_path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + prov_path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ProvenanceRecord rec{j.at("token"), j.at("id"), provenance_from(j.at("provenance").get<std::string>()), {}};
            for (const auto& n : j.at("neighbors"))
                rec.neighbors.push_back({n.at("src"), n.at("sim"), n.at("weight")});
            r.provenance.push_back(std::move(rec));
        } catch (const std::exception& e) {
            throw FormatError(prov_path.string(), lineno, e.what());
        }
    }
    std::ifstream mf(dir / "manifest.json", std::ios::binary);
    if (mf) {
        try {
            r.manifest = nlohmann::json::parse(mf);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError((dir / "manifest.json").string(), 0, e.what());
        }
    }
    return r;
}

}  // namespace lexiport
