#include "lexiport/embed_trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>

#include <omp.h>
#include <json.hpp>

#include "lexiport/error.hpp"
#include "lexiport/hashing.hpp"
#include "lexiport/kernels.hpp"
#include "lexiport/ngrams.hpp"
#include "lexiport/rng.hpp"

namespace lexiport {

void TrainerConfig::validate() const {
    if (dim == 0) throw ConfigError("trainer.dim must be > 0");
    if (epochs == 0) throw ConfigError("trainer.epochs must be >= 1");
    if (negatives == 0) throw ConfigError("trainer.negatives must be >= 1");
    if (window == 0) throw ConfigError("trainer.window must be >= 1");
    if (min_count == 0) throw ConfigError("trainer.min_count must be >= 1");
    if (!(initial_lr > 0.0)) throw ConfigError("trainer.lr must be > 0");
    if (bucket_count == 0) throw ConfigError("trainer.bucket_count must be > 0");
    if (n_min == 0 || n_min > n_max) throw ConfigError("trainer n-gram bounds need 1 <= n_min <= n_max");
    if (workers == 0) throw ConfigError("trainer.workers must be >= 1");
}

EmbeddingModel::EmbeddingModel(TrainerConfig config, std::vector<std::string> words, Matrix input)
    : config_(config), words_(std::move(words)), input_(std::move(input)) {
    if (input_.cols() != config_.dim || input_.rows() != words_.size() + config_.bucket_count)
        throw ContractError("input matrix shape does not match words + buckets");
    for (std::size_t i = 0; i < words_.size(); ++i)
        if (!index_.emplace(words_[i], i).second)
            throw ContractError("duplicate model word '" + words_[i] + "'");
    refresh();
}

std::ptrdiff_t EmbeddingModel::index_of(std::string_view word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::size_t EmbeddingModel::bucket_of(std::string_view ngram) const noexcept {
    return fnv1a32(ngram) % config_.bucket_count;
}

namespace {

std::vector<std::size_t> subword_rows_of(std::string_view word, std::size_t word_index,
                                         std::size_t nwords, const TrainerConfig& c) {
    std::vector<std::size_t> rows{word_index};
    for (const auto& g : extract_ngrams(word, c.n_min, c.n_max, ""))
        rows.push_back(nwords + fnv1a32(g) % c.bucket_count);
    return rows;
}

}  // namespace

std::vector<std::size_t> EmbeddingModel::subword_rows(std::size_t word_index) const {
    return subword_rows_of(words_[word_index], word_index, words_.size(), config_);
}

std::span<const float> EmbeddingModel::word_vector(std::string_view word) const {
    auto i = index_of(word);
    if (i < 0) return {};
    return word_vectors_.row(static_cast<std::size_t>(i));
}

std::span<const float> EmbeddingModel::ngram_vector(std::string_view ngram) const {
    return input_.row(words_.size() + bucket_of(ngram));
}

void EmbeddingModel::refresh() {
    word_vectors_ = Matrix(words_.size(), config_.dim);
    std::vector<double> acc(config_.dim);
    for (std::size_t w = 0; w < words_.size(); ++w) {
        const auto rows = subword_rows(w);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t r : rows) {
            const auto v = input_.row(r);
            for (std::size_t j = 0; j < config_.dim; ++j) acc[j] += v[j];
        }
        auto out = word_vectors_.row(w);
        for (std::size_t j = 0; j < config_.dim; ++j)
            out[j] = static_cast<float>(acc[j] / static_cast<double>(rows.size()));
    }
}

VectorTable EmbeddingModel::to_table() const { return VectorTable(words_, word_vectors_); }

namespace {

constexpr std::size_t kNegativeTableSize = 1'000'000;

double log_clamped(double x) { return std::log(std::max(x, 1e-5)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct TrainingData {
    std::vector<std::string> words;
    std::vector<std::size_t> counts;
    std::vector<std::vector<std::uint32_t>> sentences;  // word ids
    std::size_t total_tokens = 0;
};

TrainingData prepare(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& s : sentences)
        for (const auto& t : s) ++counts[t];
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [w, c] : counts)
        if (c >= min_count) kept.emplace_back(w, c);
    if (kept.empty())
        throw TrainingError("no word occurs at least min_count=" + std::to_string(min_count) + " times");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    TrainingData data;
    std::unordered_map<std::string_view, std::uint32_t> ids;
    for (const auto& [w, c] : kept) {
        data.words.push_back(w);
        data.counts.push_back(c);
    }
    for (std::size_t i = 0; i < data.words.size(); ++i) ids.emplace(data.words[i], static_cast<std::uint32_t>(i));
    for (const auto& s : sentences) {
        std::vector<std::uint32_t> ws;
        for (const auto& t : s)
            if (auto it = ids.find(t); it != ids.end()) ws.push_back(it->second);
        if (ws.size() >= 2) {
            data.total_tokens += ws.size();
            data.sentences.push_back(std::move(ws));
        }
    }
    if (data.total_tokens == 0) throw TrainingError("no sentence has two in-vocabulary words");
    return data;
}

std::vector<std::uint32_t> negative_table(const std::vector<std::size_t>& counts) {
    double z = 0.0;
    for (auto c : counts) z += std::pow(static_cast<double>(c), 0.75);
    std::vector<std::uint32_t> table;
    table.reserve(kNegativeTableSize);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double share = std::pow(static_cast<double>(counts[i]), 0.75) / z;
        const auto n = static_cast<std::size_t>(std::ceil(share * kNegativeTableSize));
        table.insert(table.end(), n, static_cast<std::uint32_t>(i));
    }
    return table;
}

}  // namespace

EmbeddingModel train_cbow_subword(const std::vector<std::vector<std::string>>& sentences,
                                  const TrainerConfig& config) {
    config.validate();
    TrainingData data = prepare(sentences, config.min_count);
    const std::size_t dim = config.dim;
    const std::size_t nwords = data.words.size();

    Matrix input(nwords + config.bucket_count, dim);
    {
        Rng rng(config.seed);
        const double bound = 1.0 / static_cast<double>(dim);
        for (float& v : input.data()) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
    }
    Matrix output(nwords, dim, 0.0f);

    std::vector<std::vector<std::size_t>> subwords(nwords);
    for (std::size_t w = 0; w < nwords; ++w) subwords[w] = subword_rows_of(data.words[w], w, nwords, config);

    const auto negatives = negative_table(data.counts);
    const std::size_t workers = std::min(config.workers, data.sentences.size());
    const double total_work = static_cast<double>(config.epochs) * static_cast<double>(data.total_tokens);
    std::atomic<std::size_t> processed{0};

    std::vector<std::vector<double>> loss_sum(workers, std::vector<double>(config.epochs, 0.0));
    std::vector<std::vector<std::size_t>> loss_n(workers, std::vector<std::size_t>(config.epochs, 0));

#pragma omp parallel num_threads(static_cast<int>(workers))
    {
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t begin = t * data.sentences.size() / workers;
        const std::size_t end = (t + 1) * data.sentences.size() / workers;
        Rng rng(keyed_seed(config.seed, "cbow-worker-" + std::to_string(t)));
        std::vector<float> hidden(dim), grad(dim);
        std::vector<std::size_t> bag;

        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            for (std::size_t s = begin; s < end; ++s) {
                const auto& sent = data.sentences[s];
                const double progress = static_cast<double>(processed.load(std::memory_order_relaxed)) / total_work;
                const float lr = static_cast<float>(config.initial_lr * std::max(0.0, 1.0 - progress));
                for (std::size_t i = 0; i < sent.size(); ++i) {
                    const std::size_t b = 1 + static_cast<std::size_t>(rng.below(config.window));
                    bag.clear();
                    const std::size_t lo = i >= b ? i - b : 0;
                    const std::size_t hi = std::min(sent.size() - 1, i + b);
                    for (std::size_t c = lo; c <= hi; ++c)
                        if (c != i) bag.insert(bag.end(), subwords[sent[c]].begin(), subwords[sent[c]].end());
                    if (bag.empty()) continue;

                    std::fill(hidden.begin(), hidden.end(), 0.0f);
                    for (std::size_t r : bag) {
                        const auto v = input.row(r);
                        for (std::size_t j = 0; j < dim; ++j) hidden[j] += v[j];
                    }
                    const float inv = 1.0f / static_cast<float>(bag.size());
                    for (float& h : hidden) h *= inv;

                    std::fill(grad.begin(), grad.end(), 0.0f);
                    double loss = 0.0;
                    const std::uint32_t target = sent[i];
                    for (std::size_t n = 0; n <= config.negatives; ++n) {
                        std::uint32_t w = target;
                        float label = 1.0f;
                        if (n > 0) {
                            do {
                                w = negatives[rng.below(negatives.size())];
                            } while (w == target && nwords > 1);
                            if (w == target) break;
                            label = 0.0f;
                        }
                        auto out = output.row(w);
                        double dot = 0.0;
                        for (std::size_t j = 0; j < dim; ++j) dot += static_cast<double>(out[j]) * hidden[j];
                        const double score = sigmoid(dot);
                        loss -= label > 0.0f ? log_clamped(score) : log_clamped(1.0 - score);
                        const float alpha = lr * (label - static_cast<float>(score));
                        for (std::size_t j = 0; j < dim; ++j) {
                            grad[j] += alpha * out[j];
                            out[j] += alpha * hidden[j];
                        }
                    }
                    for (std::size_t r : bag) {
                        auto v = input.row(r);
                        for (std::size_t j = 0; j < dim; ++j) v[j] += grad[j];
                    }
                    loss_sum[t][epoch] += loss;
                    ++loss_n[t][epoch];
                }
                processed.fetch_add(sent.size(), std::memory_order_relaxed);
            }
        }
    }

    std::vector<double> epoch_losses(config.epochs, 0.0);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < workers; ++t) {
            s += loss_sum[t][e];
            n += loss_n[t][e];
        }
        epoch_losses[e] = n ? s / static_cast<double>(n) : 0.0;
    }
    for (float v : input.data())
        if (!std::isfinite(v)) throw TrainingError("training diverged (non-finite parameter)");

    EmbeddingModel model(config, std::move(data.words), std::move(input));
    model.set_epoch_losses(std::move(epoch_losses));
    return model;
}

EmbeddingModel train_cbow_subword(CorpusStream& stream, const TrainerConfig& config) {
    return train_cbow_subword(stream.read_sentences(), config);
}

std::vector<RankedWord> nearest_words(const EmbeddingModel& model, std::span<const float> query,
                                      std::size_t k) {
    if (query.size() != model.dim())
        throw DimensionError("query has " + std::to_string(query.size()) + " components, model dim " +
                             std::to_string(model.dim()));
    const auto& vecs = model.word_vectors();
    if (k > vecs.rows())
        throw ContractError("k=" + std::to_string(k) + " exceeds the " + std::to_string(vecs.rows()) +
                            " model words");
    double qn = 0.0;
    for (float x : query) qn += static_cast<double>(x) * x;
    if (qn == 0.0) throw DegenerateQueryError("query vector has zero norm");

    Matrix q(1, query.size(), std::vector<float>(query.begin(), query.end()));
    const auto lists = kernels::topk_cosine(q, {}, vecs, {}, k, kernels::Exec::serial);
    std::vector<RankedWord> out;
    for (const auto& nb : lists[0]) out.push_back({model.words()[nb.index], nb.cosine});
    return out;
}

namespace {

template <class T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in, const std::string& name) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError(name, 0, "truncated model file");
    return v;
}

void write_string(std::ostream& out, std::string_view s) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& name, std::size_t limit) {
    const auto n = read_pod<std::uint64_t>(in, name);
    if (n > limit) throw FormatError(name, 0, "string length out of range");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw FormatError(name, 0, "truncated model file");
    return s;
}

nlohmann::json config_json(const EmbeddingModel& m) {
    const auto& c = m.config();
    return {{"dim", c.dim},           {"epochs", c.epochs},   {"negatives", c.negatives},
            {"window", c.window},     {"min_count", c.min_count}, {"lr", c.initial_lr},
            {"bucket_count", c.bucket_count}, {"n_min", c.n_min}, {"n_max", c.n_max},
            {"seed", c.seed},         {"workers", c.workers}, {"epoch_losses", m.epoch_losses()}};
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot create " + path.string());
    out.write(kModelMagic.data(), static_cast<std::streamsize>(kModelMagic.size()));
    write_string(out, config_json(model).dump());
    write_pod<std::uint64_t>(out, model.words().size());
    for (const auto& w : model.words()) write_string(out, w);
    const auto& data = model.input().data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out.flush()) throw WriteError("write failed for " + path.string());
}

bool is_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string head(kModelMagic.size(), '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    return in && head == kModelMagic;
}

EmbeddingModel load_model(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + name);
    std::string head(kModelMagic.size(), '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    if (!in || head != kModelMagic) throw FormatError(name, 0, "missing LEXIPORT-EMB header");

    TrainerConfig c;
    std::vector<double> losses;
    try {
        const auto j = nlohmann::json::parse(read_string(in, name, 1 << 20));
        c.dim = j.at("dim");
        c.epochs = j.at("epochs");
        c.negatives = j.at("negatives");
        c.window = j.at("window");
        c.min_count = j.at("min_count");
        c.initial_lr = j.at("lr");
        c.bucket_count = j.at("bucket_count");
        c.n_min = j.at("n_min");
        c.n_max = j.at("n_max");
        c.seed = j.at("seed");
        c.workers = j.at("workers");
        losses = j.at("epoch_losses").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(name, 0, std::string("bad config block: ") + e.what());
    }
    const auto nwords = read_pod<std::uint64_t>(in, name);
    std::vector<std::string> words;
    words.reserve(nwords);
    for (std::uint64_t i = 0; i < nwords; ++i) words.push_back(read_string(in, name, 1 << 16));
    Matrix input(nwords + c.bucket_count, c.dim);
    in.read(reinterpret_cast<char*>(input.data().data()),
            static_cast<std::streamsize>(input.data().size() * sizeof(float)));
    if (!in) throw FormatError(name, 0, "truncated parameter block");
    EmbeddingModel model(c, std::move(words), std::move(input));
    model.set_epoch_losses(std::move(losses));
    return model;
}

}  // namespace lexiport
