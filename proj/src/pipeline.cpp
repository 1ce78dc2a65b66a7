#include "lexiport/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "lexiport/align.hpp"
#include "lexiport/corpus_io.hpp"
#include "lexiport/error.hpp"
#include "lexiport/hashing.hpp"
#include "lexiport/synth.hpp"
#include "lexiport/version.hpp"

namespace lexiport {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

enum class Kind { path, size, real, boolean, u64, optional_size };

struct Field {
    std::string key;
    std::string flag;
    Kind kind;
    std::function<void(PipelineConfig&, const std::string&, const fs::path&)> set;
};

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::path: return "a path";
        case Kind::size: return "a non-negative integer";
        case Kind::real: return "a number";
        case Kind::boolean: return "a boolean";
        case Kind::u64: return "a non-negative integer";
        case Kind::optional_size: return "a non-negative integer or null";
    }
    return "?";
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

bool parse_double(const std::string& s, double& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") return out = true, true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return out = false, true;
    return false;
}

bool is_null(const std::string& s) { return s.empty() || s == "~" || s == "null"; }

[[noreturn]] void mismatch(const std::string& key, Kind kind, const std::string& value) {
    throw ConfigError("'" + key + "' must be " + kind_name(kind) + ", got '" + value + "'");
}

template <class Member>
Field path_field(std::string key, std::string flag, Member member) {
    return {std::move(key), std::move(flag), Kind::path,
            [member](PipelineConfig& c, const std::string& v, const fs::path& base) {
                fs::path p(v);
                if (!p.empty() && p.is_relative() && !base.empty()) p = base / p;
                c.paths.*member = p.lexically_normal();
            }};
}

template <class Get>
Field size_field(std::string key, std::string flag, Get get) {
    return {key, std::move(flag), Kind::size,
            [key, get](PipelineConfig& c, const std::string& v, const fs::path&) {
                std::uint64_t x;
                if (!parse_u64(v, x)) mismatch(key, Kind::size, v);
                get(c) = static_cast<std::size_t>(x);
            }};
}

template <class Get>
Field real_field(std::string key, std::string flag, Get get) {
    return {key, std::move(flag), Kind::real,
            [key, get](PipelineConfig& c, const std::string& v, const fs::path&) {
                double x;
                if (!parse_double(v, x)) mismatch(key, Kind::real, v);
                get(c) = x;
            }};
}

template <class Get>
Field bool_field(std::string key, std::string flag, Get get) {
    return {key, std::move(flag), Kind::boolean,
            [key, get](PipelineConfig& c, const std::string& v, const fs::path&) {
                bool x;
                if (!parse_bool(v, x)) mismatch(key, Kind::boolean, v);
                get(c) = x;
            }};
}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        f.push_back({"seed", "--seed", Kind::u64, [](PipelineConfig& c, const std::string& v, const fs::path&) {
                         std::uint64_t x;
                         if (!parse_u64(v, x)) mismatch("seed", Kind::u64, v);
                         c.seed = x;
                     }});
        f.push_back(path_field("paths.target_corpus", "--target-corpus", &PipelinePaths::target_corpus));
        f.push_back(path_field("paths.source_corpus", "--source-corpus", &PipelinePaths::source_corpus));
        f.push_back(path_field("paths.source_vectors", "--source-vectors", &PipelinePaths::source_vectors));
        f.push_back(path_field("paths.target_vectors", "--target-vectors", &PipelinePaths::target_vectors));
        f.push_back(path_field("paths.base_vocab", "--base-vocab", &PipelinePaths::base_vocab));
        f.push_back(path_field("paths.base_matrix", "--base-matrix", &PipelinePaths::base_matrix));
        f.push_back(path_field("paths.mono_vocab", "--mono-vocab", &PipelinePaths::mono_vocab));
        f.push_back(path_field("paths.lexicon", "--lexicon", &PipelinePaths::lexicon));
        f.push_back(path_field("paths.output_dir", "--output-dir", &PipelinePaths::output_dir));
        f.push_back(size_field("vocab.size", "--vocab-size", [](PipelineConfig& c) -> auto& { return c.vocab_size; }));
        f.push_back(size_field("vocab.min_frequency", "--min-frequency",
                               [](PipelineConfig& c) -> auto& { return c.vocab_min_frequency; }));
        f.push_back({"vocab.subsample", "--subsample", Kind::optional_size,
                     [](PipelineConfig& c, const std::string& v, const fs::path&) {
                         if (is_null(v)) {
                             c.subsample.reset();
                             return;
                         }
                         std::uint64_t x;
                         if (!parse_u64(v, x)) mismatch("vocab.subsample", Kind::optional_size, v);
                         c.subsample = static_cast<std::size_t>(x);
                     }});
        f.push_back(bool_field("vocab.lowercase", "--lowercase", [](PipelineConfig& c) -> auto& { return c.lowercase; }));
        f.push_back(size_field("trainer.dim", "--dim", [](PipelineConfig& c) -> auto& { return c.trainer.dim; }));
        f.push_back(size_field("trainer.epochs", "--epochs", [](PipelineConfig& c) -> auto& { return c.trainer.epochs; }));
        f.push_back(size_field("trainer.negatives", "--negatives", [](PipelineConfig& c) -> auto& { return c.trainer.negatives; }));
        f.push_back(size_field("trainer.window", "--window", [](PipelineConfig& c) -> auto& { return c.trainer.window; }));
        f.push_back(size_field("trainer.min_count", "--min-count", [](PipelineConfig& c) -> auto& { return c.trainer.min_count; }));
        f.push_back(real_field("trainer.lr", "--lr", [](PipelineConfig& c) -> auto& { return c.trainer.initial_lr; }));
        f.push_back(size_field("trainer.bucket_count", "--bucket-count",
                               [](PipelineConfig& c) -> auto& { return c.trainer.bucket_count; }));
        f.push_back(size_field("trainer.n_min", "--n-min", [](PipelineConfig& c) -> auto& { return c.trainer.n_min; }));
        f.push_back(size_field("trainer.n_max", "--n-max", [](PipelineConfig& c) -> auto& { return c.trainer.n_max; }));
        f.push_back(size_field("trainer.workers", "--workers", [](PipelineConfig& c) -> auto& { return c.trainer.workers; }));
        f.push_back(size_field("transplant.k", "--k", [](PipelineConfig& c) -> auto& { return c.transplant.k; }));
        f.push_back(real_field("transplant.tau", "--tau", [](PipelineConfig& c) -> auto& { return c.transplant.tau; }));
        f.push_back(bool_field("flags.normalize_before_align", "--normalize-before-align",
                               [](PipelineConfig& c) -> auto& { return c.normalize_before_align; }));
        f.push_back(bool_field("flags.ngram_mean", "--ngram-mean", [](PipelineConfig& c) -> auto& { return c.ngram_mean; }));
        f.push_back(bool_field("flags.ngram_markers", "--ngram-markers",
                               [](PipelineConfig& c) -> auto& { return c.ngram_markers; }));
        return f;
    }();
    return fields;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : schema())
        if (f.key == key) return &f;
    return nullptr;
}

void flatten(const YAML::Node& node, const std::string& prefix, std::map<std::string, std::string>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string name = it->first.as<std::string>();
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        const YAML::Node& value = it->second;
        if (value.IsMap()) {
            bool is_section = false;
            for (const auto& f : schema())
                if (f.key.starts_with(key + ".")) is_section = true;
            if (!is_section) throw ConfigError("unknown key '" + key + "'");
            flatten(value, key, out);
            continue;
        }
        const Field* field = find_field(key);
        if (!field) throw ConfigError("unknown key '" + key + "'");
        if (value.IsNull()) {
            out[key] = "";
        } else if (value.IsScalar()) {
            out[key] = value.Scalar();
        } else {
            throw ConfigError("'" + key + "' must be " + kind_name(field->kind) + ", got a sequence");
        }
    }
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_flag_table() {
    static const auto table = [] {
        std::vector<std::pair<std::string, std::string>> t;
        for (const auto& f : schema()) t.emplace_back(f.key, f.flag);
        return t;
    }();
    return table;
}

PipelineConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides,
                                 const fs::path& base_dir) {
    std::map<std::string, std::string> from_file;
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    if (root.IsDefined() && !root.IsNull()) {
        if (!root.IsMap()) throw ConfigError("config root must be a mapping");
        flatten(root, "", from_file);
    }

    PipelineConfig c;
    for (const auto& [key, value] : from_file) find_field(key)->set(c, value, base_dir);
    for (const auto& [key, value] : overrides) {
        const Field* f = find_field(key);
        if (!f) throw ConfigError("unknown key '" + key + "'");
        f->set(c, value, {});
    }
    c.trainer.seed = c.seed;
    c.transplant.seed = c.seed;
    return c;
}

PipelineConfig parse_config(const std::optional<fs::path>& file, const ConfigOverrides& overrides) {
    if (!file) return parse_config_text("", overrides);
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), overrides, fs::absolute(*file).parent_path());
}

void PipelineConfig::validate() const {
    auto require = [](const fs::path& p, const char* key) {
        if (p.empty()) throw ConfigError("'" + std::string(key) + "' is required");
    };
    require(paths.target_corpus, "paths.target_corpus");
    require(paths.base_vocab, "paths.base_vocab");
    require(paths.base_matrix, "paths.base_matrix");
    require(paths.mono_vocab, "paths.mono_vocab");
    require(paths.lexicon, "paths.lexicon");
    require(paths.output_dir, "paths.output_dir");
    if (paths.source_vectors.empty() && paths.source_corpus.empty())
        throw ConfigError("one of 'paths.source_vectors' or 'paths.source_corpus' is required");
    if (vocab_min_frequency < 1) throw ConfigError("vocab.min_frequency must be >= 1");
    if (vocab_size <= kSpecialTokens.size()) throw ConfigError("vocab.size must exceed the special-token count");
    if (subsample && *subsample == 0) throw ConfigError("vocab.subsample must be > 0 when given");
    trainer.validate();
    transplant.validate();
}

nlohmann::json PipelineConfig::to_json() const {
    auto ps = [](const fs::path& p) { return p.string(); };
    return {
        {"seed", seed},
        {"paths",
         {{"target_corpus", ps(paths.target_corpus)}, {"source_corpus", ps(paths.source_corpus)},
          {"source_vectors", ps(paths.source_vectors)}, {"target_vectors", ps(paths.target_vectors)},
          {"base_vocab", ps(paths.base_vocab)}, {"base_matrix", ps(paths.base_matrix)},
          {"mono_vocab", ps(paths.mono_vocab)}, {"lexicon", ps(paths.lexicon)},
          {"output_dir", ps(paths.output_dir)}}},
        {"vocab",
         {{"size", vocab_size},
          {"min_frequency", vocab_min_frequency},
          {"subsample", subsample ? nlohmann::json(*subsample) : nlohmann::json(nullptr)},
          {"lowercase", lowercase}}},
        {"trainer",
         {{"dim", trainer.dim}, {"epochs", trainer.epochs}, {"negatives", trainer.negatives},
          {"window", trainer.window}, {"min_count", trainer.min_count}, {"lr", trainer.initial_lr},
          {"bucket_count", trainer.bucket_count}, {"n_min", trainer.n_min}, {"n_max", trainer.n_max},
          {"workers", trainer.workers}}},
        {"transplant", {{"k", transplant.k}, {"tau", transplant.tau}}},
        {"flags",
         {{"normalize_before_align", normalize_before_align}, {"ngram_mean", ngram_mean},
          {"ngram_markers", ngram_markers}}},
    };
}

// ---------------------------------------------------------------- locking

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lexiport.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw ConfigError("output directory is locked by another run (remove " + path_.string() +
                          " if stale)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

std::string digest_path(const fs::path& path) {
    std::error_code ec;
    if (path.empty()) return "none";
    if (fs::is_regular_file(path, ec)) return sha256_file(path);
    if (fs::is_directory(path, ec)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(path, ec))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::string listing;
        for (const auto& f : files) listing += f.filename().string() + "\t" + sha256_file(f) + "\n";
        return sha256_hex(listing);
    }
    return "missing:" + path.string();
}

// ---------------------------------------------------------------- stages

namespace {

class StageRunner {
public:
    StageRunner(const PipelineConfig& c, const RunOptions& o, std::ostream& log)
        : cfg_(c), opts_(o), log_(log), root_(c.paths.output_dir) {}

    fs::path dir(const std::string& stage) const { return root_ / "stages" / stage; }
    RunReport& report() { return report_; }

    void run(const std::string& name, const std::string& key, const std::vector<fs::path>& outputs,
             const std::function<void()>& body) {
        keys_[name] = key;
        if (!opts_.force && fresh(name, key, outputs)) {
            log_ << "[" << name << "] up-to-date\n";
            report_.cached.push_back(name);
            return;
        }
        log_ << "[" << name << "] running\n";
        std::error_code ec;
        fs::create_directories(dir(name), ec);
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        nlohmann::json rec{{"key", key}, {"outputs", nlohmann::json::array()}};
        for (const auto& o : outputs) rec["outputs"].push_back(o.string());
        std::ofstream out(dir(name) / "stage.json", std::ios::binary | std::ios::trunc);
        out << rec.dump(2) << '\n';
        report_.executed.push_back(name);
    }

    const std::map<std::string, std::string>& keys() const { return keys_; }

private:
    bool fresh(const std::string& name, const std::string& key, const std::vector<fs::path>& outputs) const {
        std::ifstream in(dir(name) / "stage.json", std::ios::binary);
        if (!in) return false;
        try {
            const auto rec = nlohmann::json::parse(in);
            if (rec.at("key").get<std::string>() != key) return false;
        } catch (const std::exception&) {
            return false;
        }
        for (const auto& o : outputs)
            if (!fs::exists(root_ / o)) return false;
        return true;
    }

    const PipelineConfig& cfg_;
    RunOptions opts_;
    std::ostream& log_;
    fs::path root_;
    RunReport report_;
    std::map<std::string, std::string> keys_;
};

std::string stage_key(const std::string& stage, const nlohmann::json& params) {
    return sha256_hex(nlohmann::json{{"stage", stage}, {"version", kToolVersion}, {"params", params}}.dump());
}

nlohmann::json trainer_json(const TrainerConfig& t) {
    return {{"dim", t.dim},     {"epochs", t.epochs},       {"negatives", t.negatives},
            {"window", t.window}, {"min_count", t.min_count}, {"lr", t.initial_lr},
            {"bucket_count", t.bucket_count}, {"n_min", t.n_min}, {"n_max", t.n_max},
            {"seed", t.seed},   {"workers", t.workers}};
}

// Vector source loaded from either a model dump or a .vec file.
struct LoadedVectors {
    std::optional<EmbeddingModel> model;
    std::optional<VectorTable> table;
    const VectorLookup& lookup() const {
        return model ? static_cast<const VectorLookup&>(*model) : *table;
    }
};

LoadedVectors load_vectors(const fs::path& p) {
    LoadedVectors v;
    if (is_model_file(p))
        v.model = load_model(p);
    else
        v.table = load_vec(p);
    return v;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StreamError("cannot open " + p.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

SourceVocabSet load_source_set(const fs::path& tokens_file, const Vocabulary& base_vocab,
                               const Matrix& base_matrix) {
    SourceVocabSet s;
    s.rows = Matrix(0, base_matrix.cols());
    for (auto& t : read_lines(tokens_file)) {
        auto id = base_vocab.id_of(t);
        if (!id) throw ContractError("screened token '" + t + "' missing from base vocabulary");
        s.base_ids.push_back(*id);
        s.rows.append_row(base_matrix.row(*id));
        s.tokens.push_back(std::move(t));
    }
    return s;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, const RunOptions& options, std::ostream& log) {
    cfg.validate();
    const fs::path root = cfg.paths.output_dir;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw ConfigError("cannot create output directory " + root.string() + ": " + ec.message());
    RunLock lock(root);
    StageRunner runner(cfg, options, log);

    const auto& p = cfg.paths;
    nlohmann::json inputs{{"target_corpus", digest_path(p.target_corpus)},
                          {"base_vocab", digest_path(p.base_vocab)},
                          {"base_matrix", digest_path(p.base_matrix)},
                          {"base_matrix_sidecar", digest_path(sidecar_path(p.base_matrix))},
                          {"mono_vocab", digest_path(p.mono_vocab)},
                          {"lexicon", digest_path(p.lexicon)}};
    if (!p.source_vectors.empty())
        inputs["source_vectors"] = digest_path(p.source_vectors);
    else
        inputs["source_corpus"] = digest_path(p.source_corpus);
    if (!p.target_vectors.empty()) inputs["target_vectors"] = digest_path(p.target_vectors);

    NormalizationConfig norm;
    norm.lowercase = cfg.lowercase;

    // 1. screen
    const fs::path screen_out = fs::path("stages/screen/source_tokens.txt");
    const std::string screen_key = stage_key(
        "screen", {{"base_vocab", inputs["base_vocab"]}, {"base_matrix", inputs["base_matrix"]},
                   {"mono_vocab", inputs["mono_vocab"]},
                   {"subsample", cfg.subsample ? nlohmann::json(*cfg.subsample) : nlohmann::json(nullptr)},
                   {"seed", cfg.seed}});
    runner.run("screen", screen_key, {screen_out}, [&] {
        const auto mono = load_vocab_txt(p.mono_vocab);
        const auto base = load_vocab_txt(p.base_vocab);
        const auto matrix = load_matrix(p.base_matrix);
        const auto set = screen_source_vocab(mono, base, matrix, cfg.subsample, cfg.seed);
        std::ofstream out(root / screen_out, std::ios::binary | std::ios::trunc);
        for (const auto& t : set.tokens) out << t << '\n';
        if (!out.flush()) throw WriteError("cannot write " + (root / screen_out).string());
        log << "  screened " << set.tokens.size() << " source tokens\n";
    });

    // 2. induce target vocabulary
    const fs::path vocab_out = fs::path("stages/induce-vocab/vocab.txt");
    const std::string induce_key = stage_key(
        "induce-vocab", {{"corpus", inputs["target_corpus"]}, {"size", cfg.vocab_size},
                         {"min_frequency", cfg.vocab_min_frequency}, {"lowercase", cfg.lowercase}});
    runner.run("induce-vocab", induce_key, {vocab_out}, [&] {
        const auto tokens = read_tokens(p.target_corpus, norm);
        WordPieceConfig wp;
        wp.target_size = cfg.vocab_size;
        wp.min_frequency = cfg.vocab_min_frequency;
        const auto vocab = induce_wordpiece_vocab(tokens, wp);
        save_vocab_txt(vocab, root / vocab_out);
        log << "  induced " << vocab.size() << " tokens\n";
    });

    // 3. source embeddings
    fs::path source_vectors;
    std::vector<fs::path> source_outputs;
    nlohmann::json source_params;
    if (!p.source_vectors.empty()) {
        source_vectors = p.source_vectors;
        source_params = {{"import", inputs["source_vectors"]}};
    } else {
        source_vectors = root / "stages/source-embeddings/model.bin";
        source_outputs.push_back("stages/source-embeddings/model.bin");
        source_params = {{"corpus", inputs["source_corpus"]}, {"trainer", trainer_json(cfg.trainer)},
                         {"lowercase", cfg.lowercase}};
    }
    const std::string source_key = stage_key("source-embeddings", source_params);
    runner.run("source-embeddings", source_key, source_outputs, [&] {
        if (!p.source_vectors.empty()) {
            if (!fs::is_regular_file(p.source_vectors))
                throw StreamError("cannot open source vectors " + p.source_vectors.string());
            return;
        }
        CorpusStream stream(p.source_corpus, norm);
        const auto model = train_cbow_subword(stream, cfg.trainer);
        save_model(model, source_vectors);
        log << "  trained " << model.words().size() << " source words\n";
    });

    // 4. target embeddings
    fs::path target_vectors;
    std::vector<fs::path> target_outputs;
    nlohmann::json target_params;
    if (!p.target_vectors.empty()) {
        target_vectors = p.target_vectors;
        target_params = {{"import", inputs["target_vectors"]}};
    } else {
        target_vectors = root / "stages/target-embeddings/model.bin";
        target_outputs.push_back("stages/target-embeddings/model.bin");
        target_params = {{"corpus", inputs["target_corpus"]}, {"trainer", trainer_json(cfg.trainer)},
                         {"lowercase", cfg.lowercase}};
    }
    const std::string target_key = stage_key("target-embeddings", target_params);
    runner.run("target-embeddings", target_key, target_outputs, [&] {
        if (!p.target_vectors.empty()) {
            if (!fs::is_regular_file(p.target_vectors))
                throw StreamError("cannot open target vectors " + p.target_vectors.string());
            return;
        }
        CorpusStream stream(p.target_corpus, norm);
        const auto model = train_cbow_subword(stream, cfg.trainer);
        save_model(model, target_vectors);
        log << "  trained " << model.words().size() << " target words\n";
    });

    // 5. align target -> source
    const fs::path map_out = "stages/align/map.bin";
    const fs::path mapped_out = "stages/align/mapped_target.bin";
    const std::string align_key = stage_key(
        "align", {{"lexicon", inputs["lexicon"]}, {"source", source_key}, {"target", target_key},
                  {"normalize_before_align", cfg.normalize_before_align}});
    runner.run("align", align_key, {map_out, mapped_out}, [&] {
        const auto lexicon = parse_lexicon(p.lexicon);
        const auto source = load_vectors(source_vectors);
        auto target = load_vectors(target_vectors);
        AlignOptions opts;
        opts.normalize_before_align = cfg.normalize_before_align;
        const auto map = fit_alignment(lexicon, source.lookup(), target.lookup(), opts);
        for (const auto& w : map.fit_stats.warnings) log << "  warning: " << w << '\n';
        log << "  fitted on " << map.fit_stats.pair_count << " pairs, residual " << map.fit_stats.residual
            << '\n';
        save_map(map, root / map_out);
        std::ofstream stats(root / "stages/align/fit_stats.json", std::ios::binary | std::ios::trunc);
        stats << nlohmann::json{{"pair_count", map.fit_stats.pair_count},
                                {"residual", map.fit_stats.residual},
                                {"warnings", map.fit_stats.warnings}}
                     .dump(2)
              << '\n';
        if (target.model) {
            save_model(apply_map(map, std::move(*target.model)), root / mapped_out);
        } else {
            // a table is stored as a model-free .vec under the same name
            save_vec(apply_map(map, std::move(*target.table)), root / mapped_out);
        }
    });

    // 6. static tables
    const fs::path us_out = "stages/build-tables/u_s.vec";
    const fs::path ut_out = "stages/build-tables/u_t.vec";
    const nlohmann::json synth_params{{"n_min", cfg.trainer.n_min}, {"n_max", cfg.trainer.n_max},
                                      {"markers", cfg.ngram_markers}, {"mean", cfg.ngram_mean}};
    const std::string tables_key = stage_key(
        "build-tables", {{"screen", screen_key}, {"vocab", induce_key}, {"source", source_key},
                         {"align", align_key}, {"synth", synth_params}});
    runner.run("build-tables", tables_key, {us_out, ut_out}, [&] {
        const auto source_tokens = read_lines(root / screen_out);
        const auto target_vocab = load_vocab_txt(root / vocab_out);
        const auto source = load_vectors(source_vectors);
        const auto target = load_vectors(root / mapped_out);
        SynthConfig sc;
        sc.n_min = cfg.trainer.n_min;
        sc.n_max = cfg.trainer.n_max;
        sc.markers = cfg.ngram_markers;
        sc.ngram_mean = cfg.ngram_mean;
        const auto us = build_table(source_tokens, source.lookup(), sc);
        const auto ut = build_table(target_vocab, target.lookup(), sc);
        save_table(us, root / us_out);
        save_table(ut, root / ut_out);
        log << "  U_s " << us.live_count() << "/" << us.size() << " live rows, U_t " << ut.live_count()
            << "/" << ut.size() << '\n';
    });

    // 7. transplant + export
    const std::vector<fs::path> final_outputs{"vocab.txt", "matrix.bin", "matrix.json", "provenance.jsonl",
                                              "manifest.json"};
    const std::string transplant_key = stage_key(
        "transplant", {{"tables", tables_key}, {"screen", screen_key}, {"vocab", induce_key},
                       {"base_vocab", inputs["base_vocab"]}, {"base_matrix", inputs["base_matrix"]},
                       {"k", cfg.transplant.k}, {"tau", cfg.transplant.tau}, {"seed", cfg.seed}});
    runner.run("transplant", transplant_key, final_outputs, [&] {
        const auto base_vocab = load_vocab_txt(p.base_vocab);
        const auto base_matrix = load_matrix(p.base_matrix);
        const auto source_set = load_source_set(root / screen_out, base_vocab, base_matrix);
        const auto us = load_table(root / us_out);
        const auto ut = load_table(root / ut_out);
        const auto target_vocab = load_vocab_txt(root / vocab_out);
        TransplantConfig tc = cfg.transplant;
        tc.seed = cfg.seed;
        auto result = run_transplant(base_vocab, base_matrix, source_set, us, ut, target_vocab, tc);
        result.manifest["config"] = cfg.to_json();
        result.manifest["inputs"] = inputs;
        result.manifest["stages"] = runner.keys();
        export_result(result, root);
        log << "  appended " << result.provenance.size() << " tokens ("
            << std::count_if(result.provenance.begin(), result.provenance.end(),
                             [](const auto& r) { return r.kind == Provenance::fallback_sampled; })
            << " sampled), " << result.overlap.size() << " overlapping\n";
    });

    if (runner.report().up_to_date()) log << "up-to-date\n";
    return runner.report();
}

}  // namespace lexiport
