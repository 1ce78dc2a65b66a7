#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "cipher_fixture.hpp"
#include "lexiport/transplant.hpp"
#include "temp_dir.hpp"

using namespace lexiport;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(const testing::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + LEXIPORT_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), testing::read_file(out), testing::read_file(err)};
}

struct Fixture {
    testing::TempDir dir{"cli"};
    testing::CipherFixture data;
    Fixture() {
        testing::CipherParams params;
        params.vocab_size = 50;
        params.source_tokens = 10'000;
        params.target_tokens = 10'000;
        params.lexicon_pairs = 20;
        params.heldout_pairs = 5;
        params.base_dim = 8;
        data = testing::make_cipher_fixture(params);
        testing::write_cipher_fixture(data, dir.path(), 10, 2);
    }
    std::string config() const { return "--config '" + (dir / "config.yaml").string() + "'"; }
};

}  // namespace

TEST_CASE("help and usage errors") {
    testing::TempDir tmp("cli");
    CHECK(cli(tmp, "--help").code == 0);
    CHECK(cli(tmp, "--version").out.find("0.1.0") != std::string::npos);
    CHECK(cli(tmp, "").code == 1);
    CHECK(cli(tmp, "frobnicate").code == 1);
    CHECK(cli(tmp, "run --no-such-flag 3").code == 1);
    const auto r = cli(tmp, "run --tau 0.2");
    CHECK(r.code == 1);
    CHECK(r.err.find("paths.target_corpus") != std::string::npos);
}

TEST_CASE("config errors exit with 1 and name the key") {
    testing::TempDir tmp("cli");
    testing::write_file(tmp / "c.yaml", "kk: 3\n");
    const auto r = cli(tmp, "run --config '" + (tmp / "c.yaml").string() + "'");
    CHECK(r.code == 1);
    CHECK(r.err.find("kk") != std::string::npos);
}

TEST_CASE("run, rerun, override, inspect and replay") {
    Fixture fx;
    auto r = cli(fx.dir, "run " + fx.config() + " --tau 0.2");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("[transplant] running") != std::string::npos);
    const auto out = fx.dir / "out";
    for (const char* name : {"vocab.txt", "matrix.bin", "matrix.json", "provenance.jsonl", "manifest.json"})
        CHECK(fs::is_regular_file(out / name));
    const auto manifest = nlohmann::json::parse(testing::read_file(out / "manifest.json"));
    CHECK(manifest["config"]["transplant"]["tau"] == 0.2);

    r = cli(fx.dir, "run " + fx.config() + " --tau 0.2");
    CHECK(r.code == 0);
    CHECK(r.out.find("up-to-date") != std::string::npos);
    CHECK(r.out.find("running") == std::string::npos);

    // a weighted token lists its neighbours; a base token says so
    const auto result = load_result(out);
    const ProvenanceRecord* weighted = nullptr;
    for (const auto& p : result.provenance)
        if (p.kind == Provenance::weighted) {
            weighted = &p;
            break;
        }
    REQUIRE(weighted != nullptr);
    r = cli(fx.dir, "inspect --result '" + out.string() + "' --token '" + weighted->token + "'");
    CHECK(r.code == 0);
    CHECK(r.out.find("weighted") != std::string::npos);
    CHECK(r.out.find(weighted->neighbors.front().source_token + "\tsim=") != std::string::npos);
    r = cli(fx.dir, "inspect --result '" + out.string() + "' --token '[CLS]'");
    CHECK(r.code == 0);
    CHECK(r.out.find("base") != std::string::npos);
    CHECK(cli(fx.dir, "inspect --result '" + out.string() + "' --token nosuchtoken").code == 2);

    const auto replay = fx.dir / "replay";
    r = cli(fx.dir, "run --manifest '" + (out / "manifest.json").string() + "' --output-dir '" + replay.string() + "'");
    CHECK(r.code == 0);
    CHECK(testing::read_file(replay / "matrix.bin") == testing::read_file(out / "matrix.bin"));
    CHECK(testing::read_file(replay / "provenance.jsonl") == testing::read_file(out / "provenance.jsonl"));
}

TEST_CASE("a missing lexicon fails the align stage with exit 2") {
    Fixture fx;
    const auto r = cli(fx.dir, "run " + fx.config() + " --lexicon '" + (fx.dir / "gone.tsv").string() + "'");
    CHECK(r.code == 2);
    CHECK(r.err.find("align") != std::string::npos);
    CHECK(r.err.find("gone.tsv") != std::string::npos);
}

TEST_CASE("individual subcommands chain into the same result") {
    Fixture fx;
    const auto d = fx.dir.path();
    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    REQUIRE(cli(fx.dir, "induce-vocab --corpus " + q(d / "target.txt") + " --size 2000 --out " + q(d / "tv.txt")).code == 0);
    REQUIRE(cli(fx.dir, "screen --mono-vocab " + q(d / "mono_vocab.txt") + " --base-vocab " + q(d / "base_vocab.txt") +
                            " --base-matrix " + q(d / "base_matrix.bin") + " --out " + q(d / "src.txt")).code == 0);
    const std::string train = " --dim 10 --epochs 2 --bucket-count 50000 --seed 11";
    REQUIRE(cli(fx.dir, "train-embeddings --corpus " + q(d / "source.txt") + train + " --out " + q(d / "s.bin") +
                            " --vec-out " + q(d / "s.vec")).code == 0);
    REQUIRE(cli(fx.dir, "train-embeddings --corpus " + q(d / "target.txt") + train + " --out " + q(d / "t.bin")).code == 0);
    CHECK(fs::is_regular_file(d / "s.vec"));
    auto r = cli(fx.dir, "align --lexicon " + q(d / "lexicon.tsv") + " --source " + q(d / "s.bin") + " --target " +
                             q(d / "t.bin") + " --out-map " + q(d / "map.bin") + " --mapped-out " + q(d / "tm.bin"));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("pairs 20") != std::string::npos);
    REQUIRE(cli(fx.dir, "build-tables --tokens " + q(d / "src.txt") + " --model " + q(d / "s.bin") + " --out " +
                            q(d / "us.vec")).code == 0);
    REQUIRE(cli(fx.dir, "build-tables --vocab " + q(d / "tv.txt") + " --model " + q(d / "tm.bin") + " --out " +
                            q(d / "ut.vec")).code == 0);
    REQUIRE(cli(fx.dir, "transplant --base-vocab " + q(d / "base_vocab.txt") + " --base-matrix " +
                            q(d / "base_matrix.bin") + " --source-tokens " + q(d / "src.txt") + " --source-table " +
                            q(d / "us.vec") + " --target-table " + q(d / "ut.vec") + " --target-vocab " +
                            q(d / "tv.txt") + " --seed 11 --out-dir " + q(d / "manual")).code == 0);

    REQUIRE(cli(fx.dir, "run " + fx.config()).code == 0);
    CHECK(testing::read_file(d / "manual" / "matrix.bin") == testing::read_file(d / "out" / "matrix.bin"));
    CHECK(testing::read_file(d / "manual" / "provenance.jsonl") ==
          testing::read_file(d / "out" / "provenance.jsonl"));
}
