#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rmgan/cli/cli.hpp"
#include "support/temp_dir.hpp"

using rmgan::test::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "rmgan");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = rmgan::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("unknown subcommand is a usage error") {
    const auto r = run({"frobnicate"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("missing subcommand and bad flags are usage errors") {
    CHECK(run({}).code == 1);
    const auto r = run({"gen-data", "--out", "x", "--no-such-flag"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run({"gen-data"}).code == 1);
    CHECK(run({"gen-data", "--out", "x", "--seed", "abc"}).code == 1);
}

TEST_CASE("runtime failures exit 2") {
    TempDir dir("cli_rt");
    const auto r = run({"train", "--data", (dir / "absent").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("missing file") != std::string::npos);

    rmgan::test::write_bytes(dir / "bad.cfg", "batch_size = 1\n");
    CHECK(run({"gen-data", "--out", (dir / "d").string(), "--config", (dir / "bad.cfg").string()}).code == 2);
}

TEST_CASE("gen-data with the same seed writes identical directories") {
    TempDir dir("cli_gen");
    const auto a = run({"gen-data", "--out", (dir / "a").string(), "--seed", "7", "--scale", "0.05"});
    const auto b = run({"gen-data", "--out", (dir / "b").string(), "--seed", "7", "--scale", "0.05"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(rmgan::test::same_tree(dir / "a", dir / "b"));
    const auto c = run({"gen-data", "--out", (dir / "c").string(), "--seed", "8", "--scale", "0.05"});
    CHECK_FALSE(rmgan::test::same_tree(dir / "a", dir / "c"));
}

TEST_CASE("subcommands chain from corpus to report") {
    TempDir dir("cli_chain");
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scale", "0.02"}).code == 0);
    rmgan::test::write_bytes(dir / "quick.cfg", "# tiny run\nepochs = 1\nbatch_size = 8\n");
    const std::string cfg = (dir / "quick.cfg").string();

    const auto t = run({"train", "--data", data, "--out", (dir / "run").string(), "--config", cfg});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("epoch   0") != std::string::npos);

    const auto e = run({"eval", "--checkpoint", (dir / "run" / "checkpoint.bin").string(), "--data", data, "--out",
                        (dir / "eval").string(), "--dump", "3"});
    REQUIRE(e.code == 0);
    CHECK(e.out.find("delta_pos") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "eval" / "dumps" / "values.tsv"));

    const auto ta = run({"train-aug", "--data", data, "--out", (dir / "aug").string(), "--config", cfg});
    REQUIRE(ta.code == 0);
    const auto s = run({"augment", "--checkpoint", (dir / "aug" / "checkpoint.bin").string(), "--out",
                        (dir / "augset").string(), "--scale", "0.01"});
    REQUIRE(s.code == 0);
    CHECK(s.out.find("wrote 47 samples") != std::string::npos);
}

TEST_CASE("train --resume continues to the same checkpoint") {
    TempDir dir("cli_resume");
    const std::string data = (dir / "data").string();
    REQUIRE(run({"gen-data", "--out", data, "--scale", "0.02"}).code == 0);
    rmgan::test::write_bytes(dir / "quick.cfg", "epochs = 2\nbatch_size = 8\n");
    const std::string cfg = (dir / "quick.cfg").string();

    REQUIRE(run({"train", "--data", data, "--out", (dir / "full").string(), "--config", cfg}).code == 0);
    REQUIRE(run({"train", "--data", data, "--out", (dir / "first").string(), "--config", cfg, "--epochs", "1"}).code ==
            0);
    REQUIRE(run({"train", "--data", data, "--out", (dir / "second").string(), "--config", cfg, "--resume",
                 (dir / "first" / "checkpoint.bin").string()})
                .code == 0);
    CHECK(rmgan::test::read_bytes(dir / "full" / "checkpoint.bin") ==
          rmgan::test::read_bytes(dir / "second" / "checkpoint.bin"));
    const std::string full = rmgan::test::read_bytes(dir / "full" / "metrics.tsv");
    const std::string second = rmgan::test::read_bytes(dir / "second" / "metrics.tsv");
    // The resumed log holds the second epoch row of the uninterrupted one.
    const std::string last_row = full.substr(full.rfind('\n', full.size() - 2) + 1);
    CHECK(second.substr(second.find('\n') + 1) == last_row);
}

TEST_CASE("gradcheck reports and exits 0") {
    const auto r = run({"gradcheck", "--entries", "2"});
    CHECK(r.code == 0);
    CHECK(r.out.find("passed") != std::string::npos);
}
