#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "xprec/serialize.hpp"
#include "xprec/synth.hpp"

using namespace xprec;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run({"fit", "--input", "x.tsv", "--model", "z", "--out", "m.json"}).code == 1);
    CHECK(run({"fit", "--input", "x.tsv", "--out", "m.json", "--bogus"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"nonsense"}).code == 1);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"fit", "--help"}).out.find("--lambda") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
    const auto dir = testing::temp_dir("cli_data");
    const Result missing = run({"split", "--input", (dir / "none.tsv").string(), "--out-dir", dir.string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("error:") == 0);

    write(dir / "raw.tsv", "user\titem\trating\ttimestamp\nu\ti\t9\t1\n");
    const Result range = run({"ingest", "--input", (dir / "raw.tsv").string(), "--out", (dir / "o.tsv").string()});
    CHECK(range.code == 2);
    CHECK(range.err.find("line 2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("pipeline") {
    const auto dir = testing::temp_dir("cli_pipeline");
    const auto p = [&](const char* name) { return (dir / name).string(); };

    write(dir / "synth.json", R"({"n_users": 40, "n_items": 30, "E": 3, "K": 2, "ratings_per_user": [12, 20], "seed": 3})");
    const Result synth = run({"synth", "--config", p("synth.json"), "--out", p("raw.tsv"), "--truth", p("truth.json")});
    REQUIRE(synth.code == 0);
    CHECK(read_json_file(p("truth.json"))["E"] == 3);

    REQUIRE(run({"ingest", "--input", p("raw.tsv"), "--out", p("all.tsv"), "--min-ratings", "0"}).code == 0);
    REQUIRE(run({"split", "--input", p("all.tsv"), "--out-dir", p("split"), "--scheme", "final"}).code == 0);
    CHECK(fs::exists(dir / "split" / "manifest.json"));

    const std::string train = p("split/train.tsv"), valid = p("split/valid.tsv"), test = p("split/test.tsv");
    for (const char* kind : {"lf", "c", "d"}) {
        const Result fit = run({"fit", "--input", train, "--valid", valid, "--model", kind, "--E", "3", "--K", "2",
                                "--lambda", "0.01", "1", "--max-outer", "4", "--out", p((std::string(kind) + ".json").c_str())});
        REQUIRE(fit.code == 0);
        CHECK(fit.out.find("model=" + std::string(kind)) == 0);
        CHECK(fit.err.find("valid_mse=") != std::string::npos);
    }
    CHECK(read_json_file(p("d.json"))["lambda_grid"].size() == 2);

    const Result ev = run({"evaluate", "--model", p("d.json"), "--test", test, "--train", train, "--scheme", "final",
                           "--out", p("report.json")});
    REQUIRE(ev.code == 0);
    CHECK(read_json_file(p("report.json"))["scheme"] == "final");

    const Result cmp = run({"compare", "--models", p("lf.json"), p("c.json"), p("d.json"), "--test", test, "--train",
                            train, "--out", p("cmp.json")});
    REQUIRE(cmp.code == 0);
    CHECK(cmp.out.find("benefit of d over lf") != std::string::npos);
    CHECK(read_json_file(p("cmp.json"))["models"].size() == 3);

    const Result an = run({"analyze", "--model", p("d.json"), "--train", train, "--out-dir", p("tables"),
                           "--min-ratings", "5"});
    REQUIRE(an.code == 0);
    for (const char* f : {"taste_scores.csv", "agreement.csv", "progression.csv", "retention.csv", "level_means.csv"}) {
        CHECK(fs::exists(dir / "tables" / f));
    }
    CHECK(slurp(dir / "tables" / "taste_scores.csv").rfind("item,d,", 0) == 0);

    const Result val = run({"validate", "--model", p("d.json"), "--train", train, "--trials", "50"});
    CHECK(val.code == 0);
    CHECK(val.out.find("FAIL") == std::string::npos);

    // corrupt the stored assignment of one user
    json model = read_json_file(p("d.json"));
    auto& levels = model["assignment"].begin().value();
    REQUIRE(levels.size() >= 2);
    levels[0] = 3;
    levels[1] = 1;
    write_json_file(p("bad.json"), model);
    const Result bad = run({"validate", "--model", p("bad.json"), "--train", train, "--trials", "10"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("monotonicity violated at user=") != std::string::npos);
    CHECK(bad.err.find("index=1") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("config files and overrides") {
    const auto dir = testing::temp_dir("cli_config");
    const auto p = [&](const char* name) { return (dir / name).string(); };
    const Dataset d = testing::random_dataset(10, 12, 8, 1);
    {
        std::ofstream out(p("train.tsv"));
        write_reviews(out, d);
    }
    write(dir / "cfg.json", R"({"model": "c", "E": 2, "K": 1, "lambda": [0.5], "max-outer": 2, "quiet": true})");
    REQUIRE(run({"fit", "--config", p("cfg.json"), "--input", p("train.tsv"), "--out", p("a.json")}).code == 0);
    const json a = read_json_file(p("a.json"));
    CHECK(a["model_kind"] == "c");
    CHECK(a["E"] == 2);
    CHECK(a["lambda"] == 0.5);

    REQUIRE(run({"fit", "--config", p("cfg.json"), "--input", p("train.tsv"), "--out", p("b.json"), "--E", "3"}).code == 0);
    CHECK(read_json_file(p("b.json"))["E"] == 3);

    write(dir / "bad.json", R"({"colour": "blue"})");
    CHECK(run({"fit", "--config", p("bad.json"), "--input", p("train.tsv"), "--out", p("c.json")}).code == 1);

    const Result need_valid = run({"fit", "--input", p("train.tsv"), "--out", p("d.json"), "--lambda", "1", "2"});
    CHECK(need_valid.code == 1);
    fs::remove_all(dir);
}

TEST_CASE("training failures exit 3") {
    const auto dir = testing::temp_dir("cli_train");
    const auto p = [&](const char* name) { return (dir / name).string(); };
    const Dataset d = testing::random_dataset(6, 8, 5, 2);
    {
        std::ofstream out(p("train.tsv"));
        write_reviews(out, d);
    }
    const Result r = run({"fit", "--input", p("train.tsv"), "--out", p("m.json"), "--lambda", "1e308",
                          "--magnitude", "1e308", "--quiet"});
    CHECK(r.code == 3);
    fs::remove_all(dir);
}
