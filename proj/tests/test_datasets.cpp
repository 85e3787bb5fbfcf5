#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "san/datasets.hpp"

using namespace san;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("san_ds_test_" + tag);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("regeneration from the same seed is byte-identical") {
    datasets::GeneratorOptions opts;
    opts.n_samples = 6;
    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    std::string ma = datasets::generate_corpus(a.string(), 99, opts);
    std::string mb = datasets::generate_corpus(b.string(), 99, opts);
    CHECK(slurp(ma) == slurp(mb));
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        fs::path twin = b / fs::relative(entry.path(), a);
        REQUIRE(fs::exists(twin));
        CHECK(slurp(entry.path()) == slurp(twin));
    }
}

TEST_CASE("different seeds give different corpora") {
    datasets::GeneratorOptions opts;
    opts.n_samples = 4;
    fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
    std::string ma = datasets::generate_corpus(a.string(), 1, opts);
    std::string mb = datasets::generate_corpus(b.string(), 2, opts);
    CHECK(slurp(ma) != slurp(mb));
}

TEST_CASE("generate then load preserves pixels, masks and captions exactly") {
    datasets::GeneratorOptions opts;
    opts.n_samples = 8;
    fs::path dir = fresh_dir("roundtrip");
    auto samples = datasets::load_manifest(datasets::generate_corpus(dir.string(), 5, opts));
    REQUIRE(samples.size() == 8);

    std::set<std::string> ids;
    for (const auto& s : samples) {
        CHECK(ids.insert(s.id).second);  // unique ids
        REQUIRE(s.image.shape() ==
                std::vector<std::size_t>{3, opts.image_size, opts.image_size});
        REQUIRE(s.mask.shape() == std::vector<std::size_t>{opts.image_size, opts.image_size});
        CHECK(s.captions.size() == opts.captions_per_image);
        for (std::size_t i = 0; i < s.image.numel(); ++i) {
            CHECK(s.image[i] >= 0.0);
            CHECK(s.image[i] <= 1.0);
            // PPM stores 8-bit values: every pixel is an exact multiple of 1/255
            double scaled = s.image[i] * 255.0;
            CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
        }
        std::size_t fg = 0;
        for (std::size_t i = 0; i < s.mask.numel(); ++i) {
            CHECK((s.mask[i] == 0.0 || s.mask[i] == 1.0));
            fg += s.mask[i] == 1.0;
        }
        CHECK(fg > 0);                 // some foreground
        CHECK(fg < s.mask.numel());    // some background
    }

    // a second load sees the exact same bytes
    auto again = datasets::load_manifest((dir / "manifest.jsonl").string());
    REQUIRE(again.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = 0; j < samples[i].image.numel(); ++j)
            CHECK(samples[i].image[j] == again[i].image[j]);
        for (std::size_t j = 0; j < samples[i].mask.numel(); ++j)
            CHECK(samples[i].mask[j] == again[i].mask[j]);
        CHECK(samples[i].captions == again[i].captions);
    }
}

TEST_CASE("captions name every rendered shape") {
    datasets::GeneratorOptions opts;
    opts.n_samples = 20;
    fs::path dir = fresh_dir("captions");
    auto samples = datasets::load_manifest(datasets::generate_corpus(dir.string(), 3, opts));
    const std::vector<std::string> colors = {"red", "green", "blue", "yellow"};
    const std::vector<std::string> kinds = {"circle", "square", "triangle"};
    for (const auto& s : samples) {
        for (const auto& cap : s.captions) {
            bool has_color = false, has_kind = false;
            for (const auto& c : colors) has_color |= cap.find(c) != std::string::npos;
            for (const auto& k : kinds) has_kind |= cap.find(k) != std::string::npos;
            CAPTURE(cap);
            CHECK(has_color);
            CHECK(has_kind);
        }
    }
}

TEST_CASE("manifest errors carry the offending line number") {
    fs::path dir = fresh_dir("badlines");
    fs::create_directories(dir);
    fs::path manifest = dir / "manifest.jsonl";
    {
        std::ofstream out(manifest);
        out << "{\"id\": \"ok-but-missing-files\"\n";  // truncated JSON on line 1
    }
    try {
        datasets::load_manifest(manifest.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    CHECK_THROWS_AS(datasets::load_manifest((dir / "absent.jsonl").string()), DataError);
}

TEST_CASE("empty manifest loads as an empty list") {
    fs::path dir = fresh_dir("empty");
    fs::create_directories(dir);
    fs::path manifest = dir / "manifest.jsonl";
    std::ofstream(manifest).close();
    CHECK(datasets::load_manifest(manifest.string()).empty());
}

TEST_CASE("generator rejects zero samples") {
    datasets::GeneratorOptions opts;
    opts.n_samples = 0;
    CHECK_THROWS_AS(
        datasets::generate_corpus(fresh_dir("zero").string(), 1, opts), UsageError);
}

TEST_CASE("splits are disjoint, exhaustive and deterministic") {
    auto s1 = datasets::split(50, 0.6, 0.2, 0.2, 11);
    auto s2 = datasets::split(50, 0.6, 0.2, 0.2, 11);
    CHECK(s1.train == s2.train);
    CHECK(s1.val == s2.val);
    CHECK(s1.test == s2.test);

    std::set<std::size_t> seen;
    for (auto i : s1.train) CHECK(seen.insert(i).second);
    for (auto i : s1.val) CHECK(seen.insert(i).second);
    for (auto i : s1.test) CHECK(seen.insert(i).second);
    CHECK(seen.size() == 50);
    CHECK(*seen.rbegin() == 49);

    auto all_train = datasets::split(10, 1.0, 0.0, 0.0, 3);
    CHECK(all_train.train.size() == 10);
    CHECK(all_train.val.empty());
    CHECK(all_train.test.empty());

    auto other_seed = datasets::split(50, 0.6, 0.2, 0.2, 12);
    CHECK(other_seed.train != s1.train);

    CHECK_THROWS_AS(datasets::split(10, 0.5, 0.2, 0.2, 1), ConfigError);
}
