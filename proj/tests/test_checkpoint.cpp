#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "san/checkpoint.hpp"

using namespace san;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("san_ckpt_test_" + name);
    fs::remove(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

ParamStore sample_params() {
    ParamStore params;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor w({3, 4}), b({3}), k({2, 3, 3, 3});
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
    for (std::size_t i = 0; i < b.numel(); ++i) b[i] = dist(rng);
    for (std::size_t i = 0; i < k.numel(); ++i) k[i] = dist(rng);
    params.add("layer.w", w);
    params.add("layer.b", b);
    params.add("conv.w", k);
    return params;
}

text::Vocabulary sample_vocab() {
    return text::Vocabulary::build({"a red circle", "the blue square is left of it"});
}

}  // namespace

TEST_CASE("save then load recovers every tensor and the vocabulary exactly") {
    fs::path path = temp_file("roundtrip.ckpt");
    ParamStore params = sample_params();
    text::Vocabulary vocab = sample_vocab();
    checkpoint::save(path.string(), params, vocab);

    auto loaded = checkpoint::load(path.string());
    REQUIRE(loaded.params.all().size() == params.all().size());
    for (const auto& [name, t] : params.all()) {
        const Tensor& u = loaded.params.at(name);
        REQUIRE(u.shape() == t.shape());
        for (std::size_t i = 0; i < t.numel(); ++i) CHECK(u[i] == t[i]);
    }
    CHECK(loaded.vocab.size() == vocab.size());
    CHECK(loaded.vocab.serialize() == vocab.serialize());
}

TEST_CASE("save -> load -> save is byte-identical") {
    fs::path a = temp_file("bytes_a.ckpt");
    fs::path b = temp_file("bytes_b.ckpt");
    checkpoint::save(a.string(), sample_params(), sample_vocab());
    auto loaded = checkpoint::load(a.string());
    checkpoint::save(b.string(), loaded.params, loaded.vocab);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("checkpoint file opens with the magic and version") {
    fs::path path = temp_file("magic.ckpt");
    checkpoint::save(path.string(), sample_params(), sample_vocab());
    std::string bytes = slurp(path);
    REQUIRE(bytes.size() >= 12);
    CHECK(bytes.substr(0, 8) == "SANCKPT1");
}

TEST_CASE("missing files and corrupted headers are rejected") {
    CHECK_THROWS_AS(checkpoint::load((temp_file("absent.ckpt")).string()), CheckpointError);

    fs::path bad = temp_file("badmagic.ckpt");
    std::ofstream(bad, std::ios::binary) << "NOTACKPTxxxxxxxxxxxx";
    CHECK_THROWS_AS(checkpoint::load(bad.string()), CheckpointError);
}

TEST_CASE("truncated payload is rejected") {
    fs::path path = temp_file("trunc.ckpt");
    checkpoint::save(path.string(), sample_params(), sample_vocab());
    std::string bytes = slurp(path);
    fs::path cut = temp_file("cut.ckpt");
    std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(checkpoint::load(cut.string()), CheckpointError);
}

TEST_CASE("an empty parameter store round-trips") {
    fs::path path = temp_file("empty.ckpt");
    ParamStore params;
    checkpoint::save(path.string(), params, sample_vocab());
    auto loaded = checkpoint::load(path.string());
    CHECK(loaded.params.all().empty());
    CHECK(loaded.vocab.size() == sample_vocab().size());
}
