#include "san/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "san/image_io.hpp"
#include "san/init.hpp"

namespace san::datasets {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ShapeSpec {
    int kind;   // 0 circle, 1 square, 2 triangle
    int color;  // 0 red, 1 green, 2 blue, 3 yellow
    int ci, cj, r;
};

const char* kKinds[] = {"circle", "square", "triangle"};
const char* kColors[] = {"red", "green", "blue", "yellow"};
const double kRgb[4][3] = {{0.9, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.2, 0.9}, {0.9, 0.9, 0.1}};

bool inside(const ShapeSpec& s, int i, int j) {
    int di = i - s.ci, dj = j - s.cj;
    switch (s.kind) {
        case 0: return di * di + dj * dj <= s.r * s.r;
        case 1: return std::abs(di) <= s.r && std::abs(dj) <= s.r;
        default:  // upward triangle, apex at the top row
            return di >= -s.r && di <= s.r && std::abs(dj) * 2 <= di + s.r;
    }
}

bool boxes_overlap(const ShapeSpec& a, const ShapeSpec& b) {
    return std::abs(a.ci - b.ci) <= a.r + b.r + 1 && std::abs(a.cj - b.cj) <= a.r + b.r + 1;
}

std::string relation(const ShapeSpec& a, const ShapeSpec& b) {
    if (std::abs(a.cj - b.cj) >= std::abs(a.ci - b.ci))
        return a.cj < b.cj ? "left of" : "right of";
    return a.ci < b.ci ? "above" : "below";
}

std::string phrase(const ShapeSpec& s) {
    return std::string(kColors[s.color]) + " " + kKinds[s.kind];
}

std::vector<std::string> make_captions(const std::vector<ShapeSpec>& shapes, Rng& rng,
                                       std::size_t count) {
    std::vector<std::string> pool;
    if (shapes.size() == 1) {
        const std::string p = phrase(shapes[0]);
        pool = {"a " + p, "there is a " + p, "an image with a " + p, "a single " + p};
    } else {
        const std::string p1 = phrase(shapes[0]);
        const std::string p2 = phrase(shapes[1]);
        const std::string rel = relation(shapes[0], shapes[1]);
        pool = {"a " + p1 + " and a " + p2,
                "the " + p1 + " is " + rel + " the " + p2,
                "an image with a " + p1 + " and a " + p2,
                "a " + p2 + " next to a " + p1};
    }
    // seeded sample of distinct templates
    std::vector<std::string> out;
    while (out.size() < count && !pool.empty()) {
        std::size_t pick = rng.next_below(pool.size());
        out.push_back(pool[pick]);
        pool.erase(pool.begin() + pick);
    }
    while (out.size() < count) out.push_back(out.back());  // count > pool size
    return out;
}

std::string config_key(const std::vector<ShapeSpec>& shapes) {
    std::vector<std::string> parts;
    for (const auto& s : shapes) parts.push_back(phrase(s));
    std::sort(parts.begin(), parts.end());
    std::string key;
    for (const auto& p : parts) key += p + ";";
    if (shapes.size() == 2) key += relation(shapes[0], shapes[1]);
    return key;
}

std::vector<ShapeSpec> place_shapes(Rng& rng, std::size_t image_size, std::size_t max_shapes) {
    const int n = 1 + static_cast<int>(rng.next_below(max_shapes));
    const int size = static_cast<int>(image_size);
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<ShapeSpec> shapes;
        std::set<int> used_colors;
        bool ok = true;
        for (int s = 0; s < n && ok; ++s) {
            ShapeSpec spec;
            spec.kind = static_cast<int>(rng.next_below(3));
            do {
                spec.color = static_cast<int>(rng.next_below(4));
            } while (used_colors.count(spec.color));
            used_colors.insert(spec.color);
            bool placed = false;
            for (int t = 0; t < 32 && !placed; ++t) {
                spec.r = 4 + static_cast<int>(rng.next_below(3));
                spec.ci = spec.r + 1 +
                          static_cast<int>(rng.next_below(size - 2 * (spec.r + 1)));
                spec.cj = spec.r + 1 +
                          static_cast<int>(rng.next_below(size - 2 * (spec.r + 1)));
                placed = std::none_of(shapes.begin(), shapes.end(),
                                      [&](const ShapeSpec& o) { return boxes_overlap(spec, o); });
            }
            if (!placed) ok = false;
            else shapes.push_back(spec);
        }
        if (ok) return shapes;
    }
    throw DataError("generate_corpus: shape placement failed after bounded retries");
}

Sample render(const std::string& id, std::uint64_t sample_seed, std::size_t image_size,
              std::size_t max_shapes, std::size_t captions_per_image,
              std::set<std::string>& used_configs) {
    Rng rng(sample_seed);
    std::vector<ShapeSpec> shapes;
    // prefer an unseen configuration so small corpora stay retrieval-solvable
    for (int attempt = 0; attempt < 24; ++attempt) {
        shapes = place_shapes(rng, image_size, max_shapes);
        if (!used_configs.count(config_key(shapes))) break;
    }
    used_configs.insert(config_key(shapes));

    Sample out;
    out.id = id;
    out.image = Tensor({3, image_size, image_size});
    out.mask = Tensor({image_size, image_size});
    for (std::size_t i = 0; i < image_size; ++i)
        for (std::size_t j = 0; j < image_size; ++j) {
            double bg = 0.45 + 0.1 * rng.next_double();  // noisy gray background
            const ShapeSpec* hit = nullptr;
            for (const auto& s : shapes)
                if (inside(s, static_cast<int>(i), static_cast<int>(j))) {
                    hit = &s;
                    break;
                }
            for (std::size_t c = 0; c < 3; ++c) {
                double v = hit ? kRgb[hit->color][c] : bg;
                // snap to the 8-bit grid so PPM round trips are exact
                out.image.at(c, i, j) = std::round(v * 255.0) / 255.0;
            }
            out.mask.at(i, j) = hit ? 1.0 : 0.0;
        }
    out.captions = make_captions(shapes, rng, captions_per_image);
    return out;
}

}  // namespace

std::string generate_corpus(const std::string& out_dir, std::uint64_t seed,
                            const GeneratorOptions& opts) {
    if (opts.n_samples == 0) throw UsageError("generate_corpus: n_samples must be >= 1");
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");
    std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    std::ofstream manifest(manifest_path);
    if (!manifest) throw DataError("generate_corpus: cannot write " + manifest_path);

    std::set<std::string> used_configs;
    for (std::size_t n = 0; n < opts.n_samples; ++n) {
        std::string id = "sample_" + std::to_string(n);
        Sample s = render(id, derive_seed(seed, id), opts.image_size, opts.max_shapes,
                          opts.captions_per_image, used_configs);
        std::string image_rel = "images/" + id + ".ppm";
        std::string mask_rel = "masks/" + id + ".pgm";
        image_io::write_ppm((fs::path(out_dir) / image_rel).string(), s.image);
        image_io::write_pgm((fs::path(out_dir) / mask_rel).string(), s.mask);
        json rec = {{"id", id}, {"image", image_rel}, {"mask", mask_rel},
                    {"captions", s.captions}};
        manifest << rec.dump() << "\n";
    }
    return manifest_path;
}

std::vector<Sample> load_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("load_manifest: cannot open " + manifest_path);
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<Sample> samples;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("load_manifest: line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!rec.contains("id") || !rec.contains("image") || !rec.contains("mask") ||
            !rec.contains("captions"))
            throw DataError("load_manifest: line " + std::to_string(lineno) +
                            ": missing required field");
        Sample s;
        s.id = rec["id"].get<std::string>();
        if (!ids.insert(s.id).second)
            throw DataError("load_manifest: line " + std::to_string(lineno) + ": duplicate id " +
                            s.id);
        s.image = image_io::read_ppm((base / rec["image"].get<std::string>()).string());
        Tensor raw = image_io::read_pgm((base / rec["mask"].get<std::string>()).string());
        s.mask = Tensor(raw.shape());
        for (std::size_t i = 0; i < raw.numel(); ++i) {
            if (raw[i] != 0.0 && raw[i] != 1.0)
                throw DataError("load_manifest: line " + std::to_string(lineno) +
                                ": non-binary mask value");
            s.mask[i] = raw[i];
        }
        s.captions = rec["captions"].get<std::vector<std::string>>();
        samples.push_back(std::move(s));
    }
    return samples;
}

Split split(std::size_t n, double train_ratio, double val_ratio, double test_ratio,
            std::uint64_t seed) {
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw ConfigError("split: ratios must sum to 1");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);
    std::size_t n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_ratio * n));
    if (n_train + n_val > n) n_val = n - n_train;
    Split out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    out.test.assign(order.begin() + n_train + n_val, order.end());
    return out;
}

}  // namespace san::datasets
