#include "sail/databench.hpp"

#include "sail/error.hpp"
#include "sail/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace sail {

namespace {

Tensor unit_normal(Rng& rng, std::size_t k) {
    Tensor t = Tensor::vector(std::vector<double>(k, 0.0));
    double norm = 0.0;
    for (auto& v : t.data()) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : t.data()) v /= norm;
    return t;
}

Tensor normalized(Tensor t) {
    double norm = 0.0;
    for (double v : t.data()) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : t.data()) v /= norm;
    return t;
}

/// projection * latent as a feature row.
std::vector<double> project(const Tensor& projection, const Tensor& latent) {
    std::vector<double> out(projection.rows(), 0.0);
    for (std::size_t r = 0; r < projection.rows(); ++r)
        for (std::size_t c = 0; c < projection.cols(); ++c) out[r] += projection(r, c) * latent[c];
    return out;
}

Segment random_span(Rng& rng, std::size_t n, const GeneratorConfig& cfg) {
    const double ratio = rng.uniform(cfg.min_segment_ratio, cfg.max_segment_ratio);
    const long len = std::clamp(std::lround(ratio * static_cast<double>(n)), 1L, static_cast<long>(n));
    const long s = rng.uniform_int(1, static_cast<long>(n) - len + 1);
    return {s, s + len - 1};
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void GeneratorConfig::validate() const {
    require(classes >= 20 && classes % 20 == 0, ErrorKind::config,
            "generator: class count must be a multiple of 20 (sibling pairs split 8:1:1), got " + std::to_string(classes));
    require(videos_per_class >= 1, ErrorKind::config, "generator: videos_per_class must be positive");
    require(min_frames >= 2 && min_frames <= max_frames, ErrorKind::config, "generator: need 2 <= min_frames <= max_frames");
    require(feature_dim >= 1 && latent_dim >= 2, ErrorKind::config, "generator: feature_dim >= 1 and latent_dim >= 2 required");
    require(min_regions >= 2 && min_regions <= max_regions, ErrorKind::config, "generator: need 2 <= min_regions <= max_regions");
    require(prototypes >= 1, ErrorKind::config, "generator: need at least one prototype per class");
    require(sibling_correlation >= 0.0 && sibling_correlation < 1.0, ErrorKind::config, "generator: sibling_correlation must be in [0, 1)");
    require(0.0 < min_segment_ratio && min_segment_ratio <= max_segment_ratio && max_segment_ratio <= 1.0, ErrorKind::config,
            "generator: need 0 < min_segment_ratio <= max_segment_ratio <= 1");
    require(second_segment_prob >= 0.0 && second_segment_prob <= 1.0, ErrorKind::config, "generator: second_segment_prob outside [0, 1]");
    require(distractor_prob >= 0.0 && distractor_prob <= 1.0, ErrorKind::config, "generator: distractor_prob outside [0, 1]");
    require(frame_noise >= 0.0 && region_noise >= 0.0 && global_noise >= 0.0 && prototype_spread >= 0.0, ErrorKind::config,
            "generator: noise levels must be non-negative");
    require(min_len >= 1 && min_len <= max_len, ErrorKind::config, "generator: need 1 <= min_len <= max_len");
}

nlohmann::ordered_json to_json(const GeneratorConfig& c) {
    return {{"classes", c.classes},
            {"videos_per_class", c.videos_per_class},
            {"min_frames", c.min_frames},
            {"max_frames", c.max_frames},
            {"feature_dim", c.feature_dim},
            {"latent_dim", c.latent_dim},
            {"min_regions", c.min_regions},
            {"max_regions", c.max_regions},
            {"prototypes", c.prototypes},
            {"sibling_correlation", c.sibling_correlation},
            {"prototype_spread", c.prototype_spread},
            {"frame_noise", c.frame_noise},
            {"region_noise", c.region_noise},
            {"global_noise", c.global_noise},
            {"min_segment_ratio", c.min_segment_ratio},
            {"max_segment_ratio", c.max_segment_ratio},
            {"second_segment_prob", c.second_segment_prob},
            {"distractor_prob", c.distractor_prob},
            {"min_len", c.min_len},
            {"max_len", c.max_len}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::config, "generator config must be a JSON object");
    GeneratorConfig c;
    const auto known = to_json(c);
    for (const auto& [key, value] : j.items())
        require(known.contains(key), ErrorKind::config, "generator config: unknown key '" + key + "'");
    try {
        c.classes = get_or(j, "classes", c.classes);
        c.videos_per_class = get_or(j, "videos_per_class", c.videos_per_class);
        c.min_frames = get_or(j, "min_frames", c.min_frames);
        c.max_frames = get_or(j, "max_frames", c.max_frames);
        c.feature_dim = get_or(j, "feature_dim", c.feature_dim);
        c.latent_dim = get_or(j, "latent_dim", c.latent_dim);
        c.min_regions = get_or(j, "min_regions", c.min_regions);
        c.max_regions = get_or(j, "max_regions", c.max_regions);
        c.prototypes = get_or(j, "prototypes", c.prototypes);
        c.sibling_correlation = get_or(j, "sibling_correlation", c.sibling_correlation);
        c.prototype_spread = get_or(j, "prototype_spread", c.prototype_spread);
        c.frame_noise = get_or(j, "frame_noise", c.frame_noise);
        c.region_noise = get_or(j, "region_noise", c.region_noise);
        c.global_noise = get_or(j, "global_noise", c.global_noise);
        c.min_segment_ratio = get_or(j, "min_segment_ratio", c.min_segment_ratio);
        c.max_segment_ratio = get_or(j, "max_segment_ratio", c.max_segment_ratio);
        c.second_segment_prob = get_or(j, "second_segment_prob", c.second_segment_prob);
        c.distractor_prob = get_or(j, "distractor_prob", c.distractor_prob);
        c.min_len = get_or(j, "min_len", c.min_len);
        c.max_len = get_or(j, "max_len", c.max_len);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("generator config: ") + e.what());
    }
    c.validate();
    return c;
}

RawCorpus generate_raw_corpus(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Rng root(seed);
    RawCorpus corpus;
    Rng class_rng = root.fork(1);
    corpus.projection = Tensor::matrix(cfg.feature_dim, cfg.latent_dim);
    for (auto& v : corpus.projection.data()) v = class_rng.normal();

    // Sibling signatures share sqrt(c) of a parent direction, so their
    // expected cosine is c.
    const double shared = std::sqrt(cfg.sibling_correlation), own = std::sqrt(1.0 - cfg.sibling_correlation);
    for (std::size_t p = 0; p < cfg.classes / 2; ++p) {
        const Tensor parent = unit_normal(class_rng, cfg.latent_dim);
        for (int k = 0; k < 2; ++k) {
            ActivityClass c;
            c.id = static_cast<int>(2 * p) + k;
            c.parent = static_cast<int>(p);
            c.sibling = static_cast<int>(2 * p) + 1 - k;
            const Tensor noise = unit_normal(class_rng, cfg.latent_dim);
            c.signature = Tensor::vector(std::vector<double>(cfg.latent_dim, 0.0));
            for (std::size_t d = 0; d < cfg.latent_dim; ++d) c.signature[d] = shared * parent[d] + own * noise[d];
            c.signature = normalized(c.signature);
            for (std::size_t j = 0; j < cfg.prototypes; ++j) {
                const Tensor jitter = unit_normal(class_rng, cfg.latent_dim);
                Tensor proto = c.signature;
                for (std::size_t d = 0; d < cfg.latent_dim; ++d) proto[d] += cfg.prototype_spread * jitter[d];
                c.prototypes.push_back(normalized(proto));
            }
            corpus.classes.push_back(std::move(c));
        }
    }

    // Distractors come from the split the video will land in, so every split
    // is self-contained.
    const auto parent_split = assign_parent_splits(corpus.classes, default_split_ratios, seed);
    std::vector<std::vector<int>> distractor_pool(corpus.classes.size());
    for (const auto& c : corpus.classes)
        for (const auto& o : corpus.classes)
            if (o.parent != c.parent && parent_split.at(o.parent) == parent_split.at(c.parent)) distractor_pool[c.id].push_back(o.id);

    std::vector<std::vector<double>> class_features;
    for (const auto& c : corpus.classes) class_features.push_back(project(corpus.projection, c.signature));

    corpus.videos.resize(cfg.classes * cfg.videos_per_class);
    const int workers = kernels::threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers) if (workers > 1)
    for (std::size_t index = 0; index < corpus.videos.size(); ++index) {
        const int label = static_cast<int>(index / cfg.videos_per_class);
        Rng rng = root.fork(0x10000 + index);
        RawVideo& v = corpus.videos[index];
        char id[32];
        std::snprintf(id, sizeof id, "v%05zu", index);
        v.id = id;
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(static_cast<long>(cfg.min_frames), static_cast<long>(cfg.max_frames)));

        const Segment first = random_span(rng, n, cfg);
        v.segments.push_back({label, first});
        if (rng.bernoulli(cfg.second_segment_prob)) {
            Segment second = random_span(rng, n, cfg);
            if (rng.bernoulli(0.7)) {
                // Start near the first span so the two usually overlap.
                const long len = second.length();
                const long s = rng.uniform_int(std::max(1L, first.s - len + 1), first.e + 1);
                second = {s, std::min(static_cast<long>(n), s + len - 1)};
            }
            v.segments.push_back({label, second});
        }

        // Background gaps are tiled with chunks; most chunks carry another
        // class's activity, the rest stay pure noise.
        std::vector<int> planted(n, -1);
        for (const auto& s : v.segments)
            for (long t = s.span.s; t <= s.span.e; ++t) planted[t - 1] = s.label;
        for (std::size_t t = 0; t < n;) {
            if (planted[t] == label) {
                ++t;
                continue;
            }
            std::size_t gap_end = t;
            while (gap_end < n && planted[gap_end] != label) ++gap_end;
            for (std::size_t c = t; c < gap_end;) {
                const std::size_t len = std::min<std::size_t>(gap_end - c, static_cast<std::size_t>(random_span(rng, n, cfg).length()));
                const auto& pool = distractor_pool[label];
                int cls = -1;
                if (rng.bernoulli(cfg.distractor_prob) && !pool.empty()) cls = pool[rng.index(pool.size())];
                for (std::size_t k = c; k < c + len; ++k) planted[k] = cls;
                c += len;
            }
            t = gap_end;
        }

        v.frames = Tensor::matrix(n, cfg.feature_dim);
        for (auto& x : v.frames.data()) x = cfg.frame_noise * rng.normal();
        for (std::size_t t = 0; t < n; ++t)
            if (planted[t] >= 0)
                for (std::size_t c = 0; c < cfg.feature_dim; ++c) v.frames(t, c) += class_features[planted[t]][c];
    }
    return corpus;
}

std::vector<LabelledSegment> merge_segments(std::vector<LabelledSegment> segments) {
    std::sort(segments.begin(), segments.end(), [](const LabelledSegment& a, const LabelledSegment& b) {
        return std::tie(a.label, a.span.s, a.span.e) < std::tie(b.label, b.span.s, b.span.e);
    });
    std::vector<LabelledSegment> out;
    for (const auto& seg : segments) {
        // Sorted by start, so one sweep reaches the fixed point.
        if (!out.empty() && out.back().label == seg.label && seg.span.s <= out.back().span.e)
            out.back().span.e = std::max(out.back().span.e, seg.span.e);
        else
            out.push_back(seg);
    }
    return out;
}

std::vector<CuratedVideo> curate(const std::vector<RawVideo>& raw, std::size_t min_len, std::size_t max_len) {
    std::vector<CuratedVideo> out;
    for (const auto& v : raw) {
        const auto merged = merge_segments(v.segments);
        for (std::size_t k = 0; k < merged.size(); ++k) {
            const auto len = static_cast<std::size_t>(merged[k].span.length());
            if (len < min_len || len > max_len) continue;
            out.push_back({v.id + "-" + std::to_string(k + 1), v.frames, merged[k].label, merged[k].span});
        }
    }
    return out;
}

std::vector<VideoSample> make_queries(const std::vector<CuratedVideo>& videos, const RawCorpus& corpus, const GeneratorConfig& cfg,
                                      std::uint64_t seed, QueryStats* stats) {
    std::map<int, std::size_t> per_class;
    for (const auto& v : videos) ++per_class[v.label];
    QueryStats local;
    for (const auto& [label, count] : per_class)
        if (count < 2) ++local.skipped_classes;

    const Rng root(seed);
    std::vector<VideoSample> out;
    for (std::size_t index = 0; index < videos.size(); ++index) {
        const CuratedVideo& video = videos[index];
        if (per_class[video.label] < 2) continue;
        Rng rng = root.fork(0x20000 + index);
        const ActivityClass& own = corpus.classes.at(static_cast<std::size_t>(video.label));
        for (int q = 0; q < 5; ++q) {
            const bool simple = q < 3;
            const ActivityClass& source = simple ? own : corpus.classes.at(static_cast<std::size_t>(own.sibling));
            const std::size_t m = static_cast<std::size_t>(rng.uniform_int(static_cast<long>(cfg.min_regions), static_cast<long>(cfg.max_regions)));
            const std::size_t informative = (m + 1) / 2;

            VideoSample s;
            s.id = video.id + "-q" + std::to_string(q + 1);
            s.frames = video.frames;
            s.target = video.target;
            s.class_id = video.label;
            s.difficulty = simple ? Difficulty::simple : Difficulty::difficult;

            std::vector<std::size_t> slots(m);
            for (std::size_t r = 0; r < m; ++r) slots[r] = r;
            rng.shuffle(slots);
            s.query.regions = Tensor::matrix(m, cfg.feature_dim);
            s.query.boxes.assign(m, Box{});
            Tensor mean = Tensor::vector(std::vector<double>(cfg.latent_dim, 0.0));
            const double cx = rng.uniform(0.3, 0.7), cy = rng.uniform(0.3, 0.7);
            for (std::size_t r = 0; r < m; ++r) {
                const std::size_t slot = slots[r];
                Tensor latent;
                Box box;
                if (r < informative) {
                    latent = source.prototypes[rng.index(source.prototypes.size())];
                    for (std::size_t d = 0; d < cfg.latent_dim; ++d) mean[d] += latent[d] / static_cast<double>(informative);
                    box = {cx + rng.normal(0.0, 0.05), cy + rng.normal(0.0, 0.05), rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3)};
                } else {
                    latent = unit_normal(rng, cfg.latent_dim);
                    box = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)};
                }
                const auto feature = project(corpus.projection, latent);
                for (std::size_t c = 0; c < cfg.feature_dim; ++c) s.query.regions(slot, c) = feature[c] + cfg.region_noise * rng.normal();
                s.query.boxes[slot] = box;
            }
            const auto global = project(corpus.projection, mean);
            s.query.global = Tensor::vector(std::vector<double>(cfg.feature_dim, 0.0));
            for (std::size_t c = 0; c < cfg.feature_dim; ++c) s.query.global[c] = global[c] + cfg.global_noise * rng.normal();
            out.push_back(std::move(s));
        }
    }
    if (stats) *stats = local;
    return out;
}

SplitStats split_stats(const std::vector<VideoSample>& samples) {
    SplitStats st;
    st.samples = samples.size();
    std::set<int> classes;
    for (const auto& s : samples) {
        classes.insert(s.class_id);
        st.mean_video_length += static_cast<double>(s.length());
        st.mean_target_length += static_cast<double>(s.target.length());
    }
    if (!samples.empty()) {
        st.mean_video_length /= static_cast<double>(samples.size());
        st.mean_target_length /= static_cast<double>(samples.size());
    }
    st.classes.assign(classes.begin(), classes.end());
    return st;
}

nlohmann::ordered_json to_json(const CorpusManifest& m) {
    auto split = [](const SplitStats& s) {
        return nlohmann::ordered_json{{"samples", s.samples},
                                      {"classes", s.classes},
                                      {"mean_video_length", s.mean_video_length},
                                      {"mean_target_length", s.mean_target_length}};
    };
    return {{"seed", m.seed},
            {"skipped_classes", m.skipped_classes},
            {"train", split(m.train)},
            {"valid", split(m.valid)},
            {"test", split(m.test)}};
}

std::map<int, int> assign_parent_splits(const std::vector<ActivityClass>& classes, std::array<std::size_t, 3> ratios, std::uint64_t seed) {
    const std::size_t total = ratios[0] + ratios[1] + ratios[2];
    require(total > 0 && ratios[0] > 0, ErrorKind::config, "split ratios must include a training share");
    std::set<int> parent_set;
    for (const auto& c : classes) parent_set.insert(c.parent);
    std::vector<int> parents(parent_set.begin(), parent_set.end());
    Rng(seed).fork(3).shuffle(parents);

    const std::size_t p = parents.size();
    const std::size_t n_valid = (p * ratios[1] + total / 2) / total;
    const std::size_t n_test = (p * ratios[2] + total / 2) / total;
    require(n_valid + n_test < p, ErrorKind::config, "split: too few parent classes for the requested ratios");
    std::map<int, int> parent_split;
    for (std::size_t k = 0; k < p; ++k) parent_split[parents[k]] = k < p - n_valid - n_test ? 0 : (k < p - n_test ? 1 : 2);
    return parent_split;
}

Splits split_by_class(std::vector<VideoSample> samples, const std::vector<ActivityClass>& classes, std::array<std::size_t, 3> ratios,
                      std::uint64_t seed) {
    const auto parent_split = assign_parent_splits(classes, ratios, seed);
    Splits out;
    out.manifest.seed = seed;
    for (auto& s : samples) {
        const auto& cls = classes.at(static_cast<std::size_t>(s.class_id));
        switch (parent_split.at(cls.parent)) {
            case 0: out.train.push_back(std::move(s)); break;
            case 1: out.valid.push_back(std::move(s)); break;
            default: out.test.push_back(std::move(s)); break;
        }
    }
    out.manifest.train = split_stats(out.train);
    out.manifest.valid = split_stats(out.valid);
    out.manifest.test = split_stats(out.test);
    return out;
}

double quantize(double v) {
    // k / 10^4 is the double nearest to the printed decimal, so values read
    // back from a corpus file match the in-memory ones exactly.
    const double scale = std::round(1.0 / feature_quantum);
    return std::round(v * scale) / scale;
}

void quantize(VideoSample& s) {
    for (auto& v : s.frames.data()) v = quantize(v);
    for (auto& v : s.query.regions.data()) v = quantize(v);
    for (auto& v : s.query.global.data()) v = quantize(v);
    for (auto& b : s.query.boxes) b = {quantize(b.x), quantize(b.y), quantize(b.w), quantize(b.h)};
}

Splits synthesize(const GeneratorConfig& cfg, std::uint64_t seed) {
    const RawCorpus corpus = generate_raw_corpus(cfg, seed);
    const auto curated = curate(corpus.videos, cfg.min_len, cfg.max_len);
    QueryStats stats;
    auto samples = make_queries(curated, corpus, cfg, Rng(seed).fork(2).next_u64(), &stats);
    for (auto& s : samples) quantize(s);
    Splits splits = split_by_class(std::move(samples), corpus.classes, default_split_ratios, seed);
    splits.manifest.skipped_classes = stats.skipped_classes;
    return splits;
}

nlohmann::ordered_json sample_to_json(const VideoSample& s, const std::string& split) {
    auto matrix = [](const Tensor& t) {
        auto rows = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < t.rows(); ++r) rows.push_back(std::vector<double>(t.row(r).begin(), t.row(r).end()));
        return rows;
    };
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : s.query.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
    return {{"id", s.id},
            {"split", split},
            {"class", s.class_id},
            {"difficulty", to_string(s.difficulty)},
            {"n", s.length()},
            {"frames", matrix(s.frames)},
            {"regions", matrix(s.query.regions)},
            {"boxes", boxes},
            {"global", std::vector<double>(s.query.global.data().begin(), s.query.global.data().end())},
            {"s", s.target.s},
            {"e", s.target.e}};
}

VideoSample sample_from_json(const nlohmann::json& j) {
    auto matrix = [](const nlohmann::json& rows, const char* what) {
        require(rows.is_array() && !rows.empty(), ErrorKind::format, std::string(what) + " must be a non-empty array");
        const std::size_t r = rows.size(), c = rows.at(0).size();
        require(c >= 1, ErrorKind::format, std::string(what) + " rows must be non-empty");
        Tensor t = Tensor::matrix(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            require(rows.at(i).size() == c, ErrorKind::format, std::string(what) + " rows differ in length");
            for (std::size_t k = 0; k < c; ++k) t(i, k) = rows.at(i).at(k).get<double>();
        }
        return t;
    };
    VideoSample s;
    try {
        s.id = j.at("id").get<std::string>();
        s.class_id = j.at("class").get<int>();
        s.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
        s.frames = matrix(j.at("frames"), "frames");
        require(j.at("n").get<std::size_t>() == s.frames.rows(), ErrorKind::format, "sample " + s.id + ": n does not match frames");
        s.query.regions = matrix(j.at("regions"), "regions");
        for (const auto& b : j.at("boxes")) {
            require(b.size() == 4, ErrorKind::format, "sample " + s.id + ": boxes need 4 values");
            s.query.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()});
        }
        s.query.global = Tensor::vector(j.at("global").get<std::vector<double>>());
        s.target = {j.at("s").get<long>(), j.at("e").get<long>()};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("corpus record: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::format) throw;
        fail(ErrorKind::format, std::string("corpus record: ") + e.what());
    }
    try {
        s.validate();
    } catch (const Error& e) {
        fail(ErrorKind::format, e.what());
    }
    return s;
}

void write_corpus(const std::filesystem::path& path, const Splits& splits) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    auto write = [&](const std::vector<VideoSample>& samples, const char* split) {
        for (const auto& s : samples) out << sample_to_json(s, split).dump() << '\n';
    };
    write(splits.train, "train");
    write(splits.valid, "valid");
    write(splits.test, "test");
    out.flush();
    require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

Splits read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open corpus " + path.string());
    Splits out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        std::string split;
        try {
            split = j.at("split").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        auto sample = sample_from_json(j);
        if (split == "train")
            out.train.push_back(std::move(sample));
        else if (split == "valid")
            out.valid.push_back(std::move(sample));
        else if (split == "test")
            out.test.push_back(std::move(sample));
        else
            fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": unknown split '" + split + "'");
    }
    out.manifest.train = split_stats(out.train);
    out.manifest.valid = split_stats(out.valid);
    out.manifest.test = split_stats(out.test);
    return out;
}

}  // namespace sail
