// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace vlsim {

void VaeConfig::validate() const {
    if (d_t < 1 || d_h < 1 || d_w < 1 || c_latent < 1) {
        throw ValidationError("VaeConfig: all factors must be >= 1");
    }
}

VaeConfig VaeConfig::preset(const std::string& name) {
    if (name == "seaweed48x") return {4, 8, 8, 16};
    if (name == "seaweed64x") return {4, 16, 16, 48};
    throw ValidationError("unknown VAE preset: " + name);
}

void PatchConfig::validate() const {
    if (p_t < 1 || p_h < 1 || p_w < 1) {
        throw ValidationError("PatchConfig: all factors must be >= 1");
    }
}

std::string to_string(Modality m) {
    return m == Modality::Image ? "image" : "video";
}

std::string to_string(Task t) {
    switch (t) {
        case Task::TextToVideo: return "text-to-video";
        case Task::ImageToVideo: return "image-to-video";
        case Task::VideoExtension: return "video-extension";
    }
    return "text-to-video";
}

Modality modality_from_string(const std::string& s) {
    if (s == "image") return Modality::Image;
    if (s == "video") return Modality::Video;
    throw ValidationError("unknown modality: " + s);
}

Task task_from_string(const std::string& s) {
    if (s == "text-to-video") return Task::TextToVideo;
    if (s == "image-to-video") return Task::ImageToVideo;
    if (s == "video-extension") return Task::VideoExtension;
    throw ValidationError("unknown task: " + s);
}

void MediaSpec::validate() const {
    if (height < 1 || width < 1) {
        throw ValidationError("MediaSpec: height and width must be >= 1");
    }
    if (frame_count < 1) {
        throw ValidationError("MediaSpec: frame_count must be >= 1");
    }
    if (kind == Modality::Image && frame_count != 1) {
        throw ValidationError("MediaSpec: images must have frame_count = 1");
    }
}

void validate_recipes(const std::vector<StageRecipe>& recipes) {
    if (recipes.empty()) throw ValidationError("recipes: at least one stage required");
    double total = 0.0;
    for (const auto& r : recipes) {
        total += r.step_fraction;
        auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0; };
        if (!in_unit(r.step_fraction) || !in_unit(r.image_fraction) || !in_unit(r.i2v_fraction)) {
            throw ValidationError("recipes: fractions must lie in [0, 1] (stage " +
                                  std::to_string(r.stage) + ")");
        }
        if (r.image_areas.empty() && r.video_areas.empty()) {
            throw ValidationError("recipes: stage " + std::to_string(r.stage) +
                                  " has no target areas");
        }
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("recipes: step fractions must sum to 1");
    }
}

std::vector<StageRecipe> default_stage_recipes() {
    std::vector<StageRecipe> recipes(4);
    recipes[0] = {0, {{256, 256}, {512, 512}}, {}, 0.375, 1.0, 0.0};
    recipes[1] = {1, {{256, 256}, {512, 512}}, {{256, 256}}, 0.25, 0.5, 0.2};
    recipes[2] = {2, {{640, 480}, {1280, 720}}, {{640, 480}}, 0.25, 0.5, 0.2};
    recipes[3] = {3, {{1280, 720}, {1920, 1024}}, {{1280, 720}}, 0.125, 0.5, 0.2};
    return recipes;
}

Ratio compression_ratio(const VaeConfig& vae) {
    vae.validate();
    std::int64_t num = vae.c_latent;
    std::int64_t den = 3LL * vae.d_t * vae.d_h * vae.d_w;
    std::int64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

LatentShape latent_shape(const MediaSpec& media, const VaeConfig& vae) {
    media.validate();
    vae.validate();
    LatentShape out;
    if (media.kind == Modality::Image) {
        out.frames = 1;
    } else {
        if ((media.frame_count - 1) % vae.d_t != 0) {
            throw ValidationError("latent_shape: frame_count-1 (" +
                                  std::to_string(media.frame_count - 1) +
                                  ") not divisible by temporal factor " +
                                  std::to_string(vae.d_t));
        }
        out.frames = 1 + (media.frame_count - 1) / vae.d_t;
    }
    if (media.height % vae.d_h != 0) {
        throw ValidationError("latent_shape: height " + std::to_string(media.height) +
                              " not divisible by spatial factor " + std::to_string(vae.d_h));
    }
    if (media.width % vae.d_w != 0) {
        throw ValidationError("latent_shape: width " + std::to_string(media.width) +
                              " not divisible by spatial factor " + std::to_string(vae.d_w));
    }
    out.height = media.height / vae.d_h;
    out.width = media.width / vae.d_w;
    out.channels = vae.c_latent;
    return out;
}

std::int64_t seq_len(const MediaSpec& media, const VaeConfig& vae, const PatchConfig& patch) {
    patch.validate();
    LatentShape latent = latent_shape(media, vae);
    std::int64_t residue = latent.frames % patch.p_t;
    // residue 1 is the dedicated first latent frame forming its own group
    if (residue != 0 && residue != 1) {
        throw ValidationError("seq_len: latent frame count " + std::to_string(latent.frames) +
                              " not compatible with temporal patch factor " +
                              std::to_string(patch.p_t));
    }
    if (latent.height % patch.p_h != 0) {
        throw ValidationError("seq_len: latent height " + std::to_string(latent.height) +
                              " not divisible by patch factor " + std::to_string(patch.p_h));
    }
    if (latent.width % patch.p_w != 0) {
        throw ValidationError("seq_len: latent width " + std::to_string(latent.width) +
                              " not divisible by patch factor " + std::to_string(patch.p_w));
    }
    return ceil_div(latent.frames, patch.p_t) * (latent.height / patch.p_h) *
           (latent.width / patch.p_w);
}

std::pair<std::int64_t, std::int64_t> resolve_target_area(std::int64_t target_w,
                                                          std::int64_t target_h,
                                                          double aspect,
                                                          int snap_h,
                                                          int snap_w) {
    if (aspect < 1.0 / 3.0 || aspect > 3.0) {
        throw ValidationError("resolve_target_area: aspect ratio must lie in [1/3, 3]");
    }
    if (snap_h < 1 || snap_w < 1) {
        throw ValidationError("resolve_target_area: snap multiples must be >= 1");
    }
    if (target_w < 1 || target_h < 1) {
        throw ValidationError("resolve_target_area: target dimensions must be >= 1");
    }
    const double area = static_cast<double>(target_w) * static_cast<double>(target_h);
    const std::int64_t h_max = static_cast<std::int64_t>(4.0 * std::sqrt(area));

    bool found = false;
    std::int64_t best_h = 0, best_w = 0;
    double best_err = 0.0;
    for (std::int64_t h = snap_h; h <= h_max; h += snap_h) {
        // width preserving the aspect ratio, snapped to the nearest multiple
        std::int64_t w = std::llround(static_cast<double>(h) * aspect / snap_w) * snap_w;
        w = std::max<std::int64_t>(w, snap_w);
        double err = std::abs(static_cast<double>(h) * static_cast<double>(w) - area);
        bool better = false;
        if (!found || err < best_err) {
            better = true;
        } else if (err == best_err) {
            std::int64_t prod = h * w, best_prod = best_h * best_w;
            if (prod < best_prod || (prod == best_prod && w > best_w)) better = true;
        }
        if (better) {
            found = true;
            best_h = h;
            best_w = w;
            best_err = err;
        }
    }
    if (!found) {
        throw ValidationError("resolve_target_area: no snapped dimensions fit the target area");
    }
    return {best_h, best_w};
}

namespace {

// Largest-remainder rounding of item_count over step fractions.
std::vector<std::int64_t> stage_quotas(const std::vector<StageRecipe>& recipes,
                                       std::int64_t item_count) {
    std::size_t n = recipes.size();
    std::vector<std::int64_t> quota(n);
    std::vector<double> remainder(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double exact = recipes[i].step_fraction * static_cast<double>(item_count);
        quota[i] = static_cast<std::int64_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(quota[i]);
        assigned += quota[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::int64_t k = 0; k < item_count - assigned; ++k) {
        quota[order[static_cast<std::size_t>(k) % n]] += 1;
    }
    return quota;
}

}  // namespace

std::vector<WorkItem> gen_workload(const std::vector<StageRecipe>& recipes,
                                   const VaeConfig& vae,
                                   const PatchConfig& patch,
                                   std::int64_t item_count,
                                   std::uint64_t seed,
                                   const GenOptions& options) {
    validate_recipes(recipes);
    vae.validate();
    patch.validate();
    if (item_count < 1) throw ValidationError("gen_workload: item_count must be >= 1");
    if (options.aspect_ratios.empty() || options.video_durations_s.empty() || options.fps <= 0) {
        throw ValidationError("gen_workload: options need aspect ratios, durations, fps > 0");
    }

    const int snap_h = vae.d_h * patch.p_h;
    const int snap_w = vae.d_w * patch.p_w;
    const std::int64_t frame_snap = static_cast<std::int64_t>(vae.d_t) * patch.p_t;

    Rng rng(seed);
    std::vector<std::int64_t> quota = stage_quotas(recipes, item_count);
    std::vector<WorkItem> items;
    items.reserve(static_cast<std::size_t>(item_count));

    std::uint64_t next_id = 0;
    for (std::size_t si = 0; si < recipes.size(); ++si) {
        const StageRecipe& recipe = recipes[si];
        for (std::int64_t k = 0; k < quota[si]; ++k) {
            WorkItem item;
            item.id = next_id++;
            item.stage = recipe.stage;

            bool as_image = recipe.video_areas.empty() ||
                            (!recipe.image_areas.empty() &&
                             rng_bernoulli(rng, recipe.image_fraction));
            const auto& areas = as_image ? recipe.image_areas : recipe.video_areas;
            auto [target_w, target_h] = areas[rng_index(rng, areas.size())];
            double aspect = options.aspect_ratios[rng_index(rng, options.aspect_ratios.size())];
            auto [h, w] = resolve_target_area(target_w, target_h, aspect, snap_h, snap_w);

            item.media.height = h;
            item.media.width = w;
            if (as_image) {
                item.modality = Modality::Image;
                item.task = Task::TextToVideo;
                item.media.kind = Modality::Image;
                item.media.frame_count = 1;
                item.media.fps = 0.0;
            } else {
                item.modality = Modality::Video;
                item.task = rng_bernoulli(rng, recipe.i2v_fraction) ? Task::ImageToVideo
                                                                    : Task::TextToVideo;
                item.media.kind = Modality::Video;
                double dur =
                    options.video_durations_s[rng_index(rng, options.video_durations_s.size())];
                // snap T' so both the VAE and the temporal patchify divide evenly
                std::int64_t raw = static_cast<std::int64_t>(std::llround(dur * options.fps));
                item.media.frame_count = 1 + round_up(std::max<std::int64_t>(raw, 1), frame_snap);
                item.media.fps = options.fps;
            }
            item.seq_len = seq_len(item.media, vae, patch);
            items.push_back(item);
        }
    }
    return items;
}

namespace {
const char kWorkloadHeader[] = "id,modality,task,stage,frames,height,width,fps,seq_len";
}

void write_workload_csv(std::ostream& os, const std::vector<WorkItem>& items) {
    os << kWorkloadHeader << "\n";
    for (const auto& it : items) {
        os << it.id << ',' << to_string(it.modality) << ',' << to_string(it.task) << ','
           << it.stage << ',' << it.media.frame_count << ',' << it.media.height << ','
           << it.media.width << ',' << format_double(it.media.fps) << ',' << it.seq_len << "\n";
    }
}

std::vector<WorkItem> read_workload_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kWorkloadHeader) {
        throw ValidationError(std::string("workload file: expected header '") + kWorkloadHeader +
                              "'");
    }
    std::vector<WorkItem> items;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 9) {
            throw ValidationError("workload file line " + std::to_string(lineno) +
                                  ": expected 9 fields");
        }
        try {
            WorkItem it;
            it.id = std::stoull(fields[0]);
            it.modality = modality_from_string(fields[1]);
            it.task = task_from_string(fields[2]);
            it.stage = std::stoi(fields[3]);
            it.media.kind = it.modality;
            it.media.frame_count = std::stoll(fields[4]);
            it.media.height = std::stoll(fields[5]);
            it.media.width = std::stoll(fields[6]);
            it.media.fps = std::stod(fields[7]);
            it.seq_len = std::stoll(fields[8]);
            if (it.seq_len < 1) throw ValidationError("seq_len must be >= 1");
            it.media.validate();
            items.push_back(it);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("workload file line " + std::to_string(lineno) +
                                  ": malformed field");
        }
    }
    return items;
}

}  // namespace vlsim
