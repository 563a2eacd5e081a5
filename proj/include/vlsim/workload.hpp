// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Latent-shape and token-count arithmetic for image/video media, plus a
// deterministic stage-mixed workload generator.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vlsim/common.hpp"

namespace vlsim {

// Causal video VAE geometry: temporal/spatial downsample factors and latent
// channel count. The first pixel frame always maps to a dedicated latent
// frame, so a clip with 1 + T' frames encodes to 1 + T'/d_t latent frames.
struct VaeConfig {
    int d_t = 1;
    int d_h = 1;
    int d_w = 1;
    int c_latent = 1;

    void validate() const;
    // Known presets: "seaweed48x" = (4,8,8,16), "seaweed64x" = (4,16,16,48).
    static VaeConfig preset(const std::string& name);
};

struct PatchConfig {
    int p_t = 1;
    int p_h = 1;
    int p_w = 1;

    void validate() const;
};

enum class Modality { Image, Video };
enum class Task { TextToVideo, ImageToVideo, VideoExtension };

std::string to_string(Modality m);
std::string to_string(Task t);
Modality modality_from_string(const std::string& s);
Task task_from_string(const std::string& s);

struct MediaSpec {
    Modality kind = Modality::Image;
    std::int64_t frame_count = 1;  // images: exactly 1; videos: T'+1
    std::int64_t height = 1;       // pixels
    std::int64_t width = 1;        // pixels
    double fps = 0.0;              // informational; 0 for images

    void validate() const;
};

struct LatentShape {
    std::int64_t frames = 1;
    std::int64_t height = 1;
    std::int64_t width = 1;
    std::int64_t channels = 1;
};

struct WorkItem {
    std::uint64_t id = 0;
    Modality modality = Modality::Image;
    Task task = Task::TextToVideo;
    int stage = 0;
    std::int64_t seq_len = 1;
    MediaSpec media;
};

// One pre-training stage: resolution targets, share of total steps, and the
// modality/task mix.
struct StageRecipe {
    int stage = 0;
    std::vector<std::pair<int, int>> image_areas;  // (w, h) target areas
    std::vector<std::pair<int, int>> video_areas;  // (w, h) target areas
    double step_fraction = 0.0;
    double image_fraction = 1.0;
    double i2v_fraction = 0.0;
};

void validate_recipes(const std::vector<StageRecipe>& recipes);

// The four-stage pre-training mix: 37.5% / 25% / 25% / 12.5% of steps,
// image-only in stage 0, image-to-video ratio 20% wherever videos appear.
std::vector<StageRecipe> default_stage_recipes();

// Exact rational, reduced. compression_ratio never rounds.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    bool operator==(const Ratio&) const = default;
};

// r = c_latent / (3 * d_t * d_h * d_w)
Ratio compression_ratio(const VaeConfig& vae);

// Pixel-space media to latent grid. Rejects non-divisible axes by name.
LatentShape latent_shape(const MediaSpec& media, const VaeConfig& vae);

// Token count after patchify: ceil(frames/p_t) * (height/p_h) * (width/p_w).
// The dedicated first latent frame may form its own temporal patch group
// when frames % p_t == 1; any other non-zero residue is rejected.
std::int64_t seq_len(const MediaSpec& media, const VaeConfig& vae, const PatchConfig& patch);

// Dimensions (height, width) preserving `aspect` (w/h) whose product is
// closest to target_w*target_h among exact multiples of (snap_h, snap_w).
// Ties go to the smaller area, then to the wider shape.
std::pair<std::int64_t, std::int64_t> resolve_target_area(std::int64_t target_w,
                                                          std::int64_t target_h,
                                                          double aspect,
                                                          int snap_h,
                                                          int snap_w);

struct GenOptions {
    std::vector<double> aspect_ratios = {1.0, 4.0 / 3.0, 3.0 / 4.0, 16.0 / 9.0, 9.0 / 16.0};
    std::vector<double> video_durations_s = {5.0, 10.0};
    double fps = 24.0;
};

// Deterministic in (recipes, vae, patch, item_count, seed, options). Stage
// counts follow step_fraction via largest-remainder rounding; modality and
// task are per-item draws.
std::vector<WorkItem> gen_workload(const std::vector<StageRecipe>& recipes,
                                   const VaeConfig& vae,
                                   const PatchConfig& patch,
                                   std::int64_t item_count,
                                   std::uint64_t seed,
                                   const GenOptions& options = {});

// Workload file surface: CSV with the exact header
//   id,modality,task,stage,frames,height,width,fps,seq_len
void write_workload_csv(std::ostream& os, const std::vector<WorkItem>& items);
std::vector<WorkItem> read_workload_csv(std::istream& is);

}  // namespace vlsim
