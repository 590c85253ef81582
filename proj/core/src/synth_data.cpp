/*
 * Copyright 2026 The attrib Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attrib/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/pgm.hpp"
#include "attrib/rng.hpp"

namespace attrib {
namespace {

constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kLabelStream = 3;
constexpr int kPlacementAttempts = 200;

struct Ellipse {
  double cx, cy, ax, ay;
  bool contains(double x, double y) const {
    const double u = (x - cx) / ax;
    const double v = (y - cy) / ay;
    return u * u + v * v <= 1.0;
  }
  // True when a disc of radius r at (x, y) lies inside the ellipse shrunk by r.
  bool contains_disc(double x, double y, double r) const {
    if (ax <= r || ay <= r) return false;
    const double u = (x - cx) / (ax - r);
    const double v = (y - cy) / (ay - r);
    return u * u + v * v <= 1.0;
  }
};

struct Disc {
  double cx, cy, r;
  bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    return dx * dx + dy * dy <= r * r;
  }
};

template <typename T>
void check_range(const Range<T>& range, const char* name, bool allow_zero) {
  if (range.lo > range.hi || (!allow_zero && range.lo <= T{0})) {
    throw ConfigError(std::string("scene parameter ") + name + " has an invalid range");
  }
}

std::string sample_stem(std::size_t id) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << id;
  return ss.str();
}

}  // namespace

void SceneParams::validate() const {
  if (side < 16) throw ConfigError("scene side must be at least 16 pixels");
  check_range(body_semi_x, "body_semi_x", false);
  check_range(body_semi_y, "body_semi_y", false);
  check_range(body_intensity, "body_intensity", false);
  check_range(lung_offset_x, "lung_offset_x", true);
  check_range(lung_semi_x, "lung_semi_x", false);
  check_range(lung_semi_y, "lung_semi_y", false);
  check_range(lung_intensity, "lung_intensity", true);
  check_range(heart_radius, "heart_radius", false);
  check_range(vessel_count, "vessel_count", true);
  check_range(vessel_radius, "vessel_radius", false);
  check_range(vessel_intensity, "vessel_intensity", true);
  if (body_center_jitter < 0.0) throw ConfigError("body_center_jitter must be >= 0");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (!(contrast_delta > 3.0 * noise_sigma)) {
    throw ConfigError("contrast_delta must exceed 3 * noise_sigma");
  }
  if (vessel_intensity.hi + contrast_delta > 1.0 || body_intensity.hi > 1.0) {
    throw ConfigError("scene intensities must stay within [0, 1]");
  }
}

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kEval: return "eval";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "eval") return Split::kEval;
  throw DecodeError(DecodeError::Kind::kMalformed, "unknown split '" + name + "'");
}

std::vector<const LabeledSample*> Dataset::select(Split split) const {
  std::vector<const LabeledSample*> out;
  for (const auto& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

std::vector<const LabeledSample*> Dataset::held_out() const {
  std::vector<const LabeledSample*> out;
  for (const auto& s : samples) {
    if (s.split != Split::kTrain) out.push_back(&s);
  }
  return out;
}

ClassCounts Dataset::counts(Split split) const {
  ClassCounts c;
  for (const auto& s : samples) {
    if (s.split != split) continue;
    (s.label == 1 ? c.positives : c.negatives) += 1;
  }
  return c;
}

LabeledSample render_scene(const SceneParams& params, std::uint64_t scene_seed,
                           int label) {
  if (label != 0 && label != 1) throw ContractError("label must be 0 or 1");
  StreamRng rng(scene_seed, kGeometryStream);
  const double side = static_cast<double>(params.side);
  const double center = (side - 1.0) / 2.0;

  const double jitter = params.body_center_jitter;
  Ellipse body{center + rng.uniform(-jitter, jitter),
               center + rng.uniform(-jitter, jitter),
               rng.uniform(params.body_semi_x.lo, params.body_semi_x.hi),
               rng.uniform(params.body_semi_y.lo, params.body_semi_y.hi)};
  const double body_level = rng.uniform(params.body_intensity.lo, params.body_intensity.hi);
  if (body.cx - body.ax < 0.0 || body.cx + body.ax > side - 1.0 ||
      body.cy - body.ay < 0.0 || body.cy + body.ay > side - 1.0) {
    throw GenerationError("body ellipse does not fit in a " +
                          std::to_string(params.side) + "-pixel image");
  }

  const double offset = rng.uniform(params.lung_offset_x.lo, params.lung_offset_x.hi);
  std::vector<Ellipse> lungs;
  for (int side_sign : {-1, 1}) {
    lungs.push_back({body.cx + side_sign * offset, body.cy + rng.uniform(-2.0, 2.0),
                     rng.uniform(params.lung_semi_x.lo, params.lung_semi_x.hi),
                     rng.uniform(params.lung_semi_y.lo, params.lung_semi_y.hi)});
  }
  const double lung_level = rng.uniform(params.lung_intensity.lo, params.lung_intensity.hi);

  std::vector<Disc> discs;
  {
    const double r = rng.uniform(params.heart_radius.lo, params.heart_radius.hi);
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      Disc heart{body.cx + rng.uniform(-3.0, 3.0), body.cy + rng.uniform(0.0, 5.0), r};
      if (body.contains_disc(heart.cx, heart.cy, heart.r)) {
        discs.push_back(heart);
        placed = true;
      }
    }
    if (!placed) throw GenerationError("heart disc does not fit inside the body");
  }
  const std::size_t vessels =
      params.vessel_count.lo +
      rng.below(params.vessel_count.hi - params.vessel_count.lo + 1);
  for (std::size_t v = 0; v < vessels; ++v) {
    const double r = rng.uniform(params.vessel_radius.lo, params.vessel_radius.hi);
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      Disc d{rng.uniform(body.cx - body.ax, body.cx + body.ax),
             rng.uniform(body.cy - body.ay, body.cy + body.ay), r};
      if (body.contains_disc(d.cx, d.cy, d.r)) {
        discs.push_back(d);
        placed = true;
      }
    }
    if (!placed) throw GenerationError("vessel disc does not fit inside the body");
  }
  const double vessel_level =
      rng.uniform(params.vessel_intensity.lo, params.vessel_intensity.hi);

  LabeledSample sample;
  sample.label = label;
  sample.image = Image(params.side, params.side);
  sample.mask = MaskImage(params.side, params.side);
  const CounterRng noise(scene_seed);
  for (std::size_t r = 0; r < params.side; ++r) {
    for (std::size_t c = 0; c < params.side; ++c) {
      const double x = static_cast<double>(c);
      const double y = static_cast<double>(r);
      double v = 0.0;
      if (body.contains(x, y)) {
        v = body_level;
        for (const Ellipse& lung : lungs) {
          if (lung.contains(x, y)) v = lung_level;
        }
        const bool in_disc = std::any_of(discs.begin(), discs.end(),
                                         [&](const Disc& d) { return d.contains(x, y); });
        if (in_disc) {
          v = vessel_level + (label == 1 ? params.contrast_delta : 0.0);
          sample.mask.set(r, c, true);
        }
      }
      if (params.noise_sigma > 0.0) {
        v += params.noise_sigma * noise.normal(kNoiseStream, r * params.side + c);
      }
      sample.image.at(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return sample;
}

Dataset generate_dataset(const SceneParams& params, std::size_t n, double balance,
                         const SplitSpec& split) {
  params.validate();
  if (n == 0) throw ParameterError("dataset size must be positive");
  if (!(balance > 0.0 && balance < 1.0)) {
    throw ParameterError("class balance must lie in (0, 1)");
  }
  if (!(split.train_fraction >= 0.0 && split.train_fraction <= 1.0)) {
    throw ParameterError("train fraction must lie in [0, 1]");
  }
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(split.train_fraction * static_cast<double>(n)));
  const CounterRng labels(params.seed);

  Dataset dataset;
  dataset.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels.uniform(kLabelStream, i) < balance ? 1 : 0;
    LabeledSample s = render_scene(params, derive_seed(params.seed, i), label);
    s.id = i;
    if (i < n_train) {
      s.split = Split::kTrain;
    } else {
      s.split = (i - n_train) < split.eval_count ? Split::kEval : Split::kTest;
    }
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::ostringstream manifest;
  manifest << "id,image_path,mask_path,label,split\n";
  for (const auto& s : dataset.samples) {
    const std::string stem = sample_stem(s.id);
    const std::string image_rel = "images/" + stem + ".pgm";
    const std::string mask_rel = "masks/" + stem + ".pgm";
    write_pgm(s.image, dir / image_rel);
    write_pgm(s.mask, dir / mask_rel);
    manifest << s.id << ',' << image_rel << ',' << mask_rel << ',' << s.label
             << ',' << split_name(s.split) << '\n';
  }
  write_file(dir / "manifest.csv", manifest.str());
}

Dataset read_dataset(const std::filesystem::path& manifest) {
  std::istringstream in(read_file(manifest));
  const std::filesystem::path base = manifest.parent_path();
  std::string line;
  if (!std::getline(in, line) || line != "id,image_path,mask_path,label,split") {
    throw DecodeError(DecodeError::Kind::kBadHeader,
                      manifest.string() + ": unexpected manifest header");
  }
  Dataset dataset;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5 || (fields[3] != "0" && fields[3] != "1")) {
      throw DecodeError(DecodeError::Kind::kMalformed,
                        manifest.string() + ": bad row at line " + std::to_string(line_no));
    }
    LabeledSample s;
    try {
      s.id = static_cast<std::size_t>(std::stoull(fields[0]));
    } catch (const std::exception&) {
      throw DecodeError(DecodeError::Kind::kMalformed,
                        manifest.string() + ": bad id at line " + std::to_string(line_no));
    }
    s.image = read_pgm(base / fields[1]);
    s.mask = read_pgm_mask(base / fields[2]);
    s.label = fields[3] == "1" ? 1 : 0;
    s.split = parse_split(fields[4]);
    if (!s.mask.same_shape(s.image)) {
      throw DecodeError(DecodeError::Kind::kMalformed,
                        manifest.string() + ": mask/image size mismatch for id " + fields[0]);
    }
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

}  // namespace attrib
