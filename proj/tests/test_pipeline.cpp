// Copyright 2026 The LucidPPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "lucid/augment.hpp"
#include "lucid/color.hpp"
#include "lucid/image.hpp"
#include "lucid/rng.hpp"
#include "lucid/synthetic.hpp"

using namespace lucid;

namespace {

Image<double> random_image(Rng& rng, int h, int w) {
  Image<double> img(h, w);
  for (Eigen::Index p = 0; p < img.pixels(); ++p)
    for (int c = 0; c < 3; ++c) img.data(c, p) = rng.uniform();
  return img;
}

Image<double> uniform_image(double r, double g, double b, int h, int w) {
  Image<double> img(h, w);
  img.data.row(0).setConstant(r);
  img.data.row(1).setConstant(g);
  img.data.row(2).setConstant(b);
  return img;
}

// 64-bin hue histogram over saturated pixels, used to verify the
// augmentation policy never invents a hue.
std::set<int> occupied_hue_bins(const Image<double>& img, double sat_min = 0.1) {
  std::set<int> bins;
  for (Eigen::Index p = 0; p < img.pixels(); ++p) {
    const auto hsv = rgb_to_hsv(img.data(0, p), img.data(1, p), img.data(2, p));
    if (hsv.s < sat_min) continue;
    bins.insert(static_cast<int>(hsv.h / 360.0 * 64) % 64);
  }
  return bins;
}

}  // namespace

TEST_CASE("to_grayscale follows the luma formula") {
  Image<double> img = uniform_image(1, 0, 0, 2, 2);
  auto g = to_grayscale(img);
  CHECK(g.at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g.at(1, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g.at(2, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));

  auto white = to_grayscale(uniform_image(1, 1, 1, 1, 1));
  CHECK(white.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  for (double c : {0.0, 0.25, 0.7}) {
    auto gray = to_grayscale(uniform_image(c, c, c, 1, 1));
    CHECK(gray.at(0, 0, 0) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("to_grayscale is idempotent") {
  Rng rng(11);
  auto img = random_image(rng, 9, 7);
  auto once = to_grayscale(img);
  auto twice = to_grayscale(once);
  CHECK((once.data - twice.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("downscale_color averages areas") {
  SUBCASE("uniform image stays uniform") {
    auto img = uniform_image(0.3, 0.6, 0.9, 12, 12);
    auto out = downscale_color(img, 3, 3);
    for (Eigen::Index p = 0; p < out.pixels(); ++p) {
      CHECK(out.data(0, p) == doctest::Approx(0.3).epsilon(1e-12));
      CHECK(out.data(1, p) == doctest::Approx(0.6).epsilon(1e-12));
      CHECK(out.data(2, p) == doctest::Approx(0.9).epsilon(1e-12));
    }
  }
  SUBCASE("2x2 checker block averages to 0.5") {
    Image<double> img(2, 2);
    img.at(0, 0, 1) = img.at(1, 0, 1) = img.at(2, 0, 1) = 1.0;
    img.at(0, 1, 0) = img.at(1, 1, 0) = img.at(2, 1, 0) = 1.0;
    auto out = downscale_color(img, 1, 1);
    for (int c = 0; c < 3; ++c) CHECK(out.data(c, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("identity size returns the input") {
    Rng rng(3);
    auto img = random_image(rng, 5, 4);
    auto out = downscale_color(img, 5, 4);
    CHECK((out.data - img.data).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("rejects non-positive target") {
    auto img = uniform_image(0, 0, 0, 4, 4);
    CHECK_THROWS_AS(downscale_color(img, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(downscale_color(img, 2, -1), std::invalid_argument);
  }
  SUBCASE("commutes with channel permutation") {
    Rng rng(17);
    auto img = random_image(rng, 10, 6);
    Image<double> permuted = img;
    permuted.data.row(0) = img.data.row(2);
    permuted.data.row(1) = img.data.row(0);
    permuted.data.row(2) = img.data.row(1);
    auto a = downscale_color(permuted, 5, 3);
    auto b = downscale_color(img, 5, 3);
    CHECK((a.data.row(0) - b.data.row(2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((a.data.row(1) - b.data.row(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((a.data.row(2) - b.data.row(1)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("hue_perturb keeps luminance and fixes achromatic pixels") {
  SUBCASE("angle zero is the identity") {
    Rng rng(5);
    auto img = random_image(rng, 6, 6);
    auto out = hue_perturb(img, 0.0);
    CHECK((out.image.data - img.data).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("gray pixels are fixed points for any angle") {
    auto img = uniform_image(0.42, 0.42, 0.42, 3, 3);
    for (double angle : {30.0, 120.0, 275.5}) {
      auto out = hue_perturb(img, angle);
      CHECK((out.image.data - img.data).cwiseAbs().maxCoeff() == 0.0);
      CHECK(out.clamped_fraction == 0.0);
    }
  }
  SUBCASE("luminance is preserved where nothing clamps") {
    Rng rng(23);
    Image<double> img(8, 8);
    for (Eigen::Index p = 0; p < img.pixels(); ++p) {
      // keep channels small enough that rescaling cannot clamp
      for (int c = 0; c < 3; ++c) img.data(c, p) = rng.uniform(0.05, 0.30);
    }
    auto out = hue_perturb(img, 120.0);
    CHECK(out.clamped_fraction == 0.0);
    auto w_in = to_grayscale(img);
    auto w_out = to_grayscale(out.image);
    CHECK((w_in.data - w_out.data).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("flip is an involution") {
  Rng rng(7);
  auto img = random_image(rng, 6, 9);
  auto twice = flip_horizontal(flip_horizontal(img));
  CHECK((twice.data - img.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval transform only resizes") {
  Rng rng(9);
  auto img = random_image(rng, 64, 64);
  auto out = eval_transform(img, 64);
  CHECK((out.data - img.data).cwiseAbs().maxCoeff() == 0.0);
  auto smaller = eval_transform(img, 32);
  CHECK(smaller.height == 32);
  CHECK(smaller.width == 32);
}

TEST_CASE("augmentation policy never invents hues") {
  const SyntheticSpec spec = color_only_spec(4, 2, 64, 99);
  const auto data = generate_synthetic(spec, 3);
  Rng rng(1234);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto& sample = data.samples[rep % data.samples.size()];
    const auto original_bins = occupied_hue_bins(sample.image);
    const auto augmented = apply_train_augmentations(sample, rng, 64);
    for (int bin : occupied_hue_bins(augmented.image)) {
      const bool known = original_bins.count(bin) || original_bins.count((bin + 1) % 64) ||
                         original_bins.count((bin + 63) % 64);
      CHECK(known);
    }
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("augmented geometry stays in range") {
  Rng rng(42);
  auto img = random_image(rng, 70, 70);
  for (int rep = 0; rep < 50; ++rep) {
    auto plan = sample_augment_plan(rng, img.height, img.width, 64);
    auto out = apply_augment(plan, img);
    CHECK(out.height == 64);
    CHECK(out.width == 64);
    CHECK(out.data.minCoeff() >= 0.0);
    CHECK(out.data.maxCoeff() <= 1.0);
  }
}

TEST_CASE("synthetic generator invariants") {
  const SyntheticSpec color_spec = color_only_spec(2, 2, 64, 7);
  const auto data = generate_synthetic(color_spec, 4);

  SUBCASE("hue-only classes are pixel-identical in grayscale") {
    for (int i = 0; i < 4; ++i) {
      const auto& a = data.samples[i];       // class 0
      const auto& b = data.samples[4 + i];   // class 1
      auto ga = to_grayscale(a.image);
      auto gb = to_grayscale(b.image);
      CHECK((ga.data - gb.data).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("masks partition the canvas") {
    for (const auto& [id, mask] : data.masks) {
      CHECK(satisfies_simplex(mask));
      const auto sums = mask.maps.colwise().sum().eval();
      CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("bit-reproducible per seed") {
    const auto again = generate_synthetic(color_spec, 4);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      CHECK(data.samples[i].id == again.samples[i].id);
      CHECK((data.samples[i].image.data - again.samples[i].image.data).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("hue rotations never clamp") {
    Rng rng(55);
    for (const auto& sample : data.samples) {
      auto out = hue_perturb(sample.image, rng.uniform(0.0, 360.0));
      CHECK(out.clamped_fraction == 0.0);
    }
  }
}

TEST_CASE("shape-only classes keep grayscale evidence under hue perturbation") {
  const SyntheticSpec spec = shape_only_spec(2, 2, 64, 13);
  const auto data = generate_synthetic(spec, 2);
  for (const auto& sample : data.samples) {
    auto out = hue_perturb(sample.image, 200.0);
    CHECK(out.clamped_fraction == 0.0);
    auto g0 = to_grayscale(sample.image);
    auto g1 = to_grayscale(out.image);
    CHECK((g0.data - g1.data).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("invalid synthetic specs are rejected") {
  SyntheticSpec spec = color_only_spec(2, 2, 64, 1);
  SUBCASE("identical classes") {
    spec.table[1] = spec.table[0];
    CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  }
  SUBCASE("canvas too small for the part grid") {
    SyntheticSpec tiny = color_only_spec(2, 9, 32, 1);
    CHECK_THROWS_AS(generate_synthetic(tiny, 1), std::invalid_argument);
  }
  SUBCASE("palette that can clamp") {
    spec.luminance = 0.9;
    CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  }
}
