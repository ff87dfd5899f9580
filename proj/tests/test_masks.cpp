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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lucid/masks.hpp"
#include "lucid/rng.hpp"
#include "lucid/synthetic.hpp"

using namespace lucid;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("disco attention is a per-pixel softmax over negated distances") {
  SUBCASE("identical part vectors give the uniform simplex") {
    DiscoFeatureMap<double> z;
    z.height = 2;
    z.width = 2;
    z.features = Matrix<double>::Random(5, 4);
    PartVectors<double> q;
    q.vectors = Matrix<double>::Ones(3, 5) * 0.7;
    auto masks = disco_attention(z, q);
    CHECK((masks.maps.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("an exact match dominates distant vectors") {
    DiscoFeatureMap<double> z;
    z.height = 1;
    z.width = 1;
    z.features = Matrix<double>::Zero(4, 1);
    PartVectors<double> q;
    q.vectors = Matrix<double>::Zero(3, 4);
    q.vectors(1, 0) = 10.0;  // squared distance 100
    q.vectors(2, 0) = 10.0;
    auto masks = disco_attention(z, q);
    const double expected = 1.0 / (1.0 + 2.0 * std::exp(-100.0));
    CHECK(masks.maps(0, 0) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(masks.maps(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("per-pixel sums are one") {
    Rng rng(4);
    DiscoFeatureMap<double> z;
    z.height = 3;
    z.width = 5;
    z.features.resize(6, 15);
    for (Eigen::Index i = 0; i < z.features.size(); ++i) z.features(i) = rng.normal();
    PartVectors<double> q;
    q.vectors.resize(4, 6);
    for (Eigen::Index i = 0; i < q.vectors.size(); ++i) q.vectors(i) = rng.normal();
    auto masks = disco_attention(z, q);
    CHECK(satisfies_simplex(masks));
  }
  SUBCASE("joint translation of embeddings and part vectors changes nothing") {
    Rng rng(8);
    DiscoFeatureMap<double> z;
    z.height = 2;
    z.width = 3;
    z.features.resize(4, 6);
    for (Eigen::Index i = 0; i < z.features.size(); ++i) z.features(i) = rng.normal();
    PartVectors<double> q;
    q.vectors.resize(3, 4);
    for (Eigen::Index i = 0; i < q.vectors.size(); ++i) q.vectors(i) = rng.normal();
    auto base = disco_attention(z, q);

    DiscoFeatureMap<double> z2 = z;
    PartVectors<double> q2 = q;
    z2.features.array() += 3.25;
    q2.vectors.array() += 3.25;
    auto moved = disco_attention(z2, q2);
    CHECK((base.maps - moved.maps).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dimension mismatch throws") {
    DiscoFeatureMap<double> z;
    z.height = 1;
    z.width = 1;
    z.features = Matrix<double>::Zero(4, 1);
    PartVectors<double> q;
    q.vectors = Matrix<double>::Zero(3, 5);
    CHECK_THROWS_AS(disco_attention(z, q), std::invalid_argument);
  }
}

TEST_CASE("lppm files round-trip bit-identically") {
  Rng rng(12);
  PartMaskSet<double> mask(4, 2, 2);  // K+1 = 5, H = W = 2, 20 floats
  for (Eigen::Index p = 0; p < mask.cells(); ++p) {
    double sum = 0;
    for (int k = 0; k < 5; ++k) {
      mask.maps(k, p) = rng.uniform(0.01, 1.0);
      sum += mask.maps(k, p);
    }
    mask.maps.col(p) /= sum;
    // snap to float so the simplex survives the f32 container
    for (int k = 0; k < 5; ++k) mask.maps(k, p) = static_cast<float>(mask.maps(k, p));
  }

  const std::string path_a = temp_path("roundtrip_a.lppm");
  const std::string path_b = temp_path("roundtrip_b.lppm");
  save_masks(mask, path_a);
  auto loaded = load_masks(path_a);
  CHECK(loaded.part_count() == 4);
  CHECK(loaded.height == 2);
  CHECK(loaded.width == 2);
  save_masks(loaded, path_b);
  CHECK(slurp(path_a) == slurp(path_b));
  CHECK((loaded.maps - mask.maps).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lppm error classes are distinct") {
  PartMaskSet<double> mask(1, 2, 2);
  mask.maps.row(0).setConstant(0.25);
  mask.maps.row(1).setConstant(0.75);
  const std::string path = temp_path("errors.lppm");
  save_masks(mask, path);

  SUBCASE("simplex violation") {
    PartMaskSet<double> bad = mask;
    bad.maps.row(1).setConstant(0.55);  // sums 0.8
    save_masks(bad, path);
    try {
      load_masks(path);
      FAIL("expected simplex violation");
    } catch (const MaskFormatError& e) {
      CHECK(e.code() == MaskError::kSimplexViolation);
    }
  }
  SUBCASE("bad magic") {
    auto bytes = slurp(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());
    try {
      load_masks(path);
      FAIL("expected bad magic");
    } catch (const MaskFormatError& e) {
      CHECK(e.code() == MaskError::kBadMagic);
    }
  }
  SUBCASE("bad version") {
    auto bytes = slurp(path);
    bytes[4] = 9;
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());
    try {
      load_masks(path);
      FAIL("expected bad version");
    } catch (const MaskFormatError& e) {
      CHECK(e.code() == MaskError::kBadVersion);
    }
  }
  SUBCASE("wrong element count") {
    auto bytes = slurp(path);
    bytes.resize(bytes.size() - 4);
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());
    try {
      load_masks(path);
      FAIL("expected truncation error");
    } catch (const MaskFormatError& e) {
      CHECK(e.code() == MaskError::kTruncated);
    }
  }
  SUBCASE("missing file") {
    try {
      load_masks(temp_path("does_not_exist.lppm"));
      FAIL("expected io error");
    } catch (const MaskFormatError& e) {
      CHECK(e.code() == MaskError::kIoFailure);
    }
  }
}

TEST_CASE("mask resize keeps the simplex and the structure") {
  SUBCASE("identity size returns the input") {
    Rng rng(3);
    PartMaskSet<double> mask(2, 4, 4);
    for (Eigen::Index p = 0; p < mask.cells(); ++p) {
      mask.maps(0, p) = rng.uniform(0, 0.5);
      mask.maps(1, p) = rng.uniform(0, 0.5);
      mask.maps(2, p) = 1.0 - mask.maps(0, p) - mask.maps(1, p);
    }
    auto out = resize_masks(mask, 4, 4);
    CHECK((out.maps - mask.maps).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("constant maps stay constant") {
    PartMaskSet<double> mask(2, 6, 6);
    mask.maps.setConstant(1.0 / 3.0);
    auto out = resize_masks(mask, 3, 3);
    CHECK((out.maps.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("per-pixel sums are one after any resize") {
    const auto data = generate_synthetic(color_only_spec(2, 2, 64, 5), 2);
    for (const auto& [id, mask] : data.masks) {
      for (int side : {8, 16, 31}) {
        auto out = resize_masks(mask, side, side);
        const auto sums = out.maps.colwise().sum().eval();
        CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-5);
      }
    }
  }
  SUBCASE("argmax part survives away from boundaries") {
    // piecewise-constant mask: left half part 0, right half part 1
    PartMaskSet<double> mask(2, 16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) mask.at(x < 8 ? 0 : 1, y, x) = 1.0;
    auto out = resize_masks(mask, 8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (std::abs(x - 4) < 2) continue;  // skip cells near the boundary
        Eigen::Index best;
        out.maps.col(static_cast<Eigen::Index>(y) * 8 + x).maxCoeff(&best);
        CHECK(best == (x < 4 ? 0 : 1));
      }
  }
}

TEST_CASE("oracle masks are exact rendered supports") {
  const auto data = generate_synthetic(shape_only_spec(2, 2, 64, 21), 2);
  for (const auto& sample : data.samples) {
    const auto& mask = data.masks.at(sample.id);
    CHECK(mask.part_count() == 2);
    // inside a part the mask is exactly one; background is the complement
    int support = 0;
    for (Eigen::Index p = 0; p < mask.cells(); ++p) {
      const double s = mask.maps(0, p) + mask.maps(1, p);
      CHECK(mask.maps(2, p) == 1.0 - s);
      if (s > 0) {
        CHECK(s == 1.0);
        ++support;
      }
    }
    CHECK(support > 100);
  }
}
