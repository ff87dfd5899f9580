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

#pragma once

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "lucid/layers.hpp"
#include "lucid/types.hpp"

namespace lucid {

template <typename Scalar>
struct AdamWConfig {
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  Scalar weight_decay = Scalar(0);
};

/// AdamW with decoupled weight decay. Frozen groups are left completely
/// untouched: no moment update and no step-count advance, so their parameter
/// bytes stay identical across frozen epochs.
template <typename Scalar>
class AdamW {
 public:
  AdamW(const std::vector<ParamView<Scalar>>& params, const AdamWConfig<Scalar>& cfg) : cfg_(cfg) {
    states_.reserve(params.size());
    for (const auto& p : params) states_.push_back({Vector<Scalar>::Zero(p.size), Vector<Scalar>::Zero(p.size), 0});
  }

  void step(std::vector<ParamView<Scalar>>& params, const std::map<ParamGroup, Scalar>& lr,
            const std::set<ParamGroup>& frozen) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (frozen.count(p.group)) continue;
      auto& st = states_[i];
      ++st.t;
      const Scalar rate = lr.at(p.group);
      const Scalar bc1 = Scalar(1) - std::pow(cfg_.beta1, Scalar(st.t));
      const Scalar bc2 = Scalar(1) - std::pow(cfg_.beta2, Scalar(st.t));
      for (Eigen::Index j = 0; j < p.size; ++j) {
        const Scalar g = p.grad[j];
        st.m(j) = cfg_.beta1 * st.m(j) + (Scalar(1) - cfg_.beta1) * g;
        st.v(j) = cfg_.beta2 * st.v(j) + (Scalar(1) - cfg_.beta2) * g * g;
        const Scalar mhat = st.m(j) / bc1;
        const Scalar vhat = st.v(j) / bc2;
        p.value[j] -= rate * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p.value[j]);
      }
    }
  }

 private:
  struct State {
    Vector<Scalar> m, v;
    long t = 0;
  };
  AdamWConfig<Scalar> cfg_;
  std::vector<State> states_;
};

}  // namespace lucid
