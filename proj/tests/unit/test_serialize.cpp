/*
 * Copyright 2026 The mixreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <filesystem>

#include "mixreg/error.hpp"
#include "mixreg/serialize.hpp"

using namespace mixreg;

TEST_CASE("transform JSON round trip") {
  const RigidParams p{Vec3(1.5, -2, 3), Vec3(0.1, -0.2, 0.05), Vec3(47.5, 47.5, 47.5)};
  const nlohmann::json j = p;
  CHECK(j.contains("t_mm"));
  CHECK(j.contains("r_rad"));
  CHECK(j.contains("center_mm"));
  CHECK(j.get<RigidParams>() == p);
  CHECK_THROWS(nlohmann::json::parse(R"({"t_mm":[1,2],"r_rad":[0,0,0]})").get<RigidParams>());
}

TEST_CASE("beta file schema") {
  const std::vector<double> betas{0.2, 0.4, 0.6, 0.8};
  const nlohmann::json j = betas_to_json(betas);
  CHECK(j["levels"][0]["r"] == 4);
  CHECK(j["levels"][0]["beta"] == 0.8);
  CHECK(betas_from_json(j) == betas);
  CHECK_THROWS_AS(betas_from_json(nlohmann::json::parse(R"({"levels":[{"r":1,"beta":1.5}]})")), ParameterError);
  CHECK_THROWS_AS(betas_from_json(nlohmann::json::parse(R"({"levels":[{"r":2,"beta":0.5}]})")), ParameterError);
  CHECK_THROWS_AS(betas_from_json(nlohmann::json::parse(R"({"levels":[]})")), ParameterError);
}

TEST_CASE("configs round trip") {
  RegistrationConfig c;
  c.levels = 3;
  c.metric.bins = 32;
  c.optimizer.max_iters = 7;
  c.interpolation = Interpolation::kTrilinear;
  const RegistrationConfig back = nlohmann::json(c).get<RegistrationConfig>();
  CHECK(back.levels == 3);
  CHECK(back.metric.bins == 32);
  CHECK(back.optimizer.max_iters == 7);
  CHECK(back.interpolation == Interpolation::kTrilinear);
  PsoConfig p;
  p.particles = 4;
  CHECK(nlohmann::json(p).get<PsoConfig>().particles == 4);
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto j = nlohmann::json::parse(
      R"([{"fixed":"f.rvol","moving":"/abs/m.rvol","gold":{"t_mm":[5,0,0],"r_rad":[0,0,0]}}])");
  const auto entries = manifest_from_json(j, "/data");
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].fixed == std::filesystem::path("/data/f.rvol"));
  CHECK(entries[0].moving == std::filesystem::path("/abs/m.rvol"));
  CHECK(entries[0].gold.t[0] == 5.0);
}
