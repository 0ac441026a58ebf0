// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "pingpong/config.hpp"
#include "pingpong/denoiser.hpp"
#include "pingpong/schedule.hpp"

namespace pingpong::testing {

inline std::shared_ptr<const NoiseSchedule> default_schedule() {
  return std::make_shared<const NoiseSchedule>(build_schedule(ScheduleKind::kLinear, 50, 0.002, 0.4));
}

/// The T=4 hand-computed schedule: beta = 0.1, 0.2, 0.3, 0.4.
inline NoiseSchedule tiny_schedule() { return build_schedule(ScheduleKind::kLinear, 4, 0.1, 0.4); }

inline GMMWorld single_world(double mx, double my, double scale) {
  GMMWorld w;
  w.means = Points(1, 2, std::vector<double>{mx, my});
  w.scales = {scale};
  return w;
}

inline Prompt single_prompt() {
  Prompt p;
  p.required = {{0, 1.0}};
  return p;
}

inline std::string fixture_path(const std::string& name) { return std::string(PINGPONG_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pingpong::testing
