#pragma once

#include "alphaveil/types.hpp"

namespace alphaveil {

// How a consumer renders an RGBA image: flattened over a solid backdrop
// luminance (image viewers, browsers) or with the alpha channel dropped
// outright (alpha-unaware vision pipelines).
struct ViewerModel {
  enum class Mode { Flatten, DropAlpha };

  Mode mode = Mode::Flatten;
  Scalar backdrop = 1.0;

  static ViewerModel flatten(Scalar backdrop);
  static ViewerModel light() { return {Mode::Flatten, 1.0}; }
  static ViewerModel dark() { return {Mode::Flatten, 0.0}; }
  static ViewerModel drop_alpha() { return {Mode::DropAlpha, 0.0}; }
};

Grid render(const AttackImage& img, const ViewerModel& viewer);

// Flatten over white: what a light-theme viewer shows a person.
Grid human_view(const AttackImage& img);

// Alpha-drop: the raw RGB luminance an alpha-unaware model ingests.
Grid machine_view(const AttackImage& img);

}  // namespace alphaveil
