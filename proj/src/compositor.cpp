#include "alphaveil/compositor.hpp"

#include "alphaveil/imgio.hpp"

namespace alphaveil {

ViewerModel ViewerModel::flatten(Scalar backdrop) {
  if (!(backdrop >= 0.0 && backdrop <= 1.0)) {
    throw std::invalid_argument("ViewerModel: backdrop luminance must be in [0,1]");
  }
  return {Mode::Flatten, backdrop};
}

Grid render(const AttackImage& img, const ViewerModel& viewer) {
  detail::require_same_dims(img.rgb.r, img.alpha, "render");
  const Grid gray = luminance(img.rgb);
  if (viewer.mode == ViewerModel::Mode::DropAlpha) {
    return gray;
  }
  return img.alpha * gray + (1.0 - img.alpha) * viewer.backdrop;
}

Grid human_view(const AttackImage& img) { return render(img, ViewerModel::light()); }

Grid machine_view(const AttackImage& img) { return render(img, ViewerModel::drop_alpha()); }

}  // namespace alphaveil
