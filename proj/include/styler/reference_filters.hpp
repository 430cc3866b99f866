#pragma once

#include "styler/image.hpp"

namespace styler {

/// Largest explicit time step for which tv_flow is a convex update.
inline constexpr double kTvFlowMaxStep = 0.25;

struct TvFlowParams {
  int steps = 10;
  double dt = 0.2;
  double epsilon = 1e-3;  ///< gradient-magnitude floor
};

/// One explicit step of du/dt = |grad u| div(grad u / sqrt(|grad u|^2 + eps^2)).
/// The divergence is taken in flux form over the four half-pixel edges; the
/// leading |grad u| is the harmonic mean of the four edge magnitudes, which
/// turns the step into a convex combination of the pixel and its neighbours
/// whenever dt <= 1/4.
Plane tv_flow_step(const Plane& u, double dt, double epsilon);

/// Runs `steps` explicit steps on a 1-channel image. Throws InvalidInput when
/// dt is outside (0, 1/4] or steps < 0.
Image tv_flow(const Image& img, const TvFlowParams& params = {});

/// Unit edge-tangent field (weaker eigenvector of the smoothed structure
/// tensor). Pixels whose strength is below 1e-6 get the tangent (1, 0).
struct FlowField {
  Plane tx;
  Plane ty;
};

inline constexpr double kFlowStrengthFloor = 1e-6;

FlowField etf_field(const Image& img, double rho);

/// Tangent at a continuous position: bilinear blend of the four neighbouring
/// tangents after flipping each to agree with `reference`.
std::pair<double, double> sample_flow(const FlowField& field, double x, double y, double rx, double ry);

/// Gaussian-weighted line integral convolution of `src` along the streamlines
/// of `field`. Streamlines are traced both ways from each pixel with midpoint
/// (RK2) steps of `step` pixels up to arc length `length`; the Gaussian has
/// sigma = length / 3. length == 0 returns src.
Plane line_integral_convolution(const Plane& src, const FlowField& field, double length, double step = 0.5);

struct EtfParams {
  double rho = 2.0;
  double length = 4.0;
  int passes = 1;
};

/// Edge-tangent-flow smoothing: LIC along the tangent field of the input,
/// repeated `passes` times (the field is recomputed each pass).
Image etf_smooth(const Image& img, const EtfParams& params = {});

/// Ratio between the two Gaussians of the high-emphasis filter.
inline constexpr double kXdogScaleRatio = 1.6;

struct FlowXdogParams {
  double sigma = 1.0;
  double p = 5.0;
  double rho = 2.0;
  double lic_length = 3.0;
};

/// 1-D taps of (1+p) G_{1.6 sigma} - p G_sigma at integer offsets in
/// [-R, R], R = ceil(3 * 1.6 sigma); each Gaussian is normalized to unit sum
/// so the taps add up to one.
Eigen::VectorXd high_emphasis_taps(double sigma, double p);

/// Flow-guided high-emphasis response (before any soft threshold):
/// high_emphasis_taps sampled bilinearly along the gradient direction at unit
/// steps, followed by LIC of arc length lic_length along the tangent field.
Image flow_xdog_response(const Image& img, const FlowXdogParams& params = {});

/// u + (delta/100) (u - G_sigma * u) on the luma; delta = -100 returns the
/// Gaussian base. Chroma of RGB inputs is kept.
Image detail_control(const Image& img, double delta, double base_sigma = 3.0, bool clip = true);

}  // namespace styler
