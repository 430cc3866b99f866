#include "styler/reference_filters.hpp"

#include <cmath>

#include "styler/color.hpp"
#include "styler/spatial_ops.hpp"
#include "styler/structure_tensor.hpp"

namespace styler {

Plane tv_flow_step(const Plane& u, double dt, double epsilon) {
  const int h = static_cast<int>(u.rows()), w = static_cast<int>(u.cols());
  const double eps2 = epsilon * epsilon;
  Plane out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int yn = clamp_index(y - 1, h), ys = clamp_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xw = clamp_index(x - 1, w), xe = clamp_index(x + 1, w);
      const double c = u(y, x);
      const double e = u(y, xe), wv = u(y, xw), n = u(yn, x), s = u(ys, x);
      // Tangential differences averaged onto each half-pixel edge.
      const double ty_e = 0.25 * (u(ys, x) + u(ys, xe) - u(yn, x) - u(yn, xe));
      const double ty_w = 0.25 * (u(ys, x) + u(ys, xw) - u(yn, x) - u(yn, xw));
      const double tx_n = 0.25 * (u(y, xe) + u(yn, xe) - u(y, xw) - u(yn, xw));
      const double tx_s = 0.25 * (u(y, xe) + u(ys, xe) - u(y, xw) - u(ys, xw));
      const double we = 1.0 / std::sqrt((e - c) * (e - c) + ty_e * ty_e + eps2);
      const double ww = 1.0 / std::sqrt((wv - c) * (wv - c) + ty_w * ty_w + eps2);
      const double wn = 1.0 / std::sqrt((n - c) * (n - c) + tx_n * tx_n + eps2);
      const double ws = 1.0 / std::sqrt((s - c) * (s - c) + tx_s * tx_s + eps2);
      const double wsum = we + ww + wn + ws;
      const double flux = we * (e - c) + ww * (wv - c) + wn * (n - c) + ws * (s - c);
      // |grad u| = 4 / wsum (harmonic mean of the edge magnitudes).
      out(y, x) = c + dt * 4.0 * flux / wsum;
    }
  }
  return out;
}

Image tv_flow(const Image& img, const TvFlowParams& params) {
  if (img.channels() != 1) throw InvalidInput("TV flow expects a 1-channel image");
  if (params.steps < 0) throw InvalidInput("TV flow steps must be >= 0");
  if (!(params.dt > 0.0 && params.dt <= kTvFlowMaxStep))
    throw InvalidInput("TV flow time step must be in (0, 0.25] for stability");
  if (!(params.epsilon > 0.0)) throw InvalidInput("TV flow epsilon must be positive");
  Plane u = img.plane(0);
  for (int i = 0; i < params.steps; ++i) u = tv_flow_step(u, params.dt, params.epsilon);
  Image out(std::move(u));
  if (img.has_chroma()) out.set_chroma(img.chroma());
  return out;
}

FlowField etf_field(const Image& img, double rho) {
  if (img.channels() != 1) throw InvalidInput("edge tangent flow expects a 1-channel image");
  const TensorField t = smoothed_tensor(img, rho);
  const Eigen::Index h = t.xx.rows(), w = t.xx.cols();
  FlowField f{Plane(h, w), Plane(h, w)};
#pragma omp parallel for schedule(static)
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      const FeatureTriple ft = eigen_features(t.xx(y, x), t.xy(y, x), t.yy(y, x));
      if (ft.strength < kFlowStrengthFloor) {
        f.tx(y, x) = 1.0;
        f.ty(y, x) = 0.0;
      } else {
        // Tangent is the dominant direction turned by 90 degrees.
        f.tx(y, x) = -std::sin(ft.orientation);
        f.ty(y, x) = std::cos(ft.orientation);
      }
    }
  return f;
}

std::pair<double, double> sample_flow(const FlowField& field, double x, double y, double rx, double ry) {
  const int w = static_cast<int>(field.tx.cols()), h = static_cast<int>(field.tx.rows());
  const double fx = std::floor(x), fy = std::floor(y);
  const double ax = x - fx, ay = y - fy;
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  double vx = 0.0, vy = 0.0;
  const int xs[2] = {clamp_index(x0, w), clamp_index(x0 + 1, w)};
  const int ys[2] = {clamp_index(y0, h), clamp_index(y0 + 1, h)};
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      double tx = field.tx(ys[j], xs[i]), ty = field.ty(ys[j], xs[i]);
      if (tx * rx + ty * ry < 0.0) tx = -tx, ty = -ty;
      vx += wx[i] * wy[j] * tx;
      vy += wx[i] * wy[j] * ty;
    }
  const double norm = std::hypot(vx, vy);
  if (norm < 1e-12) return {rx, ry};
  return {vx / norm, vy / norm};
}

Plane line_integral_convolution(const Plane& src, const FlowField& field, double length, double step) {
  if (!(length >= 0.0)) throw InvalidInput("LIC length must be >= 0");
  if (!(step > 0.0)) throw InvalidInput("LIC step must be positive");
  if (length == 0.0) return src;
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int steps = static_cast<int>(std::floor(length / step + 1e-9));
  const double sigma = length / 3.0;
  std::vector<double> weight(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double s = i * step;
    weight[i] = std::exp(-0.5 * s * s / (sigma * sigma));
  }
  Plane out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = weight[0] * src(y, x);
      double wsum = weight[0];
      for (int dir = -1; dir <= 1; dir += 2) {
        double px = x, py = y;
        double dx = dir * field.tx(y, x), dy = dir * field.ty(y, x);
        for (int i = 1; i <= steps; ++i) {
          const auto [v1x, v1y] = sample_flow(field, px, py, dx, dy);
          const auto [v2x, v2y] = sample_flow(field, px + 0.5 * step * v1x, py + 0.5 * step * v1y, v1x, v1y);
          px += step * v2x;
          py += step * v2y;
          dx = v2x;
          dy = v2y;
          sum += weight[i] * sample_bilinear(src, px, py);
          wsum += weight[i];
        }
      }
      out(y, x) = sum / wsum;
    }
  }
  return out;
}

Image etf_smooth(const Image& img, const EtfParams& params) {
  if (img.channels() != 1) throw InvalidInput("ETF smoothing expects a 1-channel image");
  if (!(params.length > 0.0)) throw InvalidInput("ETF length must be positive");
  if (params.passes < 0) throw InvalidInput("ETF passes must be >= 0");
  Plane u = img.plane(0);
  for (int p = 0; p < params.passes; ++p) {
    const FlowField field = etf_field(Image(u), params.rho);
    u = line_integral_convolution(u, field, params.length);
  }
  Image out(std::move(u));
  if (img.has_chroma()) out.set_chroma(img.chroma());
  return out;
}

Eigen::VectorXd high_emphasis_taps(double sigma, double p) {
  if (!(sigma > 0.0)) throw InvalidInput("XDoG sigma must be positive");
  if (!(p >= 0.0)) throw InvalidInput("XDoG emphasis p must be >= 0");
  const double wide = kXdogScaleRatio * sigma;
  const int radius = static_cast<int>(std::ceil(3.0 * wide));
  Eigen::VectorXd g_wide(2 * radius + 1), g_narrow(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    g_wide[i + radius] = std::exp(-0.5 * i * i / (wide * wide));
    g_narrow[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  g_wide /= g_wide.sum();
  g_narrow /= g_narrow.sum();
  return (1.0 + p) * g_wide - p * g_narrow;
}

Image flow_xdog_response(const Image& img, const FlowXdogParams& params) {
  if (img.channels() != 1) throw InvalidInput("Flow-XDoG expects a 1-channel image");
  if (!(params.lic_length >= 0.0)) throw InvalidInput("Flow-XDoG LIC length must be >= 0");
  const Eigen::VectorXd taps = high_emphasis_taps(params.sigma, params.p);
  const int radius = static_cast<int>(taps.size() / 2);
  const Plane& u = img.plane(0);
  const FlowField field = etf_field(img, params.rho);
  const int h = static_cast<int>(u.rows()), w = static_cast<int>(u.cols());
  Plane across(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // Gradient direction = tangent turned by -90 degrees.
      const double nx = field.ty(y, x), ny = -field.tx(y, x);
      double sum = 0.0;
      for (int k = -radius; k <= radius; ++k) sum += taps[k + radius] * sample_bilinear(u, x + k * nx, y + k * ny);
      across(y, x) = sum;
    }
  Image out(line_integral_convolution(across, field, params.lic_length));
  if (img.has_chroma()) out.set_chroma(img.chroma());
  return out;
}

Image detail_control(const Image& img, double delta, double base_sigma, bool clip) {
  if (!(delta >= -100.0 && delta <= 100.0)) throw InvalidInput("detail delta must be in [-100, 100]");
  if (!(base_sigma > 0.0)) throw InvalidInput("detail base sigma must be positive");
  const Plane y = luma(img);
  const Plane base = gaussian_blur(y, base_sigma);
  Plane out = y + (delta / 100.0) * (y - base);
  if (delta == -100.0) out = base;
  if (clip) out = clip01(out);
  if (img.channels() == 3) return with_luma(img, std::move(out));
  Image result(std::move(out));
  if (img.has_chroma()) result.set_chroma(img.chroma());
  return result;
}

}  // namespace styler
