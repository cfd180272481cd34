#pragma once

// PNG output: sample grids and metric curves.

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cgigan/error.hpp"

namespace cgigan::imaging {

/// Tiles (K, H, W) or (K, 1, H, W) images in [0, 1] into a grayscale PNG.
inline void write_image_grid(const std::filesystem::path& path, const torch::Tensor& images, int columns = 8,
                             int scale = 2, int gap = 2) {
  auto x = images.dim() == 4 ? images.squeeze(1) : images;
  if (x.dim() != 3) throw InvalidArgument("write_image_grid: expected (K, H, W) images");
  x = x.detach().to(torch::kFloat32).clamp(0, 1).mul(255.0f).round().to(torch::kUInt8).contiguous();
  const int k = static_cast<int>(x.size(0)), h = static_cast<int>(x.size(1)), w = static_cast<int>(x.size(2));
  columns = std::max(1, std::min(columns, std::max(k, 1)));
  const int rows = (k + columns - 1) / columns;
  cv::Mat canvas(std::max(1, rows * (h * scale + gap) + gap), columns * (w * scale + gap) + gap, CV_8UC1,
                 cv::Scalar(64));
  for (int i = 0; i < k; ++i) {
    cv::Mat tile(h, w, CV_8UC1, x[i].data_ptr<std::uint8_t>());
    cv::Mat big;
    cv::resize(tile, big, cv::Size(w * scale, h * scale), 0, 0, cv::INTER_NEAREST);
    const int r = i / columns, c = i % columns;
    big.copyTo(canvas(cv::Rect(gap + c * (w * scale + gap), gap + r * (h * scale + gap), w * scale, h * scale)));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw InvalidArgument("cannot write image " + path.string());
}

/// Exponential smoothing as used by common training dashboards.
inline std::vector<double> smooth(const std::vector<double>& ys, double weight) {
  std::vector<double> out;
  out.reserve(ys.size());
  double last = ys.empty() ? 0.0 : ys.front();
  for (double y : ys) {
    last = last * weight + (1 - weight) * y;
    out.push_back(last);
  }
  return out;
}

/// Line chart of `ys` against `xs`: raw values dotted, smoothed values solid.
inline void plot_curve(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                       const std::vector<double>& xs, const std::vector<double>& ys, double smoothing = 0.6) {
  const int width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const cv::Scalar axis(0, 0, 0), raw(150, 150, 150), fit(200, 90, 20);
  const int pw = width - left - right, ph = height - top - bottom;
  cv::rectangle(img, cv::Rect(left, top, pw, ph), axis, 1);
  cv::putText(img, title, cv::Point(left, 25), cv::FONT_HERSHEY_SIMPLEX, 0.6, axis, 1, cv::LINE_AA);
  cv::putText(img, xlabel, cv::Point(left + pw / 2 - 20, height - 10), cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1,
              cv::LINE_AA);

  if (!xs.empty() && xs.size() == ys.size()) {
    auto [xlo_it, xhi_it] = std::minmax_element(xs.begin(), xs.end());
    auto [ylo_it, yhi_it] = std::minmax_element(ys.begin(), ys.end());
    double xlo = *xlo_it, xhi = *xhi_it, ylo = *ylo_it, yhi = *yhi_it;
    if (xhi == xlo) xhi = xlo + 1;
    if (yhi == ylo) {
      ylo -= 0.5;
      yhi += 0.5;
    }
    const double pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    auto to_px = [&](double x, double y) {
      return cv::Point(left + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * pw)),
                       top + ph - static_cast<int>(std::lround((y - ylo) / (yhi - ylo) * ph)));
    };
    char buf[32];
    for (int t = 0; t <= 4; ++t) {
      const double yv = ylo + (yhi - ylo) * t / 4.0;
      const auto p = to_px(xlo, yv);
      cv::line(img, p, cv::Point(left - 5, p.y), axis, 1);
      std::snprintf(buf, sizeof buf, "%.3g", yv);
      cv::putText(img, buf, cv::Point(5, p.y + 4), cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1, cv::LINE_AA);
      const double xv = xlo + (xhi - xlo) * t / 4.0;
      const auto q = to_px(xv, ylo);
      cv::line(img, q, cv::Point(q.x, q.y + 5), axis, 1);
      std::snprintf(buf, sizeof buf, "%.3g", xv);
      cv::putText(img, buf, cv::Point(q.x - 10, q.y + 20), cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1, cv::LINE_AA);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) cv::circle(img, to_px(xs[i], ys[i]), 2, raw, cv::FILLED);
    const auto sm = smooth(ys, smoothing);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      cv::line(img, to_px(xs[i - 1], sm[i - 1]), to_px(xs[i], sm[i]), fit, 2, cv::LINE_AA);
    }
  } else {
    cv::putText(img, "no data", cv::Point(left + pw / 2 - 30, top + ph / 2), cv::FONT_HERSHEY_SIMPLEX, 0.6, raw, 1,
                cv::LINE_AA);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw InvalidArgument("cannot write plot " + path.string());
}

}  // namespace cgigan::imaging
