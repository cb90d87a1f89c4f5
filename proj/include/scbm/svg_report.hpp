#pragma once

#include <string>
#include <vector>

#include "scbm/tensor.hpp"

namespace scbm::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Static SVG 1.1 line chart: one polyline per series plus a mean +- std
/// band rendered as a translucent polygon.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

/// Grid of grayscale images (H,W,1) with captions, downsampled 2x.
std::string image_grid(const std::vector<const Tensor*>& images,
                       const std::vector<std::string>& captions, std::size_t columns);

}  // namespace scbm::svg
