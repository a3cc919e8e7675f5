#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "lightray/reconstruction.hpp"

namespace lightray {

// Standalone SVG heatmap. z(i, j) is drawn with i to the right and j upward.
// Diverging palette centred on 0 when `signed_scale`, sequential otherwise.
std::string svg_heatmap(const Eigen::MatrixXd& z, const std::string& title, bool signed_scale,
                        const std::string& x_label = "", const std::string& y_label = "");

std::string svg_histogram(std::span<const double> values, int bins, const std::string& title);

// x,y,value at pixel centres inside the disc
std::string image_csv(const Eigen::MatrixXd& z, const PixelGrid& grid);

// sinogram values as a rays x T matrix
Eigen::MatrixXd sinogram_matrix(const Sinogram& s);

}  // namespace lightray
