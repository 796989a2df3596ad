#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scfc/error.hpp"
#include "scfc/tensor.hpp"

namespace scfc {

// Single-channel image, intensities in [0,1]. Binary label convention:
// 0 = unoccupied, 1 = occupied; k-way tasks store a class index instead.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;  // row-major
    std::string id;
    std::optional<int> label;
    std::string source_path;

    Image() = default;
    Image(std::size_t w, std::size_t h, double fill_value = 0.0)
        : width(w), height(h), pixels(w * h, fill_value) {}

    double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

    std::size_t size() const { return pixels.size(); }

    void check_valid() const {
        if (width == 0 || height == 0 || pixels.size() != width * height)
            throw ScfcError(ErrorCode::ShapeMismatch, "image " + id + " has inconsistent dimensions");
        for (double v : pixels)
            if (!(v >= 0.0 && v <= 1.0))
                throw ScfcError(ErrorCode::InvalidArgument, "image " + id + " has intensity outside [0,1]");
    }

    // {1, height, width} tensor for the convolutional encoder.
    Tensor to_tensor() const {
        Tensor t({1, height, width});
        t.data = pixels;
        return t;
    }
};

Image resize_nearest(const Image& img, std::size_t new_width, std::size_t new_height);

// Rec.601 luma from interleaved RGB bytes.
double luma601(double r, double g, double b);

}  // namespace scfc
